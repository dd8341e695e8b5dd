#include "langdiv/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "langdiv/error.hpp"
#include "langdiv/random.hpp"

namespace langdiv {

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kConfiguration, "train config: " + what); };
  if (dimension < 1) bad("dimension must be >= 1");
  if (window < 1) bad("window must be >= 1");
  if (negatives < 1 || negatives > 64) bad("negatives must lie in [1, 64]");
  if (epochs < 1) bad("epochs must be >= 1");
  if (!(initial_learning_rate > 0.0)) bad("learning rate must be positive");
  if (min_count < 1) bad("min_count must be >= 1");
  if (subword.enabled) {
    if (subword.min_n < 1 || subword.min_n > subword.max_n) bad("need 1 <= min_n <= max_n");
    if (subword.bucket_count == 0) bad("bucket_count must be positive");
  }
}

// ---------------------------------------------------------------------------
// hashing

std::uint32_t fnv1a_hash(std::string_view s) {
  std::uint32_t h = 2166136261u;
  for (char c : s) {
    h ^= static_cast<std::uint32_t>(static_cast<std::int8_t>(c));
    h *= 16777619u;
  }
  return h;
}

std::vector<std::uint32_t> ngram_buckets(std::string_view token, const SubwordConfig& config) {
  std::string word;
  word.reserve(token.size() + 2);
  word.push_back('<');
  word.append(token);
  word.push_back('>');
  std::vector<std::uint32_t> out;
  const auto n_max = static_cast<std::size_t>(config.max_n);
  const auto n_min = static_cast<std::size_t>(config.min_n);
  for (std::size_t i = 0; i < word.size(); ++i) {
    if ((static_cast<unsigned char>(word[i]) & 0xC0) == 0x80) continue;
    std::string ngram;
    for (std::size_t j = i, n = 1; j < word.size() && n <= n_max; ++n) {
      ngram.push_back(word[j++]);
      while (j < word.size() && (static_cast<unsigned char>(word[j]) & 0xC0) == 0x80) ngram.push_back(word[j++]);
      if (n >= n_min && !(n == 1 && (i == 0 || j == word.size()))) {
        out.push_back(fnv1a_hash(ngram) % config.bucket_count);
      }
    }
  }
  return out;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// EmbeddingSpace

EmbeddingSpace::EmbeddingSpace(std::string language_id, std::vector<std::string> tokens, RowMatrix vectors,
                               std::optional<SubwordConfig> subword,
                               std::unordered_map<std::uint32_t, Vector> buckets)
    : language_id_(std::move(language_id)),
      tokens_(std::move(tokens)),
      vectors_(std::move(vectors)),
      subword_(subword),
      buckets_(std::move(buckets)) {
  if (static_cast<std::size_t>(vectors_.rows()) != tokens_.size()) {
    throw Error(ErrorCode::kFormat, "embedding: token count does not match vector rows");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw Error(ErrorCode::kFormat, "embedding: duplicate token '" + tokens_[i] + "'");
    }
  }
  unit_ = vectors_;
  for (Eigen::Index i = 0; i < unit_.rows(); ++i) {
    float n = unit_.row(i).norm();
    if (n > 0.0f) unit_.row(i) /= n;
  }
}

std::ptrdiff_t EmbeddingSpace::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::optional<Vector> EmbeddingSpace::vector(std::string_view token) const {
  if (auto i = index_of(token); i >= 0) {
    auto r = row(static_cast<std::size_t>(i));
    return Vector(r.begin(), r.end());
  }
  if (!subword_) return std::nullopt;
  auto ids = ngram_buckets(token, *subword_);
  if (ids.empty()) return std::nullopt;
  Vector out(static_cast<std::size_t>(dimension()), 0.0f);
  for (auto b : ids) {
    auto it = buckets_.find(b);
    if (it == buckets_.end()) continue;
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += it->second[d];
  }
  for (auto& x : out) x /= static_cast<float>(ids.size());
  return out;
}

std::vector<Neighbor> EmbeddingSpace::neighbors(std::string_view token, std::size_t k) const {
  auto q = vector(token);
  if (!q) throw Error(ErrorCode::kUnknownToken, "unknown token '" + std::string(token) + "'");
  return neighbors(*q, k, token);
}

std::vector<Neighbor> EmbeddingSpace::neighbors(std::span<const float> query, std::size_t k,
                                                std::string_view exclude) const {
  if (k < 1) throw Error(ErrorCode::kConfiguration, "neighbors: k must be >= 1");
  if (query.size() != static_cast<std::size_t>(dimension())) {
    throw Error(ErrorCode::kConfiguration, "neighbors: query dimension mismatch");
  }
  Eigen::Map<const Eigen::VectorXf> q(query.data(), static_cast<Eigen::Index>(query.size()));
  float qn = q.norm();
  Eigen::VectorXf scores = unit_ * q;
  if (qn > 0.0f) scores /= qn;
  const std::ptrdiff_t skip = exclude.empty() ? -1 : index_of(exclude);
  std::vector<std::uint32_t> idx;
  idx.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (static_cast<std::ptrdiff_t>(i) != skip) idx.push_back(static_cast<std::uint32_t>(i));
  }
  k = std::min(k, idx.size());
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({tokens_[idx[i]], std::clamp(static_cast<double>(scores[idx[i]]), -1.0, 1.0)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// SGNS gradient (double precision reference)

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SgnsGradient sgns_gradient(std::span<const double> center, std::span<const double> context,
                           std::span<const std::vector<double>> negatives) {
  const std::size_t d = center.size();
  if (context.size() != d) throw Error(ErrorCode::kConfiguration, "sgns_gradient: dimension mismatch");
  SgnsGradient g;
  g.d_center.assign(d, 0.0);
  g.d_context.assign(d, 0.0);

  const double s_pos = dot(context, center);
  g.loss -= log_sigmoid(s_pos);
  const double coef_pos = sigmoid(s_pos) - 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    g.d_center[i] += coef_pos * context[i];
    g.d_context[i] = coef_pos * center[i];
  }
  for (const auto& neg : negatives) {
    if (neg.size() != d) throw Error(ErrorCode::kConfiguration, "sgns_gradient: dimension mismatch");
    const double s = dot(neg, center);
    g.loss -= log_sigmoid(-s);
    const double coef = sigmoid(s);
    std::vector<double> dn(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.d_center[i] += coef * neg[i];
      dn[i] = coef * center[i];
    }
    g.d_negatives.push_back(std::move(dn));
  }
  return g;
}

// ---------------------------------------------------------------------------
// training

namespace {

constexpr int kSigmoidTableSize = 512;
constexpr float kMaxSigmoid = 8.0f;
constexpr int kLogTableSize = 512;

struct LookupTables {
  float sigmoid[kSigmoidTableSize + 1];
  float log[kLogTableSize + 1];

  LookupTables() {
    for (int i = 0; i <= kSigmoidTableSize; ++i) {
      double x = (static_cast<double>(i) * 2.0 * kMaxSigmoid) / kSigmoidTableSize - kMaxSigmoid;
      sigmoid[i] = static_cast<float>(1.0 / (1.0 + std::exp(-x)));
    }
    for (int i = 0; i <= kLogTableSize; ++i) {
      double x = (static_cast<double>(i) + 1e-5) / kLogTableSize;
      log[i] = static_cast<float>(std::log(x));
    }
  }

  float fast_sigmoid(float x) const {
    if (x < -kMaxSigmoid) return 0.0f;
    if (x > kMaxSigmoid) return 1.0f;
    int i = static_cast<int>((x + kMaxSigmoid) * kSigmoidTableSize / kMaxSigmoid / 2);
    return sigmoid[i];
  }

  float fast_log(float x) const {
    if (x > 1.0f) return 0.0f;
    return log[static_cast<int>(x * kLogTableSize)];
  }
};

const LookupTables& tables() {
  static const LookupTables t;
  return t;
}

// xorshift64*: cheap and identical on every platform.
class FastRng {
 public:
  explicit FastRng(std::uint64_t seed) : state_(mix_seed(seed, 0x5eed) | 1) {}
  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 2685821657736338717ULL;
  }
  float uniform() { return static_cast<float>(next() >> 40) * 0x1.0p-24f; }
  std::uint32_t below(std::uint32_t n) { return static_cast<std::uint32_t>((next() >> 32) % n); }

 private:
  std::uint64_t state_;
};

using FloatMap = Eigen::Map<Eigen::VectorXf>;

constexpr std::size_t kMaxEvents = 65;

class Trainer {
 public:
  Trainer(const Corpus& corpus, const TrainConfig& config) : config_(config), dim_(config.dimension) {
    build_vocabulary(corpus);
    encode(corpus);
    init_parameters();
    build_negative_table();
  }

  EmbeddingSpace run(const std::string& language_id) {
    const int workers = config_.deterministic
                            ? 1
                            : std::max(1, config_.threads > 0 ? config_.threads
                                                              : static_cast<int>(std::thread::hardware_concurrency()));
    total_work_ = static_cast<double>(config_.epochs) * static_cast<double>(train_tokens_);
    TrainingProvenance prov;
    prov.config = config_;
    prov.corpus_tokens = corpus_tokens_;

    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      std::vector<double> loss(static_cast<std::size_t>(workers), 0.0);
      std::vector<std::uint64_t> pairs(static_cast<std::size_t>(workers), 0);
      if (workers == 1) {
        run_shard(0, docs_.size(), epoch, 0, loss[0], pairs[0]);
      } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (docs_.size() + workers - 1) / static_cast<std::size_t>(workers);
        for (int w = 0; w < workers; ++w) {
          std::size_t begin = std::min(docs_.size(), chunk * static_cast<std::size_t>(w));
          std::size_t end = std::min(docs_.size(), begin + chunk);
          pool.emplace_back([&, w, begin, end] {
            run_shard(begin, end, epoch, w, loss[static_cast<std::size_t>(w)], pairs[static_cast<std::size_t>(w)]);
          });
        }
        for (auto& t : pool) t.join();
      }
      double l = std::accumulate(loss.begin(), loss.end(), 0.0);
      double p = static_cast<double>(std::accumulate(pairs.begin(), pairs.end(), std::uint64_t{0}));
      prov.epoch_loss.push_back(p > 0 ? l / p : 0.0);
    }

    return finish(language_id, std::move(prov));
  }

 private:
  void build_vocabulary(const Corpus& corpus) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& doc : corpus.documents()) {
      for (const auto& t : doc) ++counts[t];
    }
    corpus_tokens_ = corpus.token_count();
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [tok, n] : counts) {
      if (n >= static_cast<std::uint64_t>(config_.min_count)) kept.emplace_back(tok, n);
    }
    if (kept.empty()) {
      throw Error(ErrorCode::kEmptyVocabulary, "no token of corpus '" + corpus.language_id() +
                                                   "' reaches min_count " + std::to_string(config_.min_count));
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (auto& [tok, n] : kept) {
      index_.emplace(tok, static_cast<std::int32_t>(words_.size()));
      words_.push_back(tok);
      counts_.push_back(n);
    }
  }

  void encode(const Corpus& corpus) {
    docs_.reserve(corpus.size());
    for (const auto& doc : corpus.documents()) {
      std::vector<std::int32_t> ids;
      ids.reserve(doc.size());
      for (const auto& t : doc) {
        auto it = index_.find(t);
        if (it != index_.end()) ids.push_back(it->second);
      }
      train_tokens_ += ids.size();
      if (!ids.empty()) docs_.push_back(std::move(ids));
    }
    const double total = static_cast<double>(train_tokens_);
    keep_prob_.resize(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (config_.subsample_threshold <= 0.0) {
        keep_prob_[i] = 1.0f;
        continue;
      }
      double f = static_cast<double>(counts_[i]) / total;
      double r = config_.subsample_threshold / f;
      keep_prob_[i] = static_cast<float>(std::sqrt(r) + r);
    }
  }

  void init_parameters() {
    const std::size_t n = words_.size();
    rows_.resize(n);
    // Only buckets referenced by some vocabulary word can receive gradient,
    // so they are packed densely (in order of first use by frequency rank,
    // which keeps the hot rows together).
    std::unordered_map<std::uint32_t, std::int32_t> dense;
    for (std::size_t i = 0; i < n; ++i) {
      rows_[i].push_back(static_cast<std::int32_t>(i));
      if (config_.subword.enabled) {
        for (auto b : ngram_buckets(words_[i], config_.subword)) {
          auto [it, fresh] = dense.emplace(b, static_cast<std::int32_t>(n + dense.size()));
          rows_[i].push_back(it->second);
        }
      }
    }
    referenced_.clear();
    for (const auto& [b, _] : dense) referenced_.push_back(b);
    std::sort(referenced_.begin(), referenced_.end());
    bucket_row_.clear();
    for (auto b : referenced_) bucket_row_.push_back(dense.at(b));
    const std::size_t input_rows = n + referenced_.size();
    input_.assign(input_rows * static_cast<std::size_t>(dim_), 0.0f);
    output_.assign(n * static_cast<std::size_t>(dim_), 0.0f);

    Rng rng(mix_seed(config_.seed, 1));
    const double bound = 0.5 / dim_;
    auto fill = [&](std::size_t r) {
      float* p = &input_[r * static_cast<std::size_t>(dim_)];
      for (int d = 0; d < dim_; ++d) p[d] = static_cast<float>((2.0 * uniform_real(rng) - 1.0) * bound);
    };
    for (std::size_t i = 0; i < n; ++i) fill(i);
    for (auto r : bucket_row_) fill(static_cast<std::size_t>(r));
  }

  void build_negative_table() {
    double z = 0;
    for (auto c : counts_) z += std::pow(static_cast<double>(c), 0.75);
    const std::size_t size = std::clamp<std::size_t>(words_.size() * 1000, 1'000'000, 10'000'000);
    negative_table_.reserve(size);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      double share = std::pow(static_cast<double>(counts_[i]), 0.75) / z;
      auto slots = static_cast<std::size_t>(std::max(1.0, std::round(share * static_cast<double>(size))));
      negative_table_.insert(negative_table_.end(), slots, static_cast<std::int32_t>(i));
    }
    // Drawn by walking the shuffled table sequentially (cache friendly).
    Rng rng(mix_seed(config_.seed, 2));
    shuffle(negative_table_, rng);
  }

  void run_shard(std::size_t begin, std::size_t end, int epoch, int worker, double& loss_sum,
                 std::uint64_t& pair_count) {
    const LookupTables& tab = tables();
    FastRng rng(mix_seed(config_.seed, 1000 + static_cast<std::uint64_t>(epoch) * 7919 + worker));
    const auto d = static_cast<Eigen::Index>(dim_);
    Eigen::VectorXf hidden(d), grad(d);
    std::vector<std::int32_t> line;
    const auto lr0 = static_cast<float>(config_.initial_learning_rate);
    const auto table_size = static_cast<std::uint32_t>(negative_table_.size());
    std::uint32_t negpos = rng.below(table_size);
    std::vector<std::int32_t> events(static_cast<std::size_t>(config_.negatives) + 1);

    for (std::size_t di = begin; di < end; ++di) {
      const auto& doc = docs_[di];
      double progress = static_cast<double>(processed_.load(std::memory_order_relaxed)) / total_work_;
      const float lr = lr0 * static_cast<float>(std::max(0.0, 1.0 - progress));
      processed_.fetch_add(doc.size(), std::memory_order_relaxed);

      line.clear();
      for (auto w : doc) {
        if (rng.uniform() <= keep_prob_[static_cast<std::size_t>(w)]) line.push_back(w);
      }
      const auto len = static_cast<std::ptrdiff_t>(line.size());
      for (std::ptrdiff_t pos = 0; pos < len; ++pos) {
        const auto& rows = rows_[static_cast<std::size_t>(line[static_cast<std::size_t>(pos)])];
        if (pos + 1 < len) prefetch_rows(rows_[static_cast<std::size_t>(line[static_cast<std::size_t>(pos + 1)])]);
        hidden.setZero();
        for (auto r : rows) hidden += FloatMap(&input_[static_cast<std::size_t>(r) * dim_], d);
        hidden /= static_cast<float>(rows.size());
        grad.setZero();

        const auto boundary = static_cast<std::ptrdiff_t>(rng.below(static_cast<std::uint32_t>(config_.window)) + 1);
        bool any = false;
        for (std::ptrdiff_t c = pos - boundary; c <= pos + boundary; ++c) {
          if (c < 0 || c >= len || c == pos) continue;
          any = true;
          const std::int32_t target = line[static_cast<std::size_t>(c)];
          events[0] = target;
          std::size_t count = 1;
          for (int n = 0; n < config_.negatives; ++n) {
            std::int32_t neg;
            do {
              neg = negative_table_[negpos];
              if (++negpos == table_size) negpos = 0;
            } while (neg == target && words_.size() > 1);
            if (neg != target) events[count++] = neg;
          }
          loss_sum += update_events(events.data(), count, hidden, grad, lr, tab);
          ++pair_count;
        }
        if (!any) continue;
        for (auto r : rows) FloatMap(&input_[static_cast<std::size_t>(r) * dim_], d) += grad;
      }
    }
  }

  void prefetch_rows(const std::vector<std::int32_t>& rows) const {
    const std::size_t bytes = static_cast<std::size_t>(dim_) * sizeof(float);
    for (auto r : rows) {
      const char* p = reinterpret_cast<const char*>(&input_[static_cast<std::size_t>(r) * dim_]);
      for (std::size_t off = 0; off < bytes; off += 64) __builtin_prefetch(p + off);
    }
  }

  // Logistic events for one (center, context) pair: events[0] is the
  // observed context, the rest are negatives. Scores are computed before the
  // output rows are touched, then each output row is updated and the input
  // gradient accumulated. Returns the summed loss.
  float update_events(const std::int32_t* events, std::size_t count, const Eigen::VectorXf& hidden,
                      Eigen::VectorXf& grad, float lr, const LookupTables& tab) {
    float scores[kMaxEvents];
    for (std::size_t e = 0; e < count; ++e) {
      scores[e] = FloatMap(&output_[static_cast<std::size_t>(events[e]) * dim_], dim_).dot(hidden);
    }
    float loss = 0.0f;
    for (std::size_t e = 0; e < count; ++e) {
      FloatMap out(&output_[static_cast<std::size_t>(events[e]) * dim_], dim_);
      const float p = tab.fast_sigmoid(scores[e]);
      const float label = e == 0 ? 1.0f : 0.0f;
      const float alpha = lr * (label - p);
      grad += alpha * out;
      out += alpha * hidden;
      loss += e == 0 ? -tab.fast_log(p) : -tab.fast_log(1.0f - p);
    }
    return loss;
  }

  EmbeddingSpace finish(const std::string& language_id, TrainingProvenance prov) {
    const std::size_t n = words_.size();
    RowMatrix vectors(static_cast<Eigen::Index>(n), dim_);
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXf acc = Eigen::VectorXf::Zero(dim_);
      for (auto r : rows_[i]) acc += FloatMap(&input_[static_cast<std::size_t>(r) * dim_], dim_);
      vectors.row(static_cast<Eigen::Index>(i)) = acc / static_cast<float>(rows_[i].size());
    }
    std::optional<SubwordConfig> subword;
    std::unordered_map<std::uint32_t, Vector> buckets;
    if (config_.subword.enabled) {
      subword = config_.subword;
      buckets.reserve(referenced_.size());
      for (std::size_t k = 0; k < referenced_.size(); ++k) {
        const float* p = &input_[static_cast<std::size_t>(bucket_row_[k]) * static_cast<std::size_t>(dim_)];
        buckets.emplace(referenced_[k], Vector(p, p + dim_));
      }
    }
    EmbeddingSpace space(language_id, words_, std::move(vectors), subword, std::move(buckets));
    space.set_counts(counts_);
    space.set_provenance(std::move(prov));
    return space;
  }

  TrainConfig config_;
  int dim_;
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::vector<std::vector<std::int32_t>> docs_;
  std::vector<float> keep_prob_;
  std::vector<std::vector<std::int32_t>> rows_;
  // Referenced bucket ids (ascending) and their packed input rows.
  std::vector<std::uint32_t> referenced_;
  std::vector<std::int32_t> bucket_row_;
  std::vector<float> input_;
  std::vector<float> output_;
  std::vector<std::int32_t> negative_table_;
  std::size_t corpus_tokens_ = 0;
  std::size_t train_tokens_ = 0;
  double total_work_ = 1.0;
  std::atomic<std::uint64_t> processed_{0};
};

}  // namespace

EmbeddingSpace train(const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  if (corpus.token_count() == 0) {
    throw Error(ErrorCode::kEmptyCorpus, "cannot train on empty corpus '" + corpus.language_id() + "'");
  }
  Trainer trainer(corpus, config);
  return trainer.run(corpus.language_id());
}

// ---------------------------------------------------------------------------
// persistence

void write_embedding(std::ostream& text, const EmbeddingSpace& space) {
  text << space.size() << ' ' << space.dimension() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < space.size(); ++i) {
    text << space.tokens()[i];
    for (float v : space.row(i)) {
      std::snprintf(buf, sizeof buf, " %.6f", static_cast<double>(v));
      text << buf;
    }
    text << '\n';
  }
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw Error(ErrorCode::kFormat, "subword sidecar truncated");
  }
  return v;
}

}  // namespace

void write_subword_sidecar(std::ostream& bin, const EmbeddingSpace& space) {
  if (!space.subword()) throw Error(ErrorCode::kConfiguration, "space has no subword buckets");
  const auto& sw = *space.subword();
  bin.write(kSidecarMagic, sizeof kSidecarMagic);
  put<std::uint32_t>(bin, static_cast<std::uint32_t>(sw.min_n));
  put<std::uint32_t>(bin, static_cast<std::uint32_t>(sw.max_n));
  put<std::uint32_t>(bin, sw.bucket_count);
  put<std::uint32_t>(bin, static_cast<std::uint32_t>(space.dimension()));
  std::vector<std::uint32_t> ids;
  ids.reserve(space.buckets().size());
  for (const auto& [b, _] : space.buckets()) ids.push_back(b);
  std::sort(ids.begin(), ids.end());
  put<std::uint64_t>(bin, ids.size());
  for (auto b : ids) {
    put<std::uint32_t>(bin, b);
    const auto& v = space.buckets().at(b);
    bin.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  }
}

EmbeddingSpace read_embedding(std::istream& text, std::istream* sidecar, std::string language_id) {
  std::string line;
  if (!std::getline(text, line)) throw Error(ErrorCode::kFormat, "embedding line 1: missing header");
  std::istringstream header(line);
  long long n = -1, dim = -1;
  std::string extra;
  if (!(header >> n >> dim) || (header >> extra) || n < 0 || dim < 1) {
    throw Error(ErrorCode::kFormat, "embedding line 1: expected '<vocab_size> <dimension>'");
  }
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(n));
  RowMatrix vectors(n, dim);
  std::size_t line_no = 1;
  for (long long i = 0; i < n; ++i) {
    ++line_no;
    if (!std::getline(text, line)) {
      throw Error(ErrorCode::kFormat, "embedding line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(n) + " vector rows, file ends early");
    }
    const char* p = line.c_str();
    const char* token_end = std::strchr(p, ' ');
    if (!token_end || token_end == p) {
      throw Error(ErrorCode::kFormat, "embedding line " + std::to_string(line_no) + ": missing token");
    }
    tokens.emplace_back(p, token_end);
    p = token_end;
    long long found = 0;
    while (true) {
      while (*p == ' ' || *p == '\r') ++p;
      if (*p == '\0') break;
      char* after = nullptr;
      float v = std::strtof(p, &after);
      if (after == p) {
        throw Error(ErrorCode::kFormat, "embedding line " + std::to_string(line_no) + ": bad number");
      }
      if (found < dim) vectors(i, found) = v;
      ++found;
      p = after;
    }
    if (found != dim) {
      throw Error(ErrorCode::kFormat, "embedding line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(dim) + " values, found " + std::to_string(found));
    }
  }
  while (std::getline(text, line)) {
    ++line_no;
    if (!line.empty()) {
      throw Error(ErrorCode::kFormat, "embedding line " + std::to_string(line_no) + ": more rows than header declares");
    }
  }

  std::optional<SubwordConfig> subword;
  std::unordered_map<std::uint32_t, Vector> buckets;
  if (sidecar) {
    char magic[sizeof kSidecarMagic];
    if (!sidecar->read(magic, sizeof magic) || std::memcmp(magic, kSidecarMagic, sizeof magic) != 0) {
      throw Error(ErrorCode::kFormat, "subword sidecar: bad magic header");
    }
    SubwordConfig sw;
    sw.enabled = true;
    sw.min_n = static_cast<int>(get<std::uint32_t>(*sidecar));
    sw.max_n = static_cast<int>(get<std::uint32_t>(*sidecar));
    sw.bucket_count = get<std::uint32_t>(*sidecar);
    auto sdim = get<std::uint32_t>(*sidecar);
    if (static_cast<long long>(sdim) != dim) {
      throw Error(ErrorCode::kFormat, "subword sidecar: dimension " + std::to_string(sdim) +
                                          " does not match embedding dimension " + std::to_string(dim));
    }
    auto count = get<std::uint64_t>(*sidecar);
    buckets.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      auto b = get<std::uint32_t>(*sidecar);
      if (b >= sw.bucket_count) throw Error(ErrorCode::kFormat, "subword sidecar: bucket id out of range");
      Vector v(static_cast<std::size_t>(dim));
      if (!sidecar->read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)))) {
        throw Error(ErrorCode::kFormat, "subword sidecar truncated");
      }
      buckets.emplace(b, std::move(v));
    }
    subword = sw;
  }
  return EmbeddingSpace(std::move(language_id), std::move(tokens), std::move(vectors), subword, std::move(buckets));
}

void save_embedding(const std::string& path, const EmbeddingSpace& space) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write embedding: " + path);
  write_embedding(out, space);
  if (space.subword_enabled()) {
    std::ofstream bin(path + ".subword", std::ios::binary);
    if (!bin) throw Error(ErrorCode::kIo, "cannot write subword sidecar: " + path + ".subword");
    write_subword_sidecar(bin, space);
  }
}

EmbeddingSpace load_embedding(const std::string& path, std::string language_id) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read embedding: " + path);
  std::ifstream bin(path + ".subword", std::ios::binary);
  return read_embedding(in, bin ? &bin : nullptr, std::move(language_id));
}

}  // namespace langdiv
