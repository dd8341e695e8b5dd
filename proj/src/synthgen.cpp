#include "langdiv/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "langdiv/divergence.hpp"
#include "langdiv/error.hpp"
#include "langdiv/ingest.hpp"
#include "langdiv/random.hpp"
#include "langdiv/vocab.hpp"

namespace langdiv {

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kConfiguration, "synth config: " + what); };
  if (vocabulary_size < 10) bad("vocabulary size must be at least 10");
  if (topic_count < 1) bad("topic count must be >= 1");
  if (documents < 1) bad("documents must be >= 1");
  if (min_doc_length < 1 || min_doc_length > max_doc_length) bad("need 1 <= min_doc_length <= max_doc_length");
  if (stopword_rate < 0.0 || stopword_rate >= 1.0) bad("stopword rate must lie in [0, 1)");
  if (collocation_rate < 0.0 || collocation_rate > 1.0) bad("collocation rate must lie in [0, 1]");
  const std::size_t pairs = planted.size() + random_planted;
  if (vocabulary_size < 10 * pairs) bad("vocabulary size must be at least 10x the planted pair count");

  const StopwordSet& stop = stopwords();
  std::set<std::string> seen;
  for (const auto& [a, b] : planted) {
    for (const auto& t : {a, b}) {
      if (!is_token(t)) bad("planted token '" + t + "' is not a [a-z0-9]+ token");
      if (stop.contains(t)) bad("planted token '" + t + "' collides with a stopword");
      if (!seen.insert(t).second) bad("planted token '" + t + "' is listed twice");
    }
  }
  for (const auto& [a, b] : planted_phrases) {
    for (const auto& p : {a, b}) {
      auto words = preprocess_text(p);
      if (words.size() != 3 || p != words[0] + " " + words[1] + " " + words[2]) {
        bad("planted phrase '" + p + "' must be three space-separated tokens");
      }
      if (!seen.insert(p).second) bad("planted phrase '" + p + "' is listed twice");
    }
    if (a == b) bad("planted phrase pair must differ");
  }
}

std::size_t documents_for_tokens(const SynthConfig& config, std::size_t tokens) {
  const double mean_len = 0.5 * static_cast<double>(config.min_doc_length + config.max_doc_length);
  return static_cast<std::size_t>(std::ceil(static_cast<double>(tokens) / mean_len));
}

namespace {

// A content item: a single word, or a phrase emitted as several tokens.
struct Item {
  std::vector<std::string> surface;
  double weight = 0.0;
  std::size_t topic = 0;
  std::vector<std::uint32_t> collocates;
  std::vector<std::uint32_t> stopword_prefs;
};

std::string random_name(Rng& rng) {
  static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
  const std::size_t len = 5 + uniform_index(rng, 4);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(kLetters[uniform_index(rng, 26)]);
  return s;
}

class Generator {
 public:
  explicit Generator(const SynthConfig& config) : config_(config), rng_(mix_seed(config.seed, 11)) {
    build_stopwords();
    build_items();
    build_topics();
    build_preferences();
  }

  // Item id sequences; stopwords are encoded as ~index.
  std::vector<std::vector<std::int64_t>> sample(std::uint64_t stream) {
    Rng rng(mix_seed(config_.seed, stream));
    std::vector<std::vector<std::int64_t>> docs;
    docs.reserve(config_.documents);
    for (std::size_t d = 0; d < config_.documents; ++d) docs.push_back(sample_document(rng));
    return docs;
  }

  Corpus render(const std::vector<std::vector<std::int64_t>>& docs, const std::vector<std::uint32_t>& relabel,
                std::string id) const {
    Corpus corpus(std::move(id));
    for (const auto& seq : docs) {
      Document doc;
      for (auto x : seq) {
        if (x < 0) {
          doc.push_back(stopword_tokens_[static_cast<std::size_t>(~x)]);
        } else {
          for (const auto& t : items_[relabel[static_cast<std::size_t>(x)]].surface) doc.push_back(t);
        }
      }
      corpus.add(std::move(doc));
    }
    return corpus;
  }

  std::vector<std::uint32_t> identity() const {
    std::vector<std::uint32_t> r(items_.size());
    for (std::uint32_t i = 0; i < r.size(); ++i) r[i] = i;
    return r;
  }

  std::vector<std::uint32_t> swapped() const {
    auto r = identity();
    for (const auto& [a, b] : swaps_) std::swap(r[a], r[b]);
    return r;
  }

  // Planted pairs come from the mid-frequency band of the realized corpus
  // (ranks [V/10, 35V/100) by occurrence count), partners adjacent in rank
  // so the swap keeps frequency profiles comparable.
  void plant(const std::vector<std::vector<std::int64_t>>& docs) {
    const std::size_t pairs = config_.planted.size() + config_.random_planted;
    if (pairs == 0) return;
    const std::size_t v = config_.vocabulary_size;
    std::vector<std::uint64_t> counts(v, 0);
    for (const auto& doc : docs) {
      for (auto x : doc) {
        if (x >= 0 && static_cast<std::size_t>(x) < v) ++counts[static_cast<std::size_t>(x)];
      }
    }
    std::vector<std::uint32_t> by_count(v);
    for (std::uint32_t i = 0; i < v; ++i) by_count[i] = i;
    std::stable_sort(by_count.begin(), by_count.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return counts[a] > counts[b]; });
    const std::size_t lo = v / 10;
    const std::size_t hi = std::max(lo + 2 * pairs, (v * 35) / 100);
    if (hi > v) throw Error(ErrorCode::kConfiguration, "synth config: too many planted pairs for vocabulary");
    Rng rng(mix_seed(config_.seed, 505));
    std::vector<std::uint32_t> band;
    for (std::size_t r = lo; r < hi; ++r) band.push_back(static_cast<std::uint32_t>(r));
    shuffle(band, rng);
    band.resize(2 * pairs);
    std::sort(band.begin(), band.end());
    std::vector<std::pair<std::uint32_t, std::uint32_t>> chosen;
    for (std::size_t p = 0; p < pairs; ++p) chosen.emplace_back(by_count[band[2 * p]], by_count[band[2 * p + 1]]);
    shuffle(chosen, rng);
    for (std::size_t p = 0; p < config_.planted.size(); ++p) {
      items_[chosen[p].first].surface = {config_.planted[p].first};
      items_[chosen[p].second].surface = {config_.planted[p].second};
    }
    word_swaps_ = chosen;
    swaps_.insert(swaps_.end(), chosen.begin(), chosen.end());
  }

  GroundTruth truth() const {
    GroundTruth t;
    for (const auto& [a, b] : word_swaps_) t.planted.emplace_back(items_[a].surface[0], items_[b].surface[0]);
    t.planted_phrases = config_.planted_phrases;
    t.seed = config_.seed;
    t.vocabulary_size = config_.vocabulary_size;
    return t;
  }

 private:
  void build_stopwords() {
    // Apostrophe forms never survive tokenization, so only plain tokens are
    // injected.
    for (const auto& w : stopwords().tokens()) {
      if (is_token(w)) stopword_tokens_.push_back(w);
    }
    std::vector<double> weights;
    for (std::size_t r = 0; r < stopword_tokens_.size(); ++r) weights.push_back(1.0 / static_cast<double>(r + 1));
    stopword_table_ = AliasTable(weights);
  }

  void build_items() {
    const StopwordSet& stop = stopwords();
    std::unordered_set<std::string> reserved;
    for (const auto& [a, b] : config_.planted) reserved.insert({a, b});
    for (const auto& [a, b] : config_.planted_phrases) {
      for (const auto& w : preprocess_text(a)) reserved.insert(w);
      for (const auto& w : preprocess_text(b)) reserved.insert(w);
    }
    std::unordered_set<std::string> used;
    const std::size_t v = config_.vocabulary_size;
    items_.resize(v);
    for (std::size_t i = 0; i < v; ++i) {
      std::string name;
      do {
        name = random_name(rng_);
      } while (stop.contains(name) || reserved.count(name) || !used.insert(name).second);
      items_[i].surface = {name};
      items_[i].weight = std::pow(static_cast<double>(i + 1), -config_.zipf_exponent);
      items_[i].topic = static_cast<std::size_t>(uniform_index(rng_, config_.topic_count));
    }

    // Phrases behave like items in the upper-middle frequency range.
    for (const auto& [a, b] : config_.planted_phrases) {
      std::uint32_t ia = static_cast<std::uint32_t>(items_.size());
      for (const auto* p : {&a, &b}) {
        Item it;
        it.surface = preprocess_text(*p);
        it.weight = std::pow(static_cast<double>(v / 20 + 1), -config_.zipf_exponent);
        it.topic = static_cast<std::size_t>(uniform_index(rng_, config_.topic_count));
        items_.push_back(std::move(it));
      }
      phrase_items_.push_back(ia);
      phrase_items_.push_back(ia + 1);
      swaps_.emplace_back(ia, ia + 1);
    }
  }

  void build_topics() {
    for (std::size_t t = 0; t < config_.topic_count; ++t) {
      std::vector<double> w(items_.size());
      for (std::size_t i = 0; i < items_.size(); ++i) {
        bool phrase = i >= config_.vocabulary_size;
        if (phrase) {
          w[i] = items_[i].topic == t ? items_[i].weight : 0.0;
        } else {
          w[i] = items_[i].weight * (items_[i].topic == t ? 1.0 : config_.topic_leak);
        }
      }
      topic_tables_.emplace_back(w);
    }
  }

  // Every item gets private collocates (frequency-weighted draws from its
  // home topic) and preferred stopwords: the signature that makes its
  // contexts distinguishable from those of other words in the same topic.
  void build_preferences() {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      auto& it = items_[i];
      const auto& table = topic_tables_[it.topic];
      for (std::size_t c = 0; c < config_.collocates; ++c) {
        std::uint32_t pick = static_cast<std::uint32_t>(i);
        for (int guard = 0; guard < 100 && (pick == i || pick >= config_.vocabulary_size); ++guard) {
          pick = static_cast<std::uint32_t>(table.sample(rng_));
        }
        it.collocates.push_back(pick);
      }
      for (int s = 0; s < 3; ++s) {
        it.stopword_prefs.push_back(static_cast<std::uint32_t>(uniform_index(rng_, stopword_tokens_.size())));
      }
    }
  }

  std::int64_t stopword(Rng& rng, std::int64_t prev) const {
    if (prev >= 0 && uniform_real(rng) < 0.6) {
      const auto& prefs = items_[static_cast<std::size_t>(prev)].stopword_prefs;
      double u = uniform_real(rng);
      std::size_t k = u < 0.5 ? 0 : (u < 0.8 ? 1 : 2);
      return ~static_cast<std::int64_t>(prefs[k]);
    }
    return ~static_cast<std::int64_t>(stopword_table_.sample(rng));
  }

  std::vector<std::int64_t> sample_document(Rng& rng) const {
    const std::size_t len =
        config_.min_doc_length + uniform_index(rng, config_.max_doc_length - config_.min_doc_length + 1);
    const std::size_t topic = uniform_index(rng, config_.topic_count);
    std::vector<std::int64_t> doc;
    std::size_t tokens = 0;
    std::int64_t prev = -1;
    while (tokens < len) {
      if (uniform_real(rng) < config_.stopword_rate) {
        doc.push_back(stopword(rng, prev));
        ++tokens;
        continue;
      }
      std::int64_t item;
      if (prev >= 0 && uniform_real(rng) < config_.collocation_rate) {
        const auto& it = items_[static_cast<std::size_t>(prev)];
        if (!it.collocates.empty()) {
          // Geometric preference over the private collocate list.
          std::size_t k = 0;
          while (k + 1 < it.collocates.size() && uniform_real(rng) < 0.5) ++k;
          item = it.collocates[k];
        } else {
          item = static_cast<std::int64_t>(topic_tables_[topic].sample(rng));
        }
      } else {
        item = static_cast<std::int64_t>(topic_tables_[topic].sample(rng));
      }
      doc.push_back(item);
      tokens += items_[static_cast<std::size_t>(item)].surface.size();
      prev = item;
    }
    return doc;
  }

  const SynthConfig& config_;
  Rng rng_;
  std::vector<std::string> stopword_tokens_;
  AliasTable stopword_table_;
  std::vector<Item> items_;
  std::vector<AliasTable> topic_tables_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> word_swaps_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> swaps_;
  std::vector<std::uint32_t> phrase_items_;
};

}  // namespace

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  Generator gen(config);
  auto docs_a = gen.sample(101);
  gen.plant(docs_a);
  SynthOutput out;
  out.a = gen.render(docs_a, gen.identity(), "synth_a");
  if (config.independent_b) {
    out.b = gen.render(gen.sample(202), gen.swapped(), "synth_b");
  } else {
    // Same draws relabelled, presented in a fresh order.
    Rng rng(mix_seed(config.seed, 303));
    shuffle(docs_a, rng);
    out.b = gen.render(docs_a, gen.swapped(), "synth_b");
  }
  out.truth = gen.truth();
  out.truth.corpus_a_id = out.a.language_id();
  out.truth.corpus_b_id = out.b.language_id();
  for (auto* c : {&out.a, &out.b}) {
    c->provenance().filter = "synthetic seed=" + std::to_string(config.seed);
  }
  return out;
}

std::pair<Corpus, Corpus> split_halves(const Corpus& corpus, std::uint64_t seed, std::string id_a,
                                       std::string id_b) {
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, 404));
  shuffle(order, rng);
  std::vector<char> side(corpus.size(), 0);
  for (std::size_t i = 0; i < order.size() / 2; ++i) side[order[i]] = 1;
  Corpus a(std::move(id_a)), b(std::move(id_b));
  for (std::size_t i = 0; i < corpus.size(); ++i) (side[i] ? a : b).add(corpus.documents()[i]);
  return {std::move(a), std::move(b)};
}

RecoveryMetrics evaluate_recovery(const DivergenceReport& report, const GroundTruth& truth, std::size_t top_n) {
  const bool forward = report.source_id == truth.corpus_a_id && report.target_id == truth.corpus_b_id;
  const bool backward = report.source_id == truth.corpus_b_id && report.target_id == truth.corpus_a_id;
  if (!forward && !backward) {
    throw Error(ErrorCode::kConsistency, "report languages (" + report.source_id + " -> " + report.target_id +
                                             ") do not match the ground truth corpora");
  }
  std::unordered_set<std::string> evaluated(report.evaluated_tokens.begin(), report.evaluated_tokens.end());
  std::unordered_map<std::string, std::string> partner;
  for (const auto& [a, b] : truth.planted) {
    partner[a] = b;
    partner[b] = a;
  }
  for (const auto& [a, b] : truth.planted_phrases) {
    auto ja = preprocess_text(a), jb = preprocess_text(b);
    std::string ta = join_trigram(ja[0], ja[1], ja[2]), tb = join_trigram(jb[0], jb[1], jb[2]);
    // Phrase pairs only count when the report evaluates phrase tokens.
    if (evaluated.count(ta) || evaluated.count(tb)) {
      partner[ta] = tb;
      partner[tb] = ta;
    }
  }
  std::unordered_map<std::string, std::string> translated;
  for (const auto& p : report.pairs) translated[p.source] = p.target;

  RecoveryMetrics m;
  std::size_t pair_count = 0, recovered = 0, found = 0, correct = 0;
  auto consider_pair = [&](const std::string& a, const std::string& b) {
    ++pair_count;
    bool ok = true;
    for (const auto* s : {&a, &b}) {
      auto it = translated.find(*s);
      if (it != translated.end()) {
        ++found;
        if (it->second == partner[*s]) ++correct;
        else ok = false;
      } else {
        ok = false;
      }
    }
    if (ok) ++recovered;
  };
  for (const auto& [a, b] : truth.planted) consider_pair(a, b);
  for (const auto& [a, b] : truth.planted_phrases) {
    auto ja = preprocess_text(a), jb = preprocess_text(b);
    std::string ta = join_trigram(ja[0], ja[1], ja[2]), tb = join_trigram(jb[0], jb[1], jb[2]);
    if (partner.count(ta)) consider_pair(ta, tb);
  }
  m.planted_recovered = recovered;
  m.planted_recall = pair_count ? static_cast<double>(recovered) / static_cast<double>(pair_count) : 1.0;
  m.partner_precision = found ? static_cast<double>(correct) / static_cast<double>(found) : 1.0;

  std::size_t slice = 0, false_hits = 0;
  for (const auto& tok : report.evaluated_tokens) {
    if (slice >= top_n) break;
    if (partner.count(tok)) continue;
    ++slice;
    if (translated.count(tok)) ++false_hits;
  }
  m.false_slice = slice;
  m.false_misalignment_rate = slice ? static_cast<double>(false_hits) / static_cast<double>(slice) : 0.0;
  return m;
}

std::string ground_truth_to_json(const GroundTruth& truth) {
  nlohmann::json j;
  j["corpus_a"] = truth.corpus_a_id;
  j["corpus_b"] = truth.corpus_b_id;
  j["seed"] = truth.seed;
  j["vocabulary_size"] = truth.vocabulary_size;
  j["planted"] = nlohmann::json::array();
  for (const auto& [a, b] : truth.planted) j["planted"].push_back({a, b});
  j["planted_phrases"] = nlohmann::json::array();
  for (const auto& [a, b] : truth.planted_phrases) j["planted_phrases"].push_back({a, b});
  j["expectation"] = "all other tokens self-translate";
  return j.dump(2);
}

GroundTruth ground_truth_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kFormat, "ground truth: invalid JSON");
  try {
    GroundTruth t;
    t.corpus_a_id = j.at("corpus_a").get<std::string>();
    t.corpus_b_id = j.at("corpus_b").get<std::string>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.vocabulary_size = j.at("vocabulary_size").get<std::size_t>();
    for (const auto& p : j.at("planted")) t.planted.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    for (const auto& p : j.at("planted_phrases")) {
      t.planted_phrases.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("ground truth: ") + e.what());
  }
}

}  // namespace langdiv
