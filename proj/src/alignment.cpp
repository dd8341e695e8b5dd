#include "langdiv/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/SVD>

#include "langdiv/error.hpp"

namespace langdiv {

namespace {

bool usable(const std::optional<Vector>& v) {
  if (!v) return false;
  double n = 0;
  for (float x : *v) {
    if (!std::isfinite(x)) return false;
    n += static_cast<double>(x) * x;
  }
  return n > 0.0;
}

Eigen::VectorXd unit_row(const Vector& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out / out.norm();
}

}  // namespace

SeedLexicon build_seed_lexicon(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                               const StopwordSet& stopwords) {
  if (src.dimension() != tgt.dimension()) {
    throw Error(ErrorCode::kConfiguration, "seed lexicon: spaces have different dimensions");
  }
  SeedLexicon lex;
  for (const auto& w : stopwords.tokens()) {
    if (usable(src.vector(w)) && usable(tgt.vector(w))) {
      lex.pairs.emplace_back(w, w);
    } else {
      lex.dropped.push_back(w);
    }
  }
  if (lex.size() < kMinSeedPairs) {
    throw Error(ErrorCode::kInsufficientAnchors,
                "only " + std::to_string(lex.size()) + " stopword anchors are resolvable in both '" +
                    src.language_id() + "' and '" + tgt.language_id() + "' (need " +
                    std::to_string(kMinSeedPairs) + ")");
  }
  return lex;
}

Vector AlignmentMap::apply(std::span<const float> x) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  Eigen::VectorXd y = matrix.transpose() * v;
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(y[static_cast<Eigen::Index>(i)]);
  return out;
}

double AlignmentMap::orthogonality_error() const {
  Eigen::MatrixXd e = matrix.transpose() * matrix - Eigen::MatrixXd::Identity(matrix.rows(), matrix.cols());
  return e.cwiseAbs().maxCoeff();
}

Eigen::MatrixXd procrustes(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::vector<std::string>* warnings) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw Error(ErrorCode::kConfiguration, "procrustes: X and Y shapes differ");
  }
  const Eigen::MatrixXd m = x.transpose() * y;
  if (!m.allFinite()) throw Error(ErrorCode::kNumeric, "procrustes: non-finite cross-covariance");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw Error(ErrorCode::kNumeric, "procrustes: SVD did not converge");
  const auto& s = svd.singularValues();
  if (warnings && s.size() > 0) {
    const double tol = std::max(1e-300, s[0] * 1e-12 * static_cast<double>(s.size()));
    Eigen::Index zero = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) zero += s[i] <= tol ? 1 : 0;
    if (zero > 0) {
      warnings->push_back("X^T Y is rank deficient (" + std::to_string(zero) +
                          " zero singular values); the orthogonal minimizer is not unique");
    }
  }
  Eigen::MatrixXd w = svd.matrixU() * svd.matrixV().transpose();
  if (!w.allFinite()) throw Error(ErrorCode::kNumeric, "procrustes: non-finite result");
  return w;
}

AlignmentMap fit(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const SeedLexicon& lexicon, bool normalize) {
  if (src.dimension() != tgt.dimension()) {
    throw Error(ErrorCode::kConfiguration, "fit: spaces have different dimensions");
  }
  if (lexicon.size() < kMinSeedPairs) {
    throw Error(ErrorCode::kInsufficientAnchors, "fit: seed lexicon has fewer than 3 pairs");
  }
  const auto d = static_cast<Eigen::Index>(src.dimension());
  const auto n = static_cast<Eigen::Index>(lexicon.size());
  Eigen::MatrixXd x(n, d), y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [s, t] = lexicon.pairs[static_cast<std::size_t>(i)];
    auto sv = src.vector(s);
    auto tv = tgt.vector(t);
    if (!usable(sv) || !usable(tv)) {
      throw Error(ErrorCode::kInsufficientAnchors, "fit: seed pair <" + s + ", " + t + "> is not resolvable");
    }
    if (normalize) {
      x.row(i) = unit_row(*sv).transpose();
      y.row(i) = unit_row(*tv).transpose();
    } else {
      for (Eigen::Index j = 0; j < d; ++j) {
        x(i, j) = (*sv)[static_cast<std::size_t>(j)];
        y(i, j) = (*tv)[static_cast<std::size_t>(j)];
      }
    }
  }
  AlignmentMap map;
  map.matrix = procrustes(x, y, &map.warnings);
  map.source_id = src.language_id();
  map.target_id = tgt.language_id();
  map.seed_pairs = lexicon.size();
  map.normalized = normalize;
  return map;
}

std::string_view to_string(RetrievalMode mode) {
  return mode == RetrievalMode::kCsls ? "csls" : "nn";
}

RetrievalMode retrieval_mode_from_string(std::string_view s) {
  if (s == "nn") return RetrievalMode::kNearestNeighbor;
  if (s == "csls") return RetrievalMode::kCsls;
  throw Error(ErrorCode::kConfiguration, "unknown retrieval mode '" + std::string(s) + "' (nn|csls)");
}

// ---------------------------------------------------------------------------
// Translator

namespace {

// Mean of the k largest entries.
float top_k_mean(const Eigen::Ref<const Eigen::VectorXf>& v, std::size_t k) {
  std::vector<float> vals(v.data(), v.data() + v.size());
  k = std::min<std::size_t>(k, vals.size());
  if (k == 0) return 0.0f;
  std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(k - 1), vals.end(), std::greater<>());
  double s = 0;
  for (std::size_t i = 0; i < k; ++i) s += vals[i];
  return static_cast<float>(s / static_cast<double>(k));
}

void normalize_rows(RowMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    float n = m.row(i).norm();
    if (n > 0.0f) m.row(i) /= n;
  }
}

}  // namespace

Translator::Translator(const AlignmentMap& map, const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                       const Vocabulary& target_vocab, RetrievalOptions options)
    : map_(map), src_(src), options_(options) {
  if (src.dimension() != tgt.dimension() || map.dimension() != src.dimension()) {
    throw Error(ErrorCode::kConfiguration, "translate: map and space dimensions differ");
  }
  const auto d = static_cast<Eigen::Index>(src.dimension());
  std::vector<Vector> rows;
  for (const auto& [tok, _] : target_vocab.entries()) {
    auto v = tgt.vector(tok);
    if (usable(v)) {
      candidate_index_.emplace(tok, candidates_.size());
      candidates_.push_back(tok);
      rows.push_back(std::move(*v));
    } else {
      unresolved_.push_back(tok);
    }
  }
  if (candidates_.empty()) {
    throw Error(ErrorCode::kUnknownToken, "translate: no target vocabulary token is resolvable in '" +
                                              tgt.language_id() + "'");
  }
  target_unit_.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    target_unit_.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXf>(rows[i].data(), d);
  }
  normalize_rows(target_unit_);
  w_ = map.matrix.cast<float>();

  if (options_.mode == RetrievalMode::kCsls) {
    // Source-side hubness penalty: mean similarity of each candidate to its k
    // nearest mapped source vectors, taken over the same vocabulary.
    std::vector<Vector> src_rows;
    for (const auto& [tok, _] : target_vocab.entries()) {
      auto v = src.vector(tok);
      if (usable(v)) src_rows.push_back(std::move(*v));
    }
    RowMatrix mapped(static_cast<Eigen::Index>(src_rows.size()), d);
    for (std::size_t i = 0; i < src_rows.size(); ++i) {
      mapped.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(src_rows[i].data(), d);
    }
    normalize_rows(mapped);
    mapped = (mapped * w_).eval();
    normalize_rows(mapped);
    source_penalty_.resize(target_unit_.rows());
    const Eigen::Index block = 512;
    for (Eigen::Index b = 0; b < target_unit_.rows(); b += block) {
      const Eigen::Index rows_here = std::min(block, target_unit_.rows() - b);
      Eigen::MatrixXf sims = mapped * target_unit_.middleRows(b, rows_here).transpose();
      for (Eigen::Index j = 0; j < rows_here; ++j) {
        source_penalty_[b + j] = top_k_mean(sims.col(j), options_.csls_k);
      }
    }
  }
}

std::optional<Eigen::VectorXf> Translator::aligned_query(std::string_view token) const {
  auto v = src_.vector(token);
  if (!usable(v)) return std::nullopt;
  const auto d = static_cast<Eigen::Index>(v->size());
  Eigen::RowVectorXf x = Eigen::Map<const Eigen::RowVectorXf>(v->data(), d);
  x /= x.norm();
  Eigen::VectorXf q = (x * w_).transpose();
  float n = q.norm();
  if (n > 0.0f) q /= n;
  return q;
}

TranslationResult Translator::select(const std::string& source,
                                     const Eigen::Ref<const Eigen::VectorXf>& cosines) const {
  const auto n = static_cast<std::size_t>(cosines.size());
  Eigen::VectorXf scores;
  if (options_.mode == RetrievalMode::kCsls) {
    const float query_penalty = top_k_mean(cosines, options_.csls_k);
    scores = 2.0f * cosines - source_penalty_ - Eigen::VectorXf::Constant(cosines.size(), query_penalty);
  } else {
    scores = cosines;
  }
  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  const std::size_t k = std::min<std::size_t>(std::max<std::size_t>(options_.alternatives, 1), n);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  TranslationResult r;
  r.source = source;
  r.mode = options_.mode;
  r.target = candidates_[idx[0]];
  r.score = scores[idx[0]];
  r.cosine = cosines[idx[0]];
  if (auto it = candidate_index_.find(source); it != candidate_index_.end()) {
    r.self_score = scores[static_cast<Eigen::Index>(it->second)];
  }
  r.alternatives.reserve(k);
  for (std::size_t i = 0; i < k; ++i) r.alternatives.push_back({candidates_[idx[i]], scores[idx[i]]});
  return r;
}

TranslationResult Translator::translate(std::string_view token) const {
  auto q = aligned_query(token);
  if (!q) {
    throw Error(ErrorCode::kUnknownToken, "unknown token '" + std::string(token) + "' in '" +
                                              src_.language_id() + "'");
  }
  Eigen::VectorXf cosines = target_unit_ * *q;
  return select(std::string(token), cosines);
}

TranslationBatch Translator::translate_all(const std::vector<std::string>& tokens) const {
  TranslationBatch out;
  std::vector<std::string> ok;
  std::vector<Eigen::VectorXf> queries;
  for (const auto& t : tokens) {
    auto q = aligned_query(t);
    if (!q) {
      out.skipped.push_back({t, src_.subword_enabled() ? "zero vector in source space"
                                                       : "not in source space vocabulary"});
      continue;
    }
    ok.push_back(t);
    queries.push_back(std::move(*q));
  }
  out.results.reserve(ok.size());
  const std::size_t block = 256;
  const auto d = target_unit_.cols();
  for (std::size_t b = 0; b < ok.size(); b += block) {
    const std::size_t rows = std::min(block, ok.size() - b);
    Eigen::MatrixXf q(d, static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) q.col(static_cast<Eigen::Index>(i)) = queries[b + i];
    Eigen::MatrixXf cos = target_unit_ * q;
    for (std::size_t i = 0; i < rows; ++i) {
      out.results.push_back(select(ok[b + i], cos.col(static_cast<Eigen::Index>(i))));
    }
  }
  return out;
}

TranslationResult translate(const AlignmentMap& map, const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                            std::string_view token, const Vocabulary& target_vocab, RetrievalOptions options) {
  return Translator(map, src, tgt, target_vocab, options).translate(token);
}

TranslationBatch translate_all(const AlignmentMap& map, const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                               const Vocabulary& source_vocab, const Vocabulary& target_vocab,
                               RetrievalOptions options) {
  return Translator(map, src, tgt, target_vocab, options).translate_all(source_vocab.tokens());
}

// ---------------------------------------------------------------------------
// persistence

void write_alignment(std::ostream& out, const AlignmentMap& map) {
  auto check_id = [](const std::string& id) {
    if (id.empty() || id.find_first_of(" \t\n") != std::string::npos) {
      throw Error(ErrorCode::kFormat, "alignment ids must be non-empty and contain no whitespace: '" + id + "'");
    }
  };
  check_id(map.source_id);
  check_id(map.target_id);
  out << map.dimension() << ' ' << map.source_id << ' ' << map.target_id << ' ' << (map.normalized ? 1 : 0) << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < map.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.matrix.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%s%.6f", j ? " " : "", map.matrix(i, j));
      out << buf;
    }
    out << '\n';
  }
}

AlignmentMap read_alignment(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, "alignment line 1: missing header");
  std::istringstream header(line);
  AlignmentMap map;
  long long dim = -1;
  int norm = -1;
  std::string extra;
  if (!(header >> dim >> map.source_id >> map.target_id >> norm) || (header >> extra) || dim < 1 ||
      (norm != 0 && norm != 1)) {
    throw Error(ErrorCode::kFormat, "alignment line 1: expected '<dimension> <source_id> <target_id> <0|1>'");
  }
  map.normalized = norm == 1;
  map.matrix.resize(dim, dim);
  for (long long i = 0; i < dim; ++i) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kFormat, "alignment line " + std::to_string(i + 2) + ": missing matrix row");
    }
    std::istringstream row(line);
    long long j = 0;
    double v;
    while (row >> v) {
      if (j < dim) map.matrix(i, j) = v;
      ++j;
    }
    if (j != dim || !row.eof()) {
      throw Error(ErrorCode::kFormat, "alignment line " + std::to_string(i + 2) + ": expected " +
                                          std::to_string(dim) + " values");
    }
  }
  return map;
}

void save_alignment(const std::string& path, const AlignmentMap& map) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write alignment map: " + path);
  write_alignment(out, map);
}

AlignmentMap load_alignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read alignment map: " + path);
  return read_alignment(in);
}

}  // namespace langdiv
