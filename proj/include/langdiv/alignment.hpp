#pragma once

#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "langdiv/embedding.hpp"
#include "langdiv/vocab.hpp"

namespace langdiv {

struct SeedLexicon {
  std::vector<std::pair<std::string, std::string>> pairs;
  // Stopwords that could not be resolved in one of the spaces.
  std::vector<std::string> dropped;

  std::size_t size() const { return pairs.size(); }
};

inline constexpr std::size_t kMinSeedPairs = 3;

// Identity pairs over the stopwords resolvable (with a non-zero vector) in
// both spaces.
SeedLexicon build_seed_lexicon(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                               const StopwordSet& stopwords);

// Row-vector convention: a source vector x maps to x * W.
struct AlignmentMap {
  Eigen::MatrixXd matrix;
  std::string source_id;
  std::string target_id;
  std::size_t seed_pairs = 0;
  bool normalized = true;
  std::vector<std::string> warnings;

  int dimension() const { return static_cast<int>(matrix.rows()); }
  Vector apply(std::span<const float> x) const;
  // max |W^T W - I|
  double orthogonality_error() const;
};

// Orthogonal minimizer of ||X W - Y||_F via the SVD of X^T Y. Appends a
// warning when X^T Y is rank deficient.
Eigen::MatrixXd procrustes(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                           std::vector<std::string>* warnings = nullptr);

AlignmentMap fit(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const SeedLexicon& lexicon,
                 bool normalize = true);

enum class RetrievalMode { kNearestNeighbor, kCsls };

std::string_view to_string(RetrievalMode mode);
RetrievalMode retrieval_mode_from_string(std::string_view s);

struct RetrievalOptions {
  RetrievalMode mode = RetrievalMode::kNearestNeighbor;
  std::size_t csls_k = 10;
  std::size_t alternatives = 10;
};

struct TranslationResult {
  std::string source;
  std::string target;
  // Retrieval score of the winner (cosine for nn, CSLS score for csls).
  double score = 0.0;
  double cosine = 0.0;
  // Retrieval score of the source token itself when it is a candidate.
  std::optional<double> self_score;
  RetrievalMode mode = RetrievalMode::kNearestNeighbor;
  // Best candidates first, winner included.
  std::vector<Neighbor> alternatives;
};

struct SkipRecord {
  std::string token;
  std::string reason;
};

struct TranslationBatch {
  std::vector<TranslationResult> results;
  std::vector<SkipRecord> skipped;
};

// Retrieval index over a target vocabulary. Construction precomputes the
// unit-normalized candidate matrix (and the CSLS source-side penalties);
// queries are read-only.
class Translator {
 public:
  Translator(const AlignmentMap& map, const EmbeddingSpace& src, const EmbeddingSpace& tgt,
             const Vocabulary& target_vocab, RetrievalOptions options = {});

  TranslationResult translate(std::string_view token) const;
  TranslationBatch translate_all(const std::vector<std::string>& tokens) const;

  const std::vector<std::string>& candidates() const { return candidates_; }
  const std::vector<std::string>& unresolved_candidates() const { return unresolved_; }

 private:
  std::optional<Eigen::VectorXf> aligned_query(std::string_view token) const;
  TranslationResult select(const std::string& source, const Eigen::Ref<const Eigen::VectorXf>& cosines) const;

  const AlignmentMap& map_;
  const EmbeddingSpace& src_;
  RetrievalOptions options_;
  std::vector<std::string> candidates_;
  std::vector<std::string> unresolved_;
  std::unordered_map<std::string, std::size_t> candidate_index_;
  RowMatrix target_unit_;
  Eigen::MatrixXf w_;
  Eigen::VectorXf source_penalty_;
};

TranslationResult translate(const AlignmentMap& map, const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                            std::string_view token, const Vocabulary& target_vocab,
                            RetrievalOptions options = {});

TranslationBatch translate_all(const AlignmentMap& map, const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                               const Vocabulary& source_vocab, const Vocabulary& target_vocab,
                               RetrievalOptions options = {});

// "<dimension> <source_id> <target_id> <normalized:0|1>" then the rows of W.
void write_alignment(std::ostream& out, const AlignmentMap& map);
AlignmentMap read_alignment(std::istream& in);
void save_alignment(const std::string& path, const AlignmentMap& map);
AlignmentMap load_alignment(const std::string& path);

}  // namespace langdiv
