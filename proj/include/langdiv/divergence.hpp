#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "langdiv/alignment.hpp"
#include "langdiv/corpus.hpp"
#include "langdiv/embedding.hpp"
#include "langdiv/vocab.hpp"

namespace langdiv {

struct MisalignedPair {
  std::string source;
  std::string target;
  double score = 0.0;
  // score(target) - score(source token as a candidate); absent when the
  // source token is not a retrieval candidate in the target space.
  std::optional<double> margin;
  std::vector<std::string> source_snippets;
  std::vector<std::string> target_snippets;
};

struct DivergenceReport {
  std::string source_id;
  std::string target_id;
  double similarity = 0.0;
  std::optional<double> neighborhood_similarity;
  std::size_t evaluated = 0;
  std::size_t self_translated = 0;
  std::size_t misaligned = 0;
  std::size_t skipped = 0;
  std::vector<MisalignedPair> pairs;
  std::vector<SkipRecord> skip_records;
  // Evaluated source tokens in source-vocabulary order.
  std::vector<std::string> evaluated_tokens;
  std::size_t source_vocab_size = 0;
  std::size_t target_vocab_size = 0;
  std::string mode = "nn";
  std::uint64_t seed = 0;
};

// Percent of evaluated source tokens translating to themselves. Tokens
// skipped by translate_all leave the denominator and are counted.
DivergenceReport similarity(const TranslationBatch& batch, const Vocabulary& source_vocab);

// Similarity restricted to the first `prefix` tokens of the source vocabulary.
double similarity_over_prefix(const TranslationBatch& batch, const Vocabulary& source_vocab, std::size_t prefix);

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Mean Jaccard overlap (x100) between the k-neighbourhood of each source word
// in its own space and that of its translation in the target space.
double similarity_neighborhood(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const TranslationBatch& batch,
                               std::size_t k = 10);
double similarity_neighborhood(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const AlignmentMap& map,
                               const Vocabulary& source_vocab, const Vocabulary& target_vocab, std::size_t k = 10,
                               RetrievalOptions options = {});

// One entry per non-self translation, strongest score first, with up to
// `max_snippets` verbatim documents per side.
std::vector<MisalignedPair> misaligned_pairs(const TranslationBatch& batch, const Corpus& source_corpus,
                                             const Corpus& target_corpus, std::size_t max_snippets = 5);

// Directed similarity matrix; diagonal entries are NaN.
struct SimilarityMatrix {
  std::vector<std::string> languages;
  std::vector<std::vector<double>> values;

  double at(std::size_t from, std::size_t to) const { return values[from][to]; }
};

struct Language {
  const Corpus* corpus = nullptr;
  const EmbeddingSpace* space = nullptr;
};

struct MatrixResult {
  SimilarityMatrix matrix;
  // Row-major over ordered pairs (i, j), i != j.
  std::vector<DivergenceReport> reports;
  std::vector<AlignmentMap> maps;
};

MatrixResult pairwise_matrix(const std::vector<Language>& languages, const Vocabulary& source_vocab,
                             const Vocabulary& target_vocab, RetrievalOptions options = {},
                             bool with_neighborhood = false, std::size_t max_snippets = 5,
                             std::size_t neighborhood_k = 10);

struct CellStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> runs;
};

// Sample mean and standard deviation of each value.
CellStats summarize(const std::vector<double>& values);

struct SweepPoint {
  std::size_t source_size = 0;
  double mean_similarity = 0.0;
  std::vector<double> per_run;
};

// JSON / CSV emission.
std::string report_to_json(const DivergenceReport& report, int indent = 2);
DivergenceReport report_from_json(const std::string& text);
void write_pairs_csv(std::ostream& out, const std::vector<MisalignedPair>& pairs);
void write_matrix_csv(std::ostream& out, const SimilarityMatrix& matrix);

}  // namespace langdiv
