#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "langdiv/alignment.hpp"
#include "langdiv/corpus.hpp"
#include "langdiv/divergence.hpp"
#include "langdiv/embedding.hpp"
#include "langdiv/ingest.hpp"
#include "langdiv/vocab.hpp"

namespace langdiv {

// Everything a run of the analysis needs; serializable as one JSON document.
// Defaults are the recommended analysis settings.
struct PipelineConfig {
  // Comment / video JSONL inputs (ingest, engagement).
  std::vector<std::string> comment_files;
  std::vector<std::string> video_files;
  // Pre-built corpus files ("one document per line"); ids from `channels`.
  std::vector<std::string> corpus_files;
  std::vector<std::string> channels;
  TimeRange period;
  bool include_replies = false;
  bool user_filter = true;
  std::uint64_t seed = 1;
  TrainConfig train;
  std::size_t source_vocab_size = kDefaultSourceSize;
  std::size_t target_vocab_size = kDefaultTargetSize;
  RetrievalMode mode = RetrievalMode::kNearestNeighbor;
  std::size_t csls_k = 10;
  bool trigram = false;
  bool neighborhood = true;
  std::size_t neighborhood_k = 10;
  std::size_t max_snippets = 5;
  std::size_t runs = 5;
  std::vector<std::size_t> sweep_sizes = {1000, 2000, 3000, 4000, 5000};
  std::size_t min_videos = 10;
  std::string output_dir = "out";

  void validate() const;
  RetrievalOptions retrieval() const;
};

std::string config_to_json(const PipelineConfig& config, int indent = 2);
// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const std::string& text);
// Stable hex digest (FNV-1a 64) of the canonical JSON form.
std::string config_hash(const PipelineConfig& config);

// One corpus per channel from comment records (user filter and reply rule
// applied as configured).
std::vector<Corpus> build_channel_corpora(const std::vector<CommentRecord>& comments, const PipelineConfig& config);

struct PipelineRun {
  std::uint64_t seed = 0;
  std::vector<Corpus> corpora;  // balanced (and trigram-merged in trigram mode)
  VocabPair vocab;
  std::vector<EmbeddingSpace> spaces;
  MatrixResult result;
};

// balance -> vocabulary (unigram or trigram) -> train -> pairwise matrix,
// with every random choice derived from `seed`.
PipelineRun run_pipeline(const std::vector<Corpus>& corpora, const PipelineConfig& config, std::uint64_t seed);

struct MultirunResult {
  std::vector<std::string> languages;
  // cells[i][j] for i != j.
  std::vector<std::vector<CellStats>> cells;
  std::vector<std::uint64_t> seeds;
};

// Re-runs the pipeline with seeds seed+0 .. seed+runs-1.
MultirunResult multirun_stats(const std::vector<Corpus>& corpora, const PipelineConfig& config);

// Similarity over the first `prefix` source-vocabulary tokens, from a report.
double report_similarity_over_prefix(const DivergenceReport& report, const Vocabulary& source_vocab,
                                     std::size_t prefix);

// For each size, the mean over runs and directions of the similarity over
// that source-vocabulary prefix (one pipeline run per seed at the largest
// size).
std::vector<SweepPoint> vocab_sweep(const std::vector<Corpus>& corpora, const PipelineConfig& config,
                                    const std::vector<std::size_t>& sizes);

std::string multirun_to_json(const MultirunResult& result, int indent = 2);
std::string sweep_to_json(const std::vector<SweepPoint>& points, int indent = 2);

}  // namespace langdiv
