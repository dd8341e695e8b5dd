#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "langdiv/corpus.hpp"

namespace langdiv {

struct DivergenceReport;

// Knobs of the synthetic corpus-pair generator. Documents are drawn from a
// topic mixture over Zipf-distributed content words; every content word also
// has a handful of preferred collocates and preferred stopwords so that its
// context signature is distinctive enough to be recovered by alignment.
struct SynthConfig {
  std::size_t vocabulary_size = 2000;
  std::size_t topic_count = 20;
  std::size_t documents = 20000;
  std::size_t min_doc_length = 5;
  std::size_t max_doc_length = 30;
  // Explicitly named swaps. Names not already in the vocabulary replace a
  // mid-frequency word.
  std::vector<std::pair<std::string, std::string>> planted;
  // Additional swaps between randomly chosen mid-frequency words.
  std::size_t random_planted = 0;
  // Planted phrase swaps, e.g. {"black lives matter", "all lives matter"}.
  std::vector<std::pair<std::string, std::string>> planted_phrases;
  double stopword_rate = 0.3;
  double zipf_exponent = 0.4;
  // Private collocates per word, chosen with geometrically decaying
  // preference, and the probability that a content word is followed by one.
  std::size_t collocates = 4;
  double collocation_rate = 0.9;
  double topic_leak = 0.05;
  // Draw corpus B from its own random stream instead of relabelling A.
  bool independent_b = false;
  std::uint64_t seed = 1;

  void validate() const;
};

// Number of documents that yields roughly `tokens` tokens per corpus.
std::size_t documents_for_tokens(const SynthConfig& config, std::size_t tokens);

struct GroundTruth {
  std::vector<std::pair<std::string, std::string>> planted;
  std::vector<std::pair<std::string, std::string>> planted_phrases;
  std::string corpus_a_id;
  std::string corpus_b_id;
  std::uint64_t seed = 0;
  std::size_t vocabulary_size = 0;
};

struct SynthOutput {
  Corpus a;
  Corpus b;
  GroundTruth truth;
};

SynthOutput generate(const SynthConfig& config);

// Random split of a corpus into two halves by whole documents.
std::pair<Corpus, Corpus> split_halves(const Corpus& corpus, std::uint64_t seed, std::string id_a = "half_a",
                                       std::string id_b = "half_b");

struct RecoveryMetrics {
  double planted_recall = 0.0;
  double partner_precision = 0.0;
  double false_misalignment_rate = 0.0;
  std::size_t planted_recovered = 0;
  std::size_t false_slice = 0;
};

// `top_n` is the size of the most-frequent non-planted slice used for the
// false-misalignment rate.
RecoveryMetrics evaluate_recovery(const DivergenceReport& report, const GroundTruth& truth,
                                  std::size_t top_n = 500);

std::string ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const std::string& text);

}  // namespace langdiv
