#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "langdiv/corpus.hpp"

namespace langdiv {

using Vector = std::vector<float>;
using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SubwordConfig {
  bool enabled = true;
  int min_n = 3;
  int max_n = 6;
  std::uint32_t bucket_count = 200000;
};

struct TrainConfig {
  int dimension = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double initial_learning_rate = 0.05;
  int min_count = 5;
  double subsample_threshold = 1e-3;
  SubwordConfig subword;
  std::uint64_t seed = 1;
  // Single worker, fixed event order, bit-reproducible.
  bool deterministic = true;
  // Worker count in fast mode; 0 picks the hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct TrainingProvenance {
  TrainConfig config;
  std::size_t corpus_tokens = 0;
  // Mean SGNS loss per positive pair, one entry per epoch.
  std::vector<double> epoch_loss;
};

struct Neighbor {
  std::string token;
  double similarity = 0.0;
};

// Token -> vector mapping. In-vocabulary rows hold the composed vector (word
// row averaged with its n-gram rows when subwords are on); the retained
// n-gram buckets serve out-of-vocabulary tokens.
class EmbeddingSpace {
 public:
  EmbeddingSpace() = default;
  EmbeddingSpace(std::string language_id, std::vector<std::string> tokens, RowMatrix vectors,
                 std::optional<SubwordConfig> subword = std::nullopt,
                 std::unordered_map<std::uint32_t, Vector> buckets = {});

  const std::string& language_id() const { return language_id_; }
  void set_language_id(std::string id) { language_id_ = std::move(id); }
  int dimension() const { return static_cast<int>(vectors_.cols()); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::ptrdiff_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const { return index_of(token) >= 0; }
  bool subword_enabled() const { return subword_.has_value(); }
  const std::optional<SubwordConfig>& subword() const { return subword_; }
  const std::unordered_map<std::uint32_t, Vector>& buckets() const { return buckets_; }

  const RowMatrix& matrix() const { return vectors_; }
  // Rows of matrix() scaled to unit length (zero rows stay zero).
  const RowMatrix& unit_matrix() const { return unit_; }
  std::span<const float> row(std::size_t i) const {
    return {vectors_.data() + i * static_cast<std::size_t>(vectors_.cols()),
            static_cast<std::size_t>(vectors_.cols())};
  }

  // Stored vector, n-gram composition for unseen tokens, or nothing.
  std::optional<Vector> vector(std::string_view token) const;

  std::vector<Neighbor> neighbors(std::string_view token, std::size_t k) const;
  std::vector<Neighbor> neighbors(std::span<const float> query, std::size_t k,
                                  std::string_view exclude = {}) const;

  const std::vector<std::uint64_t>& counts() const { return counts_; }
  void set_counts(std::vector<std::uint64_t> counts) { counts_ = std::move(counts); }
  const std::optional<TrainingProvenance>& provenance() const { return provenance_; }
  void set_provenance(TrainingProvenance p) { provenance_ = std::move(p); }

 private:
  std::string language_id_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  RowMatrix vectors_;
  RowMatrix unit_;
  std::optional<SubwordConfig> subword_;
  std::unordered_map<std::uint32_t, Vector> buckets_;
  std::vector<std::uint64_t> counts_;
  std::optional<TrainingProvenance> provenance_;
};

EmbeddingSpace train(const Corpus& corpus, const TrainConfig& config);

// Loss and gradients of one SGNS event:
//   -log s(u_o . v_c) - sum_i log s(-u_{n_i} . v_c)
struct SgnsGradient {
  double loss = 0.0;
  std::vector<double> d_center;
  std::vector<double> d_context;
  std::vector<std::vector<double>> d_negatives;
};

SgnsGradient sgns_gradient(std::span<const double> center, std::span<const double> context,
                           std::span<const std::vector<double>> negatives);

// fastText-compatible n-gram hashing of "<token>".
std::uint32_t fnv1a_hash(std::string_view s);
std::vector<std::uint32_t> ngram_buckets(std::string_view token, const SubwordConfig& config);

double cosine(std::span<const float> a, std::span<const float> b);

// Text format: "<vocab_size> <dimension>" then "token v1 .. vd" rows.
// Subword buckets go to a binary sidecar stream.
void write_embedding(std::ostream& text, const EmbeddingSpace& space);
void write_subword_sidecar(std::ostream& bin, const EmbeddingSpace& space);
EmbeddingSpace read_embedding(std::istream& text, std::istream* sidecar, std::string language_id = {});

// Writes `path` and, when subwords are on, `path + ".subword"`.
void save_embedding(const std::string& path, const EmbeddingSpace& space);
EmbeddingSpace load_embedding(const std::string& path, std::string language_id = {});

inline constexpr char kSidecarMagic[8] = {'L', 'D', 'S', 'U', 'B', 'W', '0', '1'};

}  // namespace langdiv
