#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "langdiv/corpus.hpp"

namespace langdiv {

class StopwordSet {
 public:
  StopwordSet(std::vector<std::string> tokens, std::string version);

  bool contains(std::string_view token) const { return lookup_.count(std::string(token)) > 0; }
  std::size_t size() const { return tokens_.size(); }
  // In asset order.
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& version() const { return version_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_set<std::string> lookup_;
  std::string version_;
};

// The pinned 179-entry English list shipped in data/stopwords_en.txt.
const StopwordSet& stopwords();

enum class VocabRole { kSource, kTarget };

class Vocabulary {
 public:
  using Entry = std::pair<std::string, std::uint64_t>;

  Vocabulary() = default;
  Vocabulary(std::vector<Entry> entries, VocabRole role);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  VocabRole role() const { return role_; }
  const std::string& token(std::size_t i) const { return entries_[i].first; }
  std::vector<std::string> tokens() const;
  bool contains(std::string_view token) const;
  // Position in frequency order, or -1.
  std::ptrdiff_t index_of(std::string_view token) const;
  Vocabulary prefix(std::size_t n) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  VocabRole role_ = VocabRole::kSource;
};

struct VocabPair {
  Vocabulary source;
  Vocabulary target;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kDefaultSourceSize = 5000;
inline constexpr std::size_t kDefaultTargetSize = 10000;

// Top-frequency non-stopword tokens of the concatenated corpora.
VocabPair build_vocab(const std::vector<Corpus>& corpora, std::size_t source_size = kDefaultSourceSize,
                      std::size_t target_size = kDefaultTargetSize);

// Trigram tokens are the three words joined with '_'.
std::string join_trigram(std::string_view a, std::string_view b, std::string_view c);

VocabPair build_trigram_vocab(const std::vector<Corpus>& corpora,
                              std::size_t source_size = kDefaultSourceSize,
                              std::size_t target_size = kDefaultTargetSize);

// Greedy leftmost, non-overlapping replacement of vocabulary trigrams by
// their joined token.
Corpus merge_trigrams(const Corpus& corpus, const std::unordered_set<std::string>& trigrams);
Corpus merge_trigrams(const Corpus& corpus, const Vocabulary& trigram_vocab);

// "token<TAB>frequency" per line, descending.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in, VocabRole role);
void save_vocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::string& path, VocabRole role);

}  // namespace langdiv
