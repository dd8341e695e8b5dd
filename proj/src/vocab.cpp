#include "langdiv/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "langdiv/error.hpp"
#include "stopwords_asset.hpp"

namespace langdiv {

StopwordSet::StopwordSet(std::vector<std::string> tokens, std::string version)
    : tokens_(std::move(tokens)), lookup_(tokens_.begin(), tokens_.end()), version_(std::move(version)) {}

const StopwordSet& stopwords() {
  static const StopwordSet set = [] {
    std::vector<std::string> tokens;
    std::istringstream in{std::string(detail::kStopwordAsset)};
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) tokens.push_back(line);
    }
    return StopwordSet(std::move(tokens), std::string(detail::kStopwordVersion));
  }();
  return set;
}

Vocabulary::Vocabulary(std::vector<Entry> entries, VocabRole role)
    : entries_(std::move(entries)), role_(role) {
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].first, i).second) {
      throw Error(ErrorCode::kFormat, "duplicate vocabulary token: " + entries_[i].first);
    }
  }
}

std::vector<std::string> Vocabulary::tokens() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::ptrdiff_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

Vocabulary Vocabulary::prefix(std::size_t n) const {
  n = std::min(n, entries_.size());
  return Vocabulary(std::vector<Entry>(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(n)), role_);
}

namespace {

std::vector<Vocabulary::Entry> ranked(const std::unordered_map<std::string, std::uint64_t>& counts) {
  std::vector<Vocabulary::Entry> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return entries;
}

VocabPair cut(std::vector<Vocabulary::Entry> entries, std::size_t source_size, std::size_t target_size,
              const char* what) {
  if (source_size > target_size) {
    throw Error(ErrorCode::kConfiguration, "source vocabulary size exceeds target size");
  }
  if (entries.size() < source_size) {
    throw Error(ErrorCode::kVocabularyUnderflow,
                std::string("only ") + std::to_string(entries.size()) + " eligible " + what +
                    ", need " + std::to_string(source_size) + " for the source vocabulary");
  }
  VocabPair out;
  if (entries.size() < target_size) {
    out.warnings.push_back("target vocabulary truncated to " + std::to_string(entries.size()) + " " + what +
                           " (requested " + std::to_string(target_size) + ")");
    target_size = entries.size();
  }
  entries.resize(target_size);
  out.source = Vocabulary(std::vector<Vocabulary::Entry>(entries.begin(),
                                                         entries.begin() + static_cast<std::ptrdiff_t>(source_size)),
                          VocabRole::kSource);
  out.target = Vocabulary(std::move(entries), VocabRole::kTarget);
  return out;
}

}  // namespace

VocabPair build_vocab(const std::vector<Corpus>& corpora, std::size_t source_size, std::size_t target_size) {
  const StopwordSet& stop = stopwords();
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& corpus : corpora) {
    for (const auto& doc : corpus.documents()) {
      for (const auto& tok : doc) ++counts[tok];
    }
  }
  for (auto it = counts.begin(); it != counts.end();) {
    it = stop.contains(it->first) ? counts.erase(it) : std::next(it);
  }
  return cut(ranked(counts), source_size, target_size, "tokens");
}

std::string join_trigram(std::string_view a, std::string_view b, std::string_view c) {
  std::string out;
  out.reserve(a.size() + b.size() + c.size() + 2);
  out.append(a).append(1, '_').append(b).append(1, '_').append(c);
  return out;
}

VocabPair build_trigram_vocab(const std::vector<Corpus>& corpora, std::size_t source_size,
                              std::size_t target_size) {
  const StopwordSet& stop = stopwords();
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& corpus : corpora) {
    for (const auto& doc : corpus.documents()) {
      for (std::size_t i = 0; i + 2 < doc.size(); ++i) {
        if (stop.contains(doc[i]) && stop.contains(doc[i + 1]) && stop.contains(doc[i + 2])) continue;
        ++counts[join_trigram(doc[i], doc[i + 1], doc[i + 2])];
      }
    }
  }
  return cut(ranked(counts), source_size, target_size, "trigrams");
}

Corpus merge_trigrams(const Corpus& corpus, const std::unordered_set<std::string>& trigrams) {
  Corpus out(corpus.language_id(), {}, corpus.provenance());
  for (const auto& doc : corpus.documents()) {
    Document merged;
    merged.reserve(doc.size());
    std::size_t i = 0;
    while (i < doc.size()) {
      if (i + 2 < doc.size()) {
        std::string joined = join_trigram(doc[i], doc[i + 1], doc[i + 2]);
        if (trigrams.count(joined)) {
          merged.push_back(std::move(joined));
          i += 3;
          continue;
        }
      }
      merged.push_back(doc[i]);
      ++i;
    }
    out.add(std::move(merged));
  }
  return out;
}

Corpus merge_trigrams(const Corpus& corpus, const Vocabulary& trigram_vocab) {
  auto tokens = trigram_vocab.tokens();
  return merge_trigrams(corpus, std::unordered_set<std::string>(tokens.begin(), tokens.end()));
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (const auto& [tok, freq] : vocab.entries()) out << tok << '\t' << freq << '\n';
}

Vocabulary read_vocabulary(std::istream& in, VocabRole role) {
  std::vector<Vocabulary::Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCode::kFormat, "vocabulary line " + std::to_string(line_no) + ": expected token<TAB>frequency");
    }
    try {
      std::size_t used = 0;
      std::string num = line.substr(tab + 1);
      unsigned long long f = std::stoull(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing");
      entries.emplace_back(line.substr(0, tab), f);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, "vocabulary line " + std::to_string(line_no) + ": bad frequency");
    }
  }
  return Vocabulary(std::move(entries), role);
}

void save_vocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write vocabulary: " + path);
  write_vocabulary(out, vocab);
}

Vocabulary load_vocabulary(const std::string& path, VocabRole role) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read vocabulary: " + path);
  return read_vocabulary(in, role);
}

}  // namespace langdiv
