#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace langdiv {

using Document = std::vector<std::string>;

// Half-open interval [begin, end) of UTC seconds.
struct TimeRange {
  std::int64_t begin = 0;
  std::int64_t end = INT64_MAX;

  bool contains(std::int64_t t) const { return t >= begin && t < end; }
  bool well_ordered() const { return begin <= end; }
};

struct Provenance {
  std::string period;
  std::vector<std::string> channels;
  std::string filter;
  std::optional<std::uint64_t> balance_seed;
};

// One "language": a sequence of preprocessed documents.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::string language_id, std::vector<Document> documents = {},
                  Provenance provenance = {});

  const std::string& language_id() const { return language_id_; }
  const std::vector<Document>& documents() const { return documents_; }
  std::size_t token_count() const { return token_count_; }
  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  const Provenance& provenance() const { return provenance_; }
  Provenance& provenance() { return provenance_; }

  void add(Document doc);
  void set_language_id(std::string id) { language_id_ = std::move(id); }

 private:
  std::string language_id_;
  std::vector<Document> documents_;
  std::size_t token_count_ = 0;
  Provenance provenance_;
};

// Corpus text format: one document per line, tokens separated by single
// spaces. Blank lines are skipped on read.
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in, std::string language_id);
void save_corpus(const std::string& path, const Corpus& corpus);
Corpus load_corpus(const std::string& path, std::string language_id);

bool is_token(std::string_view token);

}  // namespace langdiv
