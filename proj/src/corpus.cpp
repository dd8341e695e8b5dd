#include "langdiv/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "langdiv/error.hpp"

namespace langdiv {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseFailure: return "parse-failure";
    case ErrorCode::kEmptyCorpus: return "empty-corpus";
    case ErrorCode::kBalanceFailure: return "balance-failure";
    case ErrorCode::kNetwork: return "network";
    case ErrorCode::kVocabularyUnderflow: return "vocabulary-underflow";
    case ErrorCode::kEmptyVocabulary: return "empty-vocabulary";
    case ErrorCode::kUnknownToken: return "unknown-token";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kInsufficientAnchors: return "insufficient-anchors";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kEmptyEvaluation: return "empty-evaluation";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kDegenerateVariance: return "degenerate-variance";
    case ErrorCode::kConsistency: return "consistency";
    case ErrorCode::kRunFailure: return "run-failure";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Corpus::Corpus(std::string language_id, std::vector<Document> documents,
               Provenance provenance)
    : language_id_(std::move(language_id)), provenance_(std::move(provenance)) {
  documents_.reserve(documents.size());
  for (auto& d : documents) add(std::move(d));
}

void Corpus::add(Document doc) {
  token_count_ += doc.size();
  documents_.push_back(std::move(doc));
}

bool is_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (!ok) return false;
  }
  return true;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& doc : corpus.documents()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i) out << ' ';
      out << doc[i];
    }
    out << '\n';
  }
}

Corpus read_corpus(std::istream& in, std::string language_id) {
  Corpus corpus(std::move(language_id));
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    Document doc;
    std::string tok;
    while (ss >> tok) doc.push_back(std::move(tok));
    if (!doc.empty()) corpus.add(std::move(doc));
  }
  return corpus;
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write corpus file: " + path);
  write_corpus(out, corpus);
}

Corpus load_corpus(const std::string& path, std::string language_id) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read corpus file: " + path);
  return read_corpus(in, std::move(language_id));
}

}  // namespace langdiv
