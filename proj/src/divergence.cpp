#include "langdiv/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "langdiv/error.hpp"

namespace langdiv {

using nlohmann::json;

DivergenceReport similarity(const TranslationBatch& batch, const Vocabulary& source_vocab) {
  if (batch.results.empty()) {
    throw Error(ErrorCode::kEmptyEvaluation,
                "similarity: no source token could be evaluated (" + std::to_string(batch.skipped.size()) +
                    " skipped)");
  }
  std::unordered_map<std::string, const TranslationResult*> by_token;
  for (const auto& r : batch.results) by_token.emplace(r.source, &r);

  DivergenceReport rep;
  rep.mode = std::string(to_string(batch.results.front().mode));
  rep.source_vocab_size = source_vocab.size();
  for (const auto& [tok, _] : source_vocab.entries()) {
    if (by_token.count(tok)) rep.evaluated_tokens.push_back(tok);
  }
  // Tokens evaluated outside the source vocabulary still count.
  if (rep.evaluated_tokens.size() != batch.results.size()) {
    std::unordered_set<std::string> listed(rep.evaluated_tokens.begin(), rep.evaluated_tokens.end());
    for (const auto& r : batch.results) {
      if (!listed.count(r.source)) rep.evaluated_tokens.push_back(r.source);
    }
  }
  rep.evaluated = batch.results.size();
  for (const auto& r : batch.results) {
    if (r.target == r.source) {
      ++rep.self_translated;
    } else {
      MisalignedPair p;
      p.source = r.source;
      p.target = r.target;
      p.score = r.cosine;
      if (r.self_score) p.margin = r.score - *r.self_score;
      rep.pairs.push_back(std::move(p));
    }
  }
  std::stable_sort(rep.pairs.begin(), rep.pairs.end(), [](const MisalignedPair& a, const MisalignedPair& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.source < b.source;
  });
  rep.misaligned = rep.evaluated - rep.self_translated;
  rep.skipped = batch.skipped.size();
  rep.skip_records = batch.skipped;
  rep.similarity = 100.0 * static_cast<double>(rep.self_translated) / static_cast<double>(rep.evaluated);
  return rep;
}

double similarity_over_prefix(const TranslationBatch& batch, const Vocabulary& source_vocab, std::size_t prefix) {
  std::unordered_set<std::string> keep;
  const std::size_t n = std::min(prefix, source_vocab.size());
  for (std::size_t i = 0; i < n; ++i) keep.insert(source_vocab.token(i));
  std::size_t evaluated = 0, self = 0;
  for (const auto& r : batch.results) {
    if (!keep.count(r.source)) continue;
    ++evaluated;
    self += r.target == r.source ? 1 : 0;
  }
  if (evaluated == 0) {
    throw Error(ErrorCode::kEmptyEvaluation,
                "similarity: no token among the first " + std::to_string(prefix) + " was evaluated");
  }
  return 100.0 * static_cast<double>(self) / static_cast<double>(evaluated);
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::unordered_set<std::string> sa(a.begin(), a.end());
  std::unordered_set<std::string> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

std::vector<std::string> neighbor_tokens(const EmbeddingSpace& space, const std::string& token, std::size_t k) {
  std::vector<std::string> out;
  auto v = space.vector(token);
  if (!v) return out;
  for (auto& n : space.neighbors(std::span<const float>(*v), k, token)) out.push_back(std::move(n.token));
  return out;
}

}  // namespace

double similarity_neighborhood(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const TranslationBatch& batch,
                               std::size_t k) {
  if (batch.results.empty()) {
    throw Error(ErrorCode::kEmptyEvaluation, "similarity_neighborhood: no evaluated tokens");
  }
  double total = 0.0;
  for (const auto& r : batch.results) {
    total += jaccard(neighbor_tokens(src, r.source, k), neighbor_tokens(tgt, r.target, k));
  }
  return 100.0 * total / static_cast<double>(batch.results.size());
}

double similarity_neighborhood(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const AlignmentMap& map,
                               const Vocabulary& source_vocab, const Vocabulary& target_vocab, std::size_t k,
                               RetrievalOptions options) {
  return similarity_neighborhood(src, tgt, translate_all(map, src, tgt, source_vocab, target_vocab, options), k);
}

namespace {

std::string join_document(const Document& doc) {
  std::string s;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (i) s += ' ';
    s += doc[i];
  }
  return s;
}

// First `limit` documents containing each wanted token.
std::unordered_map<std::string, std::vector<std::string>> mine_snippets(const Corpus& corpus,
                                                                        const std::unordered_set<std::string>& wanted,
                                                                        std::size_t limit) {
  std::unordered_map<std::string, std::vector<std::string>> out;
  if (limit == 0 || wanted.empty()) return out;
  std::size_t complete = 0;
  for (const auto& doc : corpus.documents()) {
    std::unordered_set<std::string> seen;
    std::string text;
    for (const auto& tok : doc) {
      if (!wanted.count(tok) || !seen.insert(tok).second) continue;
      auto& list = out[tok];
      if (list.size() >= limit) continue;
      if (text.empty()) text = join_document(doc);
      list.push_back(text);
      if (list.size() == limit && ++complete == wanted.size()) return out;
    }
  }
  return out;
}

}  // namespace

std::vector<MisalignedPair> misaligned_pairs(const TranslationBatch& batch, const Corpus& source_corpus,
                                             const Corpus& target_corpus, std::size_t max_snippets) {
  std::vector<MisalignedPair> pairs;
  for (const auto& r : batch.results) {
    if (r.target == r.source) continue;
    MisalignedPair p;
    p.source = r.source;
    p.target = r.target;
    p.score = r.cosine;
    if (r.self_score) p.margin = r.score - *r.self_score;
    pairs.push_back(std::move(p));
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const MisalignedPair& a, const MisalignedPair& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.source < b.source;
  });
  std::unordered_set<std::string> src_wanted, tgt_wanted;
  for (const auto& p : pairs) {
    src_wanted.insert(p.source);
    tgt_wanted.insert(p.target);
  }
  auto src_snips = mine_snippets(source_corpus, src_wanted, max_snippets);
  auto tgt_snips = mine_snippets(target_corpus, tgt_wanted, max_snippets);
  for (auto& p : pairs) {
    if (auto it = src_snips.find(p.source); it != src_snips.end()) p.source_snippets = it->second;
    if (auto it = tgt_snips.find(p.target); it != tgt_snips.end()) p.target_snippets = it->second;
  }
  return pairs;
}

MatrixResult pairwise_matrix(const std::vector<Language>& languages, const Vocabulary& source_vocab,
                             const Vocabulary& target_vocab, RetrievalOptions options, bool with_neighborhood,
                             std::size_t max_snippets, std::size_t neighborhood_k) {
  if (languages.size() < 2) {
    throw Error(ErrorCode::kConfiguration, "pairwise_matrix: need at least two languages");
  }
  for (const auto& l : languages) {
    if (!l.corpus || !l.space) throw Error(ErrorCode::kConfiguration, "pairwise_matrix: missing corpus or space");
  }
  const std::size_t n = languages.size();
  MatrixResult out;
  out.matrix.values.assign(n, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  for (const auto& l : languages) out.matrix.languages.push_back(l.space->language_id());
  const auto& sw = stopwords();
  const auto tokens = source_vocab.tokens();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& src = *languages[i].space;
      const auto& tgt = *languages[j].space;
      auto lexicon = build_seed_lexicon(src, tgt, sw);
      auto map = fit(src, tgt, lexicon);
      Translator translator(map, src, tgt, target_vocab, options);
      auto batch = translator.translate_all(tokens);
      auto rep = similarity(batch, source_vocab);
      rep.source_id = src.language_id();
      rep.target_id = tgt.language_id();
      rep.target_vocab_size = target_vocab.size();
      rep.pairs = misaligned_pairs(batch, *languages[i].corpus, *languages[j].corpus, max_snippets);
      if (with_neighborhood) rep.neighborhood_similarity = similarity_neighborhood(src, tgt, batch, neighborhood_k);
      out.matrix.values[i][j] = rep.similarity;
      out.reports.push_back(std::move(rep));
      out.maps.push_back(std::move(map));
    }
  }
  return out;
}

CellStats summarize(const std::vector<double>& values) {
  CellStats s;
  s.runs = values;
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

// ---------------------------------------------------------------------------
// serialization

std::string report_to_json(const DivergenceReport& r, int indent) {
  json j;
  j["source_id"] = r.source_id;
  j["target_id"] = r.target_id;
  j["similarity"] = r.similarity;
  j["neighborhood_similarity"] = r.neighborhood_similarity ? json(*r.neighborhood_similarity) : json(nullptr);
  j["evaluated"] = r.evaluated;
  j["self_translated"] = r.self_translated;
  j["misaligned"] = r.misaligned;
  j["skipped"] = r.skipped;
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"source", p.source},
                     {"target", p.target},
                     {"score", p.score},
                     {"margin", p.margin ? json(*p.margin) : json(nullptr)},
                     {"source_snippets", p.source_snippets},
                     {"target_snippets", p.target_snippets}});
  }
  j["pairs"] = std::move(pairs);
  json skips = json::array();
  for (const auto& s : r.skip_records) skips.push_back({{"token", s.token}, {"reason", s.reason}});
  j["skip_records"] = std::move(skips);
  j["evaluated_tokens"] = r.evaluated_tokens;
  j["config"] = {{"source_vocab_size", r.source_vocab_size},
                 {"target_vocab_size", r.target_vocab_size},
                 {"mode", r.mode},
                 {"seed", r.seed}};
  return j.dump(indent);
}

DivergenceReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    DivergenceReport r;
    r.source_id = j.at("source_id").get<std::string>();
    r.target_id = j.at("target_id").get<std::string>();
    r.similarity = j.at("similarity").get<double>();
    if (j.contains("neighborhood_similarity") && !j["neighborhood_similarity"].is_null()) {
      r.neighborhood_similarity = j["neighborhood_similarity"].get<double>();
    }
    r.evaluated = j.at("evaluated").get<std::size_t>();
    r.self_translated = j.at("self_translated").get<std::size_t>();
    r.misaligned = j.at("misaligned").get<std::size_t>();
    r.skipped = j.at("skipped").get<std::size_t>();
    for (const auto& p : j.at("pairs")) {
      MisalignedPair m;
      m.source = p.at("source").get<std::string>();
      m.target = p.at("target").get<std::string>();
      m.score = p.at("score").get<double>();
      if (!p.at("margin").is_null()) m.margin = p["margin"].get<double>();
      m.source_snippets = p.at("source_snippets").get<std::vector<std::string>>();
      m.target_snippets = p.at("target_snippets").get<std::vector<std::string>>();
      r.pairs.push_back(std::move(m));
    }
    if (j.contains("skip_records")) {
      for (const auto& s : j["skip_records"]) {
        r.skip_records.push_back({s.at("token").get<std::string>(), s.at("reason").get<std::string>()});
      }
    }
    if (j.contains("evaluated_tokens")) r.evaluated_tokens = j["evaluated_tokens"].get<std::vector<std::string>>();
    const auto& c = j.at("config");
    r.source_vocab_size = c.at("source_vocab_size").get<std::size_t>();
    r.target_vocab_size = c.at("target_vocab_size").get<std::size_t>();
    r.mode = c.at("mode").get<std::string>();
    r.seed = c.at("seed").get<std::uint64_t>();
    if (r.self_translated + r.misaligned != r.evaluated) {
      throw Error(ErrorCode::kConsistency, "report: self_translated + misaligned != evaluated");
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("report JSON: ") + e.what());
  }
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_pairs_csv(std::ostream& out, const std::vector<MisalignedPair>& pairs) {
  out << "source,target,score,margin\n";
  for (const auto& p : pairs) {
    out << csv_field(p.source) << ',' << csv_field(p.target) << ',' << fixed(p.score) << ','
        << (p.margin ? fixed(*p.margin) : std::string()) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const SimilarityMatrix& m) {
  out << "source\\target";
  for (const auto& l : m.languages) out << ',' << csv_field(l);
  out << '\n';
  for (std::size_t i = 0; i < m.languages.size(); ++i) {
    out << csv_field(m.languages[i]);
    for (std::size_t j = 0; j < m.languages.size(); ++j) {
      out << ',';
      if (i != j && std::isfinite(m.values[i][j])) out << fixed(m.values[i][j], 4);
    }
    out << '\n';
  }
}

}  // namespace langdiv
