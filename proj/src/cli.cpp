#include "langdiv/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "langdiv/alignment.hpp"
#include "langdiv/divergence.hpp"
#include "langdiv/embedding.hpp"
#include "langdiv/engagement.hpp"
#include "langdiv/error.hpp"
#include "langdiv/ingest.hpp"
#include "langdiv/pipeline.hpp"
#include "langdiv/synthgen.hpp"
#include "langdiv/vocab.hpp"

#ifndef LANGDIV_VERSION
#define LANGDIV_VERSION "0.0.0"
#endif

namespace langdiv {

std::string_view tool_version() { return LANGDIV_VERSION; }

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// files and provenance headers

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Leading lines that start with '#' are provenance headers.
std::string strip_header(std::string text) {
  std::size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    auto nl = text.find('\n', pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
  }
  return text.substr(pos);
}

std::map<std::string, std::string> read_header(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  if (!in || !std::getline(in, line) || line.empty() || line[0] != '#') return out;
  std::istringstream ss(line.substr(1));
  std::string field;
  while (ss >> field) {
    auto eq = field.find('=');
    if (eq != std::string::npos) out[field.substr(0, eq)] = field.substr(eq + 1);
  }
  return out;
}

// Writes through a temporary file so readers never see a partial artifact.
void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
}

struct Stamp {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string inputs;  // digest of input corpora, for cached stages

  std::string line(std::string_view artifact) const {
    std::string s = "# langdiv " + std::string(tool_version()) + " artifact=" + std::string(artifact) +
                    " config=" + config_hash + " seed=" + std::to_string(seed);
    if (!inputs.empty()) s += " inputs=" + inputs;
    return s + "\n";
  }

  bool matches(const fs::path& path) const {
    auto h = read_header(path);
    return h["config"] == config_hash && h["seed"] == std::to_string(seed) && h["inputs"] == inputs;
  }

  json object(std::string_view artifact) const {
    return {{"tool", "langdiv"},
            {"version", std::string(tool_version())},
            {"artifact", std::string(artifact)},
            {"config_hash", config_hash},
            {"seed", seed}};
  }
};

void write_text_artifact(const fs::path& path, const Stamp& stamp, std::string_view artifact,
                         const std::string& body) {
  write_file(path, stamp.line(artifact) + body);
}

void write_json_artifact(const fs::path& path, const Stamp& stamp, std::string_view artifact, json payload) {
  if (!payload.is_object()) payload = json{{"data", std::move(payload)}};
  payload["provenance"] = stamp.object(artifact);
  write_file(path, payload.dump(2) + "\n");
}

json read_json_artifact(const fs::path& path) {
  auto j = json::parse(slurp(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kFormat, "invalid JSON in " + path.string());
  return j;
}

// One writer per output directory.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / kLockFileName) {
    fs::create_directories(dir);
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      if (errno == EEXIST) {
        throw Error(ErrorCode::kIo, "output directory " + dir.string() + " is locked by another run (" +
                                        path_.string() + "); remove the file if that run is gone");
      }
      throw Error(ErrorCode::kIo, "cannot create lock " + path_.string() + ": " + std::strerror(errno));
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

// ---------------------------------------------------------------------------
// formatting

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pair_name(const std::string& a, const std::string& b) { return a + "__" + b; }

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// context shared by the pipeline commands

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct Context {
  PipelineConfig config;
  fs::path out;
  Stamp stamp;
  std::ostream* log = nullptr;
};

void check_channel_id(const std::string& id) {
  if (id.empty() || !std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
      })) {
    throw Error(ErrorCode::kConfiguration, "channel id '" + id + "' must use only [A-Za-z0-9_.-]");
  }
}

Context make_context(const Common& common, std::ostream& log) {
  Context ctx;
  ctx.log = &log;
  fs::path base = fs::current_path();
  if (!common.config_path.empty()) {
    ctx.config = config_from_json(slurp(common.config_path));
    base = fs::absolute(common.config_path).parent_path();
  }
  if (common.seed) ctx.config.seed = *common.seed;
  // The hash covers the analysis settings, not where the results go or the
  // seed (recorded separately).
  PipelineConfig hashed = ctx.config;
  hashed.output_dir.clear();
  hashed.seed = 0;
  ctx.stamp.config_hash = config_hash(hashed);
  ctx.stamp.seed = ctx.config.seed;
  auto resolve = [&](std::vector<std::string>& paths) {
    for (auto& p : paths) {
      if (fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
    }
  };
  resolve(ctx.config.comment_files);
  resolve(ctx.config.video_files);
  resolve(ctx.config.corpus_files);
  ctx.out = common.out.empty() ? (base / ctx.config.output_dir).lexically_normal() : fs::path(common.out);
  for (const auto& c : ctx.config.channels) check_channel_id(c);
  return ctx;
}

void require_channels(const Context& ctx) {
  if (ctx.config.channels.size() < 2) {
    throw Error(ErrorCode::kConfiguration, "config must list at least two channels");
  }
}

std::vector<CommentRecord> load_comments(const Context& ctx, std::size_t* malformed = nullptr) {
  if (ctx.config.comment_files.empty()) throw Error(ErrorCode::kConfiguration, "config lists no comment_files");
  std::vector<CommentRecord> all;
  for (const auto& path : ctx.config.comment_files) {
    std::istringstream in(strip_header(slurp(path)));
    ParsedRecords parsed;
    try {
      parsed = parse_records(in, RecordKind::kComments);
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
    if (malformed) *malformed += parsed.malformed_lines.size();
    for (auto& r : parsed.comments) all.push_back(std::move(r));
  }
  return all;
}

std::vector<VideoRecord> load_videos(const Context& ctx) {
  std::vector<VideoRecord> all;
  for (const auto& path : ctx.config.video_files) {
    std::istringstream in(strip_header(slurp(path)));
    try {
      for (auto& v : parse_videos(in)) all.push_back(std::move(v));
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
  }
  return all;
}

Corpus read_corpus_file(const fs::path& path, const std::string& id) {
  std::istringstream in(strip_header(slurp(path)));
  return read_corpus(in, id);
}

struct Inputs {
  std::vector<Corpus> corpora;
  std::string digest;
};

// Corpora named in the config, or the ones `ingest` wrote.
Inputs load_inputs(const Context& ctx) {
  require_channels(ctx);
  const auto& cfg = ctx.config;
  Inputs in;
  std::uint64_t h = fnv1a64("inputs");
  for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
    fs::path path = cfg.corpus_files.empty() ? ctx.out / "corpus" / (cfg.channels[i] + ".txt")
                                             : fs::path(cfg.corpus_files[i]);
    if (!fs::exists(path)) {
      throw Error(ErrorCode::kIo, "missing corpus " + path.string() +
                                      (cfg.corpus_files.empty() ? " (run `ingest` first)" : ""));
    }
    std::string text = strip_header(slurp(path));
    h = fnv1a64(cfg.channels[i], h);
    h = fnv1a64(text, h);
    std::istringstream ss(text);
    Corpus c = read_corpus(ss, cfg.channels[i]);
    if (c.empty()) {
      throw Error(ErrorCode::kEmptyCorpus, "corpus '" + cfg.channels[i] + "' (" + path.string() +
                                               ") contains no documents");
    }
    in.corpora.push_back(std::move(c));
  }
  in.digest = hex64(h);
  return in;
}

std::string corpus_text(const Corpus& c) {
  std::ostringstream ss;
  write_corpus(ss, c);
  return ss.str();
}

std::vector<Corpus> balanced_corpora(const Context& ctx, const Inputs& inputs, bool force) {
  Stamp stamp = ctx.stamp;
  stamp.inputs = inputs.digest;
  const auto& channels = ctx.config.channels;
  auto path = [&](const std::string& ch) { return ctx.out / "balanced" / (ch + ".txt"); };
  bool cached = !force && std::all_of(channels.begin(), channels.end(),
                                      [&](const std::string& ch) { return stamp.matches(path(ch)); });
  if (cached) {
    std::vector<Corpus> out;
    for (const auto& ch : channels) out.push_back(read_corpus_file(path(ch), ch));
    return out;
  }
  auto out = token_balance(inputs.corpora, ctx.config.seed);
  for (const auto& c : out) write_text_artifact(path(c.language_id()), stamp, "corpus", corpus_text(c));
  json summary = json::object();
  for (std::size_t i = 0; i < out.size(); ++i) {
    summary["corpora"].push_back({{"channel", out[i].language_id()},
                                  {"documents_before", inputs.corpora[i].size()},
                                  {"tokens_before", inputs.corpora[i].token_count()},
                                  {"documents", out[i].size()},
                                  {"tokens", out[i].token_count()}});
  }
  write_json_artifact(ctx.out / "balance.json", ctx.stamp, "balance", summary);
  return out;
}

struct Prepared {
  std::vector<Corpus> corpora;  // training corpora (trigram-merged in trigram mode)
  VocabPair vocab;
  std::vector<EmbeddingSpace> spaces;
};

std::string vocab_text(const Vocabulary& v) {
  std::ostringstream ss;
  write_vocabulary(ss, v);
  return ss.str();
}

std::string embedding_text(const EmbeddingSpace& s) {
  std::ostringstream ss;
  write_embedding(ss, s);
  return ss.str();
}

std::string sidecar_bytes(const EmbeddingSpace& s) {
  std::ostringstream ss(std::ios::binary);
  write_subword_sidecar(ss, s);
  return ss.str();
}

EmbeddingSpace read_embedding_file(const fs::path& path, const std::string& id) {
  std::istringstream text(strip_header(slurp(path)));
  fs::path side = path;
  side += ".subword";
  if (fs::exists(side)) {
    std::istringstream bin(strip_header(slurp(side)), std::ios::binary);
    return read_embedding(text, &bin, id);
  }
  return read_embedding(text, nullptr, id);
}

// balance -> vocabulary -> embeddings, reusing cached stages whose headers
// match the current config, seed and inputs. Trained spaces are always
// re-read from their files so that fresh and cached runs agree bit for bit.
Prepared prepare(const Context& ctx, bool force_balance, bool force_train) {
  const auto& cfg = ctx.config;
  cfg.validate();
  Inputs inputs = load_inputs(ctx);
  Prepared p;
  p.corpora = balanced_corpora(ctx, inputs, force_balance);
  if (cfg.trigram) {
    p.vocab = build_trigram_vocab(p.corpora, cfg.source_vocab_size, cfg.target_vocab_size);
    for (auto& c : p.corpora) c = merge_trigrams(c, p.vocab.target);
  } else {
    p.vocab = build_vocab(p.corpora, cfg.source_vocab_size, cfg.target_vocab_size);
  }
  for (const auto& w : p.vocab.warnings) *ctx.log << "warning: " << w << "\n";

  Stamp stamp = ctx.stamp;
  stamp.inputs = inputs.digest;
  write_text_artifact(ctx.out / "vocab" / "source.txt", stamp, "vocabulary", vocab_text(p.vocab.source));
  write_text_artifact(ctx.out / "vocab" / "target.txt", stamp, "vocabulary", vocab_text(p.vocab.target));
  if (cfg.trigram) {
    for (const auto& c : p.corpora) {
      write_text_artifact(ctx.out / "train" / (c.language_id() + ".txt"), stamp, "corpus", corpus_text(c));
    }
  }

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  for (const auto& c : p.corpora) {
    fs::path path = ctx.out / "emb" / (c.language_id() + ".vec");
    fs::path side = path;
    side += ".subword";
    if (force_train || !stamp.matches(path) || (tc.subword.enabled && !stamp.matches(side))) {
      *ctx.log << "training " << c.language_id() << " (" << c.token_count() << " tokens)\n";
      EmbeddingSpace s = train(c, tc);
      write_text_artifact(path, stamp, "embedding", embedding_text(s));
      if (s.subword_enabled()) {
        write_text_artifact(side, stamp, "subword", sidecar_bytes(s));
      } else {
        std::error_code ec;
        fs::remove(side, ec);
      }
    }
    p.spaces.push_back(read_embedding_file(path, c.language_id()));
  }
  return p;
}

std::vector<Language> languages_of(const Prepared& p) {
  std::vector<Language> langs;
  for (std::size_t i = 0; i < p.corpora.size(); ++i) langs.push_back({&p.corpora[i], &p.spaces[i]});
  return langs;
}

std::size_t channel_index(const Context& ctx, const std::string& id) {
  const auto& ch = ctx.config.channels;
  auto it = std::find(ch.begin(), ch.end(), id);
  if (it == ch.end()) throw Error(ErrorCode::kConfiguration, "unknown channel '" + id + "'");
  return static_cast<std::size_t>(it - ch.begin());
}

// The ordered pairs selected by optional --source / --target filters.
std::vector<std::pair<std::size_t, std::size_t>> selected_pairs(const Context& ctx, const std::string& source,
                                                                const std::string& target) {
  std::optional<std::size_t> s, t;
  if (!source.empty()) s = channel_index(ctx, source);
  if (!target.empty()) t = channel_index(ctx, target);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = ctx.config.channels.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || (s && *s != i) || (t && *t != j)) continue;
      out.emplace_back(i, j);
    }
  }
  if (out.empty()) throw Error(ErrorCode::kConfiguration, "no channel pair selected");
  return out;
}

// Runs the pairwise analysis restricted to the languages involved in `pairs`
// and returns the reports for exactly those ordered pairs.
std::vector<DivergenceReport> analyse_pairs(const Context& ctx, const Prepared& p,
                                            const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                            bool neighborhood) {
  std::vector<DivergenceReport> out;
  for (auto [i, j] : pairs) {
    std::vector<Language> two = {{&p.corpora[i], &p.spaces[i]}, {&p.corpora[j], &p.spaces[j]}};
    // Both directions come out of one call; keep i -> j.
    auto res = pairwise_matrix(two, p.vocab.source, p.vocab.target, ctx.config.retrieval(), false,
                               ctx.config.max_snippets, ctx.config.neighborhood_k);
    DivergenceReport rep = std::move(res.reports[0]);
    if (neighborhood) {
      auto batch = translate_all(res.maps[0], p.spaces[i], p.spaces[j], p.vocab.source, p.vocab.target,
                                 ctx.config.retrieval());
      rep.neighborhood_similarity =
          similarity_neighborhood(p.spaces[i], p.spaces[j], batch, ctx.config.neighborhood_k);
    }
    rep.seed = ctx.config.seed;
    out.push_back(std::move(rep));
  }
  return out;
}

std::string pairs_csv(const std::vector<MisalignedPair>& pairs) {
  std::ostringstream ss;
  write_pairs_csv(ss, pairs);
  return ss.str();
}

void write_report(const fs::path& dir, const Context& ctx, const DivergenceReport& rep) {
  const std::string name = pair_name(rep.source_id, rep.target_id);
  write_json_artifact(dir / (name + ".json"), ctx.stamp, "divergence-report", json::parse(report_to_json(rep)));
  write_text_artifact(dir / (name + ".csv"), ctx.stamp, "misaligned-pairs", pairs_csv(rep.pairs));
}

// ---------------------------------------------------------------------------
// commands

int cmd_ingest(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  require_channels(ctx);
  ctx.config.validate();
  DirLock lock(ctx.out);
  std::size_t malformed = 0;
  auto comments = load_comments(ctx, &malformed);
  auto corpora = build_channel_corpora(comments, ctx.config);
  json summary;
  summary["comments"] = comments.size();
  summary["malformed_lines"] = malformed;
  summary["user_filter"] = ctx.config.user_filter;
  summary["include_replies"] = ctx.config.include_replies;
  summary["corpora"] = json::array();
  for (const auto& c : corpora) {
    write_text_artifact(ctx.out / "corpus" / (c.language_id() + ".txt"), ctx.stamp, "corpus", corpus_text(c));
    summary["corpora"].push_back(
        {{"channel", c.language_id()}, {"documents", c.size()}, {"tokens", c.token_count()}});
    out << c.language_id() << ": " << c.size() << " documents, " << c.token_count() << " tokens\n";
  }
  write_json_artifact(ctx.out / "ingest.json", ctx.stamp, "ingest", summary);
  return kExitOk;
}

struct FetchArgs {
  std::string endpoint;
  std::string channel;
  int pages = 1;
  int timeout = 10;
  std::string output;
};

int cmd_fetch(const Common& common, const FetchArgs& a, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  FetchRequest req;
  req.endpoint = a.endpoint;
  req.channel_id = a.channel;
  req.page_limit = a.pages;
  req.timeout_seconds = a.timeout;
  if (const char* tok = std::getenv(kFetchCredentialEnv)) req.credentials = tok;
  fs::path path = a.output.empty() ? ctx.out / "fetch" / (a.channel + ".jsonl") : fs::path(a.output);
  DirLock lock(path.has_parent_path() ? path.parent_path() : fs::path("."));
  auto records = fetch_comments(req);
  std::string body;
  for (const auto& r : records) body += comment_to_json_text(r) + "\n";
  write_text_artifact(path, ctx.stamp, "comments", body);
  out << records.size() << " comments -> " << path.string() << "\n";
  return kExitOk;
}

int cmd_balance(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  ctx.config.validate();
  DirLock lock(ctx.out);
  Inputs inputs = load_inputs(ctx);
  auto corpora = balanced_corpora(ctx, inputs, true);
  for (const auto& c : corpora) out << c.language_id() << ": " << c.token_count() << " tokens\n";
  return kExitOk;
}

int cmd_train(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  DirLock lock(ctx.out);
  auto p = prepare(ctx, false, true);
  for (const auto& s : p.spaces) out << s.language_id() << ": " << s.size() << " vectors\n";
  return kExitOk;
}

int cmd_align(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  DirLock lock(ctx.out);
  auto p = prepare(ctx, false, false);
  json summary;
  summary["maps"] = json::array();
  for (auto [i, j] : selected_pairs(ctx, "", "")) {
    const auto& s = p.spaces[i];
    const auto& t = p.spaces[j];
    auto lex = build_seed_lexicon(s, t, stopwords());
    auto map = fit(s, t, lex);
    std::ostringstream ss;
    write_alignment(ss, map);
    const std::string name = pair_name(s.language_id(), t.language_id());
    write_text_artifact(ctx.out / "maps" / (name + ".map"), ctx.stamp, "alignment-map", ss.str());
    summary["maps"].push_back({{"source", s.language_id()},
                               {"target", t.language_id()},
                               {"anchors", lex.size()},
                               {"dropped_anchors", lex.dropped},
                               {"warnings", map.warnings}});
    out << name << ": " << lex.size() << " anchors\n";
  }
  write_json_artifact(ctx.out / "align.json", ctx.stamp, "align", summary);
  return kExitOk;
}

struct TranslateArgs {
  std::string map, src, tgt, word, vocab, mode = "nn";
  std::size_t k = 10;
  std::size_t csls_k = 10;
};

int cmd_translate(const TranslateArgs& a, std::ostream& out) {
  std::istringstream map_in(strip_header(slurp(a.map)));
  AlignmentMap map = read_alignment(map_in);
  EmbeddingSpace src = read_embedding_file(a.src, map.source_id);
  EmbeddingSpace tgt = read_embedding_file(a.tgt, map.target_id);
  Vocabulary vocab;
  if (!a.vocab.empty()) {
    std::istringstream vin(strip_header(slurp(a.vocab)));
    vocab = read_vocabulary(vin, VocabRole::kTarget);
  } else {
    std::vector<Vocabulary::Entry> entries;
    for (const auto& t : tgt.tokens()) entries.emplace_back(t, 0);
    vocab = Vocabulary(std::move(entries), VocabRole::kTarget);
  }
  RetrievalOptions opt;
  opt.mode = retrieval_mode_from_string(a.mode);
  opt.csls_k = a.csls_k;
  opt.alternatives = a.k + 1;
  auto r = translate(map, src, tgt, a.word, vocab, opt);
  out << r.source << " -> " << r.target << " " << fmt("%.6f", r.score) << "\n";
  for (std::size_t i = 1; i < r.alternatives.size(); ++i) {
    out << "  " << i << " " << r.alternatives[i].token << " " << fmt("%.6f", r.alternatives[i].similarity) << "\n";
  }
  return kExitOk;
}

struct PairArgs {
  std::string source, target;
};

int cmd_similarity(const Common& common, const PairArgs& a, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  DirLock lock(ctx.out);
  auto pairs = selected_pairs(ctx, a.source, a.target);
  auto p = prepare(ctx, false, false);
  auto reports = analyse_pairs(ctx, p, pairs, ctx.config.neighborhood);
  json j;
  j["pairs"] = json::array();
  std::string csv = "source,target,similarity,neighborhood,evaluated,misaligned\n";
  for (const auto& r : reports) {
    j["pairs"].push_back({{"source", r.source_id},
                          {"target", r.target_id},
                          {"similarity", r.similarity},
                          {"neighborhood_similarity", nullable(r.neighborhood_similarity)},
                          {"evaluated", r.evaluated_tokens.size()},
                          {"misaligned", r.pairs.size()}});
    csv += r.source_id + "," + r.target_id + "," + fmt("%.4f", r.similarity) + "," +
           (r.neighborhood_similarity ? fmt("%.4f", *r.neighborhood_similarity) : "") + "," +
           std::to_string(r.evaluated_tokens.size()) + "," + std::to_string(r.pairs.size()) + "\n";
    out << r.source_id << " -> " << r.target_id << ": similarity " << fmt("%.2f", r.similarity);
    if (r.neighborhood_similarity) out << ", neighborhood " << fmt("%.2f", *r.neighborhood_similarity);
    out << "\n";
  }
  write_json_artifact(ctx.out / "similarity.json", ctx.stamp, "similarity", j);
  write_text_artifact(ctx.out / "similarity.csv", ctx.stamp, "similarity", csv);
  return kExitOk;
}

int cmd_misaligned(const Common& common, const PairArgs& a, std::size_t show, std::ostream& out,
                   std::ostream& err) {
  Context ctx = make_context(common, err);
  DirLock lock(ctx.out);
  auto pairs = selected_pairs(ctx, a.source, a.target);
  auto p = prepare(ctx, false, false);
  for (const auto& r : analyse_pairs(ctx, p, pairs, false)) {
    write_report(ctx.out / "misaligned", ctx, r);
    out << r.source_id << " -> " << r.target_id << ": " << r.pairs.size() << " misaligned of "
        << r.evaluated_tokens.size() << "\n";
    for (std::size_t k = 0; k < std::min(show, r.pairs.size()); ++k) {
      out << "  " << r.pairs[k].source << " -> " << r.pairs[k].target << " " << fmt("%.4f", r.pairs[k].score)
          << "\n";
    }
  }
  return kExitOk;
}

int cmd_matrix(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  DirLock lock(ctx.out);
  auto p = prepare(ctx, false, false);
  auto res = pairwise_matrix(languages_of(p), p.vocab.source, p.vocab.target, ctx.config.retrieval(),
                             ctx.config.neighborhood, ctx.config.max_snippets, ctx.config.neighborhood_k);
  for (auto& r : res.reports) {
    r.seed = ctx.config.seed;
    write_report(ctx.out / "reports", ctx, r);
  }
  std::ostringstream csv;
  write_matrix_csv(csv, res.matrix);
  write_text_artifact(ctx.out / "matrix.csv", ctx.stamp, "similarity-matrix", csv.str());
  json j;
  j["languages"] = res.matrix.languages;
  j["values"] = json::array();
  for (const auto& row : res.matrix.values) {
    json r = json::array();
    for (double v : row) r.push_back(nullable(v));
    j["values"].push_back(r);
  }
  j["neighborhood"] = json::array();
  for (const auto& r : res.reports) {
    j["neighborhood"].push_back(
        {{"source", r.source_id}, {"target", r.target_id}, {"value", nullable(r.neighborhood_similarity)}});
  }
  write_json_artifact(ctx.out / "matrix.json", ctx.stamp, "similarity-matrix", j);
  out << csv.str();
  return kExitOk;
}

std::vector<Corpus> inputs_for_runs(const Context& ctx) {
  ctx.config.validate();
  return load_inputs(ctx).corpora;
}

int cmd_multirun(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  DirLock lock(ctx.out);
  auto corpora = inputs_for_runs(ctx);
  auto m = multirun_stats(corpora, ctx.config);
  write_json_artifact(ctx.out / "multirun.json", ctx.stamp, "multirun", json::parse(multirun_to_json(m)));
  std::string csv = "source,target,mean,stddev,min,max\n";
  for (std::size_t i = 0; i < m.languages.size(); ++i) {
    for (std::size_t j = 0; j < m.languages.size(); ++j) {
      if (i == j) continue;
      const auto& c = m.cells[i][j];
      csv += m.languages[i] + "," + m.languages[j] + "," + fmt("%.4f", c.mean) + "," + fmt("%.4f", c.stddev) +
             "," + fmt("%.4f", c.min) + "," + fmt("%.4f", c.max) + "\n";
    }
  }
  write_text_artifact(ctx.out / "multirun.csv", ctx.stamp, "multirun", csv);
  out << csv;
  return kExitOk;
}

int cmd_sweep(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  DirLock lock(ctx.out);
  auto corpora = inputs_for_runs(ctx);
  auto points = vocab_sweep(corpora, ctx.config, ctx.config.sweep_sizes);
  write_json_artifact(ctx.out / "sweep.json", ctx.stamp, "vocab-sweep", json::parse(sweep_to_json(points)));
  std::string csv = "source_size,mean_similarity\n";
  for (const auto& pt : points) csv += std::to_string(pt.source_size) + "," + fmt("%.4f", pt.mean_similarity) + "\n";
  write_text_artifact(ctx.out / "sweep.csv", ctx.stamp, "vocab-sweep", csv);
  out << csv;
  return kExitOk;
}

int cmd_engagement(const Common& common, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  require_channels(ctx);
  ctx.config.validate();
  if (ctx.config.video_files.empty()) throw Error(ErrorCode::kConfiguration, "config lists no video_files");
  DirLock lock(ctx.out);
  const fs::path dir = ctx.out / "engagement";
  const auto& channels = ctx.config.channels;
  auto videos = load_videos(ctx);
  std::vector<DisagreementSeries> series;
  for (const auto& ch : channels) {
    series.push_back(monthly_series(videos, ch, ctx.config.period, ctx.config.min_videos));
    std::ostringstream csv;
    write_series_csv(csv, series.back());
    write_text_artifact(dir / ("series_" + ch + ".csv"), ctx.stamp, "disagreement-series", csv.str());
    write_json_artifact(dir / ("series_" + ch + ".json"), ctx.stamp, "disagreement-series",
                        json::parse(series_to_json(series.back())));
    out << ch << ": " << series.back().points.size() << " months (" << series.back().omitted_months.size()
        << " omitted)\n";
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    for (std::size_t j = i + 1; j < channels.size(); ++j) {
      std::map<std::string, double> bm;
      for (const auto& pt : series[j].points) bm[pt.month] = pt.value;
      std::vector<double> a, b;
      std::vector<std::string> months;
      for (const auto& pt : series[i].points) {
        auto it = bm.find(pt.month);
        if (it == bm.end()) continue;
        months.push_back(pt.month);
        a.push_back(pt.value);
        b.push_back(it->second);
      }
      json j_out;
      j_out["a"] = channels[i];
      j_out["b"] = channels[j];
      j_out["months"] = months;
      try {
        j_out["test"] = json::parse(t_test_to_json(paired_t_test(a, b)));
        j_out["note"] = nullptr;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kConfiguration && e.code() != ErrorCode::kDegenerateVariance) throw;
        j_out["test"] = nullptr;
        j_out["note"] = e.what();
      }
      write_json_artifact(dir / ("ttest_" + pair_name(channels[i], channels[j]) + ".json"), ctx.stamp,
                          "paired-t-test", j_out);
    }
  }
  if (!ctx.config.comment_files.empty()) {
    auto comments = load_comments(ctx);
    std::set<int> years;
    for (const auto& c : comments) {
      if (ctx.config.period.contains(c.posted_at)) years.insert(utc_year(c.posted_at));
    }
    for (const auto& ch : channels) {
      std::string csv = "month,comments\n";
      for (const auto& [m, n] : monthly_comment_counts(comments, ch)) csv += m + "," + std::to_string(n) + "\n";
      write_text_artifact(dir / ("comments_" + ch + ".csv"), ctx.stamp, "comment-counts", csv);
    }
    for (std::size_t i = 0; i < channels.size(); ++i) {
      for (std::size_t j = i + 1; j < channels.size(); ++j) {
        for (int y : years) {
          auto br = comment_share(comments, channels[i], channels[j], y);
          const std::string name = "share_" + pair_name(channels[i], channels[j]) + "_" + std::to_string(y);
          std::ostringstream csv;
          write_share_csv(csv, br);
          write_text_artifact(dir / (name + ".csv"), ctx.stamp, "comment-share", csv.str());
          write_json_artifact(dir / (name + ".json"), ctx.stamp, "comment-share", json::parse(share_to_json(br)));
        }
      }
    }
  }
  return kExitOk;
}

struct SynthArgs {
  std::size_t pairs = 0;
  std::size_t vocab = 2000;
  std::size_t tokens = 2000000;
  std::size_t topics = 20;
  std::vector<std::string> plant;
  std::vector<std::string> phrases;
  bool split = false;
  bool independent = false;
};

std::pair<std::string, std::string> split_bar(const std::string& s) {
  auto bar = s.find('|');
  if (bar == std::string::npos || s.find('|', bar + 1) != std::string::npos) {
    throw Error(ErrorCode::kConfiguration, "expected 'a|b', got '" + s + "'");
  }
  return {s.substr(0, bar), s.substr(bar + 1)};
}

int cmd_synth(const Common& common, const SynthArgs& a, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  SynthConfig sc;
  sc.vocabulary_size = a.vocab;
  sc.topic_count = a.topics;
  sc.random_planted = a.pairs;
  sc.independent_b = a.independent;
  sc.seed = ctx.config.seed;
  for (const auto& s : a.plant) sc.planted.push_back(split_bar(s));
  for (const auto& s : a.phrases) sc.planted_phrases.push_back(split_bar(s));
  sc.validate();
  // An identity fixture draws twice the tokens and halves them.
  sc.documents = documents_for_tokens(sc, a.split ? 2 * a.tokens : a.tokens);
  DirLock lock(ctx.out);
  SynthOutput gen = generate(sc);
  std::vector<Corpus> corpora;
  GroundTruth truth = gen.truth;
  if (a.split) {
    auto halves = split_halves(gen.a, sc.seed);
    corpora = {std::move(halves.first), std::move(halves.second)};
    truth.planted.clear();
    truth.planted_phrases.clear();
    truth.corpus_a_id = corpora[0].language_id();
    truth.corpus_b_id = corpora[1].language_id();
  } else {
    corpora = {std::move(gen.a), std::move(gen.b)};
  }
  PipelineConfig cfg;
  cfg.seed = sc.seed;
  cfg.output_dir = ".";
  cfg.trigram = !sc.planted_phrases.empty();
  cfg.source_vocab_size = std::max<std::size_t>(1, a.vocab / 2);
  cfg.sweep_sizes.clear();
  for (std::size_t div : {4, 2, 1}) {
    const std::size_t s = std::max<std::size_t>(1, cfg.source_vocab_size / div);
    if (cfg.sweep_sizes.empty() || s > cfg.sweep_sizes.back()) cfg.sweep_sizes.push_back(s);
  }
  for (const auto& c : corpora) {
    write_text_artifact(ctx.out / "corpus" / (c.language_id() + ".txt"), ctx.stamp, "corpus", corpus_text(c));
    cfg.channels.push_back(c.language_id());
    cfg.corpus_files.push_back("corpus/" + c.language_id() + ".txt");
    out << c.language_id() << ": " << c.size() << " documents, " << c.token_count() << " tokens\n";
  }
  write_json_artifact(ctx.out / "truth.json", ctx.stamp, "ground-truth", json::parse(ground_truth_to_json(truth)));
  // The config is itself an input and stays free of provenance keys.
  write_file(ctx.out / "config.json", config_to_json(cfg) + "\n");
  out << "planted pairs: " << truth.planted.size() + truth.planted_phrases.size() << "\n";
  return kExitOk;
}

// -- report -----------------------------------------------------------------

std::vector<fs::path> sorted_glob(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind(prefix, 0) == 0 && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string cell(const json& v, const char* f = "%.2f") {
  return v.is_number() ? fmt(f, v.get<double>()) : std::string("-");
}

int cmd_report(const Common& common, std::size_t top, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(common, err);
  DirLock lock(ctx.out);
  const fs::path& d = ctx.out;
  std::ostringstream md;
  bool any = false;
  md << "<!-- langdiv " << tool_version() << " artifact=report config=" << ctx.stamp.config_hash
     << " seed=" << ctx.stamp.seed << " -->\n";
  md << "# Corpus divergence report\n\n";

  if (fs::exists(d / "matrix.json")) {
    any = true;
    auto j = read_json_artifact(d / "matrix.json");
    auto langs = j.at("languages").get<std::vector<std::string>>();
    md << "## Similarity matrix (row translated into column, %)\n\n| |";
    for (const auto& l : langs) md << " " << l << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < langs.size(); ++i) md << "---|";
    md << "\n";
    for (std::size_t i = 0; i < langs.size(); ++i) {
      md << "| " << langs[i] << " |";
      for (std::size_t k = 0; k < langs.size(); ++k) md << " " << cell(j.at("values")[i][k]) << " |";
      md << "\n";
    }
    md << "\n";
  }

  std::optional<GroundTruth> truth;
  if (fs::exists(d / "truth.json")) {
    auto j = read_json_artifact(d / "truth.json");
    j.erase("provenance");
    truth = ground_truth_from_json(j.dump());
  }
  json recovery = json::array();
  for (const char* sub : {"reports", "misaligned"}) {
    auto files = sorted_glob(d / sub, "", ".json");
    if (files.empty()) continue;
    any = true;
    md << "## Misaligned pairs (" << sub << "/)\n\n";
    for (const auto& f : files) {
      auto j = read_json_artifact(f);
      j.erase("provenance");
      DivergenceReport rep = report_from_json(j.dump());
      md << "### " << rep.source_id << " -> " << rep.target_id << "\n\n";
      md << "Similarity " << fmt("%.2f", rep.similarity) << "% over " << rep.evaluated_tokens.size()
         << " tokens";
      if (rep.neighborhood_similarity) md << "; neighborhood similarity " << fmt("%.2f", *rep.neighborhood_similarity);
      md << ".\n\n| source | target | score |\n|---|---|---|\n";
      for (std::size_t k = 0; k < std::min(top, rep.pairs.size()); ++k) {
        md << "| " << rep.pairs[k].source << " | " << rep.pairs[k].target << " | " << fmt("%.4f", rep.pairs[k].score)
           << " |\n";
      }
      md << "\n";
      if (truth && (rep.source_id == truth->corpus_a_id || rep.source_id == truth->corpus_b_id)) {
        auto m = evaluate_recovery(rep, *truth);
        recovery.push_back({{"report", f.lexically_relative(d).string()},
                            {"source", rep.source_id},
                            {"target", rep.target_id},
                            {"planted_recall", m.planted_recall},
                            {"partner_precision", m.partner_precision},
                            {"false_misalignment_rate", m.false_misalignment_rate},
                            {"planted_recovered", m.planted_recovered},
                            {"false_slice", m.false_slice}});
        md << "Planted recall " << fmt("%.3f", m.planted_recall) << ", false-misalignment rate "
           << fmt("%.4f", m.false_misalignment_rate) << ".\n\n";
      }
    }
  }
  if (!recovery.empty()) write_json_artifact(d / "recovery.json", ctx.stamp, "recovery", json{{"reports", recovery}});

  if (fs::exists(d / "multirun.json")) {
    any = true;
    auto j = read_json_artifact(d / "multirun.json");
    md << "## Multi-run stability\n\n| source | target | mean | std | min | max |\n|---|---|---|---|---|---|\n";
    for (const auto& c : j.at("cells")) {
      md << "| " << c.at("source").get<std::string>() << " | " << c.at("target").get<std::string>() << " | "
         << cell(c.at("mean")) << " | " << cell(c.at("stddev")) << " | " << cell(c.at("min")) << " | "
         << cell(c.at("max")) << " |\n";
    }
    md << "\n";
  }

  if (fs::exists(d / "sweep.json")) {
    any = true;
    auto j = read_json_artifact(d / "sweep.json").at("data");
    std::vector<std::string> labels;
    ChartSeries s{"mean similarity", {}};
    md << "## Source-vocabulary sweep\n\n| size | similarity |\n|---|---|\n";
    for (const auto& p : j) {
      labels.push_back(std::to_string(p.at("source_size").get<std::size_t>()));
      s.values.push_back(p.at("mean_similarity").get<double>());
      md << "| " << labels.back() << " | " << fmt("%.2f", s.values.back()) << " |\n";
    }
    md << "\n![sweep](charts/sweep.svg)\n\n";
    std::string svg = svg_line_chart("Similarity by source-vocabulary size", labels, {s}, 0.0, 100.0);
    write_file(d / "charts" / "sweep.svg", "<!-- langdiv " + std::string(tool_version()) +
                                                " artifact=chart config=" + ctx.stamp.config_hash +
                                                " seed=" + std::to_string(ctx.stamp.seed) + " -->\n" + svg);
  }

  auto series_files = sorted_glob(d / "engagement", "series_", ".json");
  if (!series_files.empty()) {
    any = true;
    std::map<std::string, std::map<std::string, double>> by_channel;
    std::set<std::string> months;
    for (const auto& f : series_files) {
      auto j = read_json_artifact(f);
      auto& m = by_channel[j.at("channel_id").get<std::string>()];
      for (const auto& p : j.at("points")) {
        months.insert(p.at("month").get<std::string>());
        m[p.at("month").get<std::string>()] = p.at("value").get<double>();
      }
    }
    std::vector<std::string> labels(months.begin(), months.end());
    std::vector<ChartSeries> series;
    for (const auto& [ch, m] : by_channel) {
      ChartSeries s{ch, {}};
      for (const auto& month : labels) {
        auto it = m.find(month);
        s.values.push_back(it == m.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
      }
      series.push_back(std::move(s));
    }
    std::string svg = svg_line_chart("Monthly disagreement factor", labels, series, 0.0, 1.0);
    write_file(d / "charts" / "disagreement.svg", "<!-- langdiv " + std::string(tool_version()) +
                                                      " artifact=chart config=" + ctx.stamp.config_hash +
                                                      " seed=" + std::to_string(ctx.stamp.seed) + " -->\n" + svg);
    md << "## Disagreement factor\n\n![disagreement](charts/disagreement.svg)\n\n";
    auto tests = sorted_glob(d / "engagement", "ttest_", ".json");
    if (!tests.empty()) {
      md << "| a | b | months | t | df | p |\n|---|---|---|---|---|---|\n";
      for (const auto& f : tests) {
        auto j = read_json_artifact(f);
        md << "| " << j.at("a").get<std::string>() << " | " << j.at("b").get<std::string>() << " | "
           << j.at("months").size() << " | ";
        if (j.at("test").is_null()) {
          md << "- | - | - |\n";
        } else {
          const auto& t = j.at("test");
          md << cell(t.at("t"), "%.3f") << " | " << t.at("df").get<int>() << " | " << cell(t.at("p"), "%.4f") << " |\n";
        }
      }
      md << "\n";
    }
    auto shares = sorted_glob(d / "engagement", "share_", ".json");
    if (!shares.empty()) {
      md << "## Comment share\n\n";
      for (const auto& f : shares) {
        auto j = read_json_artifact(f);
        md << "### " << j.at("channel_a").get<std::string>() << " / " << j.at("channel_b").get<std::string>()
           << ", " << j.at("year").get<int>() << "\n\n| category | count | share |\n|---|---|---|\n";
        for (const auto& c : j.at("categories")) {
          md << "| " << c.at("category").get<std::string>() << " | " << c.at("count").get<std::size_t>() << " | "
             << cell(c.at("share"), "%.4f") << " |\n";
        }
        md << "\n";
      }
    }
  }
  if (!any) {
    throw Error(ErrorCode::kIo, "nothing to report in " + d.string() +
                                    ": run matrix, misaligned, multirun, sweep or engagement first");
  }
  write_file(d / "report.md", md.str());
  out << "report -> " << (d / "report.md").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

void add_common(CLI::App* sub, Common& c, bool with_config = true) {
  if (with_config) sub->add_option("-c,--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& v) { c.seed = v; }, "Seed for every random choice (overrides the config)");
  sub->add_option("-o,--out", c.out, "Output directory (overrides the config)");
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"langdiv: measure how differently two text corpora use the same words", "langdiv"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);
  app.fallthrough(false);

  Common common;
  FetchArgs fetch_args;
  TranslateArgs tr;
  PairArgs pair_args;
  SynthArgs synth_args;
  std::size_t show = 10;
  std::size_t top = 10;
  std::function<int()> action;

  auto* ingest = app.add_subcommand("ingest", "Parse comment JSONL into one corpus per channel");
  add_common(ingest, common);
  ingest->callback([&] { action = [&] { return cmd_ingest(common, out, err); }; });

  auto* fetch = app.add_subcommand("fetch", std::string("Download comments from a paginated HTTP endpoint (token in $") +
                                                kFetchCredentialEnv + ")");
  add_common(fetch, common);
  fetch->add_option("--endpoint", fetch_args.endpoint, "Base URL")->required();
  fetch->add_option("--channel", fetch_args.channel, "Channel id")->required();
  fetch->add_option("--pages", fetch_args.pages, "Page limit")->check(CLI::NonNegativeNumber);
  fetch->add_option("--timeout", fetch_args.timeout, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
  fetch->add_option("--output", fetch_args.output, "Output JSONL file (default <out>/fetch/<channel>.jsonl)");
  fetch->callback([&] { action = [&] { return cmd_fetch(common, fetch_args, out, err); }; });

  auto* balance = app.add_subcommand("balance", "Downsample corpora to equal token counts");
  add_common(balance, common);
  balance->callback([&] { action = [&] { return cmd_balance(common, out, err); }; });

  auto* train_cmd = app.add_subcommand("train", "Build vocabularies and train one embedding per corpus");
  add_common(train_cmd, common);
  train_cmd->callback([&] { action = [&] { return cmd_train(common, out, err); }; });

  auto* align = app.add_subcommand("align", "Fit an orthogonal map for every ordered channel pair");
  add_common(align, common);
  align->callback([&] { action = [&] { return cmd_align(common, out, err); }; });

  auto* translate_cmd = app.add_subcommand("translate", "Translate one word through an alignment map");
  translate_cmd->add_option("--map", tr.map, "Alignment map file")->required()->check(CLI::ExistingFile);
  translate_cmd->add_option("--src", tr.src, "Source embedding file")->required()->check(CLI::ExistingFile);
  translate_cmd->add_option("--tgt", tr.tgt, "Target embedding file")->required()->check(CLI::ExistingFile);
  translate_cmd->add_option("--word", tr.word, "Word to translate")->required();
  translate_cmd->add_option("--k", tr.k, "Number of alternatives to print")->check(CLI::PositiveNumber);
  translate_cmd->add_option("--vocab", tr.vocab, "Target vocabulary file (default: every target word)")
      ->check(CLI::ExistingFile);
  translate_cmd->add_option("--mode", tr.mode, "Retrieval mode")->check(CLI::IsMember({"nn", "csls"}));
  translate_cmd->add_option("--csls-k", tr.csls_k, "CSLS neighbourhood size")->check(CLI::PositiveNumber);
  translate_cmd->callback([&] { action = [&] { return cmd_translate(tr, out); }; });

  auto* sim = app.add_subcommand("similarity", "Similarity (and neighbourhood similarity) per channel pair");
  add_common(sim, common);
  sim->add_option("--source", pair_args.source, "Only this source channel");
  sim->add_option("--target", pair_args.target, "Only this target channel");
  sim->callback([&] { action = [&] { return cmd_similarity(common, pair_args, out, err); }; });

  auto* mis = app.add_subcommand("misaligned", "Misaligned pairs with example documents");
  add_common(mis, common);
  mis->add_option("--source", pair_args.source, "Only this source channel");
  mis->add_option("--target", pair_args.target, "Only this target channel");
  mis->add_option("--show", show, "Pairs to print per direction");
  mis->callback([&] { action = [&] { return cmd_misaligned(common, pair_args, show, out, err); }; });

  auto* matrix = app.add_subcommand("matrix", "Pairwise similarity matrix and all divergence reports");
  add_common(matrix, common);
  matrix->callback([&] { action = [&] { return cmd_matrix(common, out, err); }; });

  auto* sweep = app.add_subcommand("sweep", "Similarity as a function of the source-vocabulary size");
  add_common(sweep, common);
  sweep->callback([&] { action = [&] { return cmd_sweep(common, out, err); }; });

  auto* multirun = app.add_subcommand("multirun", "Mean and spread of the matrix over several seeds");
  add_common(multirun, common);
  multirun->callback([&] { action = [&] { return cmd_multirun(common, out, err); }; });

  auto* engagement = app.add_subcommand("engagement", "Disagreement series, paired t-tests and comment shares");
  add_common(engagement, common);
  engagement->callback([&] { action = [&] { return cmd_engagement(common, out, err); }; });

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus pair with planted swaps");
  add_common(synth, common, false);
  synth->add_option("--pairs", synth_args.pairs, "Random planted word swaps");
  synth->add_option("--vocab-size", synth_args.vocab, "Content-word vocabulary size")->check(CLI::PositiveNumber);
  synth->add_option("--tokens", synth_args.tokens, "Approximate tokens per corpus")->check(CLI::PositiveNumber);
  synth->add_option("--topics", synth_args.topics, "Topic count")->check(CLI::PositiveNumber);
  synth->add_option("--plant", synth_args.plant, "Named swap 'a|b' (repeatable)");
  synth->add_option("--phrase", synth_args.phrases, "Three-word phrase swap 'x y z|u v w' (repeatable)");
  synth->add_flag("--split", synth_args.split, "Identity fixture: split one corpus into two halves");
  synth->add_flag("--independent", synth_args.independent, "Sample the second corpus independently");
  synth->callback([&] { action = [&] { return cmd_synth(common, synth_args, out, err); }; });

  auto* report = app.add_subcommand("report", "Markdown report and SVG charts from earlier outputs");
  add_common(report, common);
  report->add_option("--top", top, "Misaligned pairs listed per direction");
  report->callback([&] { action = [&] { return cmd_report(common, top, out, err); }; });

  if (!args.empty() && !args[0].empty() && args[0][0] != '-' && app.get_subcommand_no_throw(args[0]) == nullptr) {
    err << "langdiv: usage error: unknown command '" << args[0] << "'\n";
    err << "Run 'langdiv --help' for the list of commands.\n";
    return kExitUsage;
  }
  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("langdiv");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "langdiv: usage error: " << e.what() << "\n";
    err << "Run 'langdiv --help' or 'langdiv <command> --help' for usage.\n";
    return kExitUsage;
  }
  if (!action) {
    err << "langdiv: usage error: no command given\n";
    return kExitUsage;
  }
  try {
    return action();
  } catch (const Error& e) {
    err << "langdiv: error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const nlohmann::json::exception& e) {
    err << "langdiv: error [format]: " << e.what() << "\n";
    return kExitFailure;
  } catch (const fs::filesystem_error& e) {
    err << "langdiv: error [io]: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace langdiv
