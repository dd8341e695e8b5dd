#include "langdiv/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "langdiv/error.hpp"

namespace langdiv {

using nlohmann::json;

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kConfiguration, "config: " + what); };
  train.validate();
  if (!period.well_ordered()) bad("period end precedes begin");
  if (source_vocab_size < 1) bad("source_vocab_size must be >= 1");
  if (target_vocab_size < source_vocab_size) bad("target_vocab_size must be >= source_vocab_size");
  if (csls_k < 1) bad("csls_k must be >= 1");
  if (neighborhood_k < 1) bad("neighborhood_k must be >= 1");
  if (runs < 1) bad("runs must be >= 1");
  std::set<std::string> seen;
  for (const auto& c : channels) {
    if (c.empty() || c.find_first_of(" \t\n") != std::string::npos) bad("channel ids must be non-empty words");
    if (!seen.insert(c).second) bad("channel '" + c + "' listed twice");
  }
  if (!corpus_files.empty() && corpus_files.size() != channels.size()) {
    bad("corpus_files and channels must have the same length");
  }
  for (std::size_t i = 1; i < sweep_sizes.size(); ++i) {
    if (sweep_sizes[i] <= sweep_sizes[i - 1]) bad("sweep_sizes must be strictly ascending");
  }
}

RetrievalOptions PipelineConfig::retrieval() const {
  RetrievalOptions o;
  o.mode = mode;
  o.csls_k = csls_k;
  return o;
}

// ---------------------------------------------------------------------------
// JSON

std::string config_to_json(const PipelineConfig& c, int indent) {
  json j;
  j["comment_files"] = c.comment_files;
  j["video_files"] = c.video_files;
  j["corpus_files"] = c.corpus_files;
  j["channels"] = c.channels;
  j["period"] = {{"begin", c.period.begin}, {"end", c.period.end}};
  j["include_replies"] = c.include_replies;
  j["user_filter"] = c.user_filter;
  j["seed"] = c.seed;
  j["train"] = {{"dimension", c.train.dimension},
                {"window", c.train.window},
                {"negatives", c.train.negatives},
                {"epochs", c.train.epochs},
                {"learning_rate", c.train.initial_learning_rate},
                {"min_count", c.train.min_count},
                {"subsample", c.train.subsample_threshold},
                {"subword", c.train.subword.enabled},
                {"min_n", c.train.subword.min_n},
                {"max_n", c.train.subword.max_n},
                {"buckets", c.train.subword.bucket_count},
                {"deterministic", c.train.deterministic},
                {"threads", c.train.threads}};
  j["source_vocab_size"] = c.source_vocab_size;
  j["target_vocab_size"] = c.target_vocab_size;
  j["mode"] = std::string(to_string(c.mode));
  j["csls_k"] = c.csls_k;
  j["trigram"] = c.trigram;
  j["neighborhood"] = c.neighborhood;
  j["neighborhood_k"] = c.neighborhood_k;
  j["max_snippets"] = c.max_snippets;
  j["runs"] = c.runs;
  j["sweep_sizes"] = c.sweep_sizes;
  j["min_videos"] = c.min_videos;
  j["output_dir"] = c.output_dir;
  return j.dump(indent);
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& [k, _] : j.items()) {
    if (!seen.count(k)) throw Error(ErrorCode::kConfiguration, "config: unknown key '" + where + k + "'");
  }
}

}  // namespace

PipelineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kConfiguration, "config: top level must be an object");
  PipelineConfig c;
  try {
    std::set<std::string> seen;
    read_key(j, "comment_files", c.comment_files, seen);
    read_key(j, "video_files", c.video_files, seen);
    read_key(j, "corpus_files", c.corpus_files, seen);
    read_key(j, "channels", c.channels, seen);
    seen.insert("period");
    if (j.contains("period")) {
      std::set<std::string> ps;
      read_key(j["period"], "begin", c.period.begin, ps);
      read_key(j["period"], "end", c.period.end, ps);
      reject_unknown(j["period"], ps, "period.");
    }
    read_key(j, "include_replies", c.include_replies, seen);
    read_key(j, "user_filter", c.user_filter, seen);
    read_key(j, "seed", c.seed, seen);
    seen.insert("train");
    if (j.contains("train")) {
      const auto& t = j["train"];
      std::set<std::string> ts;
      read_key(t, "dimension", c.train.dimension, ts);
      read_key(t, "window", c.train.window, ts);
      read_key(t, "negatives", c.train.negatives, ts);
      read_key(t, "epochs", c.train.epochs, ts);
      read_key(t, "learning_rate", c.train.initial_learning_rate, ts);
      read_key(t, "min_count", c.train.min_count, ts);
      read_key(t, "subsample", c.train.subsample_threshold, ts);
      read_key(t, "subword", c.train.subword.enabled, ts);
      read_key(t, "min_n", c.train.subword.min_n, ts);
      read_key(t, "max_n", c.train.subword.max_n, ts);
      read_key(t, "buckets", c.train.subword.bucket_count, ts);
      read_key(t, "deterministic", c.train.deterministic, ts);
      read_key(t, "threads", c.train.threads, ts);
      reject_unknown(t, ts, "train.");
    }
    read_key(j, "source_vocab_size", c.source_vocab_size, seen);
    read_key(j, "target_vocab_size", c.target_vocab_size, seen);
    std::string mode = "nn";
    read_key(j, "mode", mode, seen);
    c.mode = retrieval_mode_from_string(mode);
    read_key(j, "csls_k", c.csls_k, seen);
    read_key(j, "trigram", c.trigram, seen);
    read_key(j, "neighborhood", c.neighborhood, seen);
    read_key(j, "neighborhood_k", c.neighborhood_k, seen);
    read_key(j, "max_snippets", c.max_snippets, seen);
    read_key(j, "runs", c.runs, seen);
    read_key(j, "sweep_sizes", c.sweep_sizes, seen);
    read_key(j, "min_videos", c.min_videos, seen);
    read_key(j, "output_dir", c.output_dir, seen);
    reject_unknown(j, seen, "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfiguration, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_hash(const PipelineConfig& config) {
  const std::string canonical = config_to_json(config, -1);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// pipeline

std::vector<Corpus> build_channel_corpora(const std::vector<CommentRecord>& comments, const PipelineConfig& config) {
  if (config.channels.size() < 2) throw Error(ErrorCode::kConfiguration, "need at least two channels");
  std::set<std::string> channels(config.channels.begin(), config.channels.end());
  UserAssignment assignment;
  if (config.user_filter) assignment = assign_users(comments, channels, config.period);
  std::vector<Corpus> out;
  for (const auto& ch : config.channels) {
    CorpusFilter f;
    f.channel = ch;
    f.period = config.period;
    f.assignment = config.user_filter ? &assignment : nullptr;
    f.include_replies = config.include_replies;
    out.push_back(build_corpus(comments, f));
  }
  return out;
}

PipelineRun run_pipeline(const std::vector<Corpus>& corpora, const PipelineConfig& config, std::uint64_t seed) {
  config.validate();
  if (corpora.size() < 2) throw Error(ErrorCode::kConfiguration, "pipeline needs at least two corpora");
  PipelineRun run;
  run.seed = seed;
  run.corpora = token_balance(corpora, seed);
  if (config.trigram) {
    run.vocab = build_trigram_vocab(run.corpora, config.source_vocab_size, config.target_vocab_size);
    for (auto& c : run.corpora) {
      Corpus merged = merge_trigrams(c, run.vocab.target);
      merged.provenance() = c.provenance();
      c = std::move(merged);
    }
  } else {
    run.vocab = build_vocab(run.corpora, config.source_vocab_size, config.target_vocab_size);
  }
  TrainConfig tc = config.train;
  tc.seed = seed;
  for (const auto& c : run.corpora) {
    run.spaces.push_back(train(c, tc));
    run.spaces.back().set_language_id(c.language_id());
  }
  std::vector<Language> langs;
  for (std::size_t i = 0; i < run.corpora.size(); ++i) langs.push_back({&run.corpora[i], &run.spaces[i]});
  run.result = pairwise_matrix(langs, run.vocab.source, run.vocab.target, config.retrieval(), config.neighborhood,
                               config.max_snippets, config.neighborhood_k);
  for (auto& r : run.result.reports) r.seed = seed;
  return run;
}

MultirunResult multirun_stats(const std::vector<Corpus>& corpora, const PipelineConfig& config) {
  if (config.runs < 2) throw Error(ErrorCode::kConfiguration, "multirun needs runs >= 2");
  const std::size_t n = corpora.size();
  std::vector<std::vector<std::vector<double>>> values(n, std::vector<std::vector<double>>(n));
  MultirunResult out;
  for (std::size_t r = 0; r < config.runs; ++r) {
    const std::uint64_t seed = config.seed + r;
    PipelineRun run;
    try {
      run = run_pipeline(corpora, config, seed);
    } catch (const Error& e) {
      throw Error(ErrorCode::kRunFailure, "run " + std::to_string(r) + " (seed " + std::to_string(seed) +
                                              ") failed: " + e.what());
    }
    if (out.languages.empty()) out.languages = run.result.matrix.languages;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) values[i][j].push_back(run.result.matrix.at(i, j));
      }
    }
    out.seeds.push_back(seed);
  }
  out.cells.assign(n, std::vector<CellStats>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out.cells[i][j] = summarize(values[i][j]);
    }
  }
  return out;
}

double report_similarity_over_prefix(const DivergenceReport& report, const Vocabulary& source_vocab,
                                     std::size_t prefix) {
  std::unordered_set<std::string> misaligned;
  for (const auto& p : report.pairs) misaligned.insert(p.source);
  std::unordered_set<std::string> evaluated(report.evaluated_tokens.begin(), report.evaluated_tokens.end());
  std::size_t total = 0, self = 0;
  for (std::size_t i = 0; i < std::min(prefix, source_vocab.size()); ++i) {
    const auto& tok = source_vocab.token(i);
    if (!evaluated.count(tok)) continue;
    ++total;
    self += misaligned.count(tok) ? 0 : 1;
  }
  if (total == 0) {
    throw Error(ErrorCode::kEmptyEvaluation, "no evaluated token among the first " + std::to_string(prefix));
  }
  return 100.0 * static_cast<double>(self) / static_cast<double>(total);
}

std::vector<SweepPoint> vocab_sweep(const std::vector<Corpus>& corpora, const PipelineConfig& config,
                                    const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw Error(ErrorCode::kConfiguration, "sweep: no sizes given");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw Error(ErrorCode::kConfiguration, "sweep: sizes must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw Error(ErrorCode::kConfiguration, "sweep: sizes must ascend");
    if (sizes[i] > config.target_vocab_size) {
      throw Error(ErrorCode::kConfiguration, "sweep: size " + std::to_string(sizes[i]) +
                                                 " exceeds the target vocabulary size " +
                                                 std::to_string(config.target_vocab_size));
    }
  }
  PipelineConfig cfg = config;
  cfg.source_vocab_size = sizes.back();
  cfg.neighborhood = false;
  std::vector<SweepPoint> points(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) points[k].source_size = sizes[k];
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const std::uint64_t seed = cfg.seed + r;
    PipelineRun run;
    try {
      run = run_pipeline(corpora, cfg, seed);
    } catch (const Error& e) {
      throw Error(ErrorCode::kRunFailure, "run " + std::to_string(r) + " (seed " + std::to_string(seed) +
                                              ") failed: " + e.what());
    }
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      double sum = 0.0;
      for (const auto& rep : run.result.reports) {
        sum += report_similarity_over_prefix(rep, run.vocab.source, sizes[k]);
      }
      points[k].per_run.push_back(sum / static_cast<double>(run.result.reports.size()));
    }
  }
  for (auto& p : points) p.mean_similarity = summarize(p.per_run).mean;
  return points;
}

std::string multirun_to_json(const MultirunResult& m, int indent) {
  json j;
  j["languages"] = m.languages;
  j["seeds"] = m.seeds;
  j["cells"] = json::array();
  for (std::size_t i = 0; i < m.languages.size(); ++i) {
    for (std::size_t jx = 0; jx < m.languages.size(); ++jx) {
      if (i == jx) continue;
      const auto& c = m.cells[i][jx];
      j["cells"].push_back({{"source", m.languages[i]},
                            {"target", m.languages[jx]},
                            {"mean", c.mean},
                            {"stddev", c.stddev},
                            {"min", c.min},
                            {"max", c.max},
                            {"runs", c.runs}});
    }
  }
  return j.dump(indent);
}

std::string sweep_to_json(const std::vector<SweepPoint>& points, int indent) {
  json j = json::array();
  for (const auto& p : points) {
    j.push_back({{"source_size", p.source_size}, {"mean_similarity", p.mean_similarity}, {"per_run", p.per_run}});
  }
  return j.dump(indent);
}

}  // namespace langdiv
