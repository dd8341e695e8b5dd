#include "langdiv/ingest.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "langdiv/error.hpp"
#include "langdiv/random.hpp"

namespace langdiv {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorCode::kParseFailure, what);
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) schema_error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t require_int(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number_integer()) schema_error(std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

CommentRecord comment_from_json(const json& obj) {
  if (!obj.is_object()) schema_error("record is not a JSON object");
  CommentRecord r;
  r.comment_id = require_string(obj, "comment_id");
  r.video_id = require_string(obj, "video_id");
  r.channel_id = require_string(obj, "channel_id");
  r.user_id = require_string(obj, "user_id");
  r.posted_at = require_int(obj, "posted_at");
  r.text = require_string(obj, "text");
  const json& reply = require(obj, "is_reply");
  if (!reply.is_boolean()) schema_error("field 'is_reply' must be a boolean");
  r.is_reply = reply.get<bool>();
  if (auto it = obj.find("parent_id"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) schema_error("field 'parent_id' must be a string");
    r.parent_id = it->get<std::string>();
  }
  if (r.comment_id.empty()) schema_error("empty comment_id");
  if (r.posted_at < 0) schema_error("negative posted_at");
  if (r.is_reply != r.parent_id.has_value()) schema_error("is_reply disagrees with parent_id");
  return r;
}

VideoRecord video_from_json(const json& obj) {
  if (!obj.is_object()) schema_error("record is not a JSON object");
  VideoRecord v;
  v.video_id = require_string(obj, "video_id");
  v.channel_id = require_string(obj, "channel_id");
  v.uploaded_at = require_int(obj, "uploaded_at");
  v.like_count = require_int(obj, "like_count");
  v.dislike_count = require_int(obj, "dislike_count");
  if (v.video_id.empty()) schema_error("empty video_id");
  if (v.like_count < 0 || v.dislike_count < 0) schema_error("negative like/dislike count");
  return v;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

CommentRecord comment_from_json_text(const std::string& line) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded()) schema_error("invalid JSON");
  return comment_from_json(obj);
}

std::string comment_to_json_text(const CommentRecord& r) {
  json obj = {{"comment_id", r.comment_id}, {"video_id", r.video_id},
              {"channel_id", r.channel_id}, {"user_id", r.user_id},
              {"posted_at", r.posted_at},   {"text", r.text},
              {"is_reply", r.is_reply}};
  if (r.parent_id) obj["parent_id"] = *r.parent_id;
  return obj.dump();
}

std::string video_to_json_text(const VideoRecord& v) {
  json obj = {{"video_id", v.video_id},       {"channel_id", v.channel_id},
              {"uploaded_at", v.uploaded_at}, {"like_count", v.like_count},
              {"dislike_count", v.dislike_count}};
  return obj.dump();
}

ParsedRecords parse_records(std::istream& in, RecordKind kind, const ParseOptions& options) {
  ParsedRecords out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    ++out.lines;
    try {
      json obj = json::parse(line, nullptr, false);
      if (obj.is_discarded()) schema_error("invalid JSON");
      if (kind == RecordKind::kComments) {
        CommentRecord r = comment_from_json(obj);
        if (!seen.insert(r.comment_id).second) schema_error("duplicate comment_id");
        out.comments.push_back(std::move(r));
      } else {
        VideoRecord v = video_from_json(obj);
        if (!seen.insert(v.video_id).second) schema_error("duplicate video_id");
        out.videos.push_back(std::move(v));
      }
    } catch (const Error&) {
      out.malformed_lines.push_back(line_no);
    }
  }
  if (out.lines > 0) {
    double fraction = static_cast<double>(out.malformed_lines.size()) / static_cast<double>(out.lines);
    if (fraction > options.max_malformed_fraction) {
      std::ostringstream msg;
      msg << out.malformed_lines.size() << " of " << out.lines
          << " lines malformed (limit " << options.max_malformed_fraction * 100.0 << "%); line";
      if (out.malformed_lines.size() > 1) msg << 's';
      std::size_t shown = std::min<std::size_t>(out.malformed_lines.size(), 10);
      for (std::size_t i = 0; i < shown; ++i) msg << (i ? ", " : " ") << out.malformed_lines[i];
      if (shown < out.malformed_lines.size()) msg << ", ...";
      throw Error(ErrorCode::kParseFailure, msg.str());
    }
  }
  return out;
}

std::vector<CommentRecord> parse_comments(std::istream& in, const ParseOptions& options) {
  return parse_records(in, RecordKind::kComments, options).comments;
}

std::vector<VideoRecord> parse_videos(std::istream& in, const ParseOptions& options) {
  return parse_records(in, RecordKind::kVideos, options).videos;
}

std::vector<std::string> preprocess_text(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : raw) {
    // Bytes >= 0x80 belong to non-ASCII code points and vanish outright;
    // they do not split tokens.
    if (c >= 0x80) continue;
    if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      current.push_back(static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::optional<std::string> UserAssignment::channel(const std::string& user) const {
  auto it = channel_of.find(user);
  if (it == channel_of.end()) return std::nullopt;
  return it->second;
}

UserAssignment assign_users(const std::vector<CommentRecord>& comments,
                            const std::set<std::string>& channels, const TimeRange& period) {
  if (channels.empty()) throw Error(ErrorCode::kConfiguration, "assign_users: empty channel set");
  if (!period.well_ordered()) throw Error(ErrorCode::kConfiguration, "assign_users: period not well-ordered");
  UserAssignment out;
  for (const auto& c : comments) {
    if (!period.contains(c.posted_at) || !channels.count(c.channel_id)) continue;
    ++out.counts[c.user_id][c.channel_id];
  }
  for (const auto& [user, per_channel] : out.counts) {
    std::size_t best = 0, runner_up = 0;
    const std::string* best_channel = nullptr;
    for (const auto& [channel, n] : per_channel) {
      if (n > best) {
        runner_up = best;
        best = n;
        best_channel = &channel;
      } else if (n > runner_up) {
        runner_up = n;
      }
    }
    if (best_channel && best > runner_up) out.channel_of.emplace(user, *best_channel);
  }
  return out;
}

Corpus build_corpus(const std::vector<CommentRecord>& comments, const CorpusFilter& filter) {
  Corpus corpus(filter.channel);
  for (const auto& c : comments) {
    if (c.channel_id != filter.channel || !filter.period.contains(c.posted_at)) continue;
    if (c.is_reply && !filter.include_replies) continue;
    if (filter.assignment) {
      auto assigned = filter.assignment->channel(c.user_id);
      if (!assigned || *assigned != filter.channel) continue;
    }
    auto tokens = preprocess_text(c.text);
    if (!tokens.empty()) corpus.add(std::move(tokens));
  }
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "corpus for channel '" + filter.channel + "' has no documents");
  }
  auto& prov = corpus.provenance();
  prov.channels = {filter.channel};
  prov.filter = std::string(filter.assignment ? "user-filter" : "no-user-filter") +
                (filter.include_replies ? ",replies" : ",top-level");
  return corpus;
}

std::vector<Corpus> token_balance(const std::vector<Corpus>& corpora, std::uint64_t seed) {
  if (corpora.size() < 2) throw Error(ErrorCode::kConfiguration, "token_balance needs at least 2 corpora");
  for (const auto& c : corpora) {
    if (c.token_count() == 0) {
      throw Error(ErrorCode::kEmptyCorpus, "corpus '" + c.language_id() + "' is empty");
    }
  }
  std::size_t target = corpora.front().token_count();
  for (const auto& c : corpora) target = std::min(target, c.token_count());
  const double lower = static_cast<double>(target) * (1.0 - kBalanceTolerance);
  const double upper = static_cast<double>(target) * (1.0 + kBalanceTolerance);

  std::vector<Corpus> out;
  out.reserve(corpora.size());
  for (std::size_t ci = 0; ci < corpora.size(); ++ci) {
    const Corpus& c = corpora[ci];
    if (static_cast<double>(c.token_count()) <= upper) {
      out.push_back(c);
      out.back().provenance().balance_seed = seed;
      continue;
    }
    Rng rng(mix_seed(seed, ci));
    std::vector<std::size_t> order(c.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::vector<char> keep(c.size(), 0);
    std::size_t total = 0;
    for (std::size_t idx : order) {
      if (static_cast<double>(total) >= lower) break;
      std::size_t len = c.documents()[idx].size();
      if (static_cast<double>(total + len) > upper) continue;
      keep[idx] = 1;
      total += len;
    }
    if (static_cast<double>(total) < lower) {
      throw Error(ErrorCode::kBalanceFailure,
                  "corpus '" + c.language_id() + "' cannot be balanced to " + std::to_string(target) +
                      " tokens by whole-document removal");
    }
    Corpus balanced(c.language_id(), {}, c.provenance());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (keep[i]) balanced.add(c.documents()[i]);
    }
    balanced.provenance().balance_seed = seed;
    out.push_back(std::move(balanced));
  }
  return out;
}

}  // namespace langdiv
