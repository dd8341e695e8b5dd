#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "langdiv/corpus.hpp"

namespace langdiv {

struct CommentRecord {
  std::string comment_id;
  std::string video_id;
  std::string channel_id;
  std::string user_id;
  std::int64_t posted_at = 0;
  std::string text;
  bool is_reply = false;
  std::optional<std::string> parent_id;
};

struct VideoRecord {
  std::string video_id;
  std::string channel_id;
  std::int64_t uploaded_at = 0;
  std::int64_t like_count = 0;
  std::int64_t dislike_count = 0;
};

enum class RecordKind { kComments, kVideos };

struct ParseOptions {
  // Abort when malformed lines exceed this fraction of non-blank lines.
  double max_malformed_fraction = 0.01;
};

struct ParsedRecords {
  std::vector<CommentRecord> comments;
  std::vector<VideoRecord> videos;
  std::size_t lines = 0;
  // 1-based line numbers of malformed lines.
  std::vector<std::size_t> malformed_lines;
};

// Reads line-delimited JSON. Malformed lines are tallied; exceeding the
// configured fraction raises kParseFailure naming the offending lines.
ParsedRecords parse_records(std::istream& in, RecordKind kind, const ParseOptions& options = {});

std::vector<CommentRecord> parse_comments(std::istream& in, const ParseOptions& options = {});
std::vector<VideoRecord> parse_videos(std::istream& in, const ParseOptions& options = {});

// Throws kParseFailure (with a reason) if the JSON object does not match
// the comment schema.
CommentRecord comment_from_json_text(const std::string& line);
std::string comment_to_json_text(const CommentRecord& record);
std::string video_to_json_text(const VideoRecord& record);

// ASCII-only, [a-z0-9]+ tokenization.
std::vector<std::string> preprocess_text(std::string_view raw);

struct UserAssignment {
  // Users absent from `channel_of` are UNASSIGNED.
  std::map<std::string, std::string> channel_of;
  std::map<std::string, std::map<std::string, std::size_t>> counts;

  std::optional<std::string> channel(const std::string& user) const;
};

UserAssignment assign_users(const std::vector<CommentRecord>& comments,
                            const std::set<std::string>& channels, const TimeRange& period);

struct CorpusFilter {
  std::string channel;
  TimeRange period;
  const UserAssignment* assignment = nullptr;
  bool include_replies = false;
};

Corpus build_corpus(const std::vector<CommentRecord>& comments, const CorpusFilter& filter);

// Downsamples every corpus by whole documents to within +-0.5% of the
// smallest token count.
std::vector<Corpus> token_balance(const std::vector<Corpus>& corpora, std::uint64_t seed);

inline constexpr double kBalanceTolerance = 0.005;

struct FetchRequest {
  std::string endpoint;
  std::string channel_id;
  int page_limit = 1;
  std::string credentials;
  int timeout_seconds = 10;
};

std::vector<CommentRecord> fetch_comments(const FetchRequest& request);

}  // namespace langdiv
