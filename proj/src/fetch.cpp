#include <regex>
#include <unordered_set>

#include "httplib.h"
#include "json.hpp"

#include "langdiv/error.hpp"
#include "langdiv/ingest.hpp"

namespace langdiv {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_endpoint(const std::string& endpoint) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, re)) {
    throw Error(ErrorCode::kConfiguration, "invalid endpoint URL: " + endpoint);
  }
  SplitUrl out{m[1].str(), m[2].str()};
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

}  // namespace

std::vector<CommentRecord> fetch_comments(const FetchRequest& request) {
  std::vector<CommentRecord> out;
  if (request.page_limit <= 0) return out;

  const SplitUrl url = split_endpoint(request.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(request.timeout_seconds);
  client.set_read_timeout(request.timeout_seconds);
  httplib::Headers headers;
  if (!request.credentials.empty()) {
    headers.emplace("Authorization", "Bearer " + request.credentials);
  }

  std::unordered_set<std::string> seen;
  std::optional<std::string> token;
  for (int page = 1; page <= request.page_limit; ++page) {
    httplib::Params params{{"channel", request.channel_id}};
    if (token) params.emplace("page", *token);
    const std::string path = url.prefix + "/comments?" + httplib::detail::params_to_query_str(params);
    auto res = client.Get(path, headers);
    if (!res) {
      throw Error(ErrorCode::kNetwork, "page " + std::to_string(page) + ": " +
                                           httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kNetwork,
                  "page " + std::to_string(page) + ": HTTP status " + std::to_string(res->status));
    }
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("items") ||
        !body["items"].is_array()) {
      throw Error(ErrorCode::kParseFailure,
                  "page " + std::to_string(page) + ": response does not match {items, next}");
    }
    for (const auto& item : body["items"]) {
      CommentRecord r;
      try {
        r = comment_from_json_text(item.dump());
      } catch (const Error& e) {
        throw Error(ErrorCode::kParseFailure, "page " + std::to_string(page) + ": " + e.what());
      }
      if (seen.insert(r.comment_id).second) out.push_back(std::move(r));
    }
    auto next = body.find("next");
    if (next == body.end() || next->is_null()) break;
    if (!next->is_string()) {
      throw Error(ErrorCode::kParseFailure, "page " + std::to_string(page) + ": 'next' must be a string");
    }
    token = next->get<std::string>();
  }
  return out;
}

}  // namespace langdiv
