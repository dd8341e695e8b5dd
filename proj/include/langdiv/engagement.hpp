#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "langdiv/corpus.hpp"
#include "langdiv/ingest.hpp"

namespace langdiv {

// dislike / (like + dislike); nothing when the video has no reactions.
std::optional<double> disagreement(const VideoRecord& video);

// UTC calendar month "YYYY-MM" of a timestamp.
std::string utc_month(std::int64_t seconds);
int utc_year(std::int64_t seconds);

struct MonthPoint {
  std::string month;  // "YYYY-MM"
  double value = 0.0;
  // Uploads in the month (including videos without reactions).
  std::size_t video_count = 0;
  // Uploads whose disagreement is undefined.
  std::size_t undefined_count = 0;
};

struct DisagreementSeries {
  std::string channel_id;
  std::vector<MonthPoint> points;  // strictly increasing months
  // Months dropped for having fewer than min_videos uploads (or no defined
  // value at all).
  std::vector<std::string> omitted_months;
  std::size_t undefined_videos = 0;
};

inline constexpr std::size_t kDefaultMinVideos = 10;

DisagreementSeries monthly_series(const std::vector<VideoRecord>& videos, const std::string& channel,
                                  const TimeRange& period, std::size_t min_videos = kDefaultMinVideos);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  int df = 0;
};

// Paired t-test on d = a - b.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Two-sided tail probability P(|T| >= |t|) of Student's t with `df` degrees
// of freedom.
double student_t_two_sided_p(double t, double df);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double x, double a, double b);

// Comment-share categories for a channel pair (A, B) in one UTC year:
// users are split by their annual comment counts u_A, u_B.
enum class ShareCategory {
  kASoleOnA,   // u_B = 0
  kBSoleOnB,   // u_A = 0
  kAMajOnA,    // u_A > u_B > 0, comments on A
  kAMajOnB,    // u_A > u_B > 0, comments on B
  kBMajOnA,    // u_B > u_A > 0, comments on A
  kBMajOnB,    // u_B > u_A > 0, comments on B
  kEqual,      // u_A = u_B > 0
};

inline constexpr std::size_t kShareCategories = 7;

struct CommentShareBreakdown {
  int year = 0;
  std::string channel_a;
  std::string channel_b;
  std::array<std::size_t, kShareCategories> counts{};
  std::array<double, kShareCategories> shares{};
  std::size_t total = 0;

  std::size_t count(ShareCategory c) const { return counts[static_cast<std::size_t>(c)]; }
  // e.g. "cnn_maj^fox" for kAMajOnB.
  std::string label(ShareCategory c) const;
};

CommentShareBreakdown comment_share(const std::vector<CommentRecord>& comments, const std::string& channel_a,
                                    const std::string& channel_b, int year);

// Comments per UTC month on one channel (ascending months).
std::vector<std::pair<std::string, std::size_t>> monthly_comment_counts(const std::vector<CommentRecord>& comments,
                                                                        const std::string& channel);

// "month,value,count"
void write_series_csv(std::ostream& out, const DisagreementSeries& series);
std::string series_to_json(const DisagreementSeries& series, int indent = 2);
// "category,count,share"
void write_share_csv(std::ostream& out, const CommentShareBreakdown& breakdown);
std::string share_to_json(const CommentShareBreakdown& breakdown, int indent = 2);
std::string t_test_to_json(const TTestResult& result, int indent = 2);

// Minimal SVG line chart: one polyline per series over shared x labels.
struct ChartSeries {
  std::string name;
  std::vector<double> values;  // NaN = gap
};

std::string svg_line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<ChartSeries>& series, double y_min, double y_max);

}  // namespace langdiv
