#include "langdiv/engagement.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "langdiv/error.hpp"

namespace langdiv {

std::optional<double> disagreement(const VideoRecord& video) {
  const std::int64_t total = video.like_count + video.dislike_count;
  if (total <= 0) return std::nullopt;
  return static_cast<double>(video.dislike_count) / static_cast<double>(total);
}

namespace {

std::chrono::year_month_day civil(std::int64_t seconds) {
  using namespace std::chrono;
  return year_month_day{floor<days>(sys_seconds{std::chrono::seconds{seconds}})};
}

}  // namespace

std::string utc_month(std::int64_t seconds) {
  const auto ymd = civil(seconds);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
  return buf;
}

int utc_year(std::int64_t seconds) { return static_cast<int>(civil(seconds).year()); }

DisagreementSeries monthly_series(const std::vector<VideoRecord>& videos, const std::string& channel,
                                  const TimeRange& period, std::size_t min_videos) {
  if (!period.well_ordered()) throw Error(ErrorCode::kConfiguration, "monthly_series: period end precedes begin");
  struct Acc {
    double sum = 0.0;
    std::size_t defined = 0;
    std::size_t uploads = 0;
  };
  std::map<std::string, Acc> months;  // "YYYY-MM" sorts chronologically
  DisagreementSeries series;
  series.channel_id = channel;
  for (const auto& v : videos) {
    if (v.channel_id != channel || !period.contains(v.uploaded_at)) continue;
    auto& acc = months[utc_month(v.uploaded_at)];
    ++acc.uploads;
    if (auto d = disagreement(v)) {
      acc.sum += *d;
      ++acc.defined;
    } else {
      ++series.undefined_videos;
    }
  }
  for (const auto& [month, acc] : months) {
    if (acc.uploads < min_videos || acc.defined == 0) {
      series.omitted_months.push_back(month);
      continue;
    }
    MonthPoint p;
    p.month = month;
    p.value = acc.sum / static_cast<double>(acc.defined);
    p.video_count = acc.uploads;
    p.undefined_count = acc.uploads - acc.defined;
    series.points.push_back(std::move(p));
  }
  return series;
}

// ---------------------------------------------------------------------------
// Student's t

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIterations = 500;
  constexpr double kEpsilon = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) return h;
  }
  throw Error(ErrorCode::kNumeric, "incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::kNumeric, "incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::kNumeric, "incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::kNumeric, "t distribution: degrees of freedom must be positive");
  if (std::isnan(t)) throw Error(ErrorCode::kNumeric, "t distribution: t is NaN");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kConfiguration, "paired t-test: samples differ in length (" + std::to_string(a.size()) +
                                               " vs " + std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) throw Error(ErrorCode::kConfiguration, "paired t-test: need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  if (std::all_of(d.begin(), d.end(), [&](double x) { return x == d[0]; })) {
    throw Error(ErrorCode::kDegenerateVariance, "paired t-test: all differences are identical (zero variance)");
  }
  double sum = 0.0;
  for (double x : d) sum += x;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw Error(ErrorCode::kDegenerateVariance, "paired t-test: zero variance of differences");
  TTestResult r;
  r.df = static_cast<int>(n - 1);
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

// ---------------------------------------------------------------------------
// comment share

std::string CommentShareBreakdown::label(ShareCategory c) const {
  const std::string& a = channel_a;
  const std::string& b = channel_b;
  switch (c) {
    case ShareCategory::kASoleOnA: return a + "_sole^" + a;
    case ShareCategory::kBSoleOnB: return b + "_sole^" + b;
    case ShareCategory::kAMajOnA: return a + "_maj^" + a;
    case ShareCategory::kAMajOnB: return a + "_maj^" + b;
    case ShareCategory::kBMajOnA: return b + "_maj^" + a;
    case ShareCategory::kBMajOnB: return b + "_maj^" + b;
    case ShareCategory::kEqual: return "equal";
  }
  return "?";
}

CommentShareBreakdown comment_share(const std::vector<CommentRecord>& comments, const std::string& channel_a,
                                    const std::string& channel_b, int year) {
  if (channel_a == channel_b) throw Error(ErrorCode::kConfiguration, "comment_share: channels must differ");
  CommentShareBreakdown out;
  out.year = year;
  out.channel_a = channel_a;
  out.channel_b = channel_b;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> per_user;
  std::vector<const CommentRecord*> in_year;
  for (const auto& c : comments) {
    const bool on_a = c.channel_id == channel_a;
    if ((!on_a && c.channel_id != channel_b) || utc_year(c.posted_at) != year) continue;
    auto& u = per_user[c.user_id];
    (on_a ? u.first : u.second)++;
    in_year.push_back(&c);
  }
  for (const auto* c : in_year) {
    const auto [ua, ub] = per_user.at(c->user_id);
    const bool on_a = c->channel_id == channel_a;
    ShareCategory cat;
    if (ua == ub) {
      cat = ShareCategory::kEqual;
    } else if (ub == 0) {
      cat = ShareCategory::kASoleOnA;
    } else if (ua == 0) {
      cat = ShareCategory::kBSoleOnB;
    } else if (ua > ub) {
      cat = on_a ? ShareCategory::kAMajOnA : ShareCategory::kAMajOnB;
    } else {
      cat = on_a ? ShareCategory::kBMajOnA : ShareCategory::kBMajOnB;
    }
    ++out.counts[static_cast<std::size_t>(cat)];
  }
  out.total = in_year.size();
  for (std::size_t i = 0; i < kShareCategories; ++i) {
    out.shares[i] = out.total ? static_cast<double>(out.counts[i]) / static_cast<double>(out.total) : 0.0;
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> monthly_comment_counts(const std::vector<CommentRecord>& comments,
                                                                        const std::string& channel) {
  std::map<std::string, std::size_t> months;
  for (const auto& c : comments) {
    if (c.channel_id == channel) ++months[utc_month(c.posted_at)];
  }
  return {months.begin(), months.end()};
}

// ---------------------------------------------------------------------------
// output

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_series_csv(std::ostream& out, const DisagreementSeries& series) {
  out << "month,value,count\n";
  for (const auto& p : series.points) out << p.month << ',' << fixed(p.value) << ',' << p.video_count << '\n';
}

std::string series_to_json(const DisagreementSeries& series, int indent) {
  nlohmann::json j;
  j["channel_id"] = series.channel_id;
  j["points"] = nlohmann::json::array();
  for (const auto& p : series.points) {
    j["points"].push_back({{"month", p.month},
                           {"value", p.value},
                           {"video_count", p.video_count},
                           {"undefined_count", p.undefined_count}});
  }
  j["omitted_months"] = series.omitted_months;
  j["undefined_videos"] = series.undefined_videos;
  return j.dump(indent);
}

void write_share_csv(std::ostream& out, const CommentShareBreakdown& b) {
  out << "category,count,share\n";
  for (std::size_t i = 0; i < kShareCategories; ++i) {
    out << b.label(static_cast<ShareCategory>(i)) << ',' << b.counts[i] << ',' << fixed(b.shares[i]) << '\n';
  }
}

std::string share_to_json(const CommentShareBreakdown& b, int indent) {
  nlohmann::json j;
  j["year"] = b.year;
  j["channel_a"] = b.channel_a;
  j["channel_b"] = b.channel_b;
  j["total"] = b.total;
  j["categories"] = nlohmann::json::array();
  for (std::size_t i = 0; i < kShareCategories; ++i) {
    j["categories"].push_back(
        {{"category", b.label(static_cast<ShareCategory>(i))}, {"count", b.counts[i]}, {"share", b.shares[i]}});
  }
  return j.dump(indent);
}

std::string t_test_to_json(const TTestResult& r, int indent) {
  nlohmann::json j{{"t", r.t}, {"p", r.p}, {"df", r.df}};
  return j.dump(indent);
}

std::string svg_line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<ChartSeries>& series, double y_min, double y_max) {
  constexpr double kWidth = 720, kHeight = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 60;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  if (!(y_max > y_min)) y_max = y_min + 1.0;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const std::size_t n = x_labels.size();
  auto x_at = [&](std::size_t i) { return kLeft + (n > 1 ? plot_w * static_cast<double>(i) / (n - 1) : plot_w / 2); };
  auto y_at = [&](double v) { return kTop + plot_h * (1.0 - (v - y_min) / (y_max - y_min)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y_min + (y_max - y_min) * i / 4.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(y_at(v) + 4, 1) << "\" text-anchor=\"end\">"
        << fixed(v, 2) << "</text>\n";
  }
  const std::size_t step = std::max<std::size_t>(1, (n + 11) / 12);
  for (std::size_t i = 0; i < n; i += step) {
    svg << "<text x=\"" << fixed(x_at(i), 1) << "\" y=\"" << kTop + plot_h + 16
        << "\" text-anchor=\"middle\">" << xml_escape(x_labels[i]) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];
    std::string points;
    auto flush = [&] {
      if (!points.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << points
            << "\"/>\n";
      }
      points.clear();
    };
    for (std::size_t i = 0; i < std::min(n, series[s].values.size()); ++i) {
      const double v = series[s].values[i];
      if (!std::isfinite(v)) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += fixed(x_at(i), 1) + "," + fixed(y_at(v), 1);
    }
    flush();
    const double ly = kTop + 14.0 * static_cast<double>(s);
    svg << "<rect x=\"" << kLeft + plot_w + 12 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\"" << color
        << "\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w + 26 << "\" y=\"" << ly + 9 << "\">" << xml_escape(series[s].name)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace langdiv
