// Acceptance checks, one per criterion. Usage: langdiv_acceptance <name>
// Each check prints its measurements and one PASS/FAIL line; the exit status
// is 0 only on PASS.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "langdiv/alignment.hpp"
#include "langdiv/cli.hpp"
#include "langdiv/divergence.hpp"
#include "langdiv/embedding.hpp"
#include "langdiv/engagement.hpp"
#include "langdiv/pipeline.hpp"
#include "langdiv/synthgen.hpp"
#include "langdiv/vocab.hpp"
#include "support.hpp"

using namespace langdiv;
namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Collects named conditions and prints the verdict.
class Verdict {
 public:
  explicit Verdict(std::string title) : title_(std::move(title)) {}

  void require(bool ok, const std::string& what) {
    std::printf("  [%s] %s\n", ok ? "ok" : "FAILED", what.c_str());
    ok_ = ok_ && ok;
  }

  int finish() const {
    std::printf("%s %s\n", ok_ ? "PASS" : "FAIL", title_.c_str());
    std::fflush(stdout);
    return ok_ ? 0 : 1;
  }

 private:
  std::string title_;
  bool ok_ = true;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Eigen::MatrixXd random_orthogonal(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd s = qr.matrixQR().diagonal().array().sign();
  return q * s.asDiagonal();
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

// ---------------------------------------------------------------------------

int check_procrustes() {
  Verdict v("criterion 1: orthogonal Procrustes");
  Stopwatch clock;
  std::mt19937_64 rng(1);
  const int d = 50;
  const Eigen::Index n = 500;

  Eigen::MatrixXd x = gaussian(n, d, rng);
  const double identity_err = (procrustes(x, x) - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();
  Eigen::MatrixXd r = random_orthogonal(d, rng);
  const double rotation_err = (procrustes(x, x * r) - r).cwiseAbs().maxCoeff();
  v.require(identity_err <= 1e-6, fmt("Y = X recovers W = I (max |W - I| = %.2e)", identity_err));
  v.require(rotation_err <= 1e-6, fmt("Y = XR recovers W = R (max |W - R| = %.2e)", rotation_err));

  double worst_orth = 0.0;
  for (int fit_i = 0; fit_i < 100; ++fit_i) {
    Eigen::MatrixXd a = gaussian(n, d, rng), b = gaussian(n, d, rng);
    Eigen::MatrixXd w = procrustes(a, b);
    worst_orth = std::max(worst_orth, (w.transpose() * w - Eigen::MatrixXd::Identity(d, d)).norm());
  }
  v.require(worst_orth <= 1e-6, fmt("||W^T W - I||_F <= 1e-6 over 100 fits (worst %.2e)", worst_orth));

  Eigen::MatrixXd a = gaussian(n, d, rng);
  Eigen::MatrixXd b = a * random_orthogonal(d, rng) + 0.5 * gaussian(n, d, rng);
  const double fitted = (a * procrustes(a, b) - b).norm();
  double best_random = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 1000; ++k) best_random = std::min(best_random, (a * random_orthogonal(d, rng) - b).norm());
  v.require(fitted <= best_random,
            fmt("fitted residual %.3f <= best of 1000 random orthogonal maps %.3f", fitted, best_random));
  const double secs = clock.seconds();
  v.require(secs < 10.0, fmt("runtime %.2f s < 10 s", secs));
  return v.finish();
}

// ---------------------------------------------------------------------------

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double sgns_loss(const std::vector<double>& c, const std::vector<double>& o,
                 const std::vector<std::vector<double>>& negs) {
  auto dot = [](const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * q[i];
    return s;
  };
  double l = -std::log(sigmoid(dot(o, c)));
  for (const auto& n : negs) l -= std::log(sigmoid(-dot(n, c)));
  return l;
}

// ||analytic - numeric|| / max(||analytic||, ||numeric||)
double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  return denom > 0 ? std::sqrt(diff) / denom : 0.0;
}

int check_gradient() {
  Verdict v("criterion 2: SGNS gradient check");
  Stopwatch clock;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.5);
  const int d = 10, negatives = 5;
  const double h = 1e-5;
  auto draw = [&] {
    std::vector<double> x(d);
    for (auto& e : x) e = g(rng);
    return x;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto c = draw(), o = draw();
    std::vector<std::vector<double>> negs;
    for (int k = 0; k < negatives; ++k) negs.push_back(draw());
    const auto grad = sgns_gradient(c, o, negs);
    // Central differences of the loss with respect to one vector: -2 selects
    // the center, -1 the context, k >= 0 the k-th negative.
    auto numeric = [&](int which) {
      std::vector<double> out(d);
      for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
        auto cp = c, op = o, cm = c, om = o;
        auto np = negs, nm = negs;
        auto& plus = which == -2 ? cp : which == -1 ? op : np[static_cast<std::size_t>(which)];
        auto& minus = which == -2 ? cm : which == -1 ? om : nm[static_cast<std::size_t>(which)];
        plus[i] += h;
        minus[i] -= h;
        out[i] = (sgns_loss(cp, op, np) - sgns_loss(cm, om, nm)) / (2 * h);
      }
      return out;
    };
    worst = std::max(worst, relative_error(grad.d_center, numeric(-2)));
    worst = std::max(worst, relative_error(grad.d_context, numeric(-1)));
    for (int k = 0; k < negatives; ++k) {
      worst = std::max(worst, relative_error(grad.d_negatives[static_cast<std::size_t>(k)], numeric(k)));
    }
  }
  v.require(worst <= 1e-4, fmt("max relative error %.2e <= 1e-4 (h = 1e-5, dim 10, 100 trials)", worst));
  const double secs = clock.seconds();
  v.require(secs < 5.0, fmt("runtime %.2f s < 5 s", secs));
  return v.finish();
}

// ---------------------------------------------------------------------------
// Synthetic fixtures shared by the end-to-end checks.

// One corpus of ~4M tokens (content vocabulary 4500) split into two halves:
// every word should translate to itself.
std::vector<Corpus> identity_fixture(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.vocabulary_size = 4500;
  cfg.seed = seed;
  cfg.documents = documents_for_tokens(cfg, 4000000);
  auto halves = split_halves(generate(cfg).a, seed);
  return {std::move(halves.first), std::move(halves.second)};
}

PipelineConfig identity_config() {
  PipelineConfig c;
  c.source_vocab_size = 1000;
  return c;
}

int check_identity() {
  Verdict v("criterion 3: identity self-translation");
  Stopwatch clock;
  double sim_sum = 0, simn_sum = 0;
  int count = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto corpora = identity_fixture(seed);
    auto run = run_pipeline(corpora, identity_config(), seed);
    for (const auto& rep : run.result.reports) {
      std::printf("  seed %llu %s -> %s: sim %.2f simN %.2f\n", static_cast<unsigned long long>(seed),
                  rep.source_id.c_str(), rep.target_id.c_str(), rep.similarity, *rep.neighborhood_similarity);
      sim_sum += rep.similarity;
      simn_sum += *rep.neighborhood_similarity;
      ++count;
    }
  }
  const double sim = sim_sum / count, simn = simn_sum / count;
  v.require(sim >= 95.0, fmt("mean similarity %.2f >= 95", sim));
  v.require(simn >= 40.0, fmt("mean neighbourhood similarity %.2f >= 40", simn));
  const double secs = clock.seconds();
  v.require(secs < 900.0, fmt("runtime %.0f s < 15 min", secs));
  return v.finish();
}

int check_stability() {
  Verdict v("criterion 6: stability over 5 seeds");
  Stopwatch clock;
  auto corpora = identity_fixture(1);
  auto config = identity_config();
  config.runs = 5;
  auto m = multirun_stats(corpora, config);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& cell = m.cells[i][1 - i];
    std::string runs;
    for (double r : cell.runs) runs += fmt(" %.2f", r);
    std::printf("  %s -> %s: runs%s\n", m.languages[i].c_str(), m.languages[1 - i].c_str(), runs.c_str());
    v.require(cell.stddev <= 2.0, fmt("std %.3f <= 2 (mean %.2f)", cell.stddev, cell.mean));
  }
  const double secs = clock.seconds();
  v.require(secs < 2700.0, fmt("runtime %.0f s < 45 min", secs));
  return v.finish();
}

int check_sweep() {
  Verdict v("criterion 7: vocabulary-size sweep");
  auto corpora = identity_fixture(1);
  auto config = identity_config();
  config.runs = 3;
  auto points = vocab_sweep(corpora, config, {1000, 2000, 4000});
  double lo = 1e9, hi = -1e9;
  for (const auto& p : points) {
    std::printf("  V_s = %zu: mean similarity %.2f\n", p.source_size, p.mean_similarity);
    lo = std::min(lo, p.mean_similarity);
    hi = std::max(hi, p.mean_similarity);
  }
  v.require(points.size() == 3, "three sweep points");
  v.require(hi - lo <= 5.0, fmt("spread %.2f <= 5 points", hi - lo));
  return v.finish();
}

// ---------------------------------------------------------------------------

int check_planted() {
  Verdict v("criteria 4 and 5: planted swaps and symmetry");
  Stopwatch clock;
  int good_seeds = 0;
  bool symmetric = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig cfg;
    cfg.vocabulary_size = 2000;
    cfg.random_planted = 20;
    cfg.seed = seed;
    cfg.documents = documents_for_tokens(cfg, 2000000);
    auto out = generate(cfg);
    PipelineConfig pc;
    pc.source_vocab_size = 1000;
    pc.neighborhood = false;
    auto run = run_pipeline({out.a, out.b}, pc, seed);
    bool ok = true;
    for (const auto& rep : run.result.reports) {
      auto m = evaluate_recovery(rep, out.truth, 500);
      std::printf("  seed %llu %s -> %s: sim %.2f recall %.3f false rate %.4f (slice %zu)\n",
                  static_cast<unsigned long long>(seed), rep.source_id.c_str(), rep.target_id.c_str(),
                  rep.similarity, m.planted_recall, m.false_misalignment_rate, m.false_slice);
      ok = ok && m.planted_recall >= 0.90 && m.false_misalignment_rate <= 0.05;
    }
    good_seeds += ok;
    const double gap = std::fabs(run.result.matrix.at(0, 1) - run.result.matrix.at(1, 0));
    std::printf("  seed %llu |S(A->B) - S(B->A)| = %.3f\n", static_cast<unsigned long long>(seed), gap);
    symmetric = symmetric && gap <= 5.0;
  }
  v.require(good_seeds >= 4, fmt("recall >= 0.90 and false rate <= 0.05 on %.0f of 5 seeds (need 4)", good_seeds));
  v.require(symmetric, "criterion 5: |S(A->B) - S(B->A)| <= 5 on every seed");
  const double secs = clock.seconds();
  v.require(secs < 1200.0, fmt("runtime %.0f s < 20 min", secs));
  return v.finish();
}

int check_trigram() {
  Verdict v("criterion 11: trigram phrase swap");
  Stopwatch clock;
  int detected = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig cfg;
    cfg.vocabulary_size = 2000;
    cfg.seed = seed;
    cfg.planted_phrases = {{"black lives matter", "all lives matter"}};
    cfg.documents = documents_for_tokens(cfg, 2000000);
    auto out = generate(cfg);
    PipelineConfig pc;
    pc.source_vocab_size = 1000;
    pc.trigram = true;
    pc.neighborhood = false;
    auto run = run_pipeline({out.a, out.b}, pc, seed);
    bool ok = true;
    for (const auto& rep : run.result.reports) {
      std::string blm = "-", alm = "-";
      for (const auto& p : rep.pairs) {
        if (p.source == "black_lives_matter") blm = p.target;
        if (p.source == "all_lives_matter") alm = p.target;
      }
      std::printf("  seed %llu %s -> %s: sim %.2f, black_lives_matter -> %s, all_lives_matter -> %s\n",
                  static_cast<unsigned long long>(seed), rep.source_id.c_str(), rep.target_id.c_str(),
                  rep.similarity, blm.c_str(), alm.c_str());
      ok = ok && blm == "all_lives_matter" && alm == "black_lives_matter";
    }
    detected += ok;
  }
  v.require(detected >= 4, fmt("swap detected in both directions on %.0f of 5 seeds (need 4)", detected));
  const double secs = clock.seconds();
  v.require(secs < 900.0, fmt("runtime %.0f s < 15 min", secs));
  return v.finish();
}

// ---------------------------------------------------------------------------

constexpr std::int64_t kEpoch2015 = 1420070400;

// Straightforward restatement of the monthly disagreement definition.
std::map<std::string, double> oracle_series(const std::vector<VideoRecord>& videos, const std::string& channel,
                                            std::size_t min_videos) {
  std::map<std::string, std::vector<const VideoRecord*>> by_month;
  for (const auto& vid : videos) {
    if (vid.channel_id == channel) by_month[utc_month(vid.uploaded_at)].push_back(&vid);
  }
  std::map<std::string, double> out;
  for (const auto& [month, list] : by_month) {
    if (list.size() < min_videos) continue;
    double sum = 0;
    int n = 0;
    for (const auto* vid : list) {
      const auto total = vid->like_count + vid->dislike_count;
      if (total == 0) continue;
      sum += static_cast<double>(vid->dislike_count) / static_cast<double>(total);
      ++n;
    }
    if (n > 0) out[month] = sum / n;
  }
  return out;
}

std::vector<VideoRecord> random_videos(std::mt19937_64& rng, std::size_t count, int months) {
  std::vector<VideoRecord> videos;
  for (std::size_t i = 0; i < count; ++i) {
    VideoRecord vid;
    vid.video_id = "v" + std::to_string(i);
    vid.channel_id = rng() % 3 ? "a" : "b";
    vid.uploaded_at = kEpoch2015 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(months * 30)) * 86400 +
                      static_cast<std::int64_t>(rng() % 86400);
    const bool silent = rng() % 10 == 0;
    vid.like_count = silent ? 0 : static_cast<std::int64_t>(rng() % 1000);
    vid.dislike_count = silent ? 0 : static_cast<std::int64_t>(rng() % 300);
    videos.push_back(vid);
  }
  return videos;
}

int check_disagreement() {
  Verdict v("criterion 8: monthly disagreement");
  Stopwatch clock;
  std::mt19937_64 rng(8);
  bool match = true, bounded = true, thin_omitted = true;
  for (int fixture = 0; fixture < 1000; ++fixture) {
    auto videos = random_videos(rng, 20 + rng() % 200, 1 + static_cast<int>(rng() % 12));
    auto series = monthly_series(videos, "a", {});
    auto oracle = oracle_series(videos, "a", 10);
    match = match && series.points.size() == oracle.size();
    std::map<std::string, std::size_t> uploads;
    for (const auto& vid : videos)
      if (vid.channel_id == "a") ++uploads[utc_month(vid.uploaded_at)];
    for (const auto& p : series.points) {
      auto it = oracle.find(p.month);
      match = match && it != oracle.end() && std::fabs(it->second - p.value) <= 1e-12;
      bounded = bounded && p.value >= 0.0 && p.value <= 1.0;
      thin_omitted = thin_omitted && uploads[p.month] >= 10;
    }
    for (const auto& m : series.omitted_months) {
      thin_omitted = thin_omitted && (uploads[m] < 10 || !oracle.count(m));
    }
  }
  v.require(match, "1000 random fixtures agree with the brute-force oracle");
  v.require(bounded, "every monthly value lies in [0, 1]");
  v.require(thin_omitted, "months with fewer than 10 uploads are omitted");

  // Changing one video moves its month by at most 1/n (n = reacting videos).
  bool influence_ok = true;
  double worst_ratio = 0.0;
  for (int month = 0; month < 100; ++month) {
    std::vector<VideoRecord> videos;
    const std::size_t n = 10 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      VideoRecord vid;
      vid.video_id = "m" + std::to_string(i);
      vid.channel_id = "a";
      vid.uploaded_at = kEpoch2015 + static_cast<std::int64_t>(month) * 31 * 86400 + static_cast<std::int64_t>(i);
      vid.like_count = 1 + static_cast<std::int64_t>(rng() % 500);
      vid.dislike_count = static_cast<std::int64_t>(rng() % 500);
      videos.push_back(vid);
    }
    const double before = monthly_series(videos, "a", {}).points.at(0).value;
    auto& victim = videos[rng() % n];
    if (rng() % 2) {
      victim.like_count = 0;
      victim.dislike_count = 1000;
    } else {
      victim.like_count = 1000;
      victim.dislike_count = 0;
    }
    const double after = monthly_series(videos, "a", {}).points.at(0).value;
    const double ratio = std::fabs(after - before) * static_cast<double>(n);
    worst_ratio = std::max(worst_ratio, ratio);
    influence_ok = influence_ok && ratio <= 1.0 + 1e-12;
  }
  v.require(influence_ok, fmt("single-video influence <= 1/n on 100 months (worst n*delta = %.4f)", worst_ratio));
  const double secs = clock.seconds();
  v.require(secs < 1.0, fmt("runtime %.3f s < 1 s", secs));
  return v.finish();
}

int check_ttest() {
  Verdict v("criterion 9: paired t-test");
  const double p = student_t_two_sided_p(2.228, 10);
  v.require(std::fabs(p - 0.050) <= 1e-3, fmt("df = 10, t = 2.228 gives p = %.5f", p));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  bool anti = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(12), b(12);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng) + 0.3;
    auto ab = paired_t_test(a, b), ba = paired_t_test(b, a);
    anti = anti && std::fabs(ab.t + ba.t) <= 1e-12 && std::fabs(ab.p - ba.p) <= 1e-12 && ab.df == ba.df;
  }
  v.require(anti, "swapping the samples negates t and keeps p (100 trials)");
  auto r = paired_t_test({1, 1, 1, 2}, {0, 0, 0, 0});
  v.require(std::fabs(r.t - 5.0) <= 1e-12 && r.df == 3, fmt("d = [1,1,1,2] gives t = %.6f, df = %.0f", r.t, r.df));
  return v.finish();
}

int check_share() {
  Verdict v("criterion 10: comment-share partition");
  std::mt19937_64 rng(10);
  bool partition = true, oracle_ok = true, shares_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<CommentRecord> comments;
    const std::size_t n = rng() % 300;
    const std::size_t users = 1 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      CommentRecord c;
      c.comment_id = "c" + std::to_string(i);
      c.video_id = "v";
      const auto pick = rng() % 5;
      c.channel_id = pick < 2 ? "A" : pick < 4 ? "B" : "C";
      c.user_id = "u" + std::to_string(rng() % users);
      c.posted_at = kEpoch2015 + static_cast<std::int64_t>(rng() % (3 * 365)) * 86400;
      c.is_reply = rng() % 4 == 0;
      comments.push_back(c);
    }
    const int year = 2015 + static_cast<int>(rng() % 3);
    auto br = comment_share(comments, "A", "B", year);

    // Independent classification of every in-scope comment.
    std::map<std::string, std::pair<int, int>> per_user;
    std::vector<const CommentRecord*> scope;
    for (const auto& c : comments) {
      if ((c.channel_id == "A" || c.channel_id == "B") && utc_year(c.posted_at) == year) {
        (c.channel_id == "A" ? per_user[c.user_id].first : per_user[c.user_id].second)++;
        scope.push_back(&c);
      }
    }
    std::array<std::size_t, kShareCategories> expected{};
    for (const auto* c : scope) {
      const auto [ua, ub] = per_user[c->user_id];
      const bool on_a = c->channel_id == "A";
      std::vector<ShareCategory> hits;
      if (ub == 0 && on_a) hits.push_back(ShareCategory::kASoleOnA);
      if (ua == 0 && !on_a) hits.push_back(ShareCategory::kBSoleOnB);
      if (ua > ub && ub > 0) hits.push_back(on_a ? ShareCategory::kAMajOnA : ShareCategory::kAMajOnB);
      if (ub > ua && ua > 0) hits.push_back(on_a ? ShareCategory::kBMajOnA : ShareCategory::kBMajOnB);
      if (ua == ub && ua > 0) hits.push_back(ShareCategory::kEqual);
      partition = partition && hits.size() == 1;  // exactly one category per comment
      if (hits.size() == 1) ++expected[static_cast<std::size_t>(hits[0])];
    }
    std::size_t sum = 0;
    double share_sum = 0;
    for (std::size_t i = 0; i < kShareCategories; ++i) {
      sum += br.counts[i];
      share_sum += br.shares[i];
    }
    partition = partition && sum == scope.size() && br.total == scope.size();
    oracle_ok = oracle_ok && br.counts == expected;
    shares_ok = shares_ok && (scope.empty() ? share_sum == 0.0 : std::fabs(share_sum - 1.0) <= 1e-9);
  }
  v.require(partition, "every in-scope comment falls in exactly one category (1000 trials)");
  v.require(oracle_ok, "category counts match an independent classification");
  v.require(shares_ok, "shares sum to 1");
  return v.finish();
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

int run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  if (code != 0) std::printf("  command failed (%d): %s\n", code, err.str().c_str());
  return code;
}

int check_roundtrip() {
  Verdict v("criterion 12: round trips and CLI determinism");
  SynthConfig sc;
  sc.vocabulary_size = 400;
  sc.documents = 5000;
  sc.random_planted = 3;
  auto out = generate(sc);
  TrainConfig tc;
  tc.epochs = 2;
  auto space = train(out.a, tc);
  auto other = train(out.b, tc);

  testing::TempDir dir("langdiv-acceptance");
  save_embedding(dir.str("a.vec"), space);
  auto back = load_embedding(dir.str("a.vec"));
  double emb_err = (back.matrix() - space.matrix()).cwiseAbs().maxCoeff();
  for (const char* oov : {"zzzunseen", "qwertyuiop"}) {
    auto x = *space.vector(oov), y = *back.vector(oov);
    for (std::size_t i = 0; i < x.size(); ++i) emb_err = std::max(emb_err, static_cast<double>(std::fabs(x[i] - y[i])));
  }
  v.require(back.tokens() == space.tokens(), "embedding file keeps the token order");
  v.require(emb_err <= 1e-6, fmt("embedding and subword vectors round trip (max error %.2e)", emb_err));

  auto map = fit(space, other, build_seed_lexicon(space, other, stopwords()));
  save_alignment(dir.str("a.map"), map);
  const double map_err = (load_alignment(dir.str("a.map")).matrix - map.matrix).cwiseAbs().maxCoeff();
  v.require(map_err <= 1e-6, fmt("map file round trips (max error %.2e)", map_err));

  // Two independent output directories and a cached re-run must agree byte for byte.
  bool cli_ok = true;
  const fs::path first = dir.path() / "first", second = dir.path() / "second";
  for (const auto& d : {first, second}) {
    cli_ok = cli_ok && run_cli({"synth", "--vocab-size", "300", "--tokens", "100000", "--pairs", "3", "--seed",
                                "11", "-o", d.string()}) == 0;
    const std::string cfg = (d / "config.json").string();
    for (const char* cmd : {"matrix", "misaligned", "align", "report"}) cli_ok = cli_ok && run_cli({cmd, "-c", cfg}) == 0;
  }
  v.require(cli_ok, "synth, matrix, misaligned, align and report succeed");
  auto a = tree_contents(first), b = tree_contents(second);
  std::size_t differing = 0;
  for (const auto& [name, text] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != text) {
      std::printf("  differs: %s\n", name.c_str());
      ++differing;
    }
  }
  v.require(a.size() == b.size() && differing == 0,
            fmt("%.0f files byte-identical across two runs (%.0f differ)", static_cast<double>(a.size()),
                static_cast<double>(differing)));
  cli_ok = run_cli({"matrix", "-c", (first / "config.json").string()}) == 0;
  v.require(cli_ok && tree_contents(first) == a, "re-running over cached stages leaves every file unchanged");
  return v.finish();
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<int()>> checks = {
      {"procrustes", check_procrustes}, {"gradient", check_gradient},   {"identity", check_identity},
      {"planted", check_planted},       {"stability", check_stability}, {"sweep", check_sweep},
      {"disagreement", check_disagreement}, {"ttest", check_ttest},     {"share", check_share},
      {"trigram", check_trigram},       {"roundtrip", check_roundtrip}};
  if (argc != 2 || !checks.count(argv[1])) {
    std::fprintf(stderr, "usage: langdiv_acceptance <check>\nchecks:");
    for (const auto& [name, f] : checks) std::fprintf(stderr, " %s", name.c_str());
    std::fprintf(stderr, "\n");
    return 2;
  }
  try {
    return checks.at(argv[1])();
  } catch (const std::exception& e) {
    std::printf("FAIL %s: %s\n", argv[1], e.what());
    return 1;
  }
}
