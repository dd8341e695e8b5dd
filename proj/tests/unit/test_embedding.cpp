#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "langdiv/embedding.hpp"
#include "langdiv/error.hpp"
#include "langdiv/synthgen.hpp"
#include "support.hpp"

using namespace langdiv;
using langdiv::testing::error_code_of;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Independent evaluation of the SGNS objective for finite differences.
double loss(const std::vector<double>& c, const std::vector<double>& o, const std::vector<std::vector<double>>& negs) {
  double l = -std::log(sigmoid(dot(o, c)));
  for (const auto& n : negs) l -= std::log(sigmoid(-dot(n, c)));
  return l;
}

const Corpus& small_corpus() {
  static const Corpus c = [] {
    SynthConfig cfg;
    cfg.vocabulary_size = 200;
    cfg.documents = 3000;
    cfg.seed = 3;
    return generate(cfg).a;
  }();
  return c;
}

TrainConfig quick_config() {
  TrainConfig tc;
  tc.dimension = 16;
  tc.epochs = 1;
  tc.subword.bucket_count = 5000;
  return tc;
}

}  // namespace

TEST_SUITE("embedding") {
  TEST_CASE("analytic SGNS gradients agree with central differences") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 0.5);
    auto draw = [&](int d) {
      std::vector<double> v(d);
      for (auto& x : v) x = g(rng);
      return v;
    };
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
      auto c = draw(8), o = draw(8);
      std::vector<std::vector<double>> negs = {draw(8), draw(8), draw(8)};
      auto grad = sgns_gradient(c, o, negs);
      CHECK(grad.loss == doctest::Approx(loss(c, o, negs)).epsilon(1e-12));
      for (int i = 0; i < 8; ++i) {
        auto cp = c, cm = c;
        cp[i] += h;
        cm[i] -= h;
        CHECK(grad.d_center[i] == doctest::Approx((loss(cp, o, negs) - loss(cm, o, negs)) / (2 * h)).epsilon(1e-6));
        auto op = o, om = o;
        op[i] += h;
        om[i] -= h;
        CHECK(grad.d_context[i] == doctest::Approx((loss(c, op, negs) - loss(c, om, negs)) / (2 * h)).epsilon(1e-6));
        auto np = negs, nm = negs;
        np[1][i] += h;
        nm[1][i] -= h;
        CHECK(grad.d_negatives[1][i] ==
              doctest::Approx((loss(c, o, np) - loss(c, o, nm)) / (2 * h)).epsilon(1e-6));
      }
    }
    std::vector<double> a(3), b(4);
    CHECK(error_code_of([&] { sgns_gradient(a, b, {}); }) == ErrorCode::kConfiguration);
  }

  TEST_CASE("subword hashing is 32-bit FNV-1a over the bracketed token") {
    CHECK(fnv1a_hash("") == 2166136261u);
    CHECK(fnv1a_hash("a") == 0xe40c292cu);
    CHECK(fnv1a_hash("foobar") == 0xbf9cf968u);
    SubwordConfig sw;
    // "<ab>": <ab, <ab>, ab>
    CHECK(ngram_buckets("ab", sw).size() == 3);
    // "<where>" has 7 characters: n = 3..6 gives 5 + 4 + 3 + 2 windows
    CHECK(ngram_buckets("where", sw).size() == 14);
    auto ids = ngram_buckets("where", sw);
    CHECK(ids[0] == fnv1a_hash("<wh") % sw.bucket_count);
    for (auto id : ids) CHECK(id < sw.bucket_count);
  }

  TEST_CASE("training configuration is validated") {
    TrainConfig tc;
    tc.dimension = 0;
    CHECK(error_code_of([&] { tc.validate(); }) == ErrorCode::kConfiguration);
    tc = TrainConfig{};
    tc.negatives = 65;
    CHECK(error_code_of([&] { tc.validate(); }) == ErrorCode::kConfiguration);
    tc = TrainConfig{};
    tc.subword.min_n = 7;
    CHECK(error_code_of([&] { tc.validate(); }) == ErrorCode::kConfiguration);
    CHECK(error_code_of([&] { train(Corpus("e"), TrainConfig{}); }) == ErrorCode::kEmptyCorpus);
    Corpus rare("r");
    rare.add({"a", "b", "c"});
    CHECK(error_code_of([&] { train(rare, TrainConfig{}); }) == ErrorCode::kEmptyVocabulary);
  }

  TEST_CASE("deterministic training is bit-reproducible and seed-dependent") {
    auto tc = quick_config();
    auto a = train(small_corpus(), tc);
    auto b = train(small_corpus(), tc);
    REQUIRE(a.size() == b.size());
    CHECK(a.tokens() == b.tokens());
    CHECK(a.matrix() == b.matrix());
    CHECK(a.buckets().size() == b.buckets().size());
    tc.seed = 2;
    auto c = train(small_corpus(), tc);
    CHECK(a.matrix() != c.matrix());
    CHECK(a.dimension() == 16);
    REQUIRE(a.provenance());
    CHECK(a.provenance()->epoch_loss.size() == 1);
    // tokens are listed by descending count
    for (std::size_t i = 1; i < a.counts().size(); ++i) CHECK(a.counts()[i - 1] >= a.counts()[i]);
  }

  TEST_CASE("out-of-vocabulary tokens are composed from their n-grams") {
    auto s = train(small_corpus(), quick_config());
    CHECK(s.subword_enabled());
    auto v = s.vector("zzqqxxunseen");
    REQUIRE(v);
    CHECK(v->size() == 16u);
    TrainConfig plain = quick_config();
    plain.subword.enabled = false;
    auto p = train(small_corpus(), plain);
    CHECK_FALSE(p.vector("zzqqxxunseen"));
    CHECK(error_code_of([&] { p.neighbors("zzqqxxunseen", 3); }) == ErrorCode::kUnknownToken);
  }

  TEST_CASE("neighbour queries exclude the query token and sort by similarity") {
    auto s = train(small_corpus(), quick_config());
    const std::string& w = s.tokens()[5];
    auto nn = s.neighbors(w, 10);
    REQUIRE(nn.size() == 10);
    for (const auto& n : nn) CHECK(n.token != w);
    for (std::size_t i = 1; i < nn.size(); ++i) CHECK(nn[i - 1].similarity >= nn[i].similarity);
    auto v = *s.vector(nn[0].token);
    CHECK(cosine(s.row(5), v) == doctest::Approx(nn[0].similarity).epsilon(1e-5));
  }

  TEST_CASE("text plus sidecar files round trip within 1e-6") {
    auto s = train(small_corpus(), quick_config());
    std::stringstream text;
    std::stringstream bin(std::ios::in | std::ios::out | std::ios::binary);
    write_embedding(text, s);
    write_subword_sidecar(bin, s);
    auto back = read_embedding(text, &bin, "x");
    REQUIRE(back.size() == s.size());
    CHECK(back.tokens() == s.tokens());
    CHECK((back.matrix() - s.matrix()).cwiseAbs().maxCoeff() <= 1e-6f);
    auto v1 = *s.vector("zzqqxxunseen");
    auto v2 = *back.vector("zzqqxxunseen");
    for (std::size_t d = 0; d < v1.size(); ++d) CHECK(std::abs(v1[d] - v2[d]) <= 1e-6f);
    CHECK(back.language_id() == "x");
  }

  TEST_CASE("malformed embedding files are rejected with a line number") {
    std::istringstream short_rows("2 3\na 1 2 3\n");
    CHECK(error_code_of([&] { read_embedding(short_rows, nullptr); }) == ErrorCode::kFormat);
    std::istringstream bad_width("1 3\na 1 2\n");
    try {
      read_embedding(bad_width, nullptr);
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kFormat);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::istringstream text("1 2\na 1 2\n");
    std::istringstream bin("NOTMAGIC");
    CHECK(error_code_of([&] { read_embedding(text, &bin); }) == ErrorCode::kFormat);
  }
}
