#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "langdiv/alignment.hpp"
#include "langdiv/divergence.hpp"
#include "langdiv/error.hpp"
#include "langdiv/vocab.hpp"
#include "support.hpp"

using namespace langdiv;
using langdiv::testing::error_code_of;

namespace {

TranslationResult result(std::string s, std::string t, double score, std::optional<double> self = std::nullopt) {
  TranslationResult r;
  r.source = std::move(s);
  r.target = std::move(t);
  r.score = score;
  r.cosine = score;
  r.self_score = self;
  return r;
}

Vocabulary vocab(const std::vector<std::string>& tokens) {
  std::vector<Vocabulary::Entry> e;
  std::uint64_t f = 1000;
  for (const auto& t : tokens) e.emplace_back(t, f--);
  return Vocabulary(e, VocabRole::kSource);
}

// Three languages over the same anchors; language 2 swaps "alpha" and "beta".
struct World {
  std::vector<Corpus> corpora;
  std::vector<EmbeddingSpace> spaces;
  Vocabulary source, target;

  World() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    const int d = 10;
    std::vector<std::string> tokens(stopwords().tokens().begin(), stopwords().tokens().begin() + 40);
    const std::vector<std::string> content = {"alpha", "beta", "gamma", "delta", "omega"};
    tokens.insert(tokens.end(), content.begin(), content.end());
    RowMatrix x(static_cast<Eigen::Index>(tokens.size()), d);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (int j = 0; j < d; ++j) x(i, j) = static_cast<float>(g(rng));
    for (int l = 0; l < 3; ++l) {
      RowMatrix y = x;
      if (l == 2) {
        Eigen::RowVectorXf tmp = y.row(40);
        y.row(40) = y.row(41);
        y.row(41) = tmp;
      }
      const std::string id = "l" + std::to_string(l);
      spaces.emplace_back(id, tokens, y);
      Corpus c(id);
      c.add({"the", "alpha", "rises"});
      c.add({"beta", "and", "alpha"});
      c.add({"gamma", "only"});
      c.add({"alpha", "again"});
      corpora.push_back(c);
    }
    source = vocab(content);
    std::vector<Vocabulary::Entry> e(source.entries());
    target = Vocabulary(e, VocabRole::kTarget);
  }

  std::vector<Language> languages() const {
    std::vector<Language> out;
    for (std::size_t i = 0; i < 3; ++i) out.push_back({&corpora[i], &spaces[i]});
    return out;
  }
};

}  // namespace

TEST_SUITE("divergence") {
  TEST_CASE("similarity is the self-translation percentage over evaluated tokens") {
    TranslationBatch b;
    b.results = {result("a", "a", 0.9, 0.9), result("b", "x", 0.8, 0.5), result("c", "c", 0.7, 0.7),
                 result("d", "y", 0.8, 0.6)};
    b.skipped = {{"e", "zero vector in source space"}};
    auto rep = similarity(b, vocab({"d", "c", "b", "a", "e"}));
    CHECK(rep.evaluated == 4);
    CHECK(rep.self_translated == 2);
    CHECK(rep.misaligned == 2);
    CHECK(rep.skipped == 1);
    CHECK(rep.similarity == doctest::Approx(50.0));
    CHECK(rep.evaluated_tokens == std::vector<std::string>{"d", "c", "b", "a"});
    REQUIRE(rep.pairs.size() == 2);
    // equal scores break ties by source token
    CHECK(rep.pairs[0].source == "b");
    CHECK(rep.pairs[1].source == "d");
    CHECK(*rep.pairs[0].margin == doctest::Approx(0.3));
    CHECK(rep.skip_records.size() == 1);
    CHECK(similarity_over_prefix(b, vocab({"d", "c", "b", "a"}), 2) == doctest::Approx(50.0));
    CHECK(similarity_over_prefix(b, vocab({"a", "c", "b", "d"}), 2) == doctest::Approx(100.0));
    TranslationBatch empty;
    CHECK(error_code_of([&] { similarity(empty, vocab({"a"})); }) == ErrorCode::kEmptyEvaluation);
  }

  TEST_CASE("Jaccard overlap") {
    CHECK(jaccard({"a", "b"}, {"b", "c"}) == doctest::Approx(1.0 / 3.0));
    CHECK(jaccard({}, {}) == 1.0);
    CHECK(jaccard({"a"}, {}) == 0.0);
    CHECK(jaccard({"a", "a", "b"}, {"b", "a"}) == 1.0);
  }

  TEST_CASE("misaligned pairs carry the first documents containing each side") {
    World w;
    TranslationBatch b;
    b.results = {result("alpha", "beta", 0.9), result("gamma", "gamma", 1.0)};
    auto pairs = misaligned_pairs(b, w.corpora[0], w.corpora[1], 2);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].source_snippets == std::vector<std::string>{"the alpha rises", "beta and alpha"});
    CHECK(pairs[0].target_snippets == std::vector<std::string>{"beta and alpha"});
    CHECK(misaligned_pairs(b, w.corpora[0], w.corpora[1], 0)[0].source_snippets.empty());
  }

  TEST_CASE("the pairwise matrix finds the swap only where it exists") {
    World w;
    auto res = pairwise_matrix(w.languages(), w.source, w.target, {}, true, 3, 4);
    REQUIRE(res.reports.size() == 6);
    REQUIRE(res.maps.size() == 6);
    CHECK(std::isnan(res.matrix.at(0, 0)));
    CHECK(res.matrix.at(0, 1) == doctest::Approx(100.0));
    CHECK(res.matrix.at(0, 2) == doctest::Approx(60.0));
    CHECK(res.matrix.at(2, 1) == doctest::Approx(60.0));
    CHECK(res.matrix.languages == std::vector<std::string>{"l0", "l1", "l2"});
    const auto& r02 = res.reports[1];
    CHECK(r02.source_id == "l0");
    CHECK(r02.target_id == "l2");
    REQUIRE(r02.pairs.size() == 2);
    CHECK(r02.pairs[0].target != r02.pairs[0].source);
    REQUIRE(r02.neighborhood_similarity);
    CHECK(*res.reports[0].neighborhood_similarity == doctest::Approx(100.0));
    CHECK(*r02.neighborhood_similarity < 100.0);
    CHECK(error_code_of([&] { pairwise_matrix({w.languages()[0]}, w.source, w.target); }) ==
          ErrorCode::kConfiguration);
  }

  TEST_CASE("summaries use the sample standard deviation") {
    auto s = summarize({1, 2, 3, 4});
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.min == 1);
    CHECK(s.max == 4);
    CHECK(summarize({7}).stddev == 0.0);
  }

  TEST_CASE("reports survive JSON and emit stable CSV") {
    World w;
    auto res = pairwise_matrix(w.languages(), w.source, w.target, {}, true, 2);
    auto rep = res.reports[1];
    rep.seed = 17;
    auto back = report_from_json(report_to_json(rep));
    CHECK(back.source_id == rep.source_id);
    CHECK(back.similarity == rep.similarity);
    CHECK(back.seed == 17);
    CHECK(back.pairs.size() == rep.pairs.size());
    CHECK(back.pairs[0].source_snippets == rep.pairs[0].source_snippets);
    CHECK(back.evaluated_tokens == rep.evaluated_tokens);
    CHECK(report_to_json(back) == report_to_json(rep));

    auto j = report_to_json(rep);
    auto pos = j.find("\"self_translated\": 3");
    REQUIRE(pos != std::string::npos);
    j.replace(pos, 20, "\"self_translated\": 4");
    CHECK(error_code_of([&] { report_from_json(j); }) == ErrorCode::kConsistency);
    CHECK(error_code_of([&] { report_from_json("{}"); }) == ErrorCode::kFormat);

    std::ostringstream csv;
    MisalignedPair p;
    p.source = "a,b";
    p.target = "c";
    p.score = 0.5;
    write_pairs_csv(csv, {p});
    CHECK(csv.str() == "source,target,score,margin\n\"a,b\",c,0.500000,\n");
    std::ostringstream m;
    write_matrix_csv(m, res.matrix);
    CHECK(m.str().rfind("source\\target,l0,l1,l2\nl0,,100.0000,60.0000\n", 0) == 0);
  }
}
