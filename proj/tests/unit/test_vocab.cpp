#include <set>
#include <sstream>

#include "doctest.h"
#include "langdiv/error.hpp"
#include "langdiv/vocab.hpp"
#include "support.hpp"

using namespace langdiv;
using langdiv::testing::error_code_of;

namespace {

Corpus corpus_of(const std::string& id, const std::vector<std::string>& lines) {
  Corpus c(id);
  for (const auto& l : lines) {
    std::istringstream ss(l);
    Document d;
    std::string t;
    while (ss >> t) d.push_back(t);
    c.add(d);
  }
  return c;
}

}  // namespace

TEST_SUITE("vocab") {
  TEST_CASE("the pinned stopword asset has 179 unique entries and a version") {
    const auto& sw = stopwords();
    CHECK(sw.size() == 179);
    CHECK(std::set<std::string>(sw.tokens().begin(), sw.tokens().end()).size() == 179);
    CHECK(sw.version() == "en-179-v1");
    CHECK(sw.tokens().front() == "i");
    CHECK(sw.contains("the"));
    CHECK(sw.contains("don't"));
    CHECK_FALSE(sw.contains("democrats"));
  }

  TEST_CASE("vocabularies rank non-stopwords by pooled frequency with lexicographic ties") {
    auto a = corpus_of("a", {"the cat sat on the mat", "cat dog"});
    auto b = corpus_of("b", {"dog dog bird", "the bird"});
    auto vp = build_vocab({a, b}, 2, 4);
    CHECK(vp.source.tokens() == std::vector<std::string>{"dog", "bird"});
    // bird 2, cat 2 -> bird first; mat and sat 1 -> mat first
    CHECK(vp.target.tokens() == std::vector<std::string>{"dog", "bird", "cat", "mat"});
    CHECK(vp.target.entries()[0].second == 3);
    CHECK(vp.warnings.empty());
    CHECK(vp.source.role() == VocabRole::kSource);
    CHECK(vp.target.role() == VocabRole::kTarget);
    CHECK(vp.target.index_of("cat") == 2);
    CHECK(vp.target.index_of("the") == -1);
  }

  TEST_CASE("the target list is a frequency-ordered superset of the source list") {
    auto a = corpus_of("a", {"x1 x2 x3 x4 x5 x1 x2 x1", "x6 x7"});
    auto vp = build_vocab({a}, 3, 6);
    for (std::size_t i = 0; i < vp.source.size(); ++i) CHECK(vp.source.token(i) == vp.target.token(i));
    for (std::size_t i = 1; i < vp.target.size(); ++i) {
      CHECK(vp.target.entries()[i - 1].second >= vp.target.entries()[i].second);
    }
  }

  TEST_CASE("too few eligible tokens: underflow for the source list, truncation warning for the target") {
    auto a = corpus_of("a", {"one two three"});
    CHECK(error_code_of([&] { build_vocab({a}, 4, 10); }) == ErrorCode::kVocabularyUnderflow);
    auto vp = build_vocab({a}, 2, 10);
    CHECK(vp.target.size() == 3);
    REQUIRE(vp.warnings.size() == 1);
    CHECK(vp.warnings[0].find("truncated") != std::string::npos);
    CHECK(error_code_of([&] { build_vocab({a}, 3, 2); }) == ErrorCode::kConfiguration);
  }

  TEST_CASE("trigram vocabularies skip all-stopword windows and merge greedily from the left") {
    auto a = corpus_of("a", {"black lives matter now", "black lives matter", "of the and", "all lives matter"});
    auto vp = build_trigram_vocab({a}, 1, 10);
    CHECK(vp.source.token(0) == "black_lives_matter");
    CHECK_FALSE(vp.target.contains("of_the_and"));
    CHECK(join_trigram("a", "b", "c") == "a_b_c");
    auto merged = merge_trigrams(corpus_of("a", {"x black lives matter y", "a b c d e"}),
                                 std::unordered_set<std::string>{"black_lives_matter", "b_c_d", "c_d_e"});
    CHECK(merged.documents()[0] == Document{"x", "black_lives_matter", "y"});
    CHECK(merged.documents()[1] == Document{"a", "b_c_d", "e"});
  }

  TEST_CASE("vocabulary files round trip and reject malformed lines") {
    auto a = corpus_of("a", {"alpha beta beta gamma gamma gamma"});
    auto vp = build_vocab({a}, 2, 3);
    std::stringstream ss;
    write_vocabulary(ss, vp.target);
    CHECK(ss.str() == "gamma\t3\nbeta\t2\nalpha\t1\n");
    auto back = read_vocabulary(ss, VocabRole::kTarget);
    CHECK(back.entries() == vp.target.entries());
    std::istringstream bad("gamma 3\n");
    CHECK(error_code_of([&] { read_vocabulary(bad, VocabRole::kTarget); }) == ErrorCode::kFormat);
    std::istringstream dup("a\t2\na\t1\n");
    CHECK(error_code_of([&] { read_vocabulary(dup, VocabRole::kTarget); }) == ErrorCode::kFormat);
    CHECK(vp.target.prefix(2).tokens() == std::vector<std::string>{"gamma", "beta"});
  }
}
