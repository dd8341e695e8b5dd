#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "langdiv/cli.hpp"
#include "langdiv/pipeline.hpp"
#include "support.hpp"

using namespace langdiv;
using langdiv::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = run_command(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Synthesizes a small corpus pair in `dir` and shrinks the generated config so
// the analysis commands finish quickly.
void prepare_synthetic(const fs::path& dir) {
  auto o = run({"synth", "--vocab-size", "200", "--tokens", "30000", "--pairs", "2", "--seed", "3", "-o",
                dir.string()});
  REQUIRE_MESSAGE(o.code == 0, o.err);
  auto cfg = config_from_json(slurp(dir / "config.json"));
  cfg.train.dimension = 16;
  cfg.train.epochs = 2;
  cfg.train.subword.bucket_count = 5000;
  cfg.source_vocab_size = 50;
  cfg.target_vocab_size = 100;
  cfg.runs = 2;
  cfg.sweep_sizes = {25, 50};
  spit(dir / "config.json", config_to_json(cfg));
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with status 2, help and version with 0") {
    CHECK(run({}).code == kExitUsage);
    auto bogus = run({"frobnicate"});
    CHECK(bogus.code == kExitUsage);
    CHECK(bogus.err.find("unknown command 'frobnicate'") != std::string::npos);
    CHECK(run({"matrix", "--no-such-flag"}).code == kExitUsage);
    CHECK(run({"translate", "--word", "x"}).code == kExitUsage);
    CHECK(run({"matrix", "-c", "/nonexistent/config.json"}).code == kExitUsage);
    auto help = run({"--help"});
    CHECK(help.code == kExitOk);
    for (const char* cmd : {"ingest", "fetch", "balance", "train", "align", "translate", "similarity", "misaligned",
                            "matrix", "sweep", "multirun", "engagement", "synth", "report"}) {
      CHECK_MESSAGE(help.out.find(cmd) != std::string::npos, cmd);
      CHECK(run({cmd, "--help"}).code == kExitOk);
    }
    auto version = run({"--version"});
    CHECK(version.code == kExitOk);
    CHECK(version.out.find(std::string(tool_version())) != std::string::npos);
  }

  TEST_CASE("operation errors exit with status 1 and name the error") {
    TempDir dir("langdiv-cli");
    spit(dir.path() / "bad.json", "{ not json");
    auto o = run({"matrix", "-c", dir.str("bad.json")});
    CHECK(o.code == kExitFailure);
    CHECK(o.err.find("[configuration]") != std::string::npos);

    spit(dir.path() / "empty.txt", "");
    spit(dir.path() / "one.txt", "hello world\n");
    PipelineConfig cfg;
    cfg.channels = {"a", "b"};
    cfg.corpus_files = {"one.txt", "empty.txt"};
    cfg.output_dir = "out";
    spit(dir.path() / "cfg.json", config_to_json(cfg));
    o = run({"balance", "-c", dir.str("cfg.json")});
    CHECK(o.code == kExitFailure);
    CHECK(o.err.find("[empty-corpus]") != std::string::npos);
    CHECK(o.err.find("'b'") != std::string::npos);

    o = run({"synth", "--plant", "no-bar", "-o", dir.str("s")});
    CHECK(o.code == kExitFailure);
    CHECK(o.err.find("[configuration]") != std::string::npos);
  }

  TEST_CASE("a held lock refuses the run and a finished run releases it") {
    TempDir dir("langdiv-cli");
    spit(dir.path() / kLockFileName, "12345\n");
    auto o = run({"synth", "--vocab-size", "100", "--tokens", "2000", "-o", dir.str()});
    CHECK(o.code == kExitFailure);
    CHECK(o.err.find("locked") != std::string::npos);
    fs::remove(dir.path() / kLockFileName);
    o = run({"synth", "--vocab-size", "100", "--tokens", "2000", "-o", dir.str()});
    CHECK(o.code == kExitOk);
    CHECK_FALSE(fs::exists(dir.path() / kLockFileName));
    CHECK(fs::exists(dir.path() / "truth.json"));
    CHECK(fs::exists(dir.path() / "corpus" / "synth_a.txt"));
    // The generated config sweeps within its own source vocabulary.
    auto cfg = config_from_json(slurp(dir.path() / "config.json"));
    CHECK(cfg.source_vocab_size == 50);
    CHECK(cfg.sweep_sizes == std::vector<std::size_t>{12, 25, 50});
  }

  TEST_CASE("the analysis commands write stamped, reproducible artifacts") {
    TempDir a("langdiv-cli"), b("langdiv-cli");
    prepare_synthetic(a.path());
    prepare_synthetic(b.path());
    const std::string cfg_a = a.str("config.json"), cfg_b = b.str("config.json");
    auto o = run({"matrix", "-c", cfg_a});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    REQUIRE(run({"matrix", "-c", cfg_b}).code == 0);

    const std::string csv = slurp(a.path() / "matrix.csv");
    CHECK(csv.rfind("# langdiv " + std::string(tool_version()) + " artifact=", 0) == 0);
    CHECK(csv.find("seed=3") != std::string::npos);
    CHECK(slurp(a.path() / "matrix.json").find("\"provenance\"") != std::string::npos);
    CHECK(slurp(a.path() / "emb" / "synth_a.vec").rfind("# langdiv", 0) == 0);
    CHECK(fs::exists(a.path() / "emb" / "synth_a.vec.subword"));
    for (const char* f : {"matrix.csv", "matrix.json", "emb/synth_b.vec", "vocab/source.txt",
                          "reports/synth_a__synth_b.json", "truth.json"}) {
      CHECK_MESSAGE(slurp(a.path() / f) == slurp(b.path() / f), f);
    }
    // A different seed changes the stamp.
    o = run({"synth", "--vocab-size", "200", "--tokens", "30000", "--pairs", "2", "--seed", "4", "-o", b.str()});
    REQUIRE(o.code == 0);
    CHECK(slurp(a.path() / "truth.json") != slurp(b.path() / "truth.json"));

    o = run({"align", "-c", cfg_a});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    const fs::path map = a.path() / "maps" / "synth_a__synth_b.map";
    REQUIRE(fs::exists(map));
    o = run({"translate", "--map", map.string(), "--src", a.str("emb/synth_a.vec"), "--tgt",
             a.str("emb/synth_b.vec"), "--word", "the", "--k", "3"});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    CHECK(o.out.rfind("the -> ", 0) == 0);
    CHECK(std::count(o.out.begin(), o.out.end(), '\n') == 4);
    o = run({"translate", "--map", map.string(), "--src", a.str("emb/synth_a.vec"), "--tgt",
             a.str("emb/synth_b.vec"), "--word", "the", "--mode", "csls"});
    CHECK(o.code == 0);

    o = run({"similarity", "-c", cfg_a, "--source", "synth_a"});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    CHECK(fs::exists(a.path() / "similarity.csv"));
    o = run({"misaligned", "-c", cfg_a, "--show", "2"});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    o = run({"sweep", "-c", cfg_a});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    CHECK(fs::exists(a.path() / "sweep.json"));
    o = run({"report", "-c", cfg_a});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    const std::string md = slurp(a.path() / "report.md");
    CHECK(md.rfind("<!-- langdiv", 0) == 0);
    CHECK(fs::exists(a.path() / "charts" / "sweep.svg"));
    CHECK(fs::exists(a.path() / "recovery.json"));
    CHECK_FALSE(fs::exists(a.path() / kLockFileName));
  }

  TEST_CASE("ingest and engagement over JSONL inputs") {
    TempDir dir("langdiv-cli");
    std::ostringstream comments, videos;
    const std::int64_t t0 = 1577836800;  // 2020-01-01
    int id = 0;
    for (int m = 0; m < 3; ++m) {
      for (int i = 0; i < 4; ++i) {
        for (const char* ch : {"left", "right"}) {
          const std::int64_t t = t0 + (m * 31 + i) * 86400;
          comments << R"({"comment_id":"c)" << ++id << R"(","video_id":"v","channel_id":")" << ch
                   << R"(","user_id":"u)" << i << R"(","posted_at":)" << t << R"(,"text":"Words about the news","is_reply":false})"
                   << "\n";
          videos << R"({"video_id":"v)" << ++id << R"(","channel_id":")" << ch << R"(","uploaded_at":)" << t
                 << R"(,"like_count":)" << (10 + i + m) << R"(,"dislike_count":)" << (ch[0] == 'l' ? 1 : 3 + i)
                 << "}\n";
        }
      }
    }
    spit(dir.path() / "comments.jsonl", comments.str());
    spit(dir.path() / "videos.jsonl", videos.str());
    PipelineConfig cfg;
    cfg.channels = {"left", "right"};
    cfg.comment_files = {"comments.jsonl"};
    cfg.video_files = {"videos.jsonl"};
    cfg.user_filter = false;
    cfg.min_videos = 2;
    cfg.output_dir = "out";
    spit(dir.path() / "cfg.json", config_to_json(cfg));

    auto o = run({"ingest", "-c", dir.str("cfg.json")});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    const std::string corpus = slurp(dir.path() / "out" / "corpus" / "left.txt");
    CHECK(corpus.find("words about the news") != std::string::npos);

    o = run({"engagement", "-c", dir.str("cfg.json")});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    const fs::path e = dir.path() / "out" / "engagement";
    const std::string series = slurp(e / "series_left.csv");
    CHECK(series.find("month,value,count\n2020-01,") != std::string::npos);
    const std::string ttest = slurp(e / "ttest_left__right.json");
    CHECK(ttest.find("\"df\": 2") != std::string::npos);
    CHECK(fs::exists(e / "comments_left.csv"));
    CHECK(slurp(e / "share_left__right_2020.csv").find("equal,24,1.000000") != std::string::npos);
  }
}
