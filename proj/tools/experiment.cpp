// Scratch driver for tuning the synthetic fixtures (not installed).
#include <chrono>
#include <xmmintrin.h>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <unordered_map>

#include "langdiv/alignment.hpp"
#include "langdiv/divergence.hpp"
#include "langdiv/embedding.hpp"
#include "langdiv/pipeline.hpp"
#include "langdiv/synthgen.hpp"
#include "langdiv/vocab.hpp"

using namespace langdiv;

static double now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

int main(int argc, char** argv) {
  std::string mode = argc > 1 ? argv[1] : "identity";
  std::size_t vocab = argc > 2 ? std::stoul(argv[2]) : 6000;
  std::size_t tokens = argc > 3 ? std::stoul(argv[3]) : 4000000;
  std::uint64_t seed = argc > 4 ? std::stoull(argv[4]) : 1;
  std::size_t vs = argc > 5 ? std::stoul(argv[5]) : 1000;
  int epochs = argc > 6 ? std::stoi(argv[6]) : 5;
  double t0 = now();
  if (mode == "bench") {
    auto c = load_corpus(std::getenv("BENCH") ? std::getenv("BENCH") : "/tmp/exp_a.txt", "a");
    TrainConfig tc;
    tc.epochs = epochs;
    if (std::getenv("NOSUB")) tc.subword.enabled = false;
    t0 = now();
    if (std::getenv("FTZ")) _mm_setcsr(_mm_getcsr() | 0x8040);
    auto s = train(c, tc);
    std::printf("bench %.2fs tokens %zu\n", now() - t0, c.token_count());
    return 0;
  }
  SynthConfig cfg;
  cfg.vocabulary_size = vocab;
  cfg.seed = seed;
  if (mode == "trigram") {
    cfg.planted_phrases = {{"black lives matter", "all lives matter"}};
    cfg.documents = documents_for_tokens(cfg, tokens);
    auto o = generate(cfg);
    std::printf("gen %.1fs\n", now() - t0);
    PipelineConfig pc;
    pc.trigram = true;
    pc.source_vocab_size = vs;
    pc.target_vocab_size = std::getenv("TV") ? std::stoul(std::getenv("TV")) : 10000;
    pc.neighborhood = false;
    pc.train.epochs = epochs;
    t0 = now();
    auto run = run_pipeline({o.a, o.b}, pc, seed);
    std::printf("pipeline %.1fs vs=%zu vt=%zu\n", now() - t0, run.vocab.source.size(), run.vocab.target.size());
    for (auto& w : run.vocab.warnings) std::printf("  warn %s\n", w.c_str());
    std::printf("  rank blm %td alm %td\n", run.vocab.source.index_of("black_lives_matter"), run.vocab.source.index_of("all_lives_matter"));
    for (auto& rep : run.result.reports) {
      auto m = evaluate_recovery(rep, o.truth);
      std::printf("%s->%s sim %.2f recall %.3f false %.4f\n", rep.source_id.c_str(), rep.target_id.c_str(), rep.similarity, m.planted_recall, m.false_misalignment_rate);
      int shown = 0;
      for (const auto& p : rep.pairs) if (shown++ < 6) std::printf("  %s -> %s %.3f\n", p.source.c_str(), p.target.c_str(), p.score);
      for (const auto& p : rep.pairs) if (p.source.find("lives") != std::string::npos) std::printf("  * %s -> %s %.3f\n", p.source.c_str(), p.target.c_str(), p.score);
    }
    return 0;
  }
  if (mode == "planted") cfg.random_planted = 20;
  auto envd = [](const char* n, double d) { const char* v = std::getenv(n); return v ? std::atof(v) : d; };
  cfg.zipf_exponent = envd("ZIPF", cfg.zipf_exponent);
  cfg.collocation_rate = envd("CR", cfg.collocation_rate);
  cfg.collocates = (std::size_t)envd("COL", (double)cfg.collocates);
  cfg.stopword_rate = envd("SR", cfg.stopword_rate);
  cfg.topic_leak = envd("LEAK", cfg.topic_leak);
  cfg.documents = documents_for_tokens(cfg, tokens);
  auto out = generate(cfg);
  Corpus a, b;
  if (mode == "identity") {
    auto halves = split_halves(out.a, seed);
    a = std::move(halves.first);
    b = std::move(halves.second);
  } else {
    a = std::move(out.a);
    b = std::move(out.b);
  }
  std::printf("gen %.1fs tokens a=%zu b=%zu\n", now() - t0, a.token_count(), b.token_count());
  auto vp = build_vocab({a, b}, vs, 10000);
  if (std::getenv("DUMP")) {
    save_corpus("/tmp/exp_a.txt", a);
    save_corpus("/tmp/exp_b.txt", b);
    save_vocabulary("/tmp/exp_vs.txt", vp.source);
    save_vocabulary("/tmp/exp_vt.txt", vp.target);
    return 0;
  }
  TrainConfig tc;
  tc.seed = seed;
  tc.epochs = epochs;
  t0 = now();
  auto sa = train(a, tc);
  sa.set_language_id(a.language_id());
  std::printf("train a %.1fs words=%zu\n", now() - t0, sa.size());
  t0 = now();
  auto sb = train(b, tc);
  sb.set_language_id(b.language_id());
  std::printf("train b %.1fs\n", now() - t0);
  for (int dir = 0; dir < 2; ++dir) {
    const auto& s = dir ? sb : sa;
    const auto& t = dir ? sa : sb;
    auto lex = build_seed_lexicon(s, t, stopwords());
    if (std::getenv("ORACLE")) {
      lex.pairs.clear();
      for (const auto& w : vp.target.tokens()) lex.pairs.emplace_back(w, w);
      for (const auto& w : stopwords().tokens()) lex.pairs.emplace_back(w, w);
    }
    auto map = fit(s, t, lex);
    auto batch = translate_all(map, s, t, vp.source, vp.target);
    auto rep = similarity(batch, vp.source);
    rep.source_id = s.language_id();
    rep.target_id = t.language_id();
    double nsim = similarity_neighborhood(s, t, batch);
    std::printf("dir %d sim %.2f simN %.2f anchors %zu\n", dir, rep.similarity, nsim, lex.size());
    for (std::size_t sz : {1000, 2000, 4000}) {
      if (sz <= vp.source.size()) std::printf("  prefix %zu: %.2f\n", sz, similarity_over_prefix(batch, vp.source, sz));
    }
    if (mode == "planted") {
      auto m = evaluate_recovery(rep, out.truth);
      std::printf("  recall %.3f false %.4f\n", m.planted_recall, m.false_misalignment_rate);
      std::unordered_map<std::string, const TranslationResult*> tr;
      for (const auto& r : batch.results) tr[r.source] = &r;
      for (const auto& [pa, pb] : out.truth.planted) {
        for (const auto& w : {pa, pb}) {
          auto it = tr.find(w);
          if (it == tr.end()) { std::printf("  %s not evaluated\n", w.c_str()); continue; }
          const auto* r = it->second;
          std::printf("  %s(%s) -> %s %.3f self %.3f rank %td\n", w.c_str(), (w == pa ? pb : pa).c_str(), r->target.c_str(), r->score, r->self_score ? *r->self_score : -9.0, vp.source.index_of(w));
        }
      }
    }
    {
      std::vector<int> ok(10, 0), tot(10, 0);
      std::unordered_map<std::string, std::size_t> rank;
      for (std::size_t i = 0; i < vp.source.size(); ++i) rank[vp.source.token(i)] = i;
      for (const auto& r : batch.results) {
        std::size_t bk = rank[r.source] * 10 / vp.source.size();
        tot[bk]++;
        ok[bk] += r.target == r.source;
      }
      for (int i = 0; i < 10; ++i) std::printf("  decile %d: %d/%d\n", i, ok[i], tot[i]);
      std::printf("  freq first %zu last %zu\n", (size_t)vp.source.entries().front().second, (size_t)vp.source.entries().back().second);
    }
    int shown = 0;
    for (const auto& p : rep.pairs) {
      if (shown++ < 8) std::printf("  %s -> %s %.3f\n", p.source.c_str(), p.target.c_str(), p.score);
    }
  }
}
