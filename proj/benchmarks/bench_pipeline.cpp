#include <benchmark/benchmark.h>

#include <random>

#include "generators.hpp"
#include "syntaxlens/alignment.hpp"
#include "syntaxlens/bootstrap.hpp"
#include "syntaxlens/causal.hpp"
#include "syntaxlens/clustering.hpp"
#include "syntaxlens/corpus.hpp"
#include "syntaxlens/render.hpp"

using namespace syntaxlens;

namespace {

struct Corpus {
  std::vector<DatasetRecord> dataset;
  std::vector<TlpSequence> tlps;
};

Corpus make_corpus(std::size_t snippets, int statements) {
  gen::SnippetGenerator g(17);
  Corpus c;
  for (std::size_t i = 0; i < snippets; ++i) {
    const auto src = g.snippet(statements);
    auto seq = gen::random_sequence(src, g.rng());
    seq.snippet_id = "b" + std::to_string(i);
    seq.model_id = "bench";
    c.dataset.push_back({seq.snippet_id, src, {}, {}, {}, {}, {}});
    c.tlps.push_back(std::move(seq));
  }
  return c;
}

void BM_Parse(benchmark::State& state) {
  gen::SnippetGenerator g(1);
  const auto src = g.snippet(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parse(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_Parse)->Arg(5)->Arg(40);

void BM_Align(benchmark::State& state) {
  gen::SnippetGenerator g(2);
  const auto src = g.snippet(static_cast<int>(state.range(0)));
  const auto tree = parse(src);
  const auto seq = gen::random_sequence(src, g.rng());
  for (auto _ : state) benchmark::DoNotOptimize(align(seq, tree));
  state.counters["tokens"] = static_cast<double>(seq.records.size());
}
BENCHMARK(BM_Align)->Arg(5)->Arg(40);

void BM_Annotate(benchmark::State& state) {
  gen::SnippetGenerator g(3);
  const auto src = g.snippet(20);
  const auto tree = parse(src);
  const auto seq = gen::random_sequence(src, g.rng());
  const auto map = align(seq, tree);
  const auto agg = static_cast<Aggregator>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(annotate(tree, map, seq, agg));
}
BENCHMARK(BM_Annotate)->Arg(static_cast<int>(Aggregator::Median))->Arg(static_cast<int>(Aggregator::Mean));

void BM_Bootstrap(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_estimate(v, kDefaultBootstrapReps, 9));
}
BENCHMARK(BM_Bootstrap)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_AnalyzeCorpus(benchmark::State& state) {
  const auto c = make_corpus(static_cast<std::size_t>(state.range(0)), 6);
  CorpusConfig cfg;
  cfg.jobs = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(analyze_corpus(c.dataset, c.tlps, default_category_mapping(), cfg));
}
BENCHMARK(BM_AnalyzeCorpus)->Args({100, 1})->Args({100, 0})->Unit(benchmark::kMillisecond);

void BM_RenderAst(benchmark::State& state) {
  gen::SnippetGenerator g(5);
  const auto src = g.snippet(20);
  const auto tree = parse(src);
  const auto seq = gen::random_sequence(src, g.rng());
  const auto at = annotate(tree, align(seq, tree), seq, Aggregator::Median);
  RenderConfig rc;
  rc.format = static_cast<OutputFormat>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(render_ast(at, rc));
}
BENCHMARK(BM_RenderAst)->Arg(static_cast<int>(OutputFormat::Dot))->Arg(static_cast<int>(OutputFormat::Svg));

void BM_AteLinear(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  std::vector<CausalSample> s(static_cast<std::size_t>(state.range(0)));
  for (auto& x : s) {
    const double z = n01(rng);
    const double t = z + n01(rng);
    x = {"", t, 2 * t + z + n01(rng), {z, n01(rng), n01(rng), n01(rng)}};
  }
  for (auto _ : state) benchmark::DoNotOptimize(ate_linear(s));
}
BENCHMARK(BM_AteLinear)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
