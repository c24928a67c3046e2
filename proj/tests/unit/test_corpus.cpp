#include <doctest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "oracles.hpp"
#include "syntaxlens/corpus.hpp"
#include "syntaxlens/error.hpp"
#include "syntaxlens/serialization.hpp"

using namespace syntaxlens;

namespace {

struct Corpus {
  std::vector<DatasetRecord> dataset;
  std::vector<TlpSequence> tlps;
};

Corpus make_corpus(std::uint64_t seed, int snippets, bool exceptions, const std::string& model = "m",
                   std::optional<double> fixed_probability = std::nullopt) {
  gen::SnippetGenerator g(seed);
  Corpus c;
  for (int i = 0; i < snippets; ++i) {
    const auto src = g.snippet(2 + i % 3, exceptions);
    auto rows = gen::random_tokenization(src, g.rng());
    if (fixed_probability) {
      for (auto& r : rows) r.logprob = std::log(*fixed_probability);
    }
    auto seq = tlp_from_pairs(src, rows);
    seq.snippet_id = "s" + std::to_string(i);
    seq.model_id = model;
    c.dataset.push_back({seq.snippet_id, src, {}, {}, {}, {}, {}});
    c.tlps.push_back(std::move(seq));
  }
  return c;
}

CorpusConfig config(std::uint64_t seed = 7) {
  CorpusConfig cfg;
  cfg.seed = seed;
  cfg.bootstrap_reps = 200;
  return cfg;
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

bool mentions_exceptions(const SyntaxTree& t, const CategoryMapping& m) {
  bool hit = false;
  for_each_node(t.root, [&](const AstNode& n, std::size_t) { hit |= m.lookup(n.kind) == Category::Exceptions; });
  return hit;
}

}  // namespace

TEST_CASE("categories absent from the corpus are null") {
  const auto c = make_corpus(1, 20, false);
  const auto& m = default_category_mapping();
  for (const auto& d : c.dataset) CHECK_FALSE(mentions_exceptions(parse(d.source), m));
  const auto r = analyze_corpus(c.dataset, c.tlps, m, config());
  CHECK(r.snippet_analyses.size() == 20);
  CHECK(r.category_report.per_category.size() == 10);
  CHECK(r.category_report.per_category.at(Category::Exceptions).is_null());
  CHECK(threshold_flags(r).at(Category::Exceptions) == ThresholdFlag::Null);
  CHECK_FALSE(r.category_report.per_category.at(Category::NaturalLanguage).is_null());
}

TEST_CASE("certain predictions give unit scores") {
  const auto c = make_corpus(2, 10, true, "m", 1.0);
  const auto r = analyze_corpus(c.dataset, c.tlps, default_category_mapping(), config());
  CHECK(r.intrinsic == 1.0);
  for (const auto& [cat, e] : r.category_report.per_category) {
    if (e.point) CHECK(*e.point == 1.0);
  }
}

TEST_CASE("intrinsic is the flat mean of all probabilities") {
  const auto c = make_corpus(3, 8, true);
  const auto r = analyze_corpus(c.dataset, c.tlps, default_category_mapping(), config());
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : c.tlps) {
    for (const auto& rec : s.records) {
      total += rec.probability;
      ++n;
    }
  }
  CHECK(r.intrinsic == doctest::Approx(total / n).epsilon(1e-12));
  CHECK(r.intrinsic >= 0.0);
  CHECK(r.intrinsic <= 1.0);
}

TEST_CASE("per-snippet outputs") {
  const auto c = make_corpus(4, 5, true);
  const auto r = analyze_corpus(c.dataset, c.tlps, default_category_mapping(), config());
  for (std::size_t i = 0; i < c.tlps.size(); ++i) {
    const auto& a = r.snippet_analyses[i];
    CHECK(a.snippet_id == c.tlps[i].snippet_id);
    CHECK(a.cross_entropy == doctest::Approx(cross_entropy(c.tlps[i])).epsilon(1e-12));
    CHECK(a.metrics.sequence_size == c.tlps[i].records.size());
    CHECK(a.metrics.node_count == parse(c.dataset[i].source).node_count);
  }
}

TEST_CASE("dataset metrics override recomputed ones") {
  auto c = make_corpus(5, 3, true);
  c.dataset[0].cyclomatic_complexity = 42;
  c.dataset[0].token_count = 1000;
  const auto r = analyze_corpus(c.dataset, c.tlps, default_category_mapping(), config());
  CHECK(r.snippet_analyses[0].metrics.cyclomatic_complexity == 42);
  CHECK(r.snippet_analyses[0].metrics.sequence_size == 1000);
}

TEST_CASE("seeds and worker counts") {
  const auto c = make_corpus(6, 12, true);
  auto cfg = config(7);
  cfg.jobs = 1;
  const auto a = to_json(analyze_corpus(c.dataset, c.tlps, default_category_mapping(), cfg)).dump();
  cfg.jobs = 4;
  const auto b = to_json(analyze_corpus(c.dataset, c.tlps, default_category_mapping(), cfg)).dump();
  CHECK(a == b);
  const auto other = to_json(analyze_corpus(c.dataset, c.tlps, default_category_mapping(), config(8))).dump();
  CHECK(other != a);
}

TEST_CASE("missing, mismatched and unparseable snippets") {
  auto c = make_corpus(7, 4, true);
  auto missing = c.tlps;
  missing.pop_back();
  CHECK(code_of([&] { analyze_corpus(c.dataset, missing, default_category_mapping(), config()); }) ==
        ErrorCode::MissingTlp);

  auto mixed = c.tlps;
  mixed[1].model_id = "other";
  CHECK(code_of([&] { analyze_corpus(c.dataset, mixed, default_category_mapping(), config()); }) ==
        ErrorCode::InvalidConfig);

  auto changed = c.dataset;
  changed[2].source += "# edited\n";
  const auto r = analyze_corpus(changed, c.tlps, default_category_mapping(), config());
  CHECK(r.skipped == std::vector<std::string>{"s2"});
  CHECK(r.snippet_analyses.size() == 3);
}

TEST_CASE("truncation is counted") {
  auto c = make_corpus(8, 3, true);
  auto cfg = config();
  cfg.max_tokens = 5;
  const auto r = analyze_corpus(c.dataset, c.tlps, default_category_mapping(), cfg);
  CHECK(r.truncated_count == 3);
  for (const auto& a : r.snippet_analyses) {
    CHECK(a.truncated);
    CHECK(a.token_count == 5);
  }
}

TEST_CASE("threshold flags") {
  CorpusReport r;
  r.category_report.per_category[Category::Iterations].point = 0.74;
  r.category_report.per_category[Category::NaturalLanguage].point = 0.32;
  r.category_report.per_category[Category::Scope].point = 0.6;
  r.category_report.per_category[Category::Exceptions] = {};
  const auto flags = threshold_flags(r, 0.6);
  CHECK(flags.at(Category::Iterations) == ThresholdFlag::Pass);
  CHECK(flags.at(Category::NaturalLanguage) == ThresholdFlag::Fail);
  CHECK(flags.at(Category::Scope) == ThresholdFlag::Pass);
  CHECK(flags.at(Category::Exceptions) == ThresholdFlag::Null);
}

TEST_CASE("model comparison") {
  const auto a = analyze_corpus(make_corpus(9, 6, true, "a").dataset, make_corpus(9, 6, true, "a").tlps,
                                default_category_mapping(), config());
  auto b = a;
  b.model_id = "b";
  SUBCASE("identical reports have zero deltas") {
    const auto m = compare_models({a, b}, {{"a", "b"}}, {"identifier"});
    CHECK(m.rows.size() == 11);
    CHECK(m.columns == std::vector<std::string>{"a", "b"});
    for (const auto& v : m.deltas[0].values) {
      if (v) CHECK(*v == 0.0);
    }
  }
  SUBCASE("known cells") {
    b.category_report.per_category[Category::DataTypes].point = 0.83;
    auto a2 = a;
    a2.category_report.per_category[Category::DataTypes].point = 0.33;
    a2.category_report.per_category[Category::Testing] = {};
    const auto m = compare_models({a2, b}, {{"b", "a"}});
    const auto row = static_cast<std::size_t>(Category::DataTypes);
    CHECK(*m.deltas[0].values[row] == doctest::Approx(0.50));
    CHECK_FALSE(m.deltas[0].values[static_cast<std::size_t>(Category::Testing)].has_value());
  }
  SUBCASE("configuration mismatches") {
    auto c = b;
    c.aggregator = Aggregator::Mean;
    CHECK(code_of([&] { compare_models({a, c}, {}); }) == ErrorCode::ConfigMismatch);
    auto d = b;
    d.mapping_digest = "different";
    CHECK(code_of([&] { compare_models({a, d}, {}); }) == ErrorCode::ConfigMismatch);
    CHECK(code_of([&] { compare_models({a}, {}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([&] { compare_models({a, b}, {{"a", "zzz"}}); }) == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("report serialization round trip") {
  const auto c = make_corpus(10, 5, true);
  const auto r = analyze_corpus(c.dataset, c.tlps, default_category_mapping(), config());
  const auto text = to_json(r).dump();
  const auto back = corpus_report_from_json(parse_json(text, "report"));
  CHECK(to_json(back).dump() == text);

  const auto csv = category_report_csv(r.category_report);
  CHECK(csv.rfind("model_id,level,name,point,ci_low,ci_high,n\n", 0) == 0);
  CHECK(csv.find("m,category,Exceptions,") != std::string::npos);
}
