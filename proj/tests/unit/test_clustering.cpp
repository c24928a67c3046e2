#include <doctest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "oracles.hpp"
#include "syntaxlens/alignment.hpp"
#include "syntaxlens/bootstrap.hpp"
#include "syntaxlens/clustering.hpp"
#include "syntaxlens/error.hpp"

using namespace syntaxlens;

namespace {

const AnnotatedNode* find_kind(const AnnotatedNode& n, std::string_view kind) {
  if (n.kind == kind) return &n;
  for (const auto& c : n.children) {
    if (const auto* f = find_kind(c, kind)) return f;
  }
  return nullptr;
}

// "def add(a, b):" with the parameters tokens carrying the worked values.
TlpSequence parameters_fixture() {
  const std::string src = "def add(a, b):\n    return a + b\n";
  return tlp_from_pairs(src, {{"def", {0, 3}, std::log(0.9)},
                              {" add", {3, 7}, std::log(0.6)},
                              {"(", {7, 8}, std::log(0.07)},
                              {"a", {8, 9}, std::log(0.4)},
                              {",", {9, 10}, std::log(0.5)},
                              {" b", {10, 12}, std::log(0.1)},
                              {")", {12, 13}, std::log(0.1)},
                              {":", {13, 14}, std::log(0.8)}});
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

}  // namespace

TEST_CASE("aggregators") {
  const std::vector<double> v{0.07, 0.4, 0.1, 0.5, 0.1};
  CHECK(*aggregate(Aggregator::Mean, v) == doctest::Approx(0.234).epsilon(1e-12));
  CHECK(*aggregate(Aggregator::Median, v) == 0.1);
  CHECK(*aggregate(Aggregator::Max, v) == 0.5);
  CHECK(*aggregate(Aggregator::Median, std::vector<double>{0.2, 0.4}) == doctest::Approx(0.3));
  CHECK_FALSE(aggregate(Aggregator::Mean, std::vector<double>{}).has_value());
  CHECK(parse_aggregator("average") == Aggregator::Mean);
  CHECK(code_of([] { parse_aggregator("mode"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("parameters node of the worked example") {
  const auto seq = parameters_fixture();
  const auto tree = parse(seq.source);
  const auto map = align(seq, tree);
  const auto mean_tree = annotate(tree, map, seq, Aggregator::Mean);
  const auto* params = find_kind(mean_tree.root, "parameters");
  REQUIRE(params);
  CHECK(params->token_count == 5);
  CHECK(std::round(*params->confidence * 100) / 100 == doctest::Approx(0.23));
  const auto median_tree = annotate(tree, map, seq, Aggregator::Median);
  CHECK(*find_kind(median_tree.root, "parameters")->confidence == doctest::Approx(0.10));
}

TEST_CASE("nodes without tokens are null") {
  const std::string src = "x = 1\ny = 2\n";
  const auto seq = tlp_from_pairs(src, {{"x", {0, 1}, -0.5}});
  const auto tree = parse(src);
  const auto at = annotate(tree, align(seq, tree), seq, Aggregator::Median);
  std::size_t nulls = 0;
  std::function<void(const AnnotatedNode&)> walk = [&](const AnnotatedNode& n) {
    CHECK(n.confidence.has_value() == (n.token_count > 0));
    nulls += !n.confidence;
    for (const auto& c : n.children) walk(c);
  };
  walk(at.root);
  CHECK(nulls > 0);
}

TEST_CASE("annotate rejects mismatched inputs") {
  const auto seq = parameters_fixture();
  const auto tree = parse(seq.source);
  auto map = align(seq, tree);
  auto shorter = seq;
  shorter.records.pop_back();
  CHECK(code_of([&] { annotate(tree, map, shorter, Aggregator::Mean); }) == ErrorCode::AggregationMismatch);
  auto bad = map;
  bad.entries[0] = 0;  // the root is not a terminal
  CHECK(code_of([&] { annotate(tree, bad, seq, Aggregator::Mean); }) == ErrorCode::AggregationMismatch);
}

TEST_CASE("confidence hierarchy properties") {
  gen::SnippetGenerator g(77);
  for (int trial = 0; trial < 60; ++trial) {
    const auto src = g.snippet(1 + trial % 4);
    const auto tree = parse(src);
    const auto seq = gen::random_sequence(src, g.rng());
    const auto map = align(seq, tree);

    const auto max_tree = annotate(tree, map, seq, Aggregator::Max);
    std::function<void(const AnnotatedNode&)> check_max = [&](const AnnotatedNode& n) {
      for (const auto& c : n.children) {
        if (c.confidence) CHECK(*n.confidence >= *c.confidence);
        check_max(c);
      }
    };
    check_max(max_tree.root);

    const auto mean_tree = annotate(tree, map, seq, Aggregator::Mean);
    const auto oracle_conf = oracle::flat_confidences(seq, tree, Aggregator::Mean);
    std::function<void(const AnnotatedNode&)> check_mean = [&](const AnnotatedNode& n) {
      const auto it = oracle_conf.find(n.node_id);
      CHECK(n.confidence.has_value() == (it != oracle_conf.end()));
      if (n.confidence) CHECK(*n.confidence == doctest::Approx(it->second).epsilon(1e-12));
      for (const auto& c : n.children) check_mean(c);
    };
    check_mean(mean_tree.root);
  }
}

TEST_CASE("subcategory values per snippet") {
  const auto build = [](const std::string& src, std::vector<double> probs, Aggregator agg) {
    const auto tree = parse(src);
    std::vector<PairRow> rows;
    std::size_t k = 0;
    for (const auto* t : terminals_in_order(tree)) {
      rows.push_back({"t", t->span, std::log(probs[k % probs.size()])});
      ++k;
    }
    const auto seq = tlp_from_pairs(src, rows);
    return annotate(tree, align(seq, tree), seq, agg);
  };
  SUBCASE("one if_statement per snippet") {
    const auto a = build("if x:\n    y\n", {0.2}, Aggregator::Median);
    const auto b = build("if x:\n    y\n", {0.4}, Aggregator::Median);
    const auto sub = subcategory_scores({a, b}, Aggregator::Median);
    CHECK(sub.at("if_statement") == std::vector<double>{0.2, 0.4});
    CHECK_FALSE(sub.contains("lambda"));
  }
  SUBCASE("two identifiers in one snippet under mean") {
    const auto t = build("a;b", {0.3, 0.9, 0.5}, Aggregator::Mean);
    const auto sub = subcategory_scores({t}, Aggregator::Mean);
    REQUIRE(sub.at("identifier").size() == 1);
    CHECK(sub.at("identifier")[0] == doctest::Approx(0.4));
  }
}

TEST_CASE("category pooling") {
  const auto& m = default_category_mapping();
  SubcategoryScores sub{{"if_statement", {0.6}}, {"if", {0.8}}, {"weird_node", {0.3}}};
  const auto cats = category_scores(sub, m);
  auto decisions = cats.at(Category::Decisions);
  std::sort(decisions.begin(), decisions.end());
  CHECK(decisions == std::vector<double>{0.6, 0.8});
  CHECK(cats.at(Category::Unmapped) == std::vector<double>{0.3});
  const auto empty = category_scores({}, m);
  CHECK(empty.size() == kSyntaxCategories.size() + 1);
  for (const auto& [c, v] : empty) CHECK(v.empty());
}

TEST_CASE("mapping files") {
  const auto& m = default_category_mapping();
  CHECK(m.lookup("for_statement") == Category::Iterations);
  CHECK(m.lookup("while_statement") == Category::Iterations);
  CHECK(m.lookup("identifier") == Category::NaturalLanguage);
  CHECK(m.lookup("string") == Category::NaturalLanguage);
  CHECK(m.lookup("comment") == Category::NaturalLanguage);
  CHECK(m.lookup("no_such_kind") == Category::Unmapped);
  for (const char* kind : {"try_statement", "except_clause", "finally_clause", "raise_statement"}) {
    CHECK(m.lookup(kind) == Category::Exceptions);
  }
  CHECK(m.lookup("assert_statement") == Category::Testing);
  CHECK(m.table().size() >= 32);

  CHECK(code_of([] { parse_category_mapping(R"({"for_statement": "Loops"})"); }) == ErrorCode::UnknownCategoryName);
  CHECK(code_of([] { parse_category_mapping(R"({"if": "Decisions", "if": "Scope"})"); }) == ErrorCode::DuplicateKind);
  CHECK(code_of([] { parse_category_mapping(R"({"if": )"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_category_mapping(R"(["if"])"); }) == ErrorCode::Parse);

  const auto custom = parse_category_mapping(R"({"if": "Decisions", "x": "UNMAPPED"})");
  CHECK(custom.lookup("if") == Category::Decisions);
  CHECK(custom.digest() == parse_category_mapping(R"({"x": "UNMAPPED", "if": "Decisions"})").digest());
  CHECK(custom.digest() != m.digest());
}

TEST_CASE("bootstrap estimates") {
  SUBCASE("single value") {
    const auto e = bootstrap_estimate(std::vector<double>{0.5}, 37, 9);
    CHECK(*e.point == 0.5);
    CHECK(*e.ci_low == 0.5);
    CHECK(*e.ci_high == 0.5);
  }
  SUBCASE("constant list is exact") {
    const std::vector<double> v(17, 0.3);
    CHECK(*bootstrap_estimate(v, 500, 1).point == 0.3);
  }
  SUBCASE("empty") {
    const auto e = bootstrap_estimate(std::vector<double>{}, 500, 1);
    CHECK_FALSE(e.point.has_value());
    CHECK(e.n_samples == 0);
  }
  SUBCASE("deterministic and ordered") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> v(200);
    for (auto& x : v) x = u(rng);
    const auto a = bootstrap_estimate(v, 500, 42);
    const auto b = bootstrap_estimate(v, 500, 42);
    CHECK(*a.point == *b.point);
    CHECK(*a.ci_low == *b.ci_low);
    CHECK(*a.ci_high == *b.ci_high);
    CHECK(*a.ci_low <= *a.point);
    CHECK(*a.point <= *a.ci_high);
    CHECK(*bootstrap_estimate(v, 500, 43).point != *a.point);
  }
  SUBCASE("invalid reps") {
    CHECK(code_of([] { bootstrap_estimate(std::vector<double>{1.0}, 0, 1); }) == ErrorCode::InvalidConfig);
  }
  SUBCASE("percentiles interpolate") {
    const std::vector<double> s{1, 2, 3, 4};
    CHECK(percentile_sorted(s, 0.0) == 1);
    CHECK(percentile_sorted(s, 1.0) == 4);
    CHECK(percentile_sorted(s, 0.5) == doctest::Approx(2.5));
  }
}

TEST_CASE("category report null discipline") {
  SubcategoryScores sub{{"for_statement", {0.5, 0.7}}, {"identifier", {0.2}}};
  const auto r = build_category_report(sub, default_category_mapping(), Aggregator::Median, 100, 3, "m");
  CHECK(r.per_category.size() == 10);
  CHECK(r.per_category.at(Category::Exceptions).is_null());
  CHECK(r.per_category.at(Category::Exceptions).n == 0);
  CHECK_FALSE(r.per_category.at(Category::Iterations).is_null());
  CHECK(r.per_category.at(Category::Iterations).n == 2);
  CHECK(r.per_subcategory.at("identifier").point == 0.2);
}
