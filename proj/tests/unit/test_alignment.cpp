#include <doctest.h>

#include <random>

#include "generators.hpp"
#include "oracles.hpp"
#include "syntaxlens/alignment.hpp"
#include "syntaxlens/error.hpp"

using namespace syntaxlens;

namespace {

const AstNode* terminal_with_text(const SyntaxTree& tree, std::string_view text) {
  for (const auto* t : terminals_in_order(tree)) {
    if (std::string_view(tree.source).substr(t->span.start, t->span.size()) == text) return t;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("normalize_token strips subword markers") {
  CHECK(normalize_token("try_") == "try");
  CHECK(normalize_token("\xC4\xA0if") == "if");
  CHECK(normalize_token("float") == "float");
  CHECK(normalize_token("\xE2\x96\x81return") == "return");
  CHECK(normalize_token("##ing") == "ing");
  CHECK(normalize_token(" x") == "x");
  CHECK(normalize_token("snake_case") == "snake_case");
}

TEST_CASE("subword tokens align many-to-one") {
  const std::string src = "try:\n    v = float(s)\nexcept ValueError:\n    v = 0\n";
  const auto tree = parse(src);
  const std::size_t f = src.find("float");
  const auto seq = tlp_from_pairs(src, {{"try_", {0, 3}, -0.1},
                                        {":", {3, 4}, -0.1},
                                        {"flo_", {f, f + 3}, -0.5},
                                        {"at", {f + 3, f + 5}, -0.2}});
  const auto map = align(seq, tree);
  const auto* try_node = terminal_with_text(tree, "try");
  const auto* float_node = terminal_with_text(tree, "float");
  REQUIRE(try_node);
  REQUIRE(float_node);
  CHECK(try_node->kind == "try");
  CHECK(map.entries[0] == try_node->node_id);
  CHECK(map.per_terminal.at(try_node->node_id) == std::vector<std::size_t>{0});
  CHECK(map.entries[2] == float_node->node_id);
  CHECK(map.entries[3] == float_node->node_id);
  CHECK(map.per_terminal.at(float_node->node_id) == std::vector<std::size_t>{2, 3});
}

TEST_CASE("whitespace between statements is unaligned") {
  const std::string src = "a = 1\n\n  \nb = 2\n";
  const auto tree = parse(src);
  const auto seq = tlp_from_pairs(src, {{"a", {0, 1}, -0.1}, {"  ", {7, 9}, -0.1}, {"b", {10, 11}, -0.1}});
  const auto map = align(seq, tree);
  CHECK(map.entries[0].has_value());
  CHECK_FALSE(map.entries[1].has_value());
  CHECK(map.entries[2].has_value());
}

TEST_CASE("straddling token goes to the larger overlap, ties to the earlier terminal") {
  const std::string src = "f(xy)";
  const auto tree = parse(src);
  // "(xy" overlaps "(" by 1 and "xy" by 2
  auto map = align(tlp_from_pairs(src, {{"(xy", {1, 4}, -0.1}}), tree);
  CHECK(map.entries[0] == terminal_with_text(tree, "xy")->node_id);
  // "y)" overlaps "xy" by 1 and ")" by 1
  map = align(tlp_from_pairs(src, {{"y)", {3, 5}, -0.1}}), tree);
  CHECK(map.entries[0] == terminal_with_text(tree, "xy")->node_id);
}

TEST_CASE("source mismatch") {
  const auto tree = parse("a");
  try {
    align(tlp_from_pairs("b", {}), tree);
    FAIL("expected SourceMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SourceMismatch);
  }
}

TEST_CASE("coverage report") {
  SUBCASE("perfect alignment") {
    const auto tree = parse("a=1");
    const auto map = align(tlp_from_pairs("a=1", {{"a", {0, 1}, 0}, {"=", {1, 2}, 0}, {"1", {2, 3}, 0}}), tree);
    const auto c = coverage_report(map, tree);
    CHECK(c.unaligned_token_count == 0);
    CHECK(c.uncovered_terminal_count == 0);
    CHECK(c.coverage_ratio == 1.0);
  }
  SUBCASE("one whitespace token out of ten") {
    const std::string src = "a=1;b=2;c \n";
    const auto tree = parse(src);
    std::vector<PairRow> rows;
    for (std::size_t i = 0; i < 9; ++i) rows.push_back({src.substr(i, 1), {i, i + 1}, -0.1});
    rows.push_back({" \n", {9, 11}, -0.1});
    const auto c = coverage_report(align(tlp_from_pairs(src, rows), tree), tree);
    CHECK(c.unaligned_token_count == 1);
    CHECK(c.uncovered_terminal_count == 0);
    CHECK(c.coverage_ratio == doctest::Approx(0.9));
  }
  SUBCASE("comment without tokens") {
    const std::string src = "x = 1  # why\n";
    const auto tree = parse(src);
    const auto c = coverage_report(align(tlp_from_pairs(src, {{"x", {0, 1}, 0}, {" = 1", {1, 5}, 0}}), tree), tree);
    CHECK(c.uncovered_terminal_count >= 1);
  }
}

TEST_CASE("alignment matches the brute-force overlap oracle") {
  gen::SnippetGenerator g(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto src = g.snippet(1 + trial % 4);
    const auto tree = parse(src);
    gen::TokenizeOptions opts;
    opts.max_piece = 1 + static_cast<std::size_t>(trial % 9);
    opts.gap_probability = trial % 3 == 0 ? 0.2 : 0.0;
    const auto seq = gen::random_sequence(src, g.rng(), opts);
    const auto map = align(seq, tree);
    CHECK(map.entries == oracle::brute_align(seq, tree));

    // per_terminal is the inverse of entries and runs are ordered
    std::size_t aligned = 0;
    for (const auto& [node, tokens] : map.per_terminal) {
      for (std::size_t k = 0; k < tokens.size(); ++k) {
        CHECK(map.entries[tokens[k]] == node);
        if (k) CHECK(tokens[k] == tokens[k - 1] + 1);
      }
      aligned += tokens.size();
    }
    CHECK(aligned == map.aligned_count());
  }
}
