#include <doctest.h>

#include <random>

#include "generators.hpp"
#include "oracles.hpp"
#include "syntaxlens/error.hpp"
#include "syntaxlens/syntax_tree.hpp"

using namespace syntaxlens;

namespace {

bool contains_kind(const AstNode& n, std::string_view kind) {
  if (n.kind == kind) return true;
  for (const auto& c : n.children) {
    if (contains_kind(c, kind)) return true;
  }
  return false;
}

void check_structure(const AstNode& n, std::size_t source_len) {
  CHECK(n.span.start <= n.span.end);
  CHECK(n.span.end <= source_len);
  CHECK(n.is_terminal == n.children.empty());
  std::size_t prev_end = n.span.start;
  for (const auto& c : n.children) {
    CHECK(c.span.start >= n.span.start);
    CHECK(c.span.end <= n.span.end);
    CHECK(c.span.start >= prev_end);
    prev_end = c.span.end;
    check_structure(c, source_len);
  }
}

}  // namespace

TEST_CASE("if statement parses under a module root") {
  const auto tree = parse("if x:\n    y = 1");
  CHECK(tree.root.kind == "module");
  CHECK(contains_kind(tree.root, "if_statement"));
  CHECK_FALSE(tree.has_errors);
  CHECK(tree.root.span == Span{0, 15});
}

TEST_CASE("empty source gives a childless module") {
  const auto tree = parse("");
  CHECK(tree.root.kind == "module");
  CHECK(tree.root.children.empty());
  CHECK_FALSE(tree.has_errors);
  CHECK(terminals_in_order(tree).empty());
}

TEST_CASE("malformed code still yields a tree") {
  const auto tree = parse("def f(:");
  CHECK(tree.has_errors);
  CHECK(tree.root.kind == "module");
  CHECK(tree.node_count > 1);
}

TEST_CASE("invalid UTF-8 is an encoding error") {
  try {
    parse(std::string("x = '\xff'"));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Encoding);
  }
}

TEST_CASE("terminals of an assignment") {
  const auto tree = parse("a=1");
  const auto terms = terminals_in_order(tree);
  REQUIRE(terms.size() == 3);
  CHECK(terms[0]->kind == "identifier");
  CHECK(terms[1]->kind == "=");
  CHECK(terms[2]->kind == "integer");
  CHECK(terms[0]->span == Span{0, 1});
  CHECK(terms[2]->span == Span{2, 3});
}

TEST_CASE("comments are terminals") {
  const auto tree = parse("x # c");
  bool found = false;
  for (const auto* t : terminals_in_order(tree)) found |= t->kind == "comment";
  CHECK(found);
}

TEST_CASE("structural metrics on small programs") {
  SUBCASE("straight-line code") {
    const auto m = structural_metrics(parse("x = 1"));
    CHECK(m.cyclomatic_complexity == 1);
    CHECK(m.loc == 1);
    CHECK(m.whitespace_count == 2);
    CHECK(m.sequence_size == 0);
  }
  SUBCASE("if/else has one decision point") {
    const auto m = structural_metrics(parse("if a:\n    b\nelse:\n    c"));
    CHECK(m.cyclomatic_complexity == 2);
    CHECK(m.loc == 4);
  }
  SUBCASE("boolean operators and comprehension filters count") {
    // if_statement, boolean_operator, for_statement, if_clause
    const auto m = structural_metrics(parse("if a and b:\n    for i in x:\n        y = [j for j in i if j]\n"));
    CHECK(m.cyclomatic_complexity == 5);
    CHECK(m.loc == 3);
  }
  SUBCASE("depth of a nested expression") {
    // module > expression_statement > parenthesized_expression > parenthesized_expression > identifier
    const auto tree = parse("((a))");
    CHECK(structural_metrics(tree).ast_levels == 5);
  }
}

TEST_CASE("metrics agree with an exhaustive DFS") {
  gen::SnippetGenerator g(11);
  for (int i = 0; i < 100; ++i) {
    const auto src = g.snippet(1 + i % 5);
    const auto tree = parse(src);
    const auto m = structural_metrics(tree);
    const auto o = oracle::dfs_metrics(tree);
    CHECK(m.node_count == o.nodes);
    CHECK(m.node_count == tree.node_count);
    CHECK(m.ast_levels == o.levels);
    CHECK(m.cyclomatic_complexity == 1 + o.decisions);
  }
}

TEST_CASE("tree invariants hold on generated snippets") {
  gen::SnippetGenerator g(5);
  for (int i = 0; i < 100; ++i) {
    const auto src = g.snippet(1 + i % 6);
    const auto tree = parse(src);
    CHECK_FALSE(tree.has_errors);
    CHECK(tree.root.span == Span{0, src.size()});
    check_structure(tree.root, src.size());

    // node ids are the pre-order positions
    std::size_t expected = 0;
    for_each_node(tree.root, [&](const AstNode& n, std::size_t) { CHECK(n.node_id == expected++); });
    CHECK(expected == tree.node_count);

    // terminals plus the gaps between them rebuild the source
    std::string rebuilt;
    std::size_t pos = 0;
    for (const auto* t : terminals_in_order(tree)) {
      REQUIRE(t->span.start >= pos);
      rebuilt += src.substr(pos, t->span.start - pos);
      rebuilt += src.substr(t->span.start, t->span.size());
      pos = t->span.end;
    }
    rebuilt += src.substr(pos);
    CHECK(rebuilt == src);
  }
}

TEST_CASE("parse is deterministic") {
  gen::SnippetGenerator g(99);
  const auto src = g.snippet(6);
  const auto a = parse(src);
  const auto b = parse(src);
  std::vector<std::tuple<std::string, std::size_t, std::size_t, std::size_t>> va, vb;
  for_each_node(a.root, [&](const AstNode& n, std::size_t d) { va.emplace_back(n.kind, n.span.start, n.span.end, d); });
  for_each_node(b.root, [&](const AstNode& n, std::size_t d) { vb.emplace_back(n.kind, n.span.start, n.span.end, d); });
  CHECK(va == vb);
}

TEST_CASE("utf8 validation") {
  CHECK(is_valid_utf8("plain"));
  CHECK(is_valid_utf8("caf\xC3\xA9"));
  CHECK_FALSE(is_valid_utf8("\xC3"));
  CHECK_FALSE(is_valid_utf8("\xC0\xAF"));  // overlong
  CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));  // surrogate
}
