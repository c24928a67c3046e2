#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "dot_check.hpp"
#include "generators.hpp"
#include "syntaxlens/alignment.hpp"
#include "syntaxlens/error.hpp"
#include "syntaxlens/render.hpp"
#include "xml_check.hpp"

using namespace syntaxlens;

namespace {

AnnotatedTree annotated(const TlpSequence& seq, Aggregator agg = Aggregator::Median) {
  const auto tree = parse(seq.source);
  return annotate(tree, align(seq, tree), seq, agg);
}

RenderConfig config(RenderMode mode, OutputFormat format) {
  RenderConfig c;
  c.mode = mode;
  c.format = format;
  return c;
}

std::size_t count_nodes(const AnnotatedNode& n) {
  std::size_t k = 1;
  for (const auto& c : n.children) k += count_nodes(c);
  return k;
}

// HTML output is XHTML-compatible; drop the doctype and check it as XML.
xmlcheck::Document parse_html(const std::string& html) {
  REQUIRE(html.rfind("<!DOCTYPE html>", 0) == 0);
  return xmlcheck::parse(html);
}

TlpSequence three_tokens() {
  return tlp_from_pairs("a=1", {{"a", {0, 1}, std::log(0.96)}, {"=", {1, 2}, std::log(0.5)}, {"1", {2, 3}, std::log(0.1)}});
}

}  // namespace

TEST_CASE("palette") {
  const auto p = Palette::standard();
  CHECK(p.stop_for(0.96).name == "high");
  CHECK(p.stop_for(0.6).name == "high");
  CHECK(p.stop_for(0.59).name == "medium");
  CHECK(p.stop_for(0.0).name == "low");
  CHECK_THROWS_AS(Palette({{0.5, "#000", "a"}, {0.5, "#fff", "b"}}), Error);
  CHECK_THROWS_AS(Palette({{0.0, "#000", "a"}, {1.5, "#fff", "b"}}), Error);
  CHECK_THROWS_AS(Palette({}), Error);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    CHECK(p.class_index(a) <= p.class_index(b));
  }
}

TEST_CASE("confidence labels") {
  CHECK(format_confidence(0.234) == "0.23");
  CHECK(format_confidence(std::nullopt) == std::string(kNullLabel));
}

TEST_CASE("sequence rendering has one cell per token") {
  const auto seq = three_tokens();
  SUBCASE("html") {
    const auto doc = parse_html(render_sequence(seq, config(RenderMode::Sequence, OutputFormat::Html)));
    REQUIRE(doc.ok());
    const auto cells = doc.with_class("span", "tok");
    REQUIRE(cells.size() == 3);
    CHECK(doc.with_class("span", "high").size() >= 1);
    CHECK(cells[0]->attributes.at("class").find("high") != std::string::npos);
    CHECK(cells[0]->text.find("0.96") == std::string::npos);  // probability sits in <sub>
  }
  SUBCASE("svg") {
    const auto doc = xmlcheck::parse(render_sequence(seq, config(RenderMode::Sequence, OutputFormat::Svg)));
    REQUIRE(doc.ok());
    CHECK(doc.with_class("g", "tok").size() == 3);
  }
  SUBCASE("dot") {
    const auto g = dotcheck::parse(render_sequence(seq, config(RenderMode::Sequence, OutputFormat::Dot)));
    REQUIRE(g.ok());
    CHECK(g.nodes.size() == 3);
    CHECK(g.node_attributes.at("t0").at("label").find("0.96") != std::string::npos);
  }
  SUBCASE("empty sequence") {
    const auto empty = tlp_from_pairs("", {});
    for (auto f : {OutputFormat::Html, OutputFormat::Svg}) {
      const auto text = render_sequence(empty, config(RenderMode::Sequence, f));
      const auto doc = f == OutputFormat::Html ? parse_html(text) : xmlcheck::parse(text);
      CHECK(doc.ok());
      CHECK(doc.with_class(f == OutputFormat::Html ? "span" : "g", "tok").empty());
    }
    const auto g = dotcheck::parse(render_sequence(empty, config(RenderMode::Sequence, OutputFormat::Dot)));
    CHECK(g.ok());
    CHECK(g.nodes.empty());
  }
}

TEST_CASE("ast rendering") {
  const std::string src = "def add(a, b):\n    c = a + b\n    return c\n";
  const auto tree = parse(src);
  std::vector<PairRow> rows;
  for (const auto* t : terminals_in_order(tree)) rows.push_back({"t", t->span, std::log(0.5)});
  auto seq = tlp_from_pairs(src, rows);
  seq.generated_span = Span{src.find("return"), src.size()};
  const auto at = annotated(seq);
  const std::size_t n = count_nodes(at.root);
  REQUIRE(n == at.node_count);

  SUBCASE("complete svg has N shapes and N-1 edges") {
    const auto doc = xmlcheck::parse(render_ast(at, config(RenderMode::AstComplete, OutputFormat::Svg)));
    REQUIRE(doc.ok());
    CHECK(doc.with_class("g", "node").size() == n);
    CHECK(doc.with_class("line", "edge").size() == n - 1);
  }
  SUBCASE("complete dot") {
    const auto g = dotcheck::parse(render_ast(at, config(RenderMode::AstComplete, OutputFormat::Dot)));
    REQUIRE(g.ok());
    CHECK(g.directed);
    CHECK(g.nodes.size() == n);
    CHECK(g.edges.size() == n - 1);
    CHECK(g.node_attributes.at("n0").at("label") == "module\\n0.50");
  }
  SUBCASE("complete html") {
    const auto doc = parse_html(render_ast(at, config(RenderMode::AstComplete, OutputFormat::Html)));
    REQUIRE(doc.ok());
    CHECK(doc.with_class("g", "node").size() == n);
  }
  SUBCASE("partial keeps fewer nodes") {
    const auto doc = xmlcheck::parse(render_ast(at, config(RenderMode::AstPartial, OutputFormat::Svg)));
    REQUIRE(doc.ok());
    const auto shapes = doc.with_class("g", "node").size();
    CHECK(shapes < n);
    CHECK(shapes == visible_nodes(at, RenderMode::AstPartial).size());
    CHECK(doc.with_class("line", "edge").size() == shapes - 1);
  }
  SUBCASE("partial without a generated span") {
    auto no_span = at;
    no_span.generated_span.reset();
    try {
      render_ast(no_span, config(RenderMode::AstPartial, OutputFormat::Svg));
      FAIL("expected MissingGeneratedSpan");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingGeneratedSpan);
    }
  }
}

TEST_CASE("labels carry two-decimal confidence") {
  const std::string src = "def add(a, b):\n    return a + b\n";
  const auto seq = tlp_from_pairs(src, {{"(", {7, 8}, std::log(0.07)},
                                        {"a", {8, 9}, std::log(0.4)},
                                        {",", {9, 10}, std::log(0.5)},
                                        {" b", {10, 12}, std::log(0.1)},
                                        {")", {12, 13}, std::log(0.1)}});
  const auto at = annotated(seq, Aggregator::Mean);
  const auto g = dotcheck::parse(render_ast(at, config(RenderMode::AstComplete, OutputFormat::Dot)));
  REQUIRE(g.ok());
  bool found = false;
  for (const auto& [id, attrs] : g.node_attributes) {
    if (attrs.at("label") == "parameters\\n0.23") found = true;
  }
  CHECK(found);
  const auto svg = render_ast(at, config(RenderMode::AstComplete, OutputFormat::Svg));
  CHECK(svg.find(std::string(kNullLabel)) != std::string::npos);  // the body has no tokens
}

TEST_CASE("hostile text stays well-formed") {
  const std::string src = "s = \"<&>\\\"]]>--\x01\"  # \xC3\xA9 </svg>\n";
  const auto tree = parse(src);
  std::vector<PairRow> rows;
  for (std::size_t i = 0; i < src.size();) {
    std::size_t j = i + 1;
    while (j < src.size() && (static_cast<unsigned char>(src[j]) & 0xC0) == 0x80) ++j;
    rows.push_back({src.substr(i, j - i), {i, j}, -0.3});
    i = j;
  }
  const auto seq = tlp_from_pairs(src, rows);
  const auto at = annotate(tree, align(seq, tree), seq, Aggregator::Median);
  for (auto f : {OutputFormat::Svg, OutputFormat::Html}) {
    for (auto text : {render_sequence(seq, config(RenderMode::Sequence, f)),
                      render_ast(at, config(RenderMode::AstComplete, f))}) {
      CHECK(is_valid_utf8(text));
      const auto doc = f == OutputFormat::Html ? parse_html(text) : xmlcheck::parse(text);
      CHECK_MESSAGE(doc.ok(), doc.error);
    }
  }
  for (auto text : {render_sequence(seq, config(RenderMode::Sequence, OutputFormat::Dot)),
                    render_ast(at, config(RenderMode::AstComplete, OutputFormat::Dot))}) {
    const auto g = dotcheck::parse(text);
    CHECK_MESSAGE(g.ok(), g.error);
  }
}

TEST_CASE("partial node set equals the span-intersection set") {
  gen::SnippetGenerator g(314);
  for (int trial = 0; trial < 40; ++trial) {
    const auto src = g.snippet(2 + trial % 4);
    auto seq = gen::random_sequence(src, g.rng());
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, src.size() - 1)(g.rng());
    const std::size_t end = std::uniform_int_distribution<std::size_t>(start, src.size())(g.rng());
    seq.generated_span = Span{start, end};
    const auto at = annotated(seq);

    std::set<NodeId> expected;
    std::function<void(const AnnotatedNode&)> walk = [&](const AnnotatedNode& n) {
      bool hit = false;
      for (std::size_t b = n.span.start; b < n.span.end; ++b) hit |= b >= start && b < end;
      // empty spans count when they sit strictly inside the region
      if (n.span.empty()) hit = n.span.start > start && n.span.start < end;
      if (start == end) hit = n.span.start < start && start < n.span.end;
      if (hit) expected.insert(n.node_id);
      for (const auto& c : n.children) walk(c);
    };
    walk(at.root);

    std::set<NodeId> got;
    for (const auto* n : visible_nodes(at, RenderMode::AstPartial)) got.insert(n->node_id);
    CHECK(got == expected);

    const auto doc = xmlcheck::parse(render_ast(at, config(RenderMode::AstPartial, OutputFormat::Svg)));
    REQUIRE(doc.ok());
    std::set<NodeId> drawn;
    for (const auto* e : doc.with_class("g", "node")) drawn.insert(std::stoul(e->attributes.at("id").substr(1)));
    CHECK(drawn == expected);
  }
}
