#include "syntaxlens/syntax_tree.hpp"

#include <tree_sitter/api.h>

#include <array>
#include <memory>

#include "syntaxlens/error.hpp"

extern "C" const TSLanguage* tree_sitter_python(void);

namespace syntaxlens {
namespace {

struct ParserDeleter {
  void operator()(TSParser* p) const noexcept { ts_parser_delete(p); }
};
struct TreeDeleter {
  void operator()(TSTree* t) const noexcept { ts_tree_delete(t); }
};

TSParser* thread_parser() {
  thread_local std::unique_ptr<TSParser, ParserDeleter> parser = [] {
    std::unique_ptr<TSParser, ParserDeleter> p(ts_parser_new());
    if (!ts_parser_set_language(p.get(), tree_sitter_python())) {
      throw Error(ErrorCode::Parse, "incompatible tree-sitter Python grammar");
    }
    return p;
  }();
  return parser.get();
}

AstNode convert(TSNode node, NodeId& next_id) {
  AstNode out;
  out.node_id = next_id++;
  out.kind = ts_node_type(node);
  out.span = {ts_node_start_byte(node), ts_node_end_byte(node)};
  out.is_named = ts_node_is_named(node);
  out.is_missing = ts_node_is_missing(node);

  const uint32_t n = ts_node_child_count(node);
  out.children.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    out.children.push_back(convert(ts_node_child(node, i), next_id));
  }
  out.is_terminal = out.children.empty();

  // Extras such as trailing comments can sit past the end reported for
  // their parent; widen the parent so containment holds.
  for (const auto& child : out.children) {
    out.span.start = std::min(out.span.start, child.span.start);
    out.span.end = std::max(out.span.end, child.span.end);
  }
  return out;
}

void visit_preorder(const AstNode& node, std::size_t depth,
                    const std::function<void(const AstNode&, std::size_t)>& visit) {
  visit(node, depth);
  for (const auto& child : node.children) visit_preorder(child, depth + 1, visit);
}

void collect_terminals(const AstNode& node, std::vector<const AstNode*>& out) {
  if (node.is_terminal) {
    out.push_back(&node);
    return;
  }
  for (const auto& child : node.children) collect_terminals(child, out);
}

}  // namespace

bool is_valid_utf8(std::string_view text) noexcept {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    static constexpr std::array<char32_t, 5> min_for_len{0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

SyntaxTree parse(std::string source) {
  if (!is_valid_utf8(source)) {
    throw Error(ErrorCode::Encoding, "source is not valid UTF-8");
  }
  TSParser* parser = thread_parser();
  std::unique_ptr<TSTree, TreeDeleter> ts_tree(
      ts_parser_parse_string(parser, nullptr, source.data(), static_cast<uint32_t>(source.size())));
  if (!ts_tree) throw Error(ErrorCode::Parse, "parser returned no tree");

  const TSNode root = ts_tree_root_node(ts_tree.get());
  SyntaxTree tree;
  NodeId next_id = 0;
  tree.root = convert(root, next_id);
  tree.node_count = next_id;
  tree.has_errors = ts_node_has_error(root);
  tree.root.span = {0, source.size()};
  tree.source = std::move(source);
  return tree;
}

std::vector<const AstNode*> terminals_in_order(const SyntaxTree& tree) {
  std::vector<const AstNode*> out;
  // The empty module is a childless root, but it is not a lexeme.
  if (tree.root.children.empty()) return out;
  collect_terminals(tree.root, out);
  return out;
}

bool is_decision_point(std::string_view kind) noexcept {
  static constexpr std::array<std::string_view, 11> kinds{
      "if_statement",     "elif_clause",       "while_statement",
      "for_statement",    "except_clause",     "with_statement",
      "assert_statement", "boolean_operator",  "conditional_expression",
      "if_clause",        "case_clause"};
  for (auto k : kinds) {
    if (k == kind) return true;
  }
  return false;
}

void for_each_node(const AstNode& root,
                   const std::function<void(const AstNode&, std::size_t depth)>& visit) {
  visit_preorder(root, 1, visit);
}

StructuralMetrics structural_metrics(const SyntaxTree& tree) {
  StructuralMetrics m;
  std::size_t decisions = 0;
  for_each_node(tree.root, [&](const AstNode& node, std::size_t depth) {
    ++m.node_count;
    m.ast_levels = std::max(m.ast_levels, depth);
    if (node.is_named && is_decision_point(node.kind)) ++decisions;
  });
  m.cyclomatic_complexity = 1 + decisions;

  const std::string& src = tree.source;
  for (char c : src) {
    if (c == '\n') ++m.loc;
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      ++m.whitespace_count;
    }
  }
  if (!src.empty() && src.back() != '\n') ++m.loc;
  return m;
}

}  // namespace syntaxlens
