#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "syntaxlens/span.hpp"

namespace syntaxlens {

using NodeId = std::size_t;

/// A node of the concrete syntax tree. Kinds use the tree-sitter Python
/// grammar vocabulary ("if_statement", "identifier", "(", ...). Error
/// recovery nodes keep the kind "ERROR".
struct AstNode {
  std::string kind;
  Span span;
  std::vector<AstNode> children;
  bool is_terminal = true;
  NodeId node_id = 0;
  bool is_named = true;
  bool is_missing = false;
};

/// Immutable parse result. Node ids are assigned in pre-order starting at 0
/// for the root.
struct SyntaxTree {
  AstNode root;
  std::string source;
  bool has_errors = false;
  std::size_t node_count = 0;
};

struct StructuralMetrics {
  std::size_t ast_levels = 0;
  std::size_t node_count = 0;
  std::size_t loc = 0;
  std::size_t whitespace_count = 0;
  std::size_t cyclomatic_complexity = 1;
  std::size_t sequence_size = 0;

  friend bool operator==(const StructuralMetrics&, const StructuralMetrics&) = default;
};

/// Parses Python source. Never fails on malformed code: error recovery
/// nodes stay in the tree and has_errors is set. Throws Error(Encoding)
/// when the input is not valid UTF-8.
SyntaxTree parse(std::string source);

/// Terminal nodes sorted by span start.
std::vector<const AstNode*> terminals_in_order(const SyntaxTree& tree);

/// sequence_size is left at 0; callers fill it from the token sequence.
StructuralMetrics structural_metrics(const SyntaxTree& tree);

/// Kinds counted as decision points for cyclomatic complexity.
bool is_decision_point(std::string_view kind) noexcept;

/// Pre-order traversal; depth starts at 1 for the root.
void for_each_node(const AstNode& root,
                   const std::function<void(const AstNode&, std::size_t depth)>& visit);

bool is_valid_utf8(std::string_view text) noexcept;

}  // namespace syntaxlens
