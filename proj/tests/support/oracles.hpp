#pragma once

// Independent reference implementations used to check the library. They
// favour obviousness over speed and share no code with core/ beyond the
// parsed tree.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "syntaxlens/aggregator.hpp"
#include "syntaxlens/category.hpp"
#include "syntaxlens/syntax_tree.hpp"
#include "syntaxlens/tlp.hpp"

namespace oracle {

using syntaxlens::AstNode;
using syntaxlens::NodeId;

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline double maximum(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

inline double aggregate(syntaxlens::Aggregator agg, const std::vector<double>& v) {
  switch (agg) {
    case syntaxlens::Aggregator::Mean: return mean(v);
    case syntaxlens::Aggregator::Max: return maximum(v);
    default: return median(v);
  }
}

struct FlatNode {
  const AstNode* node;
  std::vector<const AstNode*> ancestors;  // root first, excluding the node
};

inline void flatten(const AstNode& n, std::vector<const AstNode*>& chain, std::vector<FlatNode>& out) {
  out.push_back({&n, chain});
  chain.push_back(&n);
  for (const auto& c : n.children) flatten(c, chain, out);
  chain.pop_back();
}

/// Every node in pre-order with its ancestor chain.
inline std::vector<FlatNode> flat_nodes(const syntaxlens::SyntaxTree& tree) {
  std::vector<FlatNode> out;
  std::vector<const AstNode*> chain;
  flatten(tree.root, chain, out);
  return out;
}

inline std::vector<const AstNode*> leaves(const syntaxlens::SyntaxTree& tree) {
  std::vector<const AstNode*> out;
  for (const auto& f : flat_nodes(tree)) {
    if (f.node->children.empty() && f.node != &tree.root) out.push_back(f.node);
  }
  return out;
}

inline std::size_t overlap(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
  std::size_t n = 0;
  for (std::size_t i = a0; i < a1; ++i) {
    if (i >= b0 && i < b1) ++n;
  }
  return n;
}

/// Full token x terminal overlap matrix.
inline std::vector<std::vector<std::size_t>> overlap_matrix(const syntaxlens::TlpSequence& seq,
                                                            const std::vector<const AstNode*>& terminals) {
  std::vector<std::vector<std::size_t>> m(seq.records.size(), std::vector<std::size_t>(terminals.size()));
  for (std::size_t i = 0; i < seq.records.size(); ++i) {
    for (std::size_t t = 0; t < terminals.size(); ++t) {
      const auto& s = seq.records[i].span;
      m[i][t] = overlap(s.start, s.end, terminals[t]->span.start, terminals[t]->span.end);
    }
  }
  return m;
}

/// Brute-force δ: maximum overlap, first terminal on ties, none on zero.
inline std::vector<std::optional<NodeId>> brute_align(const syntaxlens::TlpSequence& seq,
                                                      const syntaxlens::SyntaxTree& tree) {
  const auto terms = leaves(tree);
  const auto m = overlap_matrix(seq, terms);
  std::vector<std::optional<NodeId>> out(seq.records.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (m[i][t] > best) {
        best = m[i][t];
        out[i] = terms[t]->node_id;
      }
    }
  }
  return out;
}

/// Node confidences by enumerating (token, terminal, ancestor) tuples.
inline std::map<NodeId, double> flat_confidences(const syntaxlens::TlpSequence& seq,
                                                 const syntaxlens::SyntaxTree& tree, syntaxlens::Aggregator agg) {
  const auto nodes = flat_nodes(tree);
  std::map<NodeId, const FlatNode*> by_id;
  for (const auto& f : nodes) by_id[f.node->node_id] = &f;
  const auto assigned = brute_align(seq, tree);

  std::map<NodeId, std::vector<double>> pools;
  for (std::size_t i = 0; i < assigned.size(); ++i) {
    if (!assigned[i]) continue;
    const FlatNode* f = by_id.at(*assigned[i]);
    pools[f->node->node_id].push_back(seq.records[i].probability);
    for (const AstNode* a : f->ancestors) pools[a->node_id].push_back(seq.records[i].probability);
  }
  std::map<NodeId, double> out;
  for (const auto& [id, v] : pools) out[id] = aggregate(agg, v);
  return out;
}

/// kind -> one value per snippet, recomputed without the library pipeline.
inline std::map<std::string, std::vector<double>> flat_subcategories(
    const std::vector<std::pair<syntaxlens::TlpSequence, syntaxlens::SyntaxTree>>& corpus,
    syntaxlens::Aggregator agg) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [seq, tree] : corpus) {
    const auto conf = flat_confidences(seq, tree, agg);
    std::map<std::string, std::vector<double>> per_kind;
    for (const auto& f : flat_nodes(tree)) {
      const auto it = conf.find(f.node->node_id);
      if (it != conf.end()) per_kind[f.node->kind].push_back(it->second);
    }
    for (const auto& [kind, v] : per_kind) out[kind].push_back(aggregate(agg, v));
  }
  return out;
}

inline std::map<syntaxlens::Category, std::vector<double>> flat_categories(
    const std::map<std::string, std::vector<double>>& sub, const syntaxlens::CategoryMapping& mapping) {
  std::map<syntaxlens::Category, std::vector<double>> out;
  for (auto c : syntaxlens::kSyntaxCategories) out[c];
  out[syntaxlens::Category::Unmapped];
  for (const auto& [kind, v] : sub) {
    const auto it = mapping.table().find(kind);
    auto& dst = out[it == mapping.table().end() ? syntaxlens::Category::Unmapped : it->second];
    dst.insert(dst.end(), v.begin(), v.end());
  }
  return out;
}

struct Metrics {
  std::size_t levels = 0;
  std::size_t nodes = 0;
  std::size_t decisions = 0;
};

inline void walk_metrics(const AstNode& n, std::size_t depth, Metrics& m) {
  static const std::set<std::string> decision_kinds{
      "if_statement",   "elif_clause",      "while_statement",        "for_statement",
      "except_clause",  "with_statement",   "assert_statement",       "boolean_operator",
      "conditional_expression", "if_clause", "case_clause"};
  m.levels = std::max(m.levels, depth);
  ++m.nodes;
  if (n.is_named && decision_kinds.contains(n.kind)) ++m.decisions;
  for (const auto& c : n.children) walk_metrics(c, depth + 1, m);
}

inline Metrics dfs_metrics(const syntaxlens::SyntaxTree& tree) {
  Metrics m;
  walk_metrics(tree.root, 1, m);
  return m;
}

/// Least squares via the normal equations and Gauss-Jordan elimination.
inline std::vector<double> ols_normal_equations(const std::vector<std::vector<double>>& x,
                                                const std::vector<double>& y) {
  const std::size_t p = x.front().size();
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < x.size(); ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += x[r][i] * x[r][j];
      a[i][p] += x[r][i] * y[r];
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    if (std::abs(a[col][col]) < 1e-12) throw std::runtime_error("singular normal equations");
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k <= p; ++k) a[r][k] -= f * a[col][k];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t i = 0; i < p; ++i) beta[i] = a[i][p] / a[i][i];
  return beta;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
