#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "syntaxlens/aggregator.hpp"
#include "syntaxlens/alignment.hpp"
#include "syntaxlens/bootstrap.hpp"
#include "syntaxlens/category.hpp"
#include "syntaxlens/syntax_tree.hpp"
#include "syntaxlens/tlp.hpp"

namespace syntaxlens {

/// Syntax node enriched with the aggregated probability of every aligned
/// token below it. A node without aligned tokens has no confidence.
struct AnnotatedNode {
  NodeId node_id = 0;
  std::string kind;
  Span span;
  bool is_terminal = false;
  std::optional<double> confidence;
  std::size_t token_count = 0;
  std::vector<AnnotatedNode> children;
};

struct AnnotatedTree {
  AnnotatedNode root;
  std::string source;
  std::string snippet_id;
  std::string model_id;
  std::optional<Span> generated_span;
  Aggregator aggregator = Aggregator::Median;
  std::size_t node_count = 0;
};

/// Per-node confidence = agg over the probabilities of all tokens aligned to
/// terminals in the node's subtree, in token order. Throws
/// AggregationMismatch when map, sequence and tree do not belong together.
AnnotatedTree annotate(const SyntaxTree& tree, const AlignmentMap& map, const TlpSequence& seq,
                       Aggregator agg);

/// Per-snippet subcategory values: for each kind present with a confidence,
/// agg over its occurrences in pre-order.
std::map<std::string, double> snippet_kind_scores(const AnnotatedTree& tree, Aggregator agg);

using SubcategoryScores = std::map<std::string, std::vector<double>>;
using CategoryScores = std::map<Category, std::vector<double>>;

/// One value per snippet that contains the kind, in corpus order.
SubcategoryScores subcategory_scores(const std::vector<AnnotatedTree>& trees, Aggregator agg);

/// Pools subcategory values by mapped category. Every category (and the
/// Unmapped bucket) is present; an empty list means null.
CategoryScores category_scores(const SubcategoryScores& sub, const CategoryMapping& mapping);

struct ScoreEstimate {
  std::optional<double> point;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::size_t n = 0;

  bool is_null() const noexcept { return !point.has_value(); }
};

struct CategoryReport {
  std::string model_id;
  Aggregator aggregator = Aggregator::Median;
  std::uint64_t bootstrap_seed = 0;
  std::size_t bootstrap_reps = kDefaultBootstrapReps;
  std::map<Category, ScoreEstimate> per_category;  // the ten categories
  ScoreEstimate unmapped;
  std::map<std::string, ScoreEstimate> per_subcategory;
};

CategoryReport build_category_report(const SubcategoryScores& sub, const CategoryMapping& mapping,
                                     Aggregator agg, std::size_t reps, std::uint64_t seed,
                                     std::string model_id);

}  // namespace syntaxlens
