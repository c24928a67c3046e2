#include "syntaxlens/clustering.hpp"

#include "syntaxlens/error.hpp"

namespace syntaxlens {
namespace {

struct Annotator {
  const AlignmentMap& map;
  const TlpSequence& seq;
  Aggregator agg;

  // Appends the probabilities of tokens under `node` to `out` in token order.
  AnnotatedNode run(const AstNode& node, std::vector<double>& out) const {
    AnnotatedNode a;
    a.node_id = node.node_id;
    a.kind = node.kind;
    a.span = node.span;
    a.is_terminal = node.is_terminal;

    const std::size_t begin = out.size();
    if (node.is_terminal) {
      if (const auto it = map.per_terminal.find(node.node_id); it != map.per_terminal.end()) {
        for (std::size_t t : it->second) out.push_back(seq.records[t].probability);
      }
    } else {
      a.children.reserve(node.children.size());
      for (const auto& child : node.children) a.children.push_back(run(child, out));
    }
    const std::span<const double> mine(out.data() + begin, out.size() - begin);
    a.token_count = mine.size();
    a.confidence = aggregate(agg, mine);
    return a;
  }
};

void check_identity(const SyntaxTree& tree, const AlignmentMap& map, const TlpSequence& seq) {
  if (seq.source != tree.source) {
    throw Error(ErrorCode::AggregationMismatch, "sequence source differs from tree source");
  }
  if (map.entries.size() != seq.records.size()) {
    throw Error(ErrorCode::AggregationMismatch, "alignment has " + std::to_string(map.entries.size()) +
                                                    " entries for " + std::to_string(seq.records.size()) +
                                                    " tokens");
  }
  std::vector<bool> is_terminal(tree.node_count, false);
  for (const AstNode* t : terminals_in_order(tree)) is_terminal[t->node_id] = true;
  for (const auto& [node, tokens] : map.per_terminal) {
    if (node >= tree.node_count || !is_terminal[node]) {
      throw Error(ErrorCode::AggregationMismatch,
                  "alignment references node " + std::to_string(node) + " which is not a terminal");
    }
    for (std::size_t t : tokens) {
      if (t >= map.entries.size() || map.entries[t] != node) {
        throw Error(ErrorCode::AggregationMismatch, "alignment index is not consistent");
      }
    }
  }
}

void collect_kind_values(const AnnotatedNode& node, std::map<std::string, std::vector<double>>& acc) {
  if (node.confidence) acc[node.kind].push_back(*node.confidence);
  for (const auto& child : node.children) collect_kind_values(child, acc);
}

ScoreEstimate to_estimate(const BootstrapEstimate& b) {
  return {b.point, b.ci_low, b.ci_high, b.n_samples};
}

}  // namespace

AnnotatedTree annotate(const SyntaxTree& tree, const AlignmentMap& map, const TlpSequence& seq,
                       Aggregator agg) {
  check_identity(tree, map, seq);
  AnnotatedTree out;
  std::vector<double> scratch;
  scratch.reserve(seq.records.size());
  out.root = Annotator{map, seq, agg}.run(tree.root, scratch);
  out.source = tree.source;
  out.snippet_id = seq.snippet_id;
  out.model_id = seq.model_id;
  out.generated_span = seq.generated_span;
  out.aggregator = agg;
  out.node_count = tree.node_count;
  return out;
}

std::map<std::string, double> snippet_kind_scores(const AnnotatedTree& tree, Aggregator agg) {
  std::map<std::string, std::vector<double>> occurrences;
  collect_kind_values(tree.root, occurrences);
  std::map<std::string, double> out;
  for (const auto& [kind, values] : occurrences) out.emplace(kind, *aggregate(agg, values));
  return out;
}

SubcategoryScores subcategory_scores(const std::vector<AnnotatedTree>& trees, Aggregator agg) {
  SubcategoryScores out;
  for (const auto& tree : trees) {
    for (const auto& [kind, value] : snippet_kind_scores(tree, agg)) out[kind].push_back(value);
  }
  return out;
}

CategoryScores category_scores(const SubcategoryScores& sub, const CategoryMapping& mapping) {
  CategoryScores out;
  for (Category c : kSyntaxCategories) out[c];
  out[Category::Unmapped];
  for (const auto& [kind, values] : sub) {
    auto& bucket = out[mapping.lookup(kind)];
    bucket.insert(bucket.end(), values.begin(), values.end());
  }
  return out;
}

CategoryReport build_category_report(const SubcategoryScores& sub, const CategoryMapping& mapping,
                                     Aggregator agg, std::size_t reps, std::uint64_t seed,
                                     std::string model_id) {
  CategoryReport report;
  report.model_id = std::move(model_id);
  report.aggregator = agg;
  report.bootstrap_seed = seed;
  report.bootstrap_reps = reps;

  for (const auto& [cat, values] : category_scores(sub, mapping)) {
    const auto est = to_estimate(bootstrap_estimate(values, reps, derive_seed(seed, "category:" + std::string(to_string(cat)))));
    if (cat == Category::Unmapped) {
      report.unmapped = est;
    } else {
      report.per_category.emplace(cat, est);
    }
  }
  for (const auto& [kind, values] : sub) {
    report.per_subcategory.emplace(kind, to_estimate(bootstrap_estimate(values, reps, derive_seed(seed, "kind:" + kind))));
  }
  return report;
}

}  // namespace syntaxlens
