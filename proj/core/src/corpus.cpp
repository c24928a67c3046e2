#include "syntaxlens/corpus.hpp"

#include <unordered_map>

#include "log.hpp"
#include "parallel.hpp"
#include "syntaxlens/error.hpp"

namespace syntaxlens {
namespace {

struct SnippetOutcome {
  std::optional<SnippetAnalysis> analysis;
  std::vector<double> probabilities;  // kept for the intrinsic reduction
  std::string skip_reason;
};

SnippetOutcome analyze_snippet(const DatasetRecord& rec, TlpSequence seq, const CorpusConfig& cfg) {
  SnippetOutcome out;
  if (seq.source != rec.source) {
    out.skip_reason = "token sequence source differs from dataset source";
    return out;
  }
  SnippetAnalysis a;
  a.snippet_id = rec.snippet_id;
  a.truncated = truncate_sequence(seq, cfg.max_tokens);
  if (seq.records.empty()) {
    out.skip_reason = "no token predictions";
    return out;
  }
  try {
    a.cross_entropy = cross_entropy(seq);
  } catch (const Error& e) {
    out.skip_reason = e.what();
    return out;
  }
  a.mean_probability = mean_probability(seq);
  a.token_count = seq.records.size();

  SyntaxTree tree;
  try {
    tree = parse(rec.source);
  } catch (const Error& e) {
    out.skip_reason = e.what();
    return out;
  }
  a.has_errors = tree.has_errors;
  a.metrics = structural_metrics(tree);
  if (rec.cyclomatic_complexity) a.metrics.cyclomatic_complexity = *rec.cyclomatic_complexity;
  if (rec.ast_levels) a.metrics.ast_levels = *rec.ast_levels;
  if (rec.node_count) a.metrics.node_count = *rec.node_count;
  a.metrics.sequence_size = rec.token_count.value_or(seq.records.size());

  const AlignmentMap map = align(seq, tree);
  a.coverage = coverage_report(map, tree);
  const AnnotatedTree annotated = annotate(tree, map, seq, cfg.aggregator);
  a.kind_scores = snippet_kind_scores(annotated, cfg.aggregator);

  out.probabilities.reserve(seq.records.size());
  for (const auto& r : seq.records) out.probabilities.push_back(r.probability);
  out.analysis = std::move(a);
  return out;
}

}  // namespace

std::map<std::string, std::vector<TlpSequence>> group_by_model(std::vector<TlpSequence> tlps) {
  std::map<std::string, std::vector<TlpSequence>> out;
  for (auto& seq : tlps) {
    auto& bucket = out[seq.model_id];
    bucket.push_back(std::move(seq));
  }
  return out;
}

CorpusReport analyze_corpus(const std::vector<DatasetRecord>& dataset,
                            const std::vector<TlpSequence>& tlps, const CategoryMapping& mapping,
                            const CorpusConfig& cfg) {
  if (dataset.empty()) throw Error(ErrorCode::InsufficientSamples, "dataset is empty");

  std::string model_id;
  std::unordered_map<std::string, const TlpSequence*> by_id;
  for (const auto& seq : tlps) {
    if (by_id.empty()) {
      model_id = seq.model_id;
    } else if (seq.model_id != model_id) {
      throw Error(ErrorCode::InvalidConfig, "analyze_corpus expects a single model, got '" + model_id +
                                                "' and '" + seq.model_id + "'");
    }
    by_id.emplace(seq.snippet_id, &seq);
  }
  std::vector<const TlpSequence*> matched(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto it = by_id.find(dataset[i].snippet_id);
    if (it == by_id.end()) throw Error(ErrorCode::MissingTlp, dataset[i].snippet_id);
    matched[i] = it->second;
  }

  std::vector<SnippetOutcome> outcomes(dataset.size());
  detail::parallel_for(dataset.size(), cfg.jobs, [&](std::size_t i) {
    outcomes[i] = analyze_snippet(dataset[i], *matched[i], cfg);
  });

  CorpusReport report;
  report.model_id = model_id;
  report.mapping_digest = mapping.digest();
  report.aggregator = cfg.aggregator;

  SubcategoryScores sub;
  double prob_total = 0.0;
  std::size_t prob_count = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.analysis) {
      detail::log().warn("skipping snippet {}: {}", dataset[i].snippet_id, o.skip_reason);
      report.skipped.push_back(dataset[i].snippet_id);
      continue;
    }
    if (o.analysis->truncated) {
      detail::log().warn("snippet {} truncated to {} tokens", dataset[i].snippet_id, cfg.max_tokens);
      ++report.truncated_count;
    }
    for (double p : o.probabilities) prob_total += p;
    prob_count += o.probabilities.size();
    for (const auto& [kind, value] : o.analysis->kind_scores) sub[kind].push_back(value);
    report.snippet_analyses.push_back(std::move(*o.analysis));
  }
  if (report.snippet_analyses.empty()) {
    throw Error(ErrorCode::InsufficientSamples, "no snippet in the corpus could be analyzed");
  }
  report.intrinsic = prob_total / static_cast<double>(prob_count);
  report.category_report =
      build_category_report(sub, mapping, cfg.aggregator, cfg.bootstrap_reps, cfg.seed, model_id);
  return report;
}

std::string_view to_string(ThresholdFlag flag) noexcept {
  switch (flag) {
    case ThresholdFlag::Pass: return "pass";
    case ThresholdFlag::Fail: return "fail";
    case ThresholdFlag::Null: return "null";
  }
  return "null";
}

std::map<Category, ThresholdFlag> threshold_flags(const CorpusReport& report, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidConfig, "tau must lie in [0,1]");
  std::map<Category, ThresholdFlag> out;
  for (Category c : kSyntaxCategories) {
    const auto it = report.category_report.per_category.find(c);
    if (it == report.category_report.per_category.end() || it->second.is_null()) {
      out[c] = ThresholdFlag::Null;
    } else {
      out[c] = *it->second.point >= tau ? ThresholdFlag::Pass : ThresholdFlag::Fail;
    }
  }
  return out;
}

ComparisonMatrix report_matrix(const std::vector<CorpusReport>& reports,
                               const std::vector<std::string>& subcategories) {
  if (reports.empty()) throw Error(ErrorCode::InvalidConfig, "no reports to tabulate");
  for (const auto& r : reports) {
    if (r.aggregator != reports.front().aggregator) {
      throw Error(ErrorCode::ConfigMismatch, "reports use different aggregators");
    }
    if (r.mapping_digest != reports.front().mapping_digest) {
      throw Error(ErrorCode::ConfigMismatch, "reports use different category mappings");
    }
  }

  ComparisonMatrix m;
  for (Category c : kSyntaxCategories) m.rows.push_back({"category", std::string(to_string(c))});
  for (const auto& kind : subcategories) m.rows.push_back({"subcategory", kind});
  for (const auto& r : reports) m.columns.push_back(r.model_id);

  m.cells.assign(m.rows.size(), std::vector<std::optional<double>>(reports.size()));
  for (std::size_t row = 0; row < m.rows.size(); ++row) {
    for (std::size_t col = 0; col < reports.size(); ++col) {
      const auto& cr = reports[col].category_report;
      if (row < kSyntaxCategories.size()) {
        const auto it = cr.per_category.find(kSyntaxCategories[row]);
        if (it != cr.per_category.end()) m.cells[row][col] = it->second.point;
      } else {
        const auto it = cr.per_subcategory.find(m.rows[row].name);
        if (it != cr.per_subcategory.end()) m.cells[row][col] = it->second.point;
      }
    }
  }
  return m;
}

ComparisonMatrix compare_models(const std::vector<CorpusReport>& reports,
                                const std::vector<std::pair<std::string, std::string>>& pairs,
                                const std::vector<std::string>& subcategories) {
  if (reports.size() < 2) throw Error(ErrorCode::InvalidConfig, "comparison needs at least two reports");
  ComparisonMatrix m = report_matrix(reports, subcategories);
  const auto column_of = [&](const std::string& id) {
    for (std::size_t i = 0; i < m.columns.size(); ++i) {
      if (m.columns[i] == id) return i;
    }
    throw Error(ErrorCode::InvalidConfig, "no report for model '" + id + "'");
  };
  for (const auto& [a, b] : pairs) {
    const std::size_t ca = column_of(a);
    const std::size_t cb = column_of(b);
    ComparisonDelta d{a, b, {}};
    for (const auto& row : m.cells) {
      if (row[ca] && row[cb]) {
        d.values.emplace_back(*row[ca] - *row[cb]);
      } else {
        d.values.emplace_back(std::nullopt);
      }
    }
    m.deltas.push_back(std::move(d));
  }
  return m;
}

}  // namespace syntaxlens
