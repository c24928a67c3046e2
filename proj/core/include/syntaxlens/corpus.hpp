#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "syntaxlens/aggregator.hpp"
#include "syntaxlens/alignment.hpp"
#include "syntaxlens/category.hpp"
#include "syntaxlens/clustering.hpp"
#include "syntaxlens/syntax_tree.hpp"
#include "syntaxlens/tlp.hpp"

namespace syntaxlens {

inline constexpr std::size_t kMaxPromptTokens = 1024;
inline constexpr double kDefaultThreshold = 0.6;

/// One dataset line. Metrics left empty are recomputed from the parse.
struct DatasetRecord {
  std::string snippet_id;
  std::string source;
  std::optional<std::size_t> cyclomatic_complexity;
  std::optional<std::size_t> ast_levels;
  std::optional<std::size_t> node_count;
  std::optional<std::size_t> token_count;
  std::optional<std::size_t> prompt_len;
};

struct SnippetAnalysis {
  std::string snippet_id;
  StructuralMetrics metrics;
  double cross_entropy = 0.0;
  double mean_probability = 0.0;
  std::size_t token_count = 0;
  bool truncated = false;
  bool has_errors = false;
  CoverageReport coverage;
  std::map<std::string, double> kind_scores;
};

struct CorpusConfig {
  Aggregator aggregator = Aggregator::Median;
  std::size_t bootstrap_reps = kDefaultBootstrapReps;
  std::uint64_t seed = 0;
  std::size_t max_tokens = kMaxPromptTokens;
  std::size_t jobs = 0;  // 0 = hardware concurrency
};

struct CorpusReport {
  std::string model_id;
  std::string mapping_digest;
  Aggregator aggregator = Aggregator::Median;
  std::vector<SnippetAnalysis> snippet_analyses;
  CategoryReport category_report;
  double intrinsic = 0.0;
  std::vector<std::string> skipped;
  std::size_t truncated_count = 0;
};

/// parse -> align -> annotate -> subcategory -> category -> bootstrap for
/// one model. Every dataset snippet needs a sequence in `tlps` (MissingTlp
/// otherwise); snippets whose sequence cannot be analyzed are skipped and
/// listed. Output is independent of `jobs`.
CorpusReport analyze_corpus(const std::vector<DatasetRecord>& dataset,
                            const std::vector<TlpSequence>& tlps, const CategoryMapping& mapping,
                            const CorpusConfig& cfg);

/// Splits sequences by model_id, preserving input order within a model.
std::map<std::string, std::vector<TlpSequence>> group_by_model(std::vector<TlpSequence> tlps);

enum class ThresholdFlag { Pass, Fail, Null };
std::string_view to_string(ThresholdFlag flag) noexcept;

/// Pass iff the category point is >= tau; null categories stay null.
std::map<Category, ThresholdFlag> threshold_flags(const CorpusReport& report,
                                                  double tau = kDefaultThreshold);

struct ComparisonRow {
  std::string level;  // "category" or "subcategory"
  std::string name;
};

struct ComparisonDelta {
  std::string model_a;
  std::string model_b;
  std::vector<std::optional<double>> values;  // cell(a) - cell(b), per row
};

struct ComparisonMatrix {
  std::vector<ComparisonRow> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> cells;  // [row][column]
  std::vector<ComparisonDelta> deltas;
};

/// Point estimates of every report, without deltas. Rows are the ten
/// categories followed by `subcategories`. Throws ConfigMismatch when reports
/// used different aggregators or mappings.
ComparisonMatrix report_matrix(const std::vector<CorpusReport>& reports,
                               const std::vector<std::string>& subcategories = {});

/// report_matrix over at least two reports plus the requested deltas.
ComparisonMatrix compare_models(const std::vector<CorpusReport>& reports,
                                const std::vector<std::pair<std::string, std::string>>& pairs,
                                const std::vector<std::string>& subcategories = {});

}  // namespace syntaxlens
