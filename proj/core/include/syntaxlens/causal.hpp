#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "syntaxlens/category.hpp"
#include "syntaxlens/corpus.hpp"

namespace syntaxlens {

inline constexpr std::array<std::string_view, 4> kConfounderNames{
    "cyclomatic_complexity", "ast_levels", "node_count", "sequence_size"};

/// T, Y and Z for one snippet.
struct CausalSample {
  std::string snippet_id;
  std::optional<double> treatment;
  double outcome = 0.0;  // cross-entropy loss
  std::array<double, 4> confounders{};
};

struct AteResult {
  double ate = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
  std::vector<std::string> dropped_confounders;
};

struct AteOptions {
  bool standardize_confounders = false;
  // Constant confounders are collinear with the intercept; drop them
  // instead of failing with RankDeficient.
  bool drop_constant_confounders = false;
};

struct PlaceboResult {
  double placebo_ate = 0.0;  // mean |ATE| over permutations
  double signed_mean = 0.0;
  bool placebo_pass = false;
};

/// Sample Pearson coefficient. Throws LengthMismatch, InsufficientSamples
/// (fewer than 3 points) or DegenerateVariance.
double pearson(std::span<const double> x, std::span<const double> y);

/// OLS fit of Y ~ 1 + T + Z over non-null samples; the ATE is the T
/// coefficient. Throws InsufficientSamples (< 10) or RankDeficient.
AteResult ate_linear(const std::vector<CausalSample>& samples, const AteOptions& opts = {});

/// ATE re-estimated with T replaced by seeded permutations of itself.
std::vector<double> placebo_ates(const std::vector<CausalSample>& samples, std::uint64_t seed,
                                 std::size_t permutations, const AteOptions& opts = {});

/// Passes when mean |placebo ATE| < max(0.05, 0.1 * |ate|).
PlaceboResult placebo_refute(const std::vector<CausalSample>& samples, std::uint64_t seed,
                             std::size_t permutations, const AteOptions& opts = {});

struct CausalConfig {
  std::uint64_t seed = 0;
  std::size_t permutations = 100;
  bool standardize_confounders = false;
};

struct CausalEstimate {
  std::string model_id;
  std::string category;     // mapped category, or the category treated
  std::string subcategory;  // node kind; empty for category-level rows
  std::string treatment_name;
  std::size_t n = 0;
  std::optional<double> rho;
  std::optional<double> ate;
  std::optional<double> ate_stderr;
  std::optional<double> placebo_ate;
  bool placebo_pass = false;
  std::string error;
};

/// Node kinds analysed by default, one per row of the learning-error table.
const std::vector<std::string>& default_causal_treatments();

inline constexpr std::string_view kBaselineTreatment = "intrinsic";

/// Builds samples for a treatment name: a category name, a node kind, or
/// "intrinsic" for the per-snippet mean token probability.
std::vector<CausalSample> causal_samples(const CorpusReport& corpus, const std::string& treatment,
                                         const CategoryMapping& mapping);

/// One row per treatment plus the intrinsic baseline row. Per-treatment
/// failures are recorded in the row's error field.
std::vector<CausalEstimate> causal_report(const CorpusReport& corpus,
                                          const std::vector<std::string>& treatments,
                                          const CategoryMapping& mapping, const CausalConfig& cfg);

}  // namespace syntaxlens
