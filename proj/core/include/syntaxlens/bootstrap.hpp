#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace syntaxlens {

struct BootstrapEstimate {
  std::optional<double> point;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::size_t n_samples = 0;
};

inline constexpr std::size_t kDefaultBootstrapReps = 500;

/// Median bootstrap: `reps` resamples with replacement of size |values|;
/// the point is the mean of resample medians, the interval the 2.5/97.5
/// percentiles of those medians. Empty input gives an all-null estimate.
/// Deterministic for a fixed seed.
BootstrapEstimate bootstrap_estimate(std::span<const double> values, std::size_t reps,
                                     std::uint64_t seed);

/// Per-row seed so that every report row draws its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

/// Linear-interpolated percentile (q in [0,1]) of sorted data.
double percentile_sorted(std::span<const double> sorted, double q);

}  // namespace syntaxlens
