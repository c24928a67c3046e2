#include "syntaxlens/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "syntaxlens/error.hpp"

namespace syntaxlens {
namespace {

double median_in_place(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return (lower + upper) / 2.0;
}

}  // namespace

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::InsufficientSamples, "percentile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  // FNV-1a over the label, folded into the base seed.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return seed ^ h;
}

BootstrapEstimate bootstrap_estimate(std::span<const double> values, std::size_t reps,
                                     std::uint64_t seed) {
  if (reps < 1) throw Error(ErrorCode::InvalidConfig, "bootstrap needs at least one resample");
  BootstrapEstimate est;
  est.n_samples = values.size();
  if (values.empty()) return est;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> resample(values.size());
  std::vector<double> medians;
  medians.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    for (auto& x : resample) x = values[pick(rng)];
    medians.push_back(median_in_place(resample));
  }

  // Running mean keeps a constant input exact.
  double mean = 0.0;
  for (std::size_t i = 0; i < medians.size(); ++i) {
    mean += (medians[i] - mean) / static_cast<double>(i + 1);
  }
  std::sort(medians.begin(), medians.end());
  est.point = mean;
  est.ci_low = std::min(percentile_sorted(medians, 0.025), mean);
  est.ci_high = std::max(percentile_sorted(medians, 0.975), mean);
  return est;
}

}  // namespace syntaxlens
