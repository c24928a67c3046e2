#include "syntaxlens/aggregator.hpp"

#include <algorithm>
#include <vector>

#include "syntaxlens/error.hpp"

namespace syntaxlens {

std::optional<double> aggregate(Aggregator agg, std::span<const double> values) {
  if (values.empty()) return std::nullopt;
  switch (agg) {
    case Aggregator::Mean: {
      double total = 0.0;
      for (double v : values) total += v;
      return total / static_cast<double>(values.size());
    }
    case Aggregator::Max:
      return *std::max_element(values.begin(), values.end());
    case Aggregator::Median: {
      std::vector<double> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      if (n % 2 == 1) return sorted[n / 2];
      return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    }
  }
  return std::nullopt;
}

std::string_view to_string(Aggregator agg) noexcept {
  switch (agg) {
    case Aggregator::Median: return "median";
    case Aggregator::Mean: return "mean";
    case Aggregator::Max: return "max";
  }
  return "median";
}

Aggregator parse_aggregator(std::string_view name) {
  if (name == "median") return Aggregator::Median;
  if (name == "mean" || name == "average") return Aggregator::Mean;
  if (name == "max") return Aggregator::Max;
  throw Error(ErrorCode::InvalidConfig, "unknown aggregator '" + std::string(name) + "'");
}

}  // namespace syntaxlens
