#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace syntaxlens {

enum class Aggregator { Median, Mean, Max };

/// Median (average of the two middle values for even sizes), arithmetic
/// mean, or maximum. Returns nullopt for an empty input.
std::optional<double> aggregate(Aggregator agg, std::span<const double> values);

std::string_view to_string(Aggregator agg) noexcept;

/// Accepts "median", "mean"/"average", "max". Throws InvalidConfig.
Aggregator parse_aggregator(std::string_view name);

}  // namespace syntaxlens
