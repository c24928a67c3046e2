#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "syntaxlens/syntax_tree.hpp"
#include "syntaxlens/tlp.hpp"

namespace syntaxlens {

/// Token-to-terminal assignment. Each token maps to at most one terminal
/// (std::nullopt means unaligned); a terminal may collect several tokens.
struct AlignmentMap {
  std::vector<std::optional<NodeId>> entries;  // indexed by token index
  std::map<NodeId, std::vector<std::size_t>> per_terminal;

  std::size_t aligned_count() const noexcept;
};

struct CoverageReport {
  std::size_t unaligned_token_count = 0;
  std::size_t uncovered_terminal_count = 0;
  double coverage_ratio = 0.0;
};

/// Strips leading/trailing subword markers (Ġ, ▁, ##, _) and one leading
/// space. Interior characters are untouched.
std::string normalize_token(std::string_view text);

/// Byte-overlap alignment. A token is assigned to the terminal it overlaps
/// most, ties going to the earliest terminal; tokens overlapping no terminal
/// stay unaligned. Throws SourceMismatch when the sources differ.
AlignmentMap align(const TlpSequence& seq, const SyntaxTree& tree);

CoverageReport coverage_report(const AlignmentMap& map, const SyntaxTree& tree);

}  // namespace syntaxlens
