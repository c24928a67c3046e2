#include "syntaxlens/alignment.hpp"

#include <array>

#include "syntaxlens/error.hpp"

namespace syntaxlens {
namespace {

constexpr std::array<std::string_view, 4> kMarkers{"\xC4\xA0", "\xE2\x96\x81", "##", "_"};

}  // namespace

std::size_t AlignmentMap::aligned_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.has_value();
  return n;
}

std::string normalize_token(std::string_view text) {
  if (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  bool changed = true;
  while (changed && !text.empty()) {
    changed = false;
    for (auto m : kMarkers) {
      if (text.size() >= m.size() && text.substr(0, m.size()) == m) {
        text.remove_prefix(m.size());
        changed = true;
      }
    }
  }
  changed = true;
  while (changed && !text.empty()) {
    changed = false;
    for (auto m : kMarkers) {
      if (text.size() >= m.size() && text.substr(text.size() - m.size()) == m) {
        text.remove_suffix(m.size());
        changed = true;
      }
    }
  }
  return std::string(text);
}

AlignmentMap align(const TlpSequence& seq, const SyntaxTree& tree) {
  if (seq.source != tree.source) {
    throw Error(ErrorCode::SourceMismatch,
                "token sequence and syntax tree were built from different sources");
  }
  const auto terminals = terminals_in_order(tree);
  AlignmentMap map;
  map.entries.resize(seq.records.size());

  // Both tokens and terminals are sorted and disjoint, so a single forward
  // sweep finds every overlapping pair.
  std::size_t first = 0;
  for (std::size_t t = 0; t < seq.records.size(); ++t) {
    const Span tok = seq.records[t].span;
    while (first < terminals.size() && terminals[first]->span.end <= tok.start) ++first;
    std::size_t best_overlap = 0;
    const AstNode* best = nullptr;
    for (std::size_t k = first; k < terminals.size() && terminals[k]->span.start < tok.end; ++k) {
      const std::size_t ov = overlap(tok, terminals[k]->span);
      if (ov > best_overlap) {
        best_overlap = ov;
        best = terminals[k];
      }
    }
    if (best != nullptr) {
      map.entries[t] = best->node_id;
      map.per_terminal[best->node_id].push_back(t);
    }
  }
  return map;
}

CoverageReport coverage_report(const AlignmentMap& map, const SyntaxTree& tree) {
  CoverageReport r;
  const std::size_t aligned = map.aligned_count();
  r.unaligned_token_count = map.entries.size() - aligned;
  for (const AstNode* term : terminals_in_order(tree)) {
    const auto it = map.per_terminal.find(term->node_id);
    if (it == map.per_terminal.end() || it->second.empty()) ++r.uncovered_terminal_count;
  }
  r.coverage_ratio = map.entries.empty()
                         ? 1.0
                         : static_cast<double>(aligned) / static_cast<double>(map.entries.size());
  return r;
}

}  // namespace syntaxlens
