#pragma once

#include <algorithm>
#include <cstddef>

namespace syntaxlens {

/// Half-open byte range [start, end) into a source buffer.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  constexpr std::size_t size() const noexcept { return end - start; }
  constexpr bool empty() const noexcept { return start == end; }
  constexpr bool valid_for(std::size_t source_len) const noexcept {
    return start <= end && end <= source_len;
  }
  constexpr bool contains(const Span& other) const noexcept {
    return start <= other.start && other.end <= end;
  }

  friend constexpr bool operator==(const Span&, const Span&) = default;
};

/// Number of bytes shared by two spans.
constexpr std::size_t overlap(const Span& a, const Span& b) noexcept {
  const std::size_t lo = std::max(a.start, b.start);
  const std::size_t hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

/// True when the spans share at least one byte. An empty span intersects
/// a non-empty one when it sits strictly inside it.
constexpr bool intersects(const Span& a, const Span& b) noexcept {
  if (overlap(a, b) > 0) return true;
  if (a.empty()) return b.start < a.start && a.start < b.end;
  if (b.empty()) return a.start < b.start && b.start < a.end;
  return false;
}

}  // namespace syntaxlens
