#pragma once

// Seeded generators of small Python programs and synthetic tokenizations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "syntaxlens/tlp.hpp"

namespace gen {

class SnippetGenerator {
 public:
  explicit SnippetGenerator(std::uint64_t seed) : rng_(seed) {}

  /// A syntactically valid snippet with `statements` top-level statements.
  /// With allow_exceptions false no try/except/raise is produced.
  std::string snippet(int statements, bool allow_exceptions = true) {
    allow_exceptions_ = allow_exceptions;
    std::string out;
    for (int i = 0; i < statements; ++i) out += statement(0, 2);
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  std::string name() {
    static const char* names[] = {"x", "y", "total", "items", "value", "count", "data", "result", "i", "key"};
    return names[pick(10)];
  }

  std::string atom() {
    switch (pick(7)) {
      case 0: return name();
      case 1: return std::to_string(pick(100));
      case 2: return std::to_string(pick(10)) + "." + std::to_string(pick(10));
      case 3: return "\"s" + std::to_string(pick(10)) + "\"";
      case 4: return pick(2) ? "True" : "None";
      case 5: return name() + "[" + std::to_string(pick(4)) + "]";
      default: return name() + "." + name();
    }
  }

  std::string expr(int depth) {
    if (depth <= 0) return atom();
    switch (pick(8)) {
      case 0: return expr(depth - 1) + " + " + expr(depth - 1);
      case 1: return expr(depth - 1) + " * " + atom();
      case 2: return name() + "(" + expr(depth - 1) + ")";
      case 3: return "[" + atom() + ", " + atom() + "]";
      case 4: return "{" + atom() + ": " + atom() + "}";
      case 5: return "[" + name() + " for " + name() + " in " + name() + "]";
      case 6: return "lambda " + name() + ": " + expr(depth - 1);
      default: return atom() + " if " + atom() + " > " + atom() + " else " + atom();
    }
  }

  std::string cond() {
    switch (pick(3)) {
      case 0: return atom() + " < " + atom();
      case 1: return atom() + " and not " + atom();
      default: return name() + " in " + name();
    }
  }

  std::string block(int indent, int depth) {
    std::string out;
    const int n = 1 + pick(2);
    for (int i = 0; i < n; ++i) out += statement(indent + 1, depth - 1);
    return out;
  }

  std::string statement(int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    const int choices = depth > 0 ? 12 : 5;
    switch (pick(choices)) {
      case 0: return pad + name() + " = " + expr(2) + "\n";
      case 1: return pad + name() + " += " + atom() + "\n";
      case 2: return pad + name() + "(" + expr(1) + ")\n";
      case 3: return pad + "# note " + name() + "\n";
      case 4: return pad + "return " + expr(1) + "\n";
      case 5: return pad + "if " + cond() + ":\n" + block(indent, depth) +
                     (pick(2) ? pad + "else:\n" + block(indent, depth) : "");
      case 6: return pad + "for " + name() + " in range(" + atom() + "):\n" + block(indent, depth);
      case 7: return pad + "while " + cond() + ":\n" + block(indent, depth);
      case 8: return pad + "def " + name() + "_fn(" + name() + ", " + name() + "=1):\n" + block(indent, depth);
      case 9:
        if (allow_exceptions_) {
          return pad + "try:\n" + block(indent, depth) + pad + "except ValueError as err:\n" + pad +
                 "    raise RuntimeError(" + atom() + ")\n";
        }
        return pad + "assert " + cond() + "\n";
      case 10: return pad + "with open(" + atom() + ") as fh:\n" + block(indent, depth);
      default: return pad + "class C" + std::to_string(pick(9)) + ":\n" + block(indent, depth);
    }
  }

  std::mt19937_64 rng_;
  bool allow_exceptions_ = true;
};

struct TokenizeOptions {
  std::size_t max_piece = 6;
  double gap_probability = 0.0;  // chance to leave a piece untokenized
  std::size_t max_tokens = 0;    // 0 = unlimited
};

/// Random contiguous pieces of `source` (ASCII) as PairRows with random
/// probabilities in (0, 1]. Pieces never split multi-byte characters.
inline std::vector<syntaxlens::PairRow> random_tokenization(const std::string& source, std::mt19937_64& rng,
                                                            const TokenizeOptions& opts = {}) {
  std::vector<syntaxlens::PairRow> rows;
  std::uniform_int_distribution<std::size_t> len(1, opts.max_piece);
  std::uniform_real_distribution<double> prob(0.01, 1.0);
  std::bernoulli_distribution gap(opts.gap_probability);
  std::size_t pos = 0;
  while (pos < source.size()) {
    std::size_t end = std::min(source.size(), pos + len(rng));
    while (end < source.size() && (static_cast<unsigned char>(source[end]) & 0xC0) == 0x80) ++end;
    if (!gap(rng)) {
      const double p = prob(rng);
      rows.push_back({source.substr(pos, end - pos), {pos, end}, std::log(p)});
      if (opts.max_tokens && rows.size() == opts.max_tokens) break;
    }
    pos = end;
  }
  return rows;
}

inline syntaxlens::TlpSequence random_sequence(const std::string& source, std::mt19937_64& rng,
                                               const TokenizeOptions& opts = {}) {
  return syntaxlens::tlp_from_pairs(source, random_tokenization(source, rng, opts));
}

}  // namespace gen
