#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "syntaxlens/span.hpp"

namespace syntaxlens {

/// Probability the model assigned to the realized token at one position.
struct TlpRecord {
  std::string token_text;  // tokenizer output, subword markers intact
  Span span;
  double probability = 0.0;
  double logprob = 0.0;  // natural log
};

/// Token-level predictions for one snippet under one model.
struct TlpSequence {
  std::string snippet_id;
  std::string model_id;
  std::string source;
  std::vector<TlpRecord> records;
  std::optional<Span> generated_span;
};

struct PairRow {
  std::string token_text;
  Span span;
  double logprob = 0.0;
};

struct DistributionRow {
  std::string token_text;
  Span span;
  std::map<std::string, double> logits;
  std::string realized_token;
};

/// Softmax of `logits` evaluated at `realized`, with max subtraction.
/// Throws MissingRealizedToken when `realized` is not a key.
double softmax_at(const std::map<std::string, double>& logits, const std::string& realized);

TlpSequence tlp_from_distributions(std::string source, const std::vector<DistributionRow>& rows);

/// Accepts logprob up to +1e-6 (rounding noise from upstream APIs) and
/// clamps it to 0. Spans must be valid, sorted and disjoint.
TlpSequence tlp_from_pairs(std::string source, const std::vector<PairRow>& rows);

/// Checks span ordering/bounds and probability ranges; throws on the first
/// violation.
void validate_sequence(const TlpSequence& seq);

/// Mean of -ln(p) over the records.
double cross_entropy(const TlpSequence& seq);

/// Drops records past `max_tokens`. Returns true when anything was removed.
bool truncate_sequence(TlpSequence& seq, std::size_t max_tokens);

double mean_probability(const TlpSequence& seq);

inline constexpr double kLogprobTolerance = 1e-6;

}  // namespace syntaxlens
