#include "syntaxlens/tlp.hpp"

#include <cmath>
#include <limits>

#include "syntaxlens/error.hpp"

namespace syntaxlens {

double softmax_at(const std::map<std::string, double>& logits, const std::string& realized) {
  const auto it = logits.find(realized);
  if (it == logits.end()) {
    throw Error(ErrorCode::MissingRealizedToken, "realized token '" + realized + "' not in logits");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (const auto& [tok, y] : logits) max_logit = std::max(max_logit, y);
  double denom = 0.0;
  for (const auto& [tok, y] : logits) denom += std::exp(y - max_logit);
  return std::exp(it->second - max_logit) / denom;
}

void validate_sequence(const TlpSequence& seq) {
  const std::size_t n = seq.source.size();
  for (std::size_t i = 0; i < seq.records.size(); ++i) {
    const auto& r = seq.records[i];
    if (!r.span.valid_for(n)) {
      throw Error(ErrorCode::InvalidSpan, "record " + std::to_string(i) + " span outside source");
    }
    if (!(r.probability >= 0.0 && r.probability <= 1.0) || !(r.logprob <= 0.0)) {
      throw Error(ErrorCode::ProbabilityOutOfRange, "record " + std::to_string(i));
    }
    if (i > 0) {
      const auto& prev = seq.records[i - 1].span;
      if (r.span.start < prev.start) {
        throw Error(ErrorCode::UnsortedSpans, "record " + std::to_string(i) + " starts before its predecessor");
      }
      if (r.span.start < prev.end) {
        throw Error(ErrorCode::SpanOverlap, "record " + std::to_string(i) + " overlaps its predecessor");
      }
    }
  }
  if (seq.generated_span && !seq.generated_span->valid_for(n)) {
    throw Error(ErrorCode::InvalidSpan, "generated span outside source");
  }
}

TlpSequence tlp_from_pairs(std::string source, const std::vector<PairRow>& rows) {
  TlpSequence seq;
  seq.source = std::move(source);
  seq.records.reserve(rows.size());
  for (const auto& row : rows) {
    if (!std::isfinite(row.logprob) && row.logprob != -std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::ProbabilityOutOfRange, "logprob is NaN or +inf");
    }
    if (row.logprob > kLogprobTolerance) {
      throw Error(ErrorCode::ProbabilityOutOfRange,
                  "logprob " + std::to_string(row.logprob) + " > 0 for token '" + row.token_text + "'");
    }
    const double lp = std::min(row.logprob, 0.0);
    seq.records.push_back({row.token_text, row.span, std::exp(lp), lp});
  }
  validate_sequence(seq);
  return seq;
}

TlpSequence tlp_from_distributions(std::string source, const std::vector<DistributionRow>& rows) {
  TlpSequence seq;
  seq.source = std::move(source);
  seq.records.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.logits.empty()) {
      throw Error(ErrorCode::MissingRealizedToken, "empty logits map");
    }
    const double p = softmax_at(row.logits, row.realized_token);
    seq.records.push_back({row.token_text, row.span, p, std::log(p)});
  }
  validate_sequence(seq);
  return seq;
}

double cross_entropy(const TlpSequence& seq) {
  if (seq.records.empty()) throw Error(ErrorCode::EmptySequence, "no records");
  double total = 0.0;
  for (const auto& r : seq.records) {
    if (!(r.probability > 0.0)) {
      throw Error(ErrorCode::ZeroProbability, "token '" + r.token_text + "' has probability 0");
    }
    total += -std::log(r.probability);
  }
  return total / static_cast<double>(seq.records.size());
}

bool truncate_sequence(TlpSequence& seq, std::size_t max_tokens) {
  if (seq.records.size() <= max_tokens) return false;
  seq.records.resize(max_tokens);
  return true;
}

double mean_probability(const TlpSequence& seq) {
  if (seq.records.empty()) throw Error(ErrorCode::EmptySequence, "no records");
  double total = 0.0;
  for (const auto& r : seq.records) total += r.probability;
  return total / static_cast<double>(seq.records.size());
}

}  // namespace syntaxlens
