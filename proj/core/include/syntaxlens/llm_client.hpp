#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "syntaxlens/tlp.hpp"

namespace syntaxlens {

inline constexpr const char* kApiKeyEnv = "SYNTAXLENS_API_KEY";

struct EndpointConfig {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key;   // never logged or serialized
  double timeout_seconds = 60.0;
  std::size_t max_tokens = 1024;
  bool echo = true;  // score the snippet itself instead of generating
  std::optional<std::filesystem::path> cache_dir;
  std::size_t max_in_flight = 4;
  std::size_t attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
};

/// SYNTAXLENS_API_KEY, falling back to OPENAI_API_KEY; empty when unset.
std::string api_key_from_env();

/// Converts a completions response body into a TlpSequence. With echo the
/// returned tokens must concatenate to `source`; without echo they form the
/// completion appended after source[0, prompt_len). Tokens whose logprob is
/// null (the first echoed token) get no record.
TlpSequence parse_completion_response(std::string_view body, const std::string& source,
                                      std::size_t prompt_len, bool echo);

/// Requests per-token logprobs from `{base_url}/completions`. Transient
/// failures (connection errors, 429, 5xx) are retried with exponential
/// backoff. Throws LogprobsUnsupported, AuthError,
/// SpanReconstructionFailure or Http.
TlpSequence fetch_tlp(const EndpointConfig& cfg, const std::string& snippet_source,
                      std::size_t prompt_len);

struct FetchRequest {
  std::string snippet_id;
  std::string source;
  std::size_t prompt_len = 0;
};

struct FetchResult {
  std::optional<TlpSequence> sequence;
  std::string error;
};

/// Runs fetch_tlp over all requests with at most cfg.max_in_flight
/// concurrent calls. Results keep request order.
std::vector<FetchResult> fetch_many(const EndpointConfig& cfg, const std::vector<FetchRequest>& requests);

/// Removes every occurrence of `secret` from `text`.
std::string redact(std::string text, const std::string& secret);

}  // namespace syntaxlens
