#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "syntaxlens/llm_client.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "log.hpp"
#include "parallel.hpp"
#include "sha256.hpp"
#include "syntaxlens/alignment.hpp"
#include "syntaxlens/error.hpp"
#include "syntaxlens/io.hpp"
#include "syntaxlens/serialization.hpp"

namespace syntaxlens {
namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

ParsedUrl split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (base_url.empty() || scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "base_url must look like http(s)://host[:port][/path]");
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl u;
  u.scheme_host_port = base_url.substr(0, path_start);
  u.path_prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!u.path_prefix.empty() && u.path_prefix.back() == '/') u.path_prefix.pop_back();
  return u;
}

// Byte-level BPE renders space, newline and tab as printable stand-ins.
std::string decode_markers(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    const auto rest = text.substr(i);
    if (rest.starts_with("\xC4\xA0") || rest.starts_with("\xE2\x96\x81")) {
      out += ' ';
      i += rest.starts_with("\xC4\xA0") ? 2 : 3;
    } else if (rest.starts_with("\xC4\x8A")) {
      out += '\n';
      i += 2;
    } else if (rest.starts_with("\xC4\x89")) {
      out += '\t';
      i += 2;
    } else {
      out += text[i++];
    }
  }
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::optional<Span> place_token(const std::string& source, std::size_t pos, std::string_view text) {
  if (source.compare(pos, text.size(), text) == 0 && pos + text.size() <= source.size()) {
    return Span{pos, pos + text.size()};
  }
  const std::string decoded = decode_markers(text);
  if (pos + decoded.size() <= source.size() && source.compare(pos, decoded.size(), decoded) == 0) {
    return Span{pos, pos + decoded.size()};
  }
  const std::string norm = normalize_token(text);
  if (norm.empty()) return std::nullopt;
  std::size_t q = pos;
  while (q < source.size() && is_space(source[q])) ++q;
  if (q + norm.size() <= source.size() && source.compare(q, norm.size(), norm) == 0) {
    return Span{q, q + norm.size()};
  }
  return std::nullopt;
}

std::string cache_key(const EndpointConfig& cfg, const std::string& source, std::size_t prompt_len) {
  const std::string material = cfg.base_url + "\n" + cfg.model + "\n" + (cfg.echo ? "echo" : "complete") + "\n" +
                               std::to_string(cfg.max_tokens) + "\n" + std::to_string(prompt_len) + "\n" +
                               detail::sha256_hex(source);
  return detail::sha256_hex(material);
}

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::optional<std::string> cache_get(const EndpointConfig& cfg, const std::string& key) {
  if (!cfg.cache_dir) return std::nullopt;
  const auto path = *cfg.cache_dir / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  return read_file(path);
}

void cache_put(const EndpointConfig& cfg, const std::string& key, const std::string& body) {
  if (!cfg.cache_dir) return;
  std::lock_guard lock(cache_mutex());
  write_file_atomic(*cfg.cache_dir / (key + ".json"), body);
}

std::string request_body(const EndpointConfig& cfg, const std::string& source, std::size_t prompt_len) {
  Json body{{"model", cfg.model},
            {"prompt", cfg.echo ? source : source.substr(0, prompt_len)},
            {"max_tokens", cfg.echo ? 0 : cfg.max_tokens},
            {"logprobs", 1},
            {"echo", cfg.echo},
            {"temperature", 0}};
  return body.dump();
}

std::string post_with_retries(const EndpointConfig& cfg, const std::string& payload) {
  const ParsedUrl url = split_url(cfg.base_url);
  httplib::Client client(url.scheme_host_port);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(cfg.timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  if (!cfg.api_key.empty()) client.set_bearer_token_auth(cfg.api_key);

  const std::string path = url.path_prefix + "/completions";
  std::string last_error;
  auto backoff = cfg.initial_backoff;
  const std::size_t attempts = std::max<std::size_t>(1, cfg.attempts);
  for (std::size_t attempt = 1; attempt <= attempts; ++attempt) {
    const auto res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
    } else if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::AuthError, "endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status >= 400) {
      const std::string msg = redact(res->body.substr(0, 300), cfg.api_key);
      if (res->body.find("logprob") != std::string::npos) {
        throw Error(ErrorCode::LogprobsUnsupported, "endpoint refused logprobs: " + msg);
      }
      throw Error(ErrorCode::Http, "HTTP " + std::to_string(res->status) + ": " + msg);
    } else {
      return res->body;
    }
    if (attempt < attempts) {
      detail::log().warn("completions attempt {}/{} failed ({}); retrying in {} ms", attempt, attempts,
                         last_error, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorCode::Http, redact(last_error, cfg.api_key) + " after " + std::to_string(attempts) + " attempts");
}

}  // namespace

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos)) {
    text.replace(pos, secret.size(), "***");
  }
  return text;
}

std::string api_key_from_env() {
  if (const char* v = std::getenv(kApiKeyEnv); v && *v) return v;
  if (const char* v = std::getenv("OPENAI_API_KEY"); v && *v) return v;
  return {};
}

TlpSequence parse_completion_response(std::string_view body, const std::string& source,
                                      std::size_t prompt_len, bool echo) {
  const Json doc = parse_json(body, "completions response");
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::Http, "response has no choices");
  }
  const Json& choice = choices->front();
  const auto lp = choice.find("logprobs");
  if (lp == choice.end() || lp->is_null() || !lp->contains("tokens") || !lp->contains("token_logprobs")) {
    throw Error(ErrorCode::LogprobsUnsupported, "response carries no token logprobs");
  }
  const Json& tokens = lp->at("tokens");
  const Json& logprobs = lp->at("token_logprobs");
  if (!tokens.is_array() || !logprobs.is_array() || tokens.size() != logprobs.size()) {
    throw Error(ErrorCode::Http, "tokens and token_logprobs differ in length");
  }

  if (prompt_len > source.size()) throw Error(ErrorCode::InvalidSpan, "prompt_len beyond snippet end");
  std::string full = echo ? source : source.substr(0, prompt_len) + choice.value("text", std::string());
  std::size_t pos = echo ? 0 : prompt_len;

  std::vector<PairRow> rows;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto text = tokens[i].get<std::string>();
    const auto span = place_token(full, pos, text);
    if (!span) {
      throw Error(ErrorCode::SpanReconstructionFailure,
                  "token " + std::to_string(i) + " does not match the source at byte " + std::to_string(pos));
    }
    pos = span->end;
    if (logprobs[i].is_null()) continue;
    rows.push_back({text, *span, logprobs[i].get<double>()});
  }
  for (std::size_t k = pos; k < full.size(); ++k) {
    if (!is_space(full[k])) {
      throw Error(ErrorCode::SpanReconstructionFailure,
                  "tokens cover " + std::to_string(pos) + " of " + std::to_string(full.size()) + " bytes");
    }
  }
  const std::size_t gen_start = std::min(prompt_len, full.size());
  TlpSequence seq = tlp_from_pairs(std::move(full), rows);
  seq.generated_span = Span{gen_start, seq.source.size()};
  return seq;
}

TlpSequence fetch_tlp(const EndpointConfig& cfg, const std::string& snippet_source, std::size_t prompt_len) {
  if (cfg.base_url.empty()) throw Error(ErrorCode::InvalidConfig, "base_url is empty");
  if (cfg.max_tokens < 1) throw Error(ErrorCode::InvalidConfig, "max_tokens must be >= 1");
  const std::string key = cache_key(cfg, snippet_source, prompt_len);
  std::string body;
  if (auto cached = cache_get(cfg, key)) {
    body = std::move(*cached);
  } else {
    body = post_with_retries(cfg, request_body(cfg, snippet_source, prompt_len));
    // Only cache bodies that parse into a valid sequence.
    auto seq = parse_completion_response(body, snippet_source, prompt_len, cfg.echo);
    cache_put(cfg, key, body);
    seq.model_id = cfg.model;
    return seq;
  }
  auto seq = parse_completion_response(body, snippet_source, prompt_len, cfg.echo);
  seq.model_id = cfg.model;
  return seq;
}

std::vector<FetchResult> fetch_many(const EndpointConfig& cfg, const std::vector<FetchRequest>& requests) {
  std::vector<FetchResult> out(requests.size());
  detail::parallel_for(requests.size(), std::max<std::size_t>(1, cfg.max_in_flight), [&](std::size_t i) {
    const auto& req = requests[i];
    try {
      auto seq = fetch_tlp(cfg, req.source, req.prompt_len);
      seq.snippet_id = req.snippet_id;
      out[i].sequence = std::move(seq);
    } catch (const Error& e) {
      out[i].error = redact(e.what(), cfg.api_key);
      detail::log().error("snippet {}: {}", req.snippet_id, out[i].error);
    }
  });
  return out;
}

}  // namespace syntaxlens
