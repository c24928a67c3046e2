#include <doctest.h>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <sstream>

#include "stub_server.hpp"
#include "syntaxlens/error.hpp"
#include "syntaxlens/io.hpp"
#include "syntaxlens/llm_client.hpp"
#include "syntaxlens/serialization.hpp"

using namespace syntaxlens;
namespace fs = std::filesystem;

namespace {

const std::string kSecret = "sk-test-0123456789abcdef";

std::string completion(const std::vector<std::string>& tokens, const std::vector<Json>& logprobs,
                       const std::string& text = "") {
  Json j{{"id", "cmpl-1"},
         {"choices", Json::array({Json{{"text", text},
                                       {"index", 0},
                                       {"logprobs", Json{{"tokens", tokens}, {"token_logprobs", logprobs}}}}})}};
  return j.dump();
}

EndpointConfig config(const StubServer& s) {
  EndpointConfig cfg;
  cfg.base_url = s.base_url();
  cfg.model = "stub-model";
  cfg.api_key = kSecret;
  cfg.timeout_seconds = 5;
  cfg.initial_backoff = std::chrono::milliseconds(1);
  return cfg;
}

template <typename Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an Error");
  return Error(ErrorCode::Io, "");
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("syntaxlens-test-" + name + "-" +
                                               std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("five echoed tokens tile the source") {
  const std::string src = "def f(): pass\n";
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion({"def", " f", "():", " pass", "\n"}, {-0.5, -1.0, -0.25, -0.1, -2.0}),
                    "application/json");
  });
  const auto seq = fetch_tlp(config(server), src, 0);
  REQUIRE(seq.records.size() == 5);
  std::size_t pos = 0;
  for (const auto& r : seq.records) {
    CHECK(r.span.start == pos);
    pos = r.span.end;
  }
  CHECK(pos == src.size());
  CHECK(seq.records[1].probability == doctest::Approx(std::exp(-1.0)));
  CHECK(seq.model_id == "stub-model");
  CHECK(seq.generated_span == Span{0, src.size()});
  CHECK_NOTHROW(validate_sequence(seq));

  CHECK(server.last_path() == "/v1/completions");
  CHECK(server.last_auth() == "Bearer " + kSecret);
  const auto body = parse_json(server.last_body(), "request");
  CHECK(body["echo"] == true);
  CHECK(body["logprobs"] == 1);
  CHECK(body["prompt"] == src);
}

TEST_CASE("null first logprob and byte-level markers") {
  const std::string src = "if x:\n\treturn 1\n";
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion({"if", "\xC4\xA0x", ":", "\xC4\x8A\xC4\x89", "return", "\xC4\xA0" "1", "\xC4\x8A"},
                               {nullptr, -0.1, -0.2, -0.3, -0.4, -0.5, -0.6}),
                    "application/json");
  });
  const auto seq = fetch_tlp(config(server), src, 0);
  REQUIRE(seq.records.size() == 6);
  CHECK(seq.records[0].token_text == "\xC4\xA0x");
  CHECK(seq.records[0].span == Span{2, 4});
  CHECK(seq.records[2].span == Span{5, 7});
  CHECK(seq.records.back().span.end == src.size());
}

TEST_CASE("marker tokens fall back to normalized matching") {
  const std::string src = "x  = 1";
  const auto seq = parse_completion_response(
      completion({"\xE2\x96\x81x", "\xE2\x96\x81=", "\xE2\x96\x81" "1"}, {-0.1, -0.1, -0.1}), src, 0, true);
  REQUIRE(seq.records.size() == 3);
  CHECK(seq.records[1].span == Span{3, 4});
  CHECK(seq.records[2].span == Span{4, 6});  // decoded marker keeps its space
}

TEST_CASE("completion mode appends the generated text") {
  const std::string src = "def add(a, b):\n";
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion({"    return", " a", " +", " b"}, {-0.1, -0.2, -0.3, -0.4}, "    return a + b"),
                    "application/json");
  });
  auto cfg = config(server);
  cfg.echo = false;
  cfg.max_tokens = 16;
  const auto seq = fetch_tlp(cfg, src, src.size());
  CHECK(seq.source == src + "    return a + b");
  CHECK(seq.generated_span == Span{src.size(), seq.source.size()});
  CHECK(seq.records.size() == 4);
  CHECK(seq.records.front().span.start == src.size());
  const auto body = parse_json(server.last_body(), "request");
  CHECK(body["echo"] == false);
  CHECK(body["max_tokens"] == 16);
}

TEST_CASE("capability and reconstruction errors") {
  SUBCASE("no logprobs field") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"text":"x","index":0}]})", "application/json");
    });
    CHECK(error_of([&] { fetch_tlp(config(server), "x", 0); }).code() == ErrorCode::LogprobsUnsupported);
  }
  SUBCASE("null logprobs") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[{"text":"x","index":0,"logprobs":null}]})", "application/json");
    });
    CHECK(error_of([&] { fetch_tlp(config(server), "x", 0); }).code() == ErrorCode::LogprobsUnsupported);
  }
  SUBCASE("endpoint refuses the parameter") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"logprobs is not supported for this model"}})", "application/json");
    });
    CHECK(error_of([&] { fetch_tlp(config(server), "x", 0); }).code() == ErrorCode::LogprobsUnsupported);
  }
  SUBCASE("tokens spell something else") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content(completion({"def", " g"}, {-0.1, -0.1}), "application/json");
    });
    CHECK(error_of([&] { fetch_tlp(config(server), "def f", 0); }).code() == ErrorCode::SpanReconstructionFailure);
  }
  SUBCASE("tokens stop short") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content(completion({"def"}, {-0.1}), "application/json");
    });
    CHECK(error_of([&] { fetch_tlp(config(server), "def f()", 0); }).code() ==
          ErrorCode::SpanReconstructionFailure);
  }
  SUBCASE("configuration") {
    EndpointConfig cfg;
    CHECK(error_of([&] { fetch_tlp(cfg, "x", 0); }).code() == ErrorCode::InvalidConfig);
    cfg.base_url = "localhost:1";
    CHECK(error_of([&] { fetch_tlp(cfg, "x", 0); }).code() == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("authentication failures carry no secret") {
  StubServer server([](const httplib::Request& req, httplib::Response& res) {
    res.status = 401;
    res.set_content(R"({"error":"bad key )" + req.get_header_value("Authorization") + R"("})", "application/json");
  });
  const auto e = error_of([&] { fetch_tlp(config(server), "x", 0); });
  CHECK(e.code() == ErrorCode::AuthError);
  CHECK(std::string(e.what()).find(kSecret) == std::string::npos);
  CHECK(server.hits() == 1);
}

TEST_CASE("transient failures are retried") {
  SUBCASE("recovers on the third attempt") {
    std::atomic<int> calls{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
      if (++calls < 3) {
        res.status = calls == 1 ? 503 : 429;
        res.set_content("busy " + kSecret, "text/plain");
        return;
      }
      res.set_content(completion({"x"}, {-0.1}), "application/json");
    });
    const auto seq = fetch_tlp(config(server), "x", 0);
    CHECK(seq.records.size() == 1);
    CHECK(server.hits() == 3);
  }
  SUBCASE("gives up after three attempts") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("down", "text/plain");
    });
    const auto e = error_of([&] { fetch_tlp(config(server), "x", 0); });
    CHECK(e.code() == ErrorCode::Http);
    CHECK(server.hits() == 3);
  }
  SUBCASE("connection refused") {
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:1/v1";
    cfg.model = "m";
    cfg.api_key = kSecret;
    cfg.timeout_seconds = 1;
    cfg.initial_backoff = std::chrono::milliseconds(1);
    const auto e = error_of([&] { fetch_tlp(cfg, "x", 0); });
    CHECK(e.code() == ErrorCode::Http);
    CHECK(std::string(e.what()).find(kSecret) == std::string::npos);
  }
}

TEST_CASE("responses are cached on disk") {
  const auto dir = temp_dir("cache");
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion({"a", "b"}, {-0.1, -0.2}), "application/json");
  });
  auto cfg = config(server);
  cfg.cache_dir = dir;
  const auto first = fetch_tlp(cfg, "ab", 0);
  const auto second = fetch_tlp(cfg, "ab", 0);
  CHECK(server.hits() == 1);
  CHECK(to_json(first).dump() == to_json(second).dump());
  fetch_tlp(cfg, "ab", 1);  // different parameters miss the cache
  CHECK(server.hits() == 2);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    ++files;
    CHECK(read_file(entry.path()).find(kSecret) == std::string::npos);
  }
  CHECK(files == 2);
  fs::remove_all(dir);
}

TEST_CASE("fetch_many keeps order and bounds concurrency") {
  StubServer server([](const httplib::Request& req, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    const auto prompt = Json::parse(req.body)["prompt"].get<std::string>();
    if (prompt == "bad") {
      res.status = 401;
      return;
    }
    res.set_content(completion({prompt}, {-0.5}), "application/json");
  });
  auto cfg = config(server);
  cfg.max_in_flight = 3;
  std::vector<FetchRequest> reqs;
  for (int i = 0; i < 12; ++i) reqs.push_back({"s" + std::to_string(i), "v" + std::to_string(i), 0});
  reqs.push_back({"broken", "bad", 0});
  const auto results = fetch_many(cfg, reqs);
  REQUIRE(results.size() == reqs.size());
  for (int i = 0; i < 12; ++i) {
    REQUIRE(results[i].sequence);
    CHECK(results[i].sequence->snippet_id == "s" + std::to_string(i));
    CHECK(results[i].sequence->source == "v" + std::to_string(i));
  }
  CHECK_FALSE(results.back().sequence);
  CHECK(results.back().error.find("AuthError") != std::string::npos);
  CHECK(server.max_in_flight() <= 3);
}

TEST_CASE("the api key never reaches logs or serialized output") {
  std::ostringstream captured;
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(captured);
  std::atomic<int> calls{0};
  StubServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls == 1) {
      res.status = 503;
      res.set_content("overloaded for " + kSecret, "text/plain");
      return;
    }
    res.set_content(completion({"x"}, {-0.1}), "application/json");
  });
  auto cfg = config(server);
  // First call creates the library logger; attach the capture sink to it.
  StubServer warmup([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  auto warm = config(warmup);
  warm.attempts = 2;
  CHECK_THROWS(fetch_tlp(warm, "x", 0));
  auto logger = spdlog::get("syntaxlens");
  REQUIRE(logger);
  logger->sinks().push_back(sink);

  const auto seq = fetch_tlp(cfg, "x", 0);
  const auto results = fetch_many(cfg, {{"ok", "x", 0}});
  logger->sinks().pop_back();
  CHECK(captured.str().find("retrying") != std::string::npos);
  CHECK(captured.str().find(kSecret) == std::string::npos);
  CHECK(tlp_jsonl({seq}).find(kSecret) == std::string::npos);
  CHECK(redact("key=" + kSecret + " again " + kSecret, kSecret) == "key=*** again ***");
}
