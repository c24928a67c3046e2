#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "dot_check.hpp"
#include "stub_server.hpp"
#include "syntaxlens/io.hpp"
#include "syntaxlens/serialization.hpp"
#include "xml_check.hpp"

using namespace syntaxlens;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SYNTAXLENS_FIXTURES;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "-q");
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("syntaxlens-cli-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string fixture(const std::string& name) { return (kFixtures / name).string(); }

}  // namespace

TEST_CASE("help, version and usage errors") {
  auto r = run_cli({"--help"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("explain-global") != std::string::npos);
  CHECK(r.out.find("fetch-logprobs") != std::string::npos);

  r = run_cli({"explain-local", "--help"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("--output-format") != std::string::npos);

  r = run_cli({"--version"});
  CHECK(r.code == cli::kExitOk);
  CHECK_FALSE(r.out.empty());

  r = run_cli({"align", "--tlp", fixture("parameters.tlp.jsonl"), "--bogus"});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err.find("error:") != std::string::npos);

  r = run_cli({});
  CHECK(r.code == cli::kExitInput);

  r = run_cli({"explain-local", "--tlp", fixture("parameters.tlp.jsonl")});  // --out missing
  CHECK(r.code == cli::kExitInput);

  r = run_cli({"align", "--tlp", fixture("does-not-exist.jsonl")});
  CHECK(r.code == cli::kExitInput);

  r = run_cli({"explain-local", "--tlp", fixture("parameters.tlp.jsonl"), "--mode", "tree", "--out", "/tmp/x"});
  CHECK(r.code == cli::kExitInput);
}

TEST_CASE("explain-local writes well-formed documents") {
  TempDir dir;
  auto r = run_cli({"explain-local", "--tlp", fixture("parameters.tlp.jsonl"), "--mode", "ast_partial", "--out",
                dir.path.string()});
  REQUIRE(r.code == cli::kExitOk);
  const auto svg = read_file(dir / "parameters.ast_partial.svg");
  const auto doc = xmlcheck::parse(svg);
  CHECK(doc.ok());
  CHECK(doc.count("svg") == 1);
  const auto ann = parse_json(read_file(dir / "parameters.annotations.json"), "annotations")["nodes"];
  REQUIRE(ann.is_array());
  bool found = false;
  for (const auto& n : ann) {
    if (n["kind"] == "parameters") {
      found = true;
      CHECK(n["confidence"].get<double>() == doctest::Approx(0.1));  // median default
    }
  }
  CHECK(found);

  r = run_cli({"explain-local", "--tlp", fixture("parameters.tlp.jsonl"), "--mode", "ast_complete", "--output-format",
           "dot", "--aggregator", "mean", "--out", dir.path.string()});
  REQUIRE(r.code == cli::kExitOk);
  const auto graph = dotcheck::parse(read_file(dir / "parameters.ast_complete.dot"));
  CHECK(graph.ok());
  CHECK(graph.edges.size() + 1 == graph.nodes.size());
  CHECK(read_file(dir / "parameters.ast_complete.dot").find("parameters\\n0.23") != std::string::npos);

  r = run_cli({"explain-local", "--tlp", fixture("parameters.tlp.jsonl"), "--mode", "sequence", "--output-format",
           "html", "--out", dir.path.string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(xmlcheck::parse(read_file(dir / "parameters.sequence.html")).ok());
}

TEST_CASE("explain-global is byte-identical across runs and thread counts") {
  TempDir a, b;
  const std::vector<std::string> base{"explain-global", "--dataset", fixture("recorded/dataset.jsonl"), "--tlp",
                                      fixture("recorded/tlp.jsonl"), "--reps", "100", "--seed", "11"};
  auto args = base;
  args.insert(args.end(), {"--out", a.path.string(), "--jobs", "1"});
  auto r1 = run_cli(args);
  REQUIRE(r1.code == cli::kExitOk);
  args = base;
  args.insert(args.end(), {"--out", b.path.string()});
  auto r2 = run_cli(args);
  REQUIRE(r2.code == cli::kExitOk);
  CHECK(r1.out == r2.out);
  for (const std::string name :
       {"report.ngram-trigram-stdlib.json", "report.ngram-trigram-stdlib.csv", "heatmap.json"}) {
    CAPTURE(name);
    CHECK(read_file(a / name) == read_file(b / name));
  }
  const auto report = corpus_report_from_json(parse_json(read_file(a / "report.ngram-trigram-stdlib.json"), "r"));
  CHECK(report.snippet_analyses.size() == 100);
  CHECK(report.category_report.bootstrap_reps == 100);
}

TEST_CASE("explain-global compares two models") {
  TempDir dir;
  // Second model: the same fixture under another model id.
  auto seqs = read_tlp_jsonl(fixture("no_exceptions.tlp.jsonl"));
  for (auto& s : seqs) s.model_id = "other";
  write_file_atomic(dir / "other.jsonl", tlp_jsonl(seqs));
  auto r = run_cli({"explain-global", "--tlp", fixture("no_exceptions.tlp.jsonl"), "--tlp", dir / "other.jsonl",
                "--pair", "fixture", "other", "--reps", "50", "--out", dir / "out", "--format", "json"});
  REQUIRE(r.code == cli::kExitOk);
  const auto cmp = parse_json(read_file(dir / "out/comparison.json"), "comparison");
  REQUIRE(cmp["deltas"].size() == 1);
  std::size_t non_null = 0;
  for (const auto& v : cmp["deltas"][0]["values"]) {
    if (v["delta"].is_null()) continue;
    ++non_null;
    CHECK(v["delta"].get<double>() == 0.0);
  }
  CHECK(non_null > 0);
  CHECK(fs::exists(dir / "out/heatmap.json"));

  r = run_cli({"explain-global", "--tlp", fixture("no_exceptions.tlp.jsonl"), "--pair", "fixture", "other", "--out",
           dir / "single"});
  CHECK(r.code == cli::kExitInput);
}

TEST_CASE("align prints one row per token") {
  auto r = run_cli({"align", "--tlp", fixture("delta.tlp.jsonl"), "--format", "json"});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = parse_json(r.out.substr(0, r.out.find('\n')), "align");
  CHECK(j["snippet_id"] == "delta");
  r = run_cli({"align", "--tlp", fixture("delta.tlp.jsonl")});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("try_") != std::string::npos);
  CHECK(r.out.find("flo_") != std::string::npos);
}

TEST_CASE("causal writes rows for the requested treatments") {
  TempDir dir;
  auto r = run_cli({"causal", "--dataset", fixture("recorded/dataset.jsonl"), "--tlp", fixture("recorded/tlp.jsonl"),
                "--treatment", "identifier", "--treatment", "Decisions", "--permutations", "20", "--out",
                dir.path.string()});
  REQUIRE(r.code == cli::kExitOk);
  const auto j = parse_json(read_file(dir / "causal.ngram-trigram-stdlib.json"), "causal");
  REQUIRE(j["rows"].size() == 3);
  CHECK(j["rows"][0]["treatment"] == "identifier");
  CHECK(j["rows"][0]["ate"].get<double>() < 0.0);
  CHECK(j["rows"][2]["treatment"] == "intrinsic");
  CHECK(fs::exists(dir / "causal.ngram-trigram-stdlib.csv"));
}

TEST_CASE("validate flags inconsistent inputs") {
  TempDir dir;
  auto r = run_cli({"validate", "--tlp", fixture("no_exceptions.tlp.jsonl"), "--dataset",
                fixture("no_exceptions.dataset.jsonl")});
  CHECK(r.code == cli::kExitOk);

  auto seqs = read_tlp_jsonl(fixture("no_exceptions.tlp.jsonl"));
  seqs.pop_back();
  write_file_atomic(dir / "short.jsonl", tlp_jsonl(seqs));
  r = run_cli({"validate", "--tlp", dir / "short.jsonl", "--dataset", fixture("no_exceptions.dataset.jsonl")});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.out.find("noexc-7") != std::string::npos);

  write_file_atomic(dir / "broken.jsonl", "{\"snippet_id\": \"x\"}\n");
  r = run_cli({"validate", "--tlp", dir / "broken.jsonl"});
  CHECK(r.code == cli::kExitInput);
}

TEST_CASE("fetch-logprobs against a local endpoint") {
  TempDir dir;
  const std::string secret = "sk-cli-secret-42";
  ::setenv("SYNTAXLENS_API_KEY", secret.c_str(), 1);
  StubServer server([&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") != "Bearer " + secret) {
      res.status = 401;
      return;
    }
    const auto src = Json::parse(req.body)["prompt"].get<std::string>();
    Json tokens = Json::array();
    Json lps = Json::array();
    for (char c : src) {
      tokens.push_back(std::string(1, c));
      lps.push_back(-0.25);
    }
    res.set_content(
        Json{{"choices", Json::array({Json{{"text", ""}, {"logprobs", {{"tokens", tokens}, {"token_logprobs", lps}}}}})}}
            .dump(),
        "application/json");
  });
  auto r = run_cli({"fetch-logprobs", "--dataset", fixture("no_exceptions.dataset.jsonl"), "--base-url",
                server.base_url(), "--model", "stub", "--out", dir / "tlp.jsonl"});
  REQUIRE(r.code == cli::kExitOk);
  const auto seqs = read_tlp_jsonl(dir / "tlp.jsonl");
  CHECK(seqs.size() == 8);
  CHECK(seqs.front().model_id == "stub");
  CHECK(read_file(dir / "tlp.jsonl").find(secret) == std::string::npos);

  ::setenv("SYNTAXLENS_API_KEY", "sk-wrong-key", 1);
  r = run_cli({"fetch-logprobs", "--dataset", fixture("no_exceptions.dataset.jsonl"), "--base-url", server.base_url(),
           "--model", "stub", "--out", dir / "denied.jsonl"});
  CHECK(r.code == cli::kExitInput);
  CHECK_FALSE(fs::exists(dir / "denied.jsonl"));
  CHECK(r.out.find("sk-wrong-key") == std::string::npos);
  CHECK(r.err.find("sk-wrong-key") == std::string::npos);
  ::unsetenv("SYNTAXLENS_API_KEY");
}
