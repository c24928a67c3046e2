// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any failed.

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dot_check.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "syntaxlens/alignment.hpp"
#include "syntaxlens/bootstrap.hpp"
#include "syntaxlens/causal.hpp"
#include "syntaxlens/clustering.hpp"
#include "syntaxlens/corpus.hpp"
#include "syntaxlens/error.hpp"
#include "syntaxlens/io.hpp"
#include "syntaxlens/render.hpp"
#include "syntaxlens/serialization.hpp"
#include "xml_check.hpp"

#ifdef SYNTAXLENS_HAVE_CLI
#include "cli.hpp"
#endif

using namespace syntaxlens;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SYNTAXLENS_FIXTURES;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail.clear();
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0 = no limit
  std::function<Outcome()> run;
};

const AnnotatedNode* find_kind(const AnnotatedNode& n, std::string_view kind) {
  if (n.kind == kind) return &n;
  for (const auto& c : n.children) {
    if (const auto* f = find_kind(c, kind)) return f;
  }
  return nullptr;
}

const AstNode* terminal_with_text(const SyntaxTree& tree, std::string_view text) {
  for (const auto* t : terminals_in_order(tree)) {
    if (tree.source.substr(t->span.start, t->span.size()) == text) return t;
  }
  return nullptr;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "null"; }


// 1: theta on the parameters subtree.
Outcome worked_theta() {
  Outcome o;
  const auto seqs = read_tlp_jsonl(kFixtures / "parameters.tlp.jsonl");
  const auto& seq = seqs.at(0);
  const auto tree = parse(seq.source);
  const auto map = align(seq, tree);
  const auto mean_tree = annotate(tree, map, seq, Aggregator::Mean);
  const auto median_tree = annotate(tree, map, seq, Aggregator::Median);
  const auto* pm = find_kind(mean_tree.root, "parameters");
  const auto* pd = find_kind(median_tree.root, "parameters");
  o.require(pm && pm->confidence && pd && pd->confidence, "parameters node has no confidence");
  if (!o.pass) return o;
  o.require(pm->token_count == 5, fmt::format("parameters covers {} tokens, expected 5", pm->token_count));
  o.require(round2(*pm->confidence) == 0.23, fmt::format("mean {:.4f} does not round to 0.23", *pm->confidence));
  o.require(round2(*pd->confidence) == 0.10, fmt::format("median {:.4f} does not round to 0.10", *pd->confidence));
  if (o.pass) o.detail = fmt::format("mean {:.3f}, median {:.3f}", *pm->confidence, *pd->confidence);
  return o;
}

// 2: delta on the try/float fixture plus randomized cardinality.
Outcome worked_delta() {
  Outcome o;
  const auto seq = read_tlp_jsonl(kFixtures / "delta.tlp.jsonl").at(0);
  const auto tree = parse(seq.source);
  const auto map = align(seq, tree);
  const auto* try_node = terminal_with_text(tree, "try");
  const auto* float_node = terminal_with_text(tree, "float");
  o.require(try_node && float_node, "fixture terminals not found");
  if (!o.pass) return o;
  std::size_t try_tok = 0, flo_tok = 0, at_tok = 0;
  for (std::size_t i = 0; i < seq.records.size(); ++i) {
    if (seq.records[i].token_text == "try_") try_tok = i;
    if (seq.records[i].token_text == "flo_") flo_tok = i;
    if (seq.records[i].token_text == "at") at_tok = i;
  }
  o.require(map.entries[try_tok] == try_node->node_id, "try_ is not aligned to try");
  o.require(map.per_terminal.count(try_node->node_id) &&
                map.per_terminal.at(try_node->node_id) == std::vector<std::size_t>{try_tok},
            "try terminal does not receive exactly try_");
  o.require(map.entries[flo_tok] == float_node->node_id && map.entries[at_tok] == float_node->node_id,
            "flo_/at are not aligned to float");
  o.require(map.per_terminal.count(float_node->node_id) &&
                map.per_terminal.at(float_node->node_id) == std::vector<std::size_t>{flo_tok, at_tok},
            "float terminal does not receive exactly flo_, at");

  gen::SnippetGenerator g(20240521);
  std::size_t tokens = 0;
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const auto src = g.snippet(1 + trial % 5);
    gen::TokenizeOptions opts;
    opts.max_piece = 1 + static_cast<std::size_t>(trial % 8);
    opts.gap_probability = trial % 3 == 0 ? 0.15 : 0.0;
    const auto s = gen::random_sequence(src, g.rng(), opts);
    const auto t = parse(src);
    const auto m = align(s, t);
    const auto expected = oracle::brute_align(s, t);
    tokens += s.records.size();
    o.require(m.entries == expected, fmt::format("trial {}: alignment differs from brute force", trial));
    // One terminal per token: every aligned token appears in exactly one
    // per_terminal list, under its own terminal.
    std::vector<int> seen(s.records.size(), 0);
    for (const auto& [node, idxs] : m.per_terminal) {
      for (std::size_t i : idxs) {
        ++seen[i];
        o.require(m.entries[i] == node, fmt::format("trial {}: per_terminal disagrees with entries", trial));
      }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      o.require(seen[i] == (m.entries[i] ? 1 : 0), fmt::format("trial {}: token {} mapped {} times", trial, i, seen[i]));
    }
  }
  if (o.pass) o.detail = fmt::format("fixture ok; 1000 random pairs, {} tokens match brute force", tokens);
  return o;
}

// 3: category_scores against the flat recomputation, bitwise.
Outcome pipeline_oracle() {
  Outcome o;
  const auto& mapping = default_category_mapping();
  gen::SnippetGenerator g(777);
  std::size_t values = 0;
  for (int corpus = 0; corpus < 50 && o.pass; ++corpus) {
    const Aggregator agg = std::array{Aggregator::Median, Aggregator::Mean, Aggregator::Max}[corpus % 3];
    const int snippets = 1 + corpus % 5;
    std::vector<AnnotatedTree> trees;
    std::vector<std::pair<TlpSequence, SyntaxTree>> flat;
    for (int s = 0; s < snippets; ++s) {
      const auto src = g.snippet(1 + (corpus + s) % 3);
      gen::TokenizeOptions opts;
      opts.max_tokens = 50;
      opts.max_piece = 4;
      auto seq = gen::random_sequence(src, g.rng(), opts);
      auto tree = parse(src);
      trees.push_back(annotate(tree, align(seq, tree), seq, agg));
      flat.emplace_back(std::move(seq), std::move(tree));
    }
    const auto got = category_scores(subcategory_scores(trees, agg), mapping);
    const auto want = oracle::flat_categories(oracle::flat_subcategories(flat, agg), mapping);
    for (const auto& [cat, v] : want) {
      const auto it = got.find(cat);
      const std::vector<double> empty;
      const auto& lib = it == got.end() ? empty : it->second;
      o.require(lib == v, fmt::format("corpus {}: {} differs ({} vs {} values)", corpus, to_string(cat), lib.size(),
                                      v.size()));
      values += v.size();
    }
  }
  if (o.pass) o.detail = fmt::format("50 corpora, {} aggregated values identical", values);
  return o;
}

// 4: a corpus without exception syntax reports Exceptions as null.
Outcome null_discipline() {
  Outcome o;
  const auto dataset = read_dataset_jsonl(kFixtures / "no_exceptions.dataset.jsonl");
  const auto tlps = read_tlp_jsonl(kFixtures / "no_exceptions.tlp.jsonl");
  const auto report = analyze_corpus(dataset, tlps, default_category_mapping(), {});
  o.require(report.skipped.empty(), "fixture snippets were skipped");
  for (const auto& a : report.snippet_analyses) o.require(!a.has_errors, a.snippet_id + " has parse errors");
  const auto& exc = report.category_report.per_category.at(Category::Exceptions);
  o.require(exc.is_null() && !exc.ci_low && !exc.ci_high && exc.n == 0, "Exceptions is not null");
  const auto json = to_json(report);
  o.require(json["category_report"]["per_category"]["Exceptions"]["point"].is_null(),
            "serialized Exceptions point is not null");

  const auto flags = threshold_flags(report);
  std::set<Category> pass_set, fail_set, null_set;
  for (const auto& [c, f] : flags) {
    (f == ThresholdFlag::Pass ? pass_set : f == ThresholdFlag::Fail ? fail_set : null_set).insert(c);
  }
  o.require(null_set.count(Category::Exceptions) == 1, "Exceptions flag is not null");
  o.require(!pass_set.count(Category::Exceptions) && !fail_set.count(Category::Exceptions),
            "Exceptions entered a pass/fail set");
  for (Category c : null_set) {
    o.require(report.category_report.per_category.at(c).is_null(), "non-null category flagged null");
  }
  o.require(pass_set.size() + fail_set.size() + null_set.size() == kSyntaxCategories.size(), "flags incomplete");
  if (o.pass) {
    o.detail = fmt::format("Exceptions null; {} pass, {} fail, {} null", pass_set.size(), fail_set.size(),
                           null_set.size());
  }
  return o;
}

// 5: same seed gives identical bytes; bootstrap point near the center.
Outcome bootstrap_checks() {
  Outcome o;
  const auto tlps = read_tlp_jsonl(kFixtures / "recorded/tlp.jsonl");
  const auto dataset = read_dataset_jsonl(kFixtures / "recorded/dataset.jsonl");
  CorpusConfig cfg;
  cfg.seed = 42;
  cfg.jobs = 1;
  const auto a = analyze_corpus(dataset, tlps, default_category_mapping(), cfg);
  cfg.jobs = 0;
  const auto b = analyze_corpus(dataset, tlps, default_category_mapping(), cfg);
  o.require(to_json(a).dump() == to_json(b).dump(), "JSON reports differ");
  o.require(category_report_csv(a.category_report) == category_report_csv(b.category_report), "CSV reports differ");

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 0.9);
  std::vector<double> draws(1000);
  for (auto& d : draws) d = u(rng);
  const auto est = bootstrap_estimate(draws, kDefaultBootstrapReps, 2024);
  o.require(est.point && std::abs(*est.point - 0.7) <= 0.02,
            fmt::format("bootstrap point {} not within 0.02 of 0.7", fmt_opt(est.point)));
  const auto again = bootstrap_estimate(draws, kDefaultBootstrapReps, 2024);
  o.require(again.point == est.point && again.ci_low == est.ci_low && again.ci_high == est.ci_high,
            "bootstrap not deterministic");
  if (o.pass) {
    o.detail = fmt::format("reports identical; point {:.4f} CI [{:.4f}, {:.4f}]", *est.point, *est.ci_low,
                           *est.ci_high);
  }
  return o;
}

// 6: ATE recovery on a confounded linear SCM.
Outcome ate_recovery() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<CausalSample> samples(10000);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double z1 = n01(rng);
    const double z2 = n01(rng);
    const double t = 0.8 * z1 - 0.5 * z2 + n01(rng);
    const double y = 2.0 * t + 3.0 * z1 + 0.5 * z2 + n01(rng);
    samples[i] = {"s" + std::to_string(i), t, y, {z1, z2, 0.0, 0.0}};
  }
  AteOptions opts;
  opts.drop_constant_confounders = true;
  const auto ate = ate_linear(samples, opts);
  o.require(std::abs(ate.ate - 2.0) <= 0.1, fmt::format("ATE {:.4f} outside 2.0 +/- 5%", ate.ate));
  const auto placebo = placebo_refute(samples, 5, 100, opts);
  o.require(placebo.placebo_ate < 0.05, fmt::format("mean |placebo ATE| {:.4f} >= 0.05", placebo.placebo_ate));
  if (o.pass) o.detail = fmt::format("ATE {:.4f} (se {:.4f}); placebo {:.4f}", ate.ate, ate.stderr_, placebo.placebo_ate);
  return o;
}

// 7: identifier effect has a negative sign on recorded logprobs.
Outcome causal_sign() {
  Outcome o;
  const auto tlps = read_tlp_jsonl(kFixtures / "recorded/tlp.jsonl");
  const auto dataset = read_dataset_jsonl(kFixtures / "recorded/dataset.jsonl");
  o.require(dataset.size() == 100, fmt::format("fixture has {} snippets, expected 100", dataset.size()));
  CorpusConfig cfg;
  cfg.bootstrap_reps = 1;
  const auto report = analyze_corpus(dataset, tlps, default_category_mapping(), cfg);
  const auto samples = causal_samples(report, "identifier", default_category_mapping());
  std::vector<double> t, y;
  for (const auto& s : samples) {
    if (!s.treatment) continue;
    t.push_back(*s.treatment);
    y.push_back(s.outcome);
  }
  const double rho = pearson(t, y);
  const auto ate = ate_linear(samples);
  o.require(rho < 0.0, fmt::format("rho {:.4f} is not negative", rho));
  o.require(ate.ate < 0.0, fmt::format("ATE {:.4f} is not negative", ate.ate));
  if (o.pass) o.detail = fmt::format("model {}, n {}: rho {:.3f}, ATE {:.3f}", report.model_id, ate.n, rho, ate.ate);
  return o;
}

// 8: threshold flags and the Data Types delta on the reference reports.
Outcome threshold_semantics() {
  Outcome o;
  const auto m1 = corpus_report_from_json(parse_json(read_file(kFixtures / "reference.M1.json"), "M1"));
  const auto m12 = corpus_report_from_json(parse_json(read_file(kFixtures / "reference.M12.json"), "M12"));
  const auto f1 = threshold_flags(m1, 0.6);
  const auto f12 = threshold_flags(m12, 0.6);
  o.require(f1.at(Category::NaturalLanguage) == ThresholdFlag::Fail, "M1 Natural Language not flagged fail");
  o.require(f12.at(Category::Scope) == ThresholdFlag::Pass, "M12 Scope not flagged pass");
  const auto m = compare_models({m12, m1}, {{"M12", "M1"}});
  std::optional<double> dt;
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    if (m.rows[r].name == "Data Types") dt = m.deltas.at(0).values.at(r);
  }
  o.require(dt && std::abs(*dt - 0.50) <= 0.02, "Data Types delta " + fmt_opt(dt) + " not within 0.02 of 0.50");
  if (o.pass) o.detail = fmt::format("M1 NL fail, M12 Scope pass, Data Types delta {:.2f}", *dt);
  return o;
}

RenderConfig render_config(RenderMode mode, OutputFormat format) {
  RenderConfig c;
  c.mode = mode;
  c.format = format;
  return c;
}

std::size_t count_nodes(const AnnotatedNode& n) {
  std::size_t k = 1;
  for (const auto& c : n.children) k += count_nodes(c);
  return k;
}

// Byte-level intersection with the generated region. A zero-width region
// selects nodes strictly containing its position; a zero-width node is
// selected when it sits strictly inside the region.
bool intersects_region(const Span& node, std::size_t start, std::size_t end) {
  if (start == end) return node.start < start && start < node.end;
  if (node.empty()) return node.start > start && node.start < end;
  for (std::size_t b = node.start; b < node.end; ++b) {
    if (b >= start && b < end) return true;
  }
  return false;
}

// 9: rendering counts and format validity.
Outcome rendering_contracts() {
  Outcome o;
  gen::SnippetGenerator g(4242);
  std::size_t documents = 0;
  for (int i = 0; i < 30 && o.pass; ++i) {
    const auto src = g.snippet(2 + i % 4);
    auto seq = gen::random_sequence(src, g.rng());
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, src.size() - 1)(g.rng());
    const std::size_t end = std::uniform_int_distribution<std::size_t>(start, src.size())(g.rng());
    seq.generated_span = Span{start, end};
    const auto tree = parse(src);
    const auto at = annotate(tree, align(seq, tree), seq, Aggregator::Median);
    const std::size_t n = count_nodes(at.root);
    o.require(n == tree.node_count, fmt::format("snippet {}: annotated {} nodes, tree has {}", i, n, tree.node_count));

    std::set<NodeId> expected;
    std::function<void(const AnnotatedNode&)> walk = [&](const AnnotatedNode& node) {
      if (intersects_region(node.span, start, end)) expected.insert(node.node_id);
      for (const auto& c : node.children) walk(c);
    };
    walk(at.root);

    for (const RenderMode mode : {RenderMode::AstComplete, RenderMode::AstPartial}) {
      const std::size_t want = mode == RenderMode::AstComplete ? n : expected.size();
      // svg and html share the node markup
      for (const OutputFormat format : {OutputFormat::Svg, OutputFormat::Html}) {
        const auto doc = xmlcheck::parse(render_ast(at, render_config(mode, format)));
        ++documents;
        o.require(doc.ok(), fmt::format("snippet {}: invalid {} ({})", i, to_string(format), doc.error));
        if (!doc.ok()) continue;
        const auto shapes = doc.with_class("g", "node");
        o.require(shapes.size() == want, fmt::format("snippet {} {} {}: {} shapes, expected {}", i, to_string(mode),
                                                     to_string(format), shapes.size(), want));
        if (mode == RenderMode::AstPartial) {
          std::set<NodeId> drawn;
          for (const auto* e : shapes) drawn.insert(std::stoul(e->attributes.at("id").substr(1)));
          o.require(drawn == expected, fmt::format("snippet {}: partial node set differs", i));
        }
      }
      const auto dot = dotcheck::parse(render_ast(at, render_config(mode, OutputFormat::Dot)));
      ++documents;
      o.require(dot.ok(), fmt::format("snippet {}: invalid dot ({})", i, dot.error));
      o.require(dot.nodes.size() == want, fmt::format("snippet {} {} dot: {} nodes, expected {}", i, to_string(mode),
                                                      dot.nodes.size(), want));
    }
    for (const OutputFormat format : {OutputFormat::Svg, OutputFormat::Html}) {
      const auto doc = xmlcheck::parse(render_sequence(seq, render_config(RenderMode::Sequence, format)));
      ++documents;
      o.require(doc.ok(), fmt::format("snippet {}: invalid sequence {} ({})", i, to_string(format), doc.error));
    }
    const auto dot = dotcheck::parse(render_sequence(seq, render_config(RenderMode::Sequence, OutputFormat::Dot)));
    ++documents;
    o.require(dot.ok(), fmt::format("snippet {}: invalid sequence dot ({})", i, dot.error));
  }
  if (o.pass) o.detail = fmt::format("30 snippets, {} documents valid", documents);
  return o;
}

// 10: two CLI runs produce the same report bytes.
Outcome cli_determinism() {
  Outcome o;
#ifdef SYNTAXLENS_HAVE_CLI
  const auto base = fs::temp_directory_path() /
                    ("syntaxlens-acceptance-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::vector<fs::path> dirs{base / "a", base / "b"};
  for (const auto& dir : dirs) {
    std::ostringstream out, err;
    const int code = cli::run({"-q", "explain-global", "--dataset", (kFixtures / "recorded/dataset.jsonl").string(),
                               "--tlp", (kFixtures / "recorded/tlp.jsonl").string(), "--seed", "3", "--out",
                               dir.string()},
                              out, err);
    o.require(code == cli::kExitOk, fmt::format("explain-global exited {}: {}", code, err.str()));
  }
  std::size_t files = 0;
  if (o.pass) {
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename();
      if (name.extension() != ".json" && name.extension() != ".csv") continue;
      ++files;
      o.require(fs::exists(dirs[1] / name) && read_file(entry.path()) == read_file(dirs[1] / name),
                name.string() + " differs between runs");
    }
    o.require(files >= 2, "expected JSON and CSV reports");
  }
  fs::remove_all(base);
  if (o.pass) o.detail = fmt::format("{} report files byte-identical", files);
#else
  o.require(false, "command-line tool not built");
#endif
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Criterion> criteria{
      {1, "worked theta example", 1.0, worked_theta},
      {2, "worked delta examples and alignment cardinality", 30.0, worked_delta},
      {3, "pipeline oracle equivalence", 60.0, pipeline_oracle},
      {4, "null discipline", 0.0, null_discipline},
      {5, "bootstrap determinism and calibration", 10.0, bootstrap_checks},
      {6, "ATE recovery", 30.0, ate_recovery},
      {7, "sign of the identifier effect", 300.0, causal_sign},
      {8, "threshold semantics", 0.0, threshold_semantics},
      {9, "rendering contracts", 30.0, rendering_contracts},
      {10, "end-to-end determinism", 0.0, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += fmt::format("; took {:.2f}s, limit {:.0f}s", secs, c.time_limit_s);
    }
    if (!o.pass) ++failed;
    std::cout << fmt::format("{} [{:2}] {} ({:.2f}s): {}\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
