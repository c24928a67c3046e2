#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "syntaxlens/alignment.hpp"
#include "syntaxlens/causal.hpp"
#include "syntaxlens/corpus.hpp"
#include "syntaxlens/error.hpp"
#include "syntaxlens/io.hpp"
#include "syntaxlens/llm_client.hpp"
#include "syntaxlens/render.hpp"
#include "syntaxlens/serialization.hpp"
#include "syntaxlens/syntax_tree.hpp"

namespace syntaxlens::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::string mapping_path;
  std::string aggregator = "median";
  std::size_t jobs = 0;
  std::size_t max_tokens = kMaxPromptTokens;
  std::string format = "text";
};

struct LocalOptions {
  std::vector<std::string> tlp;
  std::vector<std::string> snippets;
  std::string mode = "ast_complete";
  std::string output_format = "svg";
  bool no_highlight = false;
  std::string out_dir;
};

struct GlobalOptions {
  std::string dataset;
  std::vector<std::string> tlp;
  std::uint64_t seed = 0;
  std::size_t reps = kDefaultBootstrapReps;
  double tau = kDefaultThreshold;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> subcategories;
  std::string out_dir;
};

struct AlignOptions {
  std::vector<std::string> tlp;
  std::vector<std::string> snippets;
  std::string out;
};

struct CausalOptions {
  std::string dataset;
  std::vector<std::string> tlp;
  std::uint64_t seed = 0;
  std::size_t permutations = 100;
  std::vector<std::string> treatments;
  bool standardize = false;
  std::string out_dir;
};

struct FetchOptions {
  std::string dataset;
  std::string base_url;
  std::string model;
  std::string out;
  double timeout = 60.0;
  std::size_t max_tokens = kMaxPromptTokens;
  bool no_echo = false;
  std::string cache_dir;
  std::size_t max_in_flight = 4;
  std::size_t attempts = 3;
  bool keep_going = false;
};

struct ValidateOptions {
  std::vector<std::string> tlp;
  std::string dataset;
  std::string mapping;
};

// Keeps ids usable as file names without escaping.
std::string file_stem(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    out += ok ? c : '_';
  }
  if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
  return out;
}

CategoryMapping load_mapping(const Common& c) {
  return c.mapping_path.empty() ? default_category_mapping() : load_category_mapping(c.mapping_path);
}

std::vector<TlpSequence> load_tlps(const std::vector<std::string>& paths) {
  std::vector<TlpSequence> all;
  for (const auto& p : paths) {
    auto part = read_tlp_jsonl(p);
    spdlog::info("read {} sequences from {}", part.size(), p);
    for (auto& s : part) all.push_back(std::move(s));
  }
  return all;
}

std::vector<TlpSequence> select(std::vector<TlpSequence> seqs, const std::vector<std::string>& ids) {
  if (ids.empty()) return seqs;
  std::vector<TlpSequence> out;
  for (const auto& id : ids) {
    bool found = false;
    for (const auto& s : seqs) {
      if (s.snippet_id == id) {
        out.push_back(s);
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::MissingTlp, "no sequence for snippet '" + id + "'");
  }
  return out;
}

std::vector<DatasetRecord> dataset_or_sources(const std::string& path, const std::vector<TlpSequence>& tlps) {
  if (!path.empty()) return read_dataset_jsonl(path);
  std::vector<DatasetRecord> out;
  std::set<std::string> seen;
  for (const auto& s : tlps) {
    if (seen.insert(s.snippet_id).second) out.push_back({s.snippet_id, s.source, {}, {}, {}, {}, {}});
  }
  return out;
}

std::vector<CorpusReport> analyze_models(const std::vector<DatasetRecord>& dataset, std::vector<TlpSequence> tlps,
                                         const CategoryMapping& mapping, const CorpusConfig& cfg) {
  std::vector<CorpusReport> reports;
  for (auto& [model, seqs] : group_by_model(std::move(tlps))) {
    spdlog::info("analyzing {} snippets for model '{}'", dataset.size(), model);
    reports.push_back(analyze_corpus(dataset, seqs, mapping, cfg));
  }
  return reports;
}

std::string fmt_opt(const std::optional<double>& v, int digits = 2) {
  return v ? fmt::format("{:.{}f}", *v, digits) : std::string("null");
}

void emit_summary(std::ostream& out, const Common& common, const Json& summary, const std::string& text) {
  if (common.format == "json") {
    out << summary.dump(2) << '\n';
  } else {
    out << text;
  }
}

int explain_local(const Common& common, const LocalOptions& o, std::ostream& out) {
  const Aggregator agg = parse_aggregator(common.aggregator);
  RenderConfig rc;
  rc.mode = parse_render_mode(o.mode);
  rc.format = parse_output_format(o.output_format);
  rc.highlight_generated = !o.no_highlight;

  auto seqs = select(load_tlps(o.tlp), o.snippets);
  std::set<std::string> names;
  Json files = Json::array();
  std::string text;
  for (auto& seq : seqs) {
    const std::string stem = file_stem(seq.snippet_id);
    if (!names.insert(stem).second) {
      throw Error(ErrorCode::InvalidConfig,
                  "snippet '" + seq.snippet_id + "' appears more than once; select one model's TLP file");
    }
    if (truncate_sequence(seq, common.max_tokens)) {
      spdlog::warn("snippet {} truncated to {} tokens", seq.snippet_id, common.max_tokens);
    }
    const SyntaxTree tree = parse(seq.source);
    if (tree.has_errors) spdlog::warn("snippet {} parsed with syntax errors", seq.snippet_id);
    const AlignmentMap map = align(seq, tree);
    const AnnotatedTree annotated = annotate(tree, map, seq, agg);

    const std::string document =
        rc.mode == RenderMode::Sequence ? render_sequence(seq, rc) : render_ast(annotated, rc);
    const fs::path doc_path =
        fs::path(o.out_dir) / fmt::format("{}.{}.{}", stem, to_string(rc.mode), to_string(rc.format));
    const fs::path ann_path = fs::path(o.out_dir) / (stem + ".annotations.json");
    write_file_atomic(doc_path, document);
    write_file_atomic(ann_path, annotations_json(annotated).dump(2) + "\n");
    files.push_back(doc_path.string());
    files.push_back(ann_path.string());
    text += fmt::format("{}: {} nodes, {} tokens -> {}\n", seq.snippet_id, annotated.node_count,
                        seq.records.size(), doc_path.string());
  }
  emit_summary(out, common, Json{{"files", files}}, text);
  return kExitOk;
}

int explain_global(const Common& common, const GlobalOptions& o, std::ostream& out) {
  if (o.tau < 0.0 || o.tau > 1.0) throw Error(ErrorCode::InvalidConfig, "--tau must lie in [0, 1]");
  const CategoryMapping mapping = load_mapping(common);
  CorpusConfig cfg;
  cfg.aggregator = parse_aggregator(common.aggregator);
  cfg.bootstrap_reps = o.reps;
  cfg.seed = o.seed;
  cfg.max_tokens = common.max_tokens;
  cfg.jobs = common.jobs;

  auto tlps = load_tlps(o.tlp);
  const auto dataset = dataset_or_sources(o.dataset, tlps);
  const auto reports = analyze_models(dataset, std::move(tlps), mapping, cfg);

  Json files = Json::array();
  Json models = Json::array();
  std::string text;
  for (const auto& r : reports) {
    const std::string stem = file_stem(r.model_id.empty() ? "model" : r.model_id);
    const fs::path json_path = fs::path(o.out_dir) / ("report." + stem + ".json");
    const fs::path csv_path = fs::path(o.out_dir) / ("report." + stem + ".csv");
    write_file_atomic(json_path, to_json(r, o.tau).dump(2) + "\n");
    write_file_atomic(csv_path, category_report_csv(r.category_report));
    files.push_back(json_path.string());
    files.push_back(csv_path.string());

    const auto flags = threshold_flags(r, o.tau);
    Json cats = Json::object();
    text += fmt::format("model {}  ({} snippets, {} skipped, intrinsic {:.2f})\n", r.model_id.empty() ? "-" : r.model_id,
                        r.snippet_analyses.size(), r.skipped.size(), r.intrinsic);
    for (Category c : kSyntaxCategories) {
      const auto& e = r.category_report.per_category.at(c);
      const auto flag = flags.at(c);
      cats[std::string(to_string(c))] = Json{{"point", e.point ? Json(*e.point) : Json(nullptr)},
                                             {"flag", to_string(flag)}};
      text += fmt::format("  {:<24} {:>6}  [{}, {}]  n={:<5} {}\n", to_string(c), fmt_opt(e.point),
                          fmt_opt(e.ci_low), fmt_opt(e.ci_high), e.n, to_string(flag));
    }
    models.push_back(Json{{"model_id", r.model_id},
                          {"snippets", r.snippet_analyses.size()},
                          {"skipped", r.skipped.size()},
                          {"intrinsic", r.intrinsic},
                          {"categories", std::move(cats)}});
  }

  const fs::path heatmap_path = fs::path(o.out_dir) / "heatmap.json";
  if (reports.size() >= 2) {
    const auto matrix = compare_models(reports, o.pairs, o.subcategories);
    const fs::path cmp_path = fs::path(o.out_dir) / "comparison.json";
    write_file_atomic(cmp_path, to_json(matrix).dump(2) + "\n");
    write_file_atomic(heatmap_path, heatmap_json(matrix).dump(2) + "\n");
    files.push_back(cmp_path.string());
  } else {
    if (!o.pairs.empty()) throw Error(ErrorCode::InvalidConfig, "--pair needs reports for at least two models");
    write_file_atomic(heatmap_path, heatmap_json(report_matrix(reports, o.subcategories)).dump(2) + "\n");
  }
  files.push_back(heatmap_path.string());

  emit_summary(out, common, Json{{"files", files}, {"models", models}}, text);
  return kExitOk;
}

int align_cmd(const Common& common, const AlignOptions& o, std::ostream& out) {
  auto seqs = select(load_tlps(o.tlp), o.snippets);
  std::string jsonl;
  std::string text;
  for (auto& seq : seqs) {
    truncate_sequence(seq, common.max_tokens);
    const SyntaxTree tree = parse(seq.source);
    const AlignmentMap map = align(seq, tree);
    const Json j = to_json(map, seq, tree);
    jsonl += j.dump() + "\n";
    text += fmt::format("{} ({} tokens, coverage {:.3f})\n", seq.snippet_id, seq.records.size(),
                        j["coverage"]["coverage_ratio"].get<double>());
    for (const auto& e : j["entries"]) {
      text += fmt::format("  {:>5}  [{:>5},{:>5})  {:<20} -> {}\n", e["token_index"].get<std::size_t>(),
                          e["start"].get<std::size_t>(), e["end"].get<std::size_t>(),
                          Json(e["text"].get<std::string>()).dump(),
                          e["kind"].is_null() ? std::string("UNALIGNED") : e["kind"].get<std::string>());
    }
  }
  if (!o.out.empty()) {
    write_file_atomic(o.out, jsonl);
    emit_summary(out, common, Json{{"files", Json::array({o.out})}, {"snippets", seqs.size()}},
                 fmt::format("wrote {} alignments to {}\n", seqs.size(), o.out));
  } else {
    out << (common.format == "json" ? jsonl : text);
  }
  return kExitOk;
}

int causal_cmd(const Common& common, const CausalOptions& o, std::ostream& out) {
  const CategoryMapping mapping = load_mapping(common);
  CorpusConfig cfg;
  cfg.aggregator = parse_aggregator(common.aggregator);
  cfg.bootstrap_reps = 1;  // the category report is not used here
  cfg.seed = o.seed;
  cfg.max_tokens = common.max_tokens;
  cfg.jobs = common.jobs;

  auto tlps = load_tlps(o.tlp);
  const auto dataset = dataset_or_sources(o.dataset, tlps);
  const auto reports = analyze_models(dataset, std::move(tlps), mapping, cfg);
  const auto treatments = o.treatments.empty() ? default_causal_treatments() : o.treatments;

  CausalConfig cc;
  cc.seed = o.seed;
  cc.permutations = o.permutations;
  cc.standardize_confounders = o.standardize;

  Json files = Json::array();
  Json all = Json::array();
  std::string text = fmt::format("{:<24} {:<28} {:<16} {:>7} {:>8} {:>8} {:>8} {:>6}\n", "category", "subcategory",
                                 "model", "rho", "ate", "stderr", "placebo", "n");
  for (const auto& r : reports) {
    const auto rows = causal_report(r, treatments, mapping, cc);
    Json arr = Json::array();
    for (const auto& e : rows) {
      arr.push_back(to_json(e));
      all.push_back(to_json(e));
      text += fmt::format("{:<24} {:<28} {:<16} {:>7} {:>8} {:>8} {:>8} {:>6}{}\n", e.category, e.subcategory,
                          e.model_id, fmt_opt(e.rho), fmt_opt(e.ate), fmt_opt(e.ate_stderr),
                          e.placebo_ate ? fmt::format("{:.3f}{}", *e.placebo_ate, e.placebo_pass ? "" : "!")
                                        : std::string("null"),
                          e.n, e.error.empty() ? "" : "  (" + e.error + ")");
    }
    const std::string stem = file_stem(r.model_id.empty() ? "model" : r.model_id);
    const fs::path json_path = fs::path(o.out_dir) / ("causal." + stem + ".json");
    const fs::path csv_path = fs::path(o.out_dir) / ("causal." + stem + ".csv");
    write_file_atomic(json_path, Json{{"model_id", r.model_id},
                                      {"seed", o.seed},
                                      {"permutations", o.permutations},
                                      {"aggregator", to_string(r.aggregator)},
                                      {"mapping_digest", r.mapping_digest},
                                      {"rows", std::move(arr)}}
                                         .dump(2) +
                                     "\n");
    write_file_atomic(csv_path, causal_csv(rows));
    files.push_back(json_path.string());
    files.push_back(csv_path.string());
  }
  emit_summary(out, common, Json{{"files", files}, {"rows", all}}, text);
  return kExitOk;
}

int fetch_cmd(const Common& common, const FetchOptions& o, std::ostream& out) {
  EndpointConfig cfg;
  cfg.base_url = o.base_url;
  cfg.model = o.model;
  cfg.api_key = api_key_from_env();
  cfg.timeout_seconds = o.timeout;
  cfg.max_tokens = o.max_tokens;
  cfg.echo = !o.no_echo;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  cfg.max_in_flight = o.max_in_flight;
  cfg.attempts = o.attempts;
  if (cfg.base_url.empty()) throw Error(ErrorCode::InvalidConfig, "--base-url is empty");
  if (cfg.max_tokens < 1) throw Error(ErrorCode::InvalidConfig, "--max-tokens must be >= 1");

  const auto dataset = read_dataset_jsonl(o.dataset);
  std::vector<FetchRequest> requests;
  for (const auto& r : dataset) {
    std::size_t prompt_len = r.prompt_len.value_or(0);
    if (!cfg.echo && !r.prompt_len) {
      throw Error(ErrorCode::InvalidConfig, "snippet " + r.snippet_id + " has no prompt_len; required with --no-echo");
    }
    if (prompt_len > r.source.size()) {
      throw Error(ErrorCode::InvalidSpan, "snippet " + r.snippet_id + " prompt_len beyond source");
    }
    requests.push_back({r.snippet_id, r.source, prompt_len});
  }

  const auto results = fetch_many(cfg, requests);
  std::vector<TlpSequence> seqs;
  Json failures = Json::array();
  std::string text;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].sequence) {
      seqs.push_back(*results[i].sequence);
    } else {
      failures.push_back(Json{{"snippet_id", requests[i].snippet_id}, {"error", results[i].error}});
      text += fmt::format("failed {}: {}\n", requests[i].snippet_id, results[i].error);
    }
  }
  if (!failures.empty() && !o.keep_going) {
    emit_summary(out, common, Json{{"fetched", seqs.size()}, {"failures", failures}}, text);
    spdlog::error("{} of {} snippets failed; nothing written (use --keep-going to write the rest)", failures.size(),
                  results.size());
    return kExitInput;
  }
  write_file_atomic(o.out, tlp_jsonl(seqs));
  text += fmt::format("wrote {} sequences to {}\n", seqs.size(), o.out);
  emit_summary(out, common, Json{{"fetched", seqs.size()}, {"failures", failures}, {"files", Json::array({o.out})}},
               text);
  return kExitOk;
}

int validate_cmd(const Common& common, const ValidateOptions& o, std::ostream& out) {
  if (o.tlp.empty() && o.dataset.empty() && o.mapping.empty()) {
    throw Error(ErrorCode::InvalidConfig, "nothing to validate; pass --tlp, --dataset or --mapping");
  }
  Json checked = Json::array();
  std::string text;
  std::vector<std::string> problems;

  std::vector<TlpSequence> tlps;
  for (const auto& p : o.tlp) {
    auto part = read_tlp_jsonl(p);
    checked.push_back(Json{{"file", p}, {"kind", "tlp"}, {"records", part.size()}});
    text += fmt::format("ok  tlp      {} ({} sequences)\n", p, part.size());
    for (auto& s : part) tlps.push_back(std::move(s));
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& s : tlps) {
    if (!seen.insert({s.model_id, s.snippet_id}).second) {
      problems.push_back("duplicate sequence for snippet '" + s.snippet_id + "' model '" + s.model_id + "'");
    }
  }

  if (!o.dataset.empty()) {
    const auto dataset = read_dataset_jsonl(o.dataset);
    std::set<std::string> ids;
    for (const auto& r : dataset) {
      if (!ids.insert(r.snippet_id).second) problems.push_back("duplicate snippet_id '" + r.snippet_id + "'");
      if (!is_valid_utf8(r.source)) problems.push_back("snippet '" + r.snippet_id + "' is not valid UTF-8");
      if (r.prompt_len && *r.prompt_len > r.source.size()) {
        problems.push_back("snippet '" + r.snippet_id + "' prompt_len beyond source");
      }
    }
    checked.push_back(Json{{"file", o.dataset}, {"kind", "dataset"}, {"records", dataset.size()}});
    text += fmt::format("ok  dataset  {} ({} snippets)\n", o.dataset, dataset.size());
    if (!tlps.empty()) {
      std::map<std::string, std::set<std::string>> have;
      for (const auto& s : tlps) have[s.model_id].insert(s.snippet_id);
      for (const auto& [model, snippet_ids] : have) {
        for (const auto& r : dataset) {
          if (!snippet_ids.contains(r.snippet_id)) {
            problems.push_back("model '" + model + "' has no sequence for snippet '" + r.snippet_id + "'");
          } else if (const auto it = std::find_if(tlps.begin(), tlps.end(),
                                                  [&](const TlpSequence& s) {
                                                    return s.model_id == model && s.snippet_id == r.snippet_id;
                                                  });
                     it->source != r.source) {
            problems.push_back("snippet '" + r.snippet_id + "' source differs between dataset and TLP");
          }
        }
      }
    }
  }

  if (!o.mapping.empty()) {
    const auto m = load_category_mapping(o.mapping);
    checked.push_back(Json{{"file", o.mapping}, {"kind", "mapping"}, {"records", m.table().size()}});
    text += fmt::format("ok  mapping  {} ({} kinds)\n", o.mapping, m.table().size());
  }

  for (const auto& p : problems) text += "error: " + p + "\n";
  emit_summary(out, common, Json{{"checked", checked}, {"problems", problems}, {"valid", problems.empty()}}, text);
  return problems.empty() ? kExitOk : kExitInput;
}

void add_common(CLI::App& sub, Common& c, bool mapping, bool aggregator) {
  if (mapping) {
    sub.add_option("--mapping", c.mapping_path, "Category mapping JSON (default: built-in Python mapping)")
        ->check(CLI::ExistingFile);
  }
  if (aggregator) {
    sub.add_option("--aggregator", c.aggregator, "Node aggregation: median, mean or max")
        ->capture_default_str()
        ->check(CLI::IsMember({"median", "mean", "max"}));
  }
  sub.add_option("--max-tokens", c.max_tokens, "Truncate sequences to this many tokens")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub.add_option("--format", c.format, "Standard output format: text or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json"}));
}

void add_jobs(CLI::App& sub, Common& c) {
  sub.add_option("--jobs,-j", c.jobs, "Worker threads (0 = available parallelism)")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Syntax-grounded explanations of code language model predictions", "syntaxlens"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "syntaxlens 0.3.0");
  bool verbose = false;
  bool quiet = false;
  app.add_flag("--verbose,-v", verbose, "Log debug detail to standard error");
  app.add_flag("--quiet,-q", quiet, "Log only errors");

  Common common;
  LocalOptions local;
  GlobalOptions global;
  AlignOptions align_o;
  CausalOptions causal;
  FetchOptions fetch;
  ValidateOptions validate;

  auto* loc = app.add_subcommand("explain-local", "Render per-snippet sequence or syntax-tree explanations");
  loc->add_option("--tlp", local.tlp, "TLP JSONL file(s)")->required()->check(CLI::ExistingFile);
  loc->add_option("--snippet", local.snippets, "Only render these snippet ids");
  loc->add_option("--mode", local.mode, "sequence, ast_complete or ast_partial")
      ->capture_default_str()
      ->check(CLI::IsMember({"sequence", "ast_complete", "ast_partial"}));
  loc->add_option("--output-format", local.output_format, "dot, svg or html")
      ->capture_default_str()
      ->check(CLI::IsMember({"dot", "svg", "html"}));
  loc->add_flag("--no-highlight", local.no_highlight, "Do not mark the generated region");
  loc->add_option("--out,-o", local.out_dir, "Output directory")->required();
  add_common(*loc, common, false, true);

  auto* glob = app.add_subcommand("explain-global", "Bootstrapped per-category report for each model");
  glob->add_option("--dataset", global.dataset, "Dataset JSONL (default: sources from the TLP files)")
      ->check(CLI::ExistingFile);
  glob->add_option("--tlp", global.tlp, "TLP JSONL file(s); several models may be mixed")
      ->required()
      ->check(CLI::ExistingFile);
  glob->add_option("--seed", global.seed, "Bootstrap seed")->capture_default_str();
  glob->add_option("--reps", global.reps, "Bootstrap resamples")->capture_default_str()->check(CLI::PositiveNumber);
  glob->add_option("--tau", global.tau, "Confidence threshold for pass/fail flags")->capture_default_str();
  glob->add_option("--pair", global.pairs, "Model pair A B for a delta column (repeatable)");
  glob->add_option("--subcategory", global.subcategories, "Node kinds added as comparison rows");
  glob->add_option("--out,-o", global.out_dir, "Output directory")->required();
  add_common(*glob, common, true, true);
  add_jobs(*glob, common);

  auto* al = app.add_subcommand("align", "Token-to-terminal alignment per snippet");
  al->add_option("--tlp", align_o.tlp, "TLP JSONL file(s)")->required()->check(CLI::ExistingFile);
  al->add_option("--snippet", align_o.snippets, "Only align these snippet ids");
  al->add_option("--out,-o", align_o.out, "Write alignment JSONL here instead of standard output");
  add_common(*al, common, false, false);

  auto* cau = app.add_subcommand("causal", "Correlation, ATE and placebo refutation per treatment");
  cau->add_option("--dataset", causal.dataset, "Dataset JSONL (default: sources from the TLP files)")
      ->check(CLI::ExistingFile);
  cau->add_option("--tlp", causal.tlp, "TLP JSONL file(s)")->required()->check(CLI::ExistingFile);
  cau->add_option("--seed", causal.seed, "Placebo permutation seed")->capture_default_str();
  cau->add_option("--permutations", causal.permutations, "Placebo permutations per treatment")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cau->add_option("--treatment", causal.treatments,
                  "Node kind or category name (repeatable; default: the fourteen standard kinds)");
  cau->add_flag("--standardize", causal.standardize, "Z-score confounders before fitting");
  cau->add_option("--out,-o", causal.out_dir, "Output directory")->required();
  add_common(*cau, common, true, true);
  add_jobs(*cau, common);

  auto* fet = app.add_subcommand("fetch-logprobs", "Fetch token logprobs from an OpenAI-compatible endpoint");
  fet->add_option("--dataset", fetch.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  fet->add_option("--base-url", fetch.base_url, "Endpoint base URL, e.g. http://localhost:8000/v1")->required();
  fet->add_option("--model", fetch.model, "Model name sent to the endpoint")->required();
  fet->add_option("--out,-o", fetch.out, "Output TLP JSONL")->required();
  fet->add_option("--timeout", fetch.timeout, "Per-request timeout in seconds")->capture_default_str();
  fet->add_option("--max-tokens", fetch.max_tokens, "Completion length without --echo")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fet->add_flag("--no-echo", fetch.no_echo, "Generate a completion after prompt_len instead of scoring the snippet");
  fet->add_option("--cache-dir", fetch.cache_dir, "Response cache directory");
  fet->add_option("--max-in-flight", fetch.max_in_flight, "Concurrent requests")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fet->add_option("--attempts", fetch.attempts, "Attempts per request")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fet->add_flag("--keep-going", fetch.keep_going, "Write the successful sequences even if some fail");
  fet->add_option("--format", common.format, "Standard output format: text or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json"}));
  fet->footer(fmt::format("The API key is read from {} (or OPENAI_API_KEY).", kApiKeyEnv));

  auto* val = app.add_subcommand("validate", "Check TLP, dataset and mapping files without computing");
  val->add_option("--tlp", validate.tlp, "TLP JSONL file(s)")->check(CLI::ExistingFile);
  val->add_option("--dataset", validate.dataset, "Dataset JSONL")->check(CLI::ExistingFile);
  val->add_option("--mapping", validate.mapping, "Category mapping JSON")->check(CLI::ExistingFile);
  val->add_option("--format", common.format, "Standard output format: text or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.back()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.back()->help());
    return kExitInput;
  }

  spdlog::set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (loc->parsed()) return explain_local(common, local, out);
    if (glob->parsed()) return explain_global(common, global, out);
    if (al->parsed()) return align_cmd(common, align_o, out);
    if (cau->parsed()) return causal_cmd(common, causal, out);
    if (fet->parsed()) return fetch_cmd(common, fetch, out);
    if (val->parsed()) return validate_cmd(common, validate, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  err << app.help();
  return kExitInput;
}

}  // namespace syntaxlens::cli
