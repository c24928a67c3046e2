#include "syntaxlens/serialization.hpp"

#include <fmt/format.h>

#include "syntaxlens/error.hpp"
#include "syntaxlens/io.hpp"

namespace syntaxlens {
namespace {

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<std::size_t> opt_size(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw Error(ErrorCode::Parse, std::string("field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::optional<double> opt_double(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw Error(ErrorCode::Parse, std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

template <typename T>
T required(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw Error(ErrorCode::Parse, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("field '") + key + "': " + e.what());
  }
}

std::string csv_number(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

ScoreEstimate estimate_from_json(const Json& j) {
  ScoreEstimate e;
  e.point = opt_double(j, "point");
  e.ci_low = opt_double(j, "ci_low");
  e.ci_high = opt_double(j, "ci_high");
  e.n = opt_size(j, "n").value_or(0);
  return e;
}

Json metrics_json(const StructuralMetrics& m) {
  return Json{{"cyclomatic_complexity", m.cyclomatic_complexity},
              {"ast_levels", m.ast_levels},
              {"node_count", m.node_count},
              {"sequence_size", m.sequence_size},
              {"loc", m.loc},
              {"whitespace_count", m.whitespace_count}};
}

StructuralMetrics metrics_from_json(const Json& j) {
  StructuralMetrics m;
  m.cyclomatic_complexity = opt_size(j, "cyclomatic_complexity").value_or(1);
  m.ast_levels = opt_size(j, "ast_levels").value_or(0);
  m.node_count = opt_size(j, "node_count").value_or(0);
  m.sequence_size = opt_size(j, "sequence_size").value_or(0);
  m.loc = opt_size(j, "loc").value_or(0);
  m.whitespace_count = opt_size(j, "whitespace_count").value_or(0);
  return m;
}

void annotations_into(const AnnotatedNode& n, std::optional<NodeId> parent, Json& out) {
  out.push_back(Json{{"node_id", n.node_id},
                     {"parent", opt(parent)},
                     {"kind", n.kind},
                     {"start", n.span.start},
                     {"end", n.span.end},
                     {"is_terminal", n.is_terminal},
                     {"confidence", opt(n.confidence)},
                     {"token_count", n.token_count}});
  for (const auto& c : n.children) annotations_into(c, n.node_id, out);
}

}  // namespace

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

TlpSequence tlp_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "TLP line must be an object");
  std::string source = required<std::string>(j, "source");
  const auto tokens_it = j.find("tokens");
  if (tokens_it == j.end() || !tokens_it->is_array()) throw Error(ErrorCode::Parse, "missing 'tokens' array");
  const Json& tokens = *tokens_it;

  const bool distributions = !tokens.empty() && tokens.front().contains("logits");
  TlpSequence seq;
  if (distributions) {
    std::vector<DistributionRow> rows;
    for (const auto& t : tokens) {
      DistributionRow row;
      row.token_text = required<std::string>(t, "text");
      row.span = {required<std::size_t>(t, "start"), required<std::size_t>(t, "end")};
      row.realized_token = required<std::string>(t, "realized");
      const auto& logits = t.at("logits");
      if (!logits.is_object()) throw Error(ErrorCode::Parse, "'logits' must be an object");
      for (const auto& [tok, y] : logits.items()) row.logits.emplace(tok, y.get<double>());
      rows.push_back(std::move(row));
    }
    seq = tlp_from_distributions(std::move(source), rows);
  } else {
    std::vector<PairRow> rows;
    for (const auto& t : tokens) {
      rows.push_back({required<std::string>(t, "text"),
                      {required<std::size_t>(t, "start"), required<std::size_t>(t, "end")},
                      required<double>(t, "logprob")});
    }
    seq = tlp_from_pairs(std::move(source), rows);
  }
  seq.snippet_id = required<std::string>(j, "snippet_id");
  seq.model_id = j.value("model_id", std::string());
  const auto gs = opt_size(j, "generated_start");
  const auto ge = opt_size(j, "generated_end");
  if (gs || ge) {
    seq.generated_span = Span{gs.value_or(0), ge.value_or(seq.source.size())};
  }
  validate_sequence(seq);
  return seq;
}

Json to_json(const TlpSequence& seq) {
  Json tokens = Json::array();
  for (const auto& r : seq.records) {
    tokens.push_back(Json{{"text", r.token_text}, {"start", r.span.start}, {"end", r.span.end}, {"logprob", r.logprob}});
  }
  return Json{{"snippet_id", seq.snippet_id},
              {"model_id", seq.model_id},
              {"source", seq.source},
              {"generated_start", seq.generated_span ? Json(seq.generated_span->start) : Json(nullptr)},
              {"generated_end", seq.generated_span ? Json(seq.generated_span->end) : Json(nullptr)},
              {"tokens", std::move(tokens)}};
}

std::vector<TlpSequence> read_tlp_jsonl(const std::filesystem::path& path) {
  std::vector<TlpSequence> out;
  for_each_jsonl_line(path, [&](std::string_view line, std::size_t number) {
    const std::string where = path.filename().string() + ":" + std::to_string(number);
    try {
      out.push_back(tlp_from_json(parse_json(line, where)));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  });
  return out;
}

std::string tlp_jsonl(const std::vector<TlpSequence>& seqs) {
  std::string out;
  for (const auto& s : seqs) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

DatasetRecord dataset_record_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "dataset line must be an object");
  DatasetRecord r;
  r.snippet_id = required<std::string>(j, "snippet_id");
  r.source = required<std::string>(j, "source");
  r.cyclomatic_complexity = opt_size(j, "cyclomatic_complexity");
  r.ast_levels = opt_size(j, "ast_levels");
  r.node_count = opt_size(j, "node_count");
  r.token_count = opt_size(j, "token_count");
  r.prompt_len = opt_size(j, "prompt_len");
  return r;
}

Json to_json(const DatasetRecord& r) {
  Json j{{"snippet_id", r.snippet_id},
         {"source", r.source},
         {"cyclomatic_complexity", opt(r.cyclomatic_complexity)},
         {"ast_levels", opt(r.ast_levels)},
         {"node_count", opt(r.node_count)},
         {"token_count", opt(r.token_count)}};
  if (r.prompt_len) j["prompt_len"] = *r.prompt_len;
  return j;
}

std::vector<DatasetRecord> read_dataset_jsonl(const std::filesystem::path& path) {
  std::vector<DatasetRecord> out;
  for_each_jsonl_line(path, [&](std::string_view line, std::size_t number) {
    const std::string where = path.filename().string() + ":" + std::to_string(number);
    try {
      out.push_back(dataset_record_from_json(parse_json(line, where)));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  });
  return out;
}

Json to_json(const AlignmentMap& map, const TlpSequence& seq, const SyntaxTree& tree) {
  std::vector<const AstNode*> by_id(tree.node_count, nullptr);
  for (const AstNode* t : terminals_in_order(tree)) by_id[t->node_id] = t;

  Json entries = Json::array();
  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    const auto& r = seq.records[i];
    Json e{{"token_index", i},
           {"text", r.token_text},
           {"label", normalize_token(r.token_text)},
           {"start", r.span.start},
           {"end", r.span.end},
           {"node_id", opt(map.entries[i])}};
    e["kind"] = map.entries[i] ? Json(by_id[*map.entries[i]]->kind) : Json(nullptr);
    entries.push_back(std::move(e));
  }
  Json per_terminal = Json::array();
  for (const auto& [node, tokens] : map.per_terminal) {
    per_terminal.push_back(Json{{"node_id", node}, {"kind", by_id[node]->kind}, {"tokens", tokens}});
  }
  const auto cov = coverage_report(map, tree);
  return Json{{"snippet_id", seq.snippet_id},
              {"model_id", seq.model_id},
              {"entries", std::move(entries)},
              {"per_terminal", std::move(per_terminal)},
              {"coverage",
               Json{{"unaligned_token_count", cov.unaligned_token_count},
                    {"uncovered_terminal_count", cov.uncovered_terminal_count},
                    {"coverage_ratio", cov.coverage_ratio}}}};
}

Json annotations_json(const AnnotatedTree& tree) {
  Json nodes = Json::array();
  annotations_into(tree.root, std::nullopt, nodes);
  return Json{{"snippet_id", tree.snippet_id},
              {"model_id", tree.model_id},
              {"aggregator", to_string(tree.aggregator)},
              {"generated_start", tree.generated_span ? Json(tree.generated_span->start) : Json(nullptr)},
              {"generated_end", tree.generated_span ? Json(tree.generated_span->end) : Json(nullptr)},
              {"nodes", std::move(nodes)}};
}

Json to_json(const ScoreEstimate& e) {
  return Json{{"point", opt(e.point)}, {"ci_low", opt(e.ci_low)}, {"ci_high", opt(e.ci_high)}, {"n", e.n}};
}

Json to_json(const CategoryReport& report) {
  Json cats = Json::object();
  for (Category c : kSyntaxCategories) {
    const auto it = report.per_category.find(c);
    cats[std::string(to_string(c))] = it != report.per_category.end() ? to_json(it->second) : to_json(ScoreEstimate{});
  }
  Json subs = Json::object();
  for (const auto& [kind, e] : report.per_subcategory) subs[kind] = to_json(e);
  return Json{{"model_id", report.model_id},
              {"aggregator", to_string(report.aggregator)},
              {"bootstrap_seed", report.bootstrap_seed},
              {"bootstrap_reps", report.bootstrap_reps},
              {"per_category", std::move(cats)},
              {"unmapped", to_json(report.unmapped)},
              {"per_subcategory", std::move(subs)}};
}

CategoryReport category_report_from_json(const Json& j) {
  CategoryReport r;
  r.model_id = j.value("model_id", std::string());
  r.aggregator = parse_aggregator(j.value("aggregator", std::string("median")));
  r.bootstrap_seed = j.value("bootstrap_seed", std::uint64_t{0});
  r.bootstrap_reps = j.value("bootstrap_reps", kDefaultBootstrapReps);
  if (const auto it = j.find("per_category"); it != j.end()) {
    for (const auto& [name, value] : it->items()) {
      const auto cat = parse_category(name);
      if (!cat || *cat == Category::Unmapped) throw Error(ErrorCode::UnknownCategoryName, name);
      r.per_category[*cat] = estimate_from_json(value);
    }
  }
  for (Category c : kSyntaxCategories) r.per_category.try_emplace(c);
  if (const auto it = j.find("unmapped"); it != j.end()) r.unmapped = estimate_from_json(*it);
  if (const auto it = j.find("per_subcategory"); it != j.end()) {
    for (const auto& [kind, value] : it->items()) r.per_subcategory[kind] = estimate_from_json(value);
  }
  return r;
}

Json to_json(const CorpusReport& report, double tau) {
  Json snippets = Json::array();
  for (const auto& a : report.snippet_analyses) {
    Json kinds = Json::object();
    for (const auto& [k, v] : a.kind_scores) kinds[k] = v;
    snippets.push_back(Json{{"snippet_id", a.snippet_id},
                            {"metrics", metrics_json(a.metrics)},
                            {"cross_entropy", a.cross_entropy},
                            {"mean_probability", a.mean_probability},
                            {"token_count", a.token_count},
                            {"truncated", a.truncated},
                            {"has_errors", a.has_errors},
                            {"coverage",
                             Json{{"unaligned_token_count", a.coverage.unaligned_token_count},
                                  {"uncovered_terminal_count", a.coverage.uncovered_terminal_count},
                                  {"coverage_ratio", a.coverage.coverage_ratio}}},
                            {"kind_scores", std::move(kinds)}});
  }
  Json flags = Json::object();
  for (const auto& [c, f] : threshold_flags(report, tau)) flags[std::string(to_string(c))] = to_string(f);

  return Json{{"model_id", report.model_id},
              {"mapping_digest", report.mapping_digest},
              {"aggregator", to_string(report.aggregator)},
              {"intrinsic", report.intrinsic},
              {"snippet_count", report.snippet_analyses.size()},
              {"skipped", report.skipped},
              {"truncated_count", report.truncated_count},
              {"threshold", tau},
              {"threshold_flags", std::move(flags)},
              {"category_report", to_json(report.category_report)},
              {"snippets", std::move(snippets)}};
}

CorpusReport corpus_report_from_json(const Json& j) {
  CorpusReport r;
  r.model_id = required<std::string>(j, "model_id");
  r.mapping_digest = j.value("mapping_digest", std::string());
  r.aggregator = parse_aggregator(j.value("aggregator", std::string("median")));
  r.intrinsic = j.value("intrinsic", 0.0);
  r.truncated_count = j.value("truncated_count", std::size_t{0});
  if (const auto it = j.find("skipped"); it != j.end()) r.skipped = it->get<std::vector<std::string>>();
  r.category_report = category_report_from_json(j.at("category_report"));
  if (r.category_report.model_id.empty()) r.category_report.model_id = r.model_id;
  if (const auto it = j.find("snippets"); it != j.end()) {
    for (const auto& s : *it) {
      SnippetAnalysis a;
      a.snippet_id = required<std::string>(s, "snippet_id");
      a.metrics = metrics_from_json(s.at("metrics"));
      a.cross_entropy = required<double>(s, "cross_entropy");
      a.mean_probability = s.value("mean_probability", 0.0);
      a.token_count = s.value("token_count", std::size_t{0});
      a.truncated = s.value("truncated", false);
      a.has_errors = s.value("has_errors", false);
      if (const auto cov = s.find("coverage"); cov != s.end()) {
        a.coverage.unaligned_token_count = cov->value("unaligned_token_count", std::size_t{0});
        a.coverage.uncovered_terminal_count = cov->value("uncovered_terminal_count", std::size_t{0});
        a.coverage.coverage_ratio = cov->value("coverage_ratio", 0.0);
      }
      if (const auto k = s.find("kind_scores"); k != s.end()) {
        for (const auto& [kind, v] : k->items()) a.kind_scores[kind] = v.get<double>();
      }
      r.snippet_analyses.push_back(std::move(a));
    }
  }
  return r;
}

std::string category_report_csv(const CategoryReport& report) {
  std::string out = "model_id,level,name,point,ci_low,ci_high,n\n";
  const auto row = [&](std::string_view level, std::string_view name, const ScoreEstimate& e) {
    out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(report.model_id), level, csv_field(name),
                       csv_number(e.point), csv_number(e.ci_low), csv_number(e.ci_high), e.n);
  };
  for (Category c : kSyntaxCategories) {
    const auto it = report.per_category.find(c);
    row("category", to_string(c), it != report.per_category.end() ? it->second : ScoreEstimate{});
  }
  row("category", to_string(Category::Unmapped), report.unmapped);
  for (const auto& [kind, e] : report.per_subcategory) row("subcategory", kind, e);
  return out;
}

Json to_json(const ComparisonMatrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    Json cells = Json::object();
    for (std::size_t c = 0; c < m.columns.size(); ++c) cells[m.columns[c]] = opt(m.cells[r][c]);
    rows.push_back(Json{{"level", m.rows[r].level}, {"name", m.rows[r].name}, {"cells", std::move(cells)}});
  }
  Json deltas = Json::array();
  for (const auto& d : m.deltas) {
    Json values = Json::array();
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      values.push_back(Json{{"level", m.rows[r].level}, {"name", m.rows[r].name}, {"delta", opt(d.values[r])}});
    }
    deltas.push_back(Json{{"model_a", d.model_a}, {"model_b", d.model_b}, {"values", std::move(values)}});
  }
  return Json{{"columns", m.columns}, {"rows", std::move(rows)}, {"deltas", std::move(deltas)}};
}

Json heatmap_json(const ComparisonMatrix& m) {
  Json row_labels = Json::array();
  Json values = Json::array();
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    row_labels.push_back(Json{{"level", m.rows[r].level}, {"name", m.rows[r].name}});
    Json line = Json::array();
    for (const auto& v : m.cells[r]) line.push_back(opt(v));
    values.push_back(std::move(line));
  }
  return Json{{"columns", m.columns}, {"rows", std::move(row_labels)}, {"values", std::move(values)}};
}

Json to_json(const CausalEstimate& e) {
  return Json{{"model_id", e.model_id},
              {"category", e.category},
              {"subcategory", e.subcategory},
              {"treatment", e.treatment_name},
              {"n", e.n},
              {"rho", opt(e.rho)},
              {"ate", opt(e.ate)},
              {"stderr", opt(e.ate_stderr)},
              {"placebo_ate", opt(e.placebo_ate)},
              {"placebo_pass", e.placebo_pass},
              {"error", e.error.empty() ? Json(nullptr) : Json(e.error)}};
}

std::string causal_csv(const std::vector<CausalEstimate>& rows) {
  std::string out = "category,subcategory,model_id,rho,ate,stderr,placebo_ate,placebo_pass,n\n";
  for (const auto& e : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", csv_field(e.category), csv_field(e.subcategory),
                       csv_field(e.model_id), csv_number(e.rho), csv_number(e.ate), csv_number(e.ate_stderr),
                       csv_number(e.placebo_ate), e.placebo_pass ? "true" : "false", e.n);
  }
  return out;
}

}  // namespace syntaxlens
