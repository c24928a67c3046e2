#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "syntaxlens/alignment.hpp"
#include "syntaxlens/causal.hpp"
#include "syntaxlens/clustering.hpp"
#include "syntaxlens/corpus.hpp"
#include "syntaxlens/tlp.hpp"

namespace syntaxlens {

using Json = nlohmann::ordered_json;

// TLP JSONL: one snippet per line, tokens carry either "logprob" or
// "logits" + "realized".
TlpSequence tlp_from_json(const Json& j);
Json to_json(const TlpSequence& seq);
std::vector<TlpSequence> read_tlp_jsonl(const std::filesystem::path& path);
std::string tlp_jsonl(const std::vector<TlpSequence>& seqs);

DatasetRecord dataset_record_from_json(const Json& j);
Json to_json(const DatasetRecord& rec);
std::vector<DatasetRecord> read_dataset_jsonl(const std::filesystem::path& path);

Json to_json(const AlignmentMap& map, const TlpSequence& seq, const SyntaxTree& tree);

/// Flat node list: node_id, kind, span, confidence, token_count.
Json annotations_json(const AnnotatedTree& tree);

Json to_json(const ScoreEstimate& e);
Json to_json(const CategoryReport& report);
CategoryReport category_report_from_json(const Json& j);

Json to_json(const CorpusReport& report, double tau = kDefaultThreshold);
CorpusReport corpus_report_from_json(const Json& j);

/// Columns: model_id, level, name, point, ci_low, ci_high, n.
std::string category_report_csv(const CategoryReport& report);

Json to_json(const ComparisonMatrix& m);

/// Rows x models grid of point estimates for heatmap renderers.
Json heatmap_json(const ComparisonMatrix& m);

Json to_json(const CausalEstimate& e);
/// Columns: category, subcategory, model_id, rho, ate, stderr,
/// placebo_ate, placebo_pass, n.
std::string causal_csv(const std::vector<CausalEstimate>& rows);

/// Parses a whole document, mapping parse failures to Error(Parse).
Json parse_json(std::string_view text, std::string_view what);

}  // namespace syntaxlens
