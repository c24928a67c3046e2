#include "syntaxlens/category.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sha256.hpp"
#include "syntaxlens/error.hpp"

namespace syntaxlens {
namespace detail {
extern const std::string_view kDefaultMappingJson;
}

namespace {

constexpr std::array<std::pair<Category, std::string_view>, 11> kNames{{
    {Category::DataStructures, "Data Structures"},
    {Category::Decisions, "Decisions"},
    {Category::Exceptions, "Exceptions"},
    {Category::FunctionalProgramming, "Functional Programming"},
    {Category::Iterations, "Iterations"},
    {Category::NaturalLanguage, "Natural Language"},
    {Category::Operators, "Operators"},
    {Category::Scope, "Scope"},
    {Category::Testing, "Testing"},
    {Category::DataTypes, "Data Types"},
    {Category::Unmapped, "UNMAPPED"},
}};

}  // namespace

std::string_view to_string(Category c) noexcept {
  for (const auto& [cat, name] : kNames) {
    if (cat == c) return name;
  }
  return "UNMAPPED";
}

std::optional<Category> parse_category(std::string_view name) noexcept {
  for (const auto& [cat, n] : kNames) {
    if (n == name) return cat;
  }
  return std::nullopt;
}

Category CategoryMapping::lookup(std::string_view kind) const {
  const auto it = table_.find(kind);
  return it == table_.end() ? Category::Unmapped : it->second;
}

std::string CategoryMapping::to_json_text() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [kind, cat] : table_) j[kind] = std::string(to_string(cat));
  return j.dump();
}

std::string CategoryMapping::digest() const { return detail::sha256_hex(to_json_text()); }

CategoryMapping parse_category_mapping(std::string_view json_text) {
  using nlohmann::json;
  std::set<std::string> seen;
  std::string duplicate;
  json::parser_callback_t cb = [&](int d, json::parse_event_t event, json& parsed) {
    if (event == json::parse_event_t::key && d == 1 && parsed.is_string()) {
      auto key = parsed.get<std::string>();
      if (!seen.insert(key).second && duplicate.empty()) duplicate = key;
    }
    return true;
  };

  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end(), cb);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  if (!duplicate.empty()) throw Error(ErrorCode::DuplicateKind, "kind '" + duplicate + "' listed twice");
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "category mapping must be a JSON object");

  CategoryMapping::Table table;
  for (const auto& [kind, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::Parse, "category for kind '" + kind + "' must be a string");
    }
    const auto name = value.get<std::string>();
    const auto cat = parse_category(name);
    if (!cat) throw Error(ErrorCode::UnknownCategoryName, "'" + name + "' for kind '" + kind + "'");
    table.emplace(kind, *cat);
  }
  return CategoryMapping(std::move(table));
}

CategoryMapping load_category_mapping(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open mapping file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_category_mapping(buf.str());
}

std::string_view default_category_mapping_json() noexcept { return detail::kDefaultMappingJson; }

const CategoryMapping& default_category_mapping() {
  static const CategoryMapping mapping = parse_category_mapping(detail::kDefaultMappingJson);
  return mapping;
}

}  // namespace syntaxlens
