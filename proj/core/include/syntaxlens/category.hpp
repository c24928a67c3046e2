#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace syntaxlens {

/// The ten syntax categories, plus a bucket for kinds without a mapping.
enum class Category {
  DataStructures,
  Decisions,
  Exceptions,
  FunctionalProgramming,
  Iterations,
  NaturalLanguage,
  Operators,
  Scope,
  Testing,
  DataTypes,
  Unmapped,
};

inline constexpr std::array<Category, 10> kSyntaxCategories{
    Category::DataStructures, Category::Decisions,       Category::Exceptions,
    Category::FunctionalProgramming, Category::Iterations, Category::NaturalLanguage,
    Category::Operators,      Category::Scope,           Category::Testing,
    Category::DataTypes};

std::string_view to_string(Category c) noexcept;
std::optional<Category> parse_category(std::string_view name) noexcept;

/// Node kind -> category. Lookups of unknown kinds return Unmapped.
class CategoryMapping {
 public:
  CategoryMapping() = default;
  using Table = std::map<std::string, Category, std::less<>>;

  explicit CategoryMapping(Table table) : table_(std::move(table)) {}

  Category lookup(std::string_view kind) const;
  const Table& table() const noexcept { return table_; }

  /// SHA-256 of the canonical JSON form; equal mappings share a digest.
  std::string digest() const;
  std::string to_json_text() const;

 private:
  Table table_;
};

/// Parses `{kind: category_name}` text. Throws ParseError,
/// UnknownCategoryName or DuplicateKind.
CategoryMapping parse_category_mapping(std::string_view json_text);
CategoryMapping load_category_mapping(const std::filesystem::path& path);

/// The Python mapping shipped with the library (data/python_categories.json).
const CategoryMapping& default_category_mapping();
std::string_view default_category_mapping_json() noexcept;

}  // namespace syntaxlens
