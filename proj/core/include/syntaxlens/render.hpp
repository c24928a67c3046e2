#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "syntaxlens/clustering.hpp"
#include "syntaxlens/tlp.hpp"

namespace syntaxlens {

enum class RenderMode { Sequence, AstComplete, AstPartial };
enum class OutputFormat { Dot, Svg, Html };

struct ColorStop {
  double threshold = 0.0;  // lowest probability drawn with this color
  std::string color;
  std::string name;
};

/// Ordered color stops; probability p falls in the last stop whose
/// threshold is <= p (or the first stop when p is below all of them).
class Palette {
 public:
  /// Throws InvalidConfig unless thresholds are strictly increasing in [0,1].
  explicit Palette(std::vector<ColorStop> stops);

  /// Red below 0.3, amber below 0.6, blue from 0.6 up.
  static Palette standard();

  std::size_t class_index(double probability) const noexcept;
  const ColorStop& stop_for(double probability) const noexcept;
  const std::vector<ColorStop>& stops() const noexcept { return stops_; }

 private:
  std::vector<ColorStop> stops_;
};

inline constexpr std::string_view kNullColor = "#bdbdbd";
inline constexpr std::string_view kNullLabel = "\xE2\x80\x94";  // em dash
inline constexpr std::string_view kGeneratedColor = "#1a9850";

struct RenderConfig {
  RenderMode mode = RenderMode::AstComplete;
  Palette palette = Palette::standard();
  bool highlight_generated = true;
  OutputFormat format = OutputFormat::Svg;
};

/// One cell per token, colored by probability and labelled to 2 decimals.
std::string render_sequence(const TlpSequence& seq, const RenderConfig& cfg);

/// Annotated tree as a graph. ast_partial keeps only nodes whose span
/// intersects the generated span and throws MissingGeneratedSpan without one.
std::string render_ast(const AnnotatedTree& annotated, const RenderConfig& cfg);

/// Nodes drawn by render_ast for the given mode, in pre-order.
std::vector<const AnnotatedNode*> visible_nodes(const AnnotatedTree& annotated, RenderMode mode);

/// "0.23", or the em dash for null.
std::string format_confidence(std::optional<double> confidence);

std::string_view to_string(RenderMode mode) noexcept;
std::string_view to_string(OutputFormat format) noexcept;
RenderMode parse_render_mode(std::string_view name);
OutputFormat parse_output_format(std::string_view name);

std::string xml_escape(std::string_view text);
std::string dot_escape(std::string_view text);

}  // namespace syntaxlens
