#include "syntaxlens/render.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <functional>

#include "syntaxlens/alignment.hpp"
#include "syntaxlens/error.hpp"

namespace syntaxlens {
namespace {

constexpr double kCharWidth = 7.2;
constexpr double kFontSize = 12.0;

std::size_t display_columns(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) n += (c & 0xC0) != 0x80;
  return n;
}

std::string visible_text(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '\n') {
      out += "\xE2\x86\xB5";  // return symbol
    } else if (c == '\t') {
      out += "    ";
    } else if (c == '\r') {
      continue;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string_view slice(const std::string& source, const Span& span) {
  return std::string_view(source).substr(span.start, span.size());
}

bool in_generated(const std::optional<Span>& generated, const Span& span) {
  return generated && intersects(span, *generated);
}

std::string fill_for(const Palette& palette, std::optional<double> p) {
  return p ? palette.stop_for(*p).color : std::string(kNullColor);
}

std::string class_for(const Palette& palette, std::optional<double> p) {
  return p ? palette.stop_for(*p).name : std::string("null");
}

constexpr std::string_view kSvgStyle =
    "text{font-family:Menlo,Consolas,monospace;font-size:12px;fill:#111}"
    ".edge{stroke:#555;stroke-width:1}"
    ".generated rect{stroke:#1a9850;stroke-width:3}";

// ---------------------------------------------------------------- sequence

std::string sequence_html(const TlpSequence& seq, const RenderConfig& cfg) {
  std::string cells;
  std::size_t cursor = 0;
  const auto emit_gap = [&](std::size_t until) {
    if (until > cursor) cells += xml_escape(std::string_view(seq.source).substr(cursor, until - cursor));
  };
  for (std::size_t i = 0; i < seq.records.size(); ++i) {
    const auto& r = seq.records[i];
    emit_gap(r.span.start);
    const bool gen = cfg.highlight_generated && in_generated(seq.generated_span, r.span);
    cells += fmt::format(
        "<span class=\"tok {}{}\" data-index=\"{}\" style=\"background-color:{}\" "
        "title=\"{} p={:.6f}\">{}<sub>{:.2f}</sub></span>",
        class_for(cfg.palette, r.probability), gen ? " generated" : "", i,
        fill_for(cfg.palette, r.probability), xml_escape(normalize_token(r.token_text)), r.probability,
        xml_escape(slice(seq.source, r.span)), r.probability);
    cursor = std::max(cursor, r.span.end);
  }
  emit_gap(seq.source.size());

  std::string legend;
  for (const auto& stop : cfg.palette.stops()) {
    legend += fmt::format("<span class=\"legend\" style=\"background-color:{}\">{} &#8805; {:.2f}</span> ",
                          stop.color, xml_escape(stop.name), stop.threshold);
  }
  return fmt::format(
      "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n"
      "<title>{0}</title>\n<style>\n"
      "body{{font-family:sans-serif}}\n"
      "pre.sequence{{font-family:Menlo,Consolas,monospace;line-height:2.4}}\n"
      ".tok{{padding:1px 2px;border-radius:3px;color:#fff}}\n"
      ".tok sub{{font-size:0.6em;margin-left:1px}}\n"
      ".generated{{outline:2px solid {1}}}\n"
      ".legend{{color:#fff;padding:2px 6px;margin-right:4px}}\n"
      "</style>\n</head>\n<body>\n<h1>{0}</h1>\n<p>model: {2}</p>\n<p>{3}</p>\n"
      "<pre class=\"sequence\">{4}</pre>\n</body>\n</html>\n",
      xml_escape(seq.snippet_id.empty() ? "sequence" : seq.snippet_id), kGeneratedColor,
      xml_escape(seq.model_id), legend, cells);
}

std::string sequence_svg_body(const TlpSequence& seq, const RenderConfig& cfg, double& width,
                              double& height) {
  constexpr double row_h = 40.0;
  constexpr double margin = 10.0;
  double x = margin;
  double y = margin;
  double max_x = margin;
  std::string out;
  std::size_t cursor = 0;

  const auto advance_gap = [&](std::size_t until) {
    for (std::size_t k = cursor; k < until; ++k) {
      const char c = seq.source[k];
      if (c == '\n') {
        x = margin;
        y += row_h;
      } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
        x += c == '\t' ? 4 * kCharWidth : kCharWidth;
      }
      max_x = std::max(max_x, x);
    }
  };

  for (std::size_t i = 0; i < seq.records.size(); ++i) {
    const auto& r = seq.records[i];
    advance_gap(r.span.start);
    const std::string text = visible_text(slice(seq.source, r.span));
    const double w = std::max<double>(display_columns(text), 4.0) * kCharWidth + 4.0;
    const bool gen = cfg.highlight_generated && in_generated(seq.generated_span, r.span);
    out += fmt::format(
        "<g class=\"tok {}{}\" data-index=\"{}\"><title>{} p={:.6f}</title>"
        "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"30\" rx=\"3\" fill=\"{}\"/>"
        "<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>"
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"9\">{:.2f}</text></g>\n",
        class_for(cfg.palette, r.probability), gen ? " generated" : "", i,
        xml_escape(normalize_token(r.token_text)), r.probability, x, y, w,
        fill_for(cfg.palette, r.probability), x + 2, y + 13, xml_escape(text), x + 2, y + 26,
        r.probability);
    x += w + 2;
    max_x = std::max(max_x, x);
    if (slice(seq.source, r.span).find('\n') != std::string_view::npos) {
      x = margin;
      y += row_h;
    }
    cursor = std::max(cursor, r.span.end);
  }
  width = max_x + margin;
  height = y + row_h + margin;
  return out;
}

std::string svg_document(std::string_view title, double width, double height, std::string_view body) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" "
      "viewBox=\"0 0 {0:.0f} {1:.0f}\">\n<title>{2}</title>\n<style>{3}</style>\n{4}</svg>\n",
      width, height, xml_escape(title), kSvgStyle, body);
}

std::string html_wrap_svg(std::string_view title, std::string_view svg, std::string_view caption) {
  return fmt::format(
      "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n<title>{0}</title>\n"
      "</head>\n<body>\n<h1>{0}</h1>\n<p>{1}</p>\n<div class=\"figure\">\n{2}</div>\n</body>\n</html>\n",
      xml_escape(title), caption, svg);
}

std::string sequence_dot(const TlpSequence& seq, const RenderConfig& cfg) {
  std::string out = "digraph sequence {\n  rankdir=LR;\n  node [shape=box, style=filled, fontname=\"Courier\"];\n";
  for (std::size_t i = 0; i < seq.records.size(); ++i) {
    const auto& r = seq.records[i];
    const bool gen = cfg.highlight_generated && in_generated(seq.generated_span, r.span);
    out += fmt::format("  t{} [label=\"{}\\n{:.2f}\", fillcolor=\"{}\"{}];\n", i,
                       dot_escape(visible_text(slice(seq.source, r.span))), r.probability,
                       fill_for(cfg.palette, r.probability),
                       gen ? fmt::format(", penwidth=3, color=\"{}\"", kGeneratedColor) : "");
  }
  for (std::size_t i = 1; i < seq.records.size(); ++i) out += fmt::format("  t{} -> t{};\n", i - 1, i);
  out += "}\n";
  return out;
}

// --------------------------------------------------------------------- AST

struct LaidOutNode {
  const AnnotatedNode* node = nullptr;
  std::size_t depth = 0;
  double x = 0;  // center
  double width = 0;
  std::vector<std::size_t> children;
};

struct TreeLayout {
  std::vector<LaidOutNode> nodes;  // pre-order, index 0 = root
  double width = 0;
  double height = 0;
};

constexpr double kBoxHeight = 34.0;
constexpr double kLevelGap = 66.0;
constexpr double kSiblingGap = 10.0;
constexpr double kMargin = 12.0;

std::string node_title(const AnnotatedNode& n) { return visible_text(n.kind); }

// Leaves take consecutive slots left to right; parents center over their
// children.
TreeLayout layout_tree(const std::vector<const AnnotatedNode*>& visible) {
  TreeLayout layout;
  if (visible.empty()) return layout;
  std::vector<NodeId> ids;
  ids.reserve(visible.size());
  for (const auto* n : visible) ids.push_back(n->node_id);
  std::sort(ids.begin(), ids.end());
  const auto is_visible = [&](NodeId id) { return std::binary_search(ids.begin(), ids.end(), id); };

  double cursor = kMargin;
  std::size_t max_depth = 0;
  std::function<std::size_t(const AnnotatedNode&, std::size_t)> place =
      [&](const AnnotatedNode& n, std::size_t depth) -> std::size_t {
    const std::size_t idx = layout.nodes.size();
    layout.nodes.push_back({&n, depth, 0.0, 0.0, {}});
    max_depth = std::max(max_depth, depth);
    const double w = std::max<double>(display_columns(node_title(n)), 5.0) * kCharWidth + 14.0;
    layout.nodes[idx].width = w;
    std::vector<std::size_t> kids;
    for (const auto& c : n.children) {
      if (is_visible(c.node_id)) kids.push_back(place(c, depth + 1));
    }
    if (kids.empty()) {
      layout.nodes[idx].x = cursor + w / 2;
      cursor += w + kSiblingGap;
    } else {
      const double lo = layout.nodes[kids.front()].x;
      const double hi = layout.nodes[kids.back()].x;
      layout.nodes[idx].x = (lo + hi) / 2;
      cursor = std::max(cursor, layout.nodes[idx].x + w / 2 + kSiblingGap);
    }
    layout.nodes[idx].children = std::move(kids);
    return idx;
  };
  place(*visible.front(), 0);

  double min_left = kMargin;
  for (const auto& n : layout.nodes) min_left = std::min(min_left, n.x - n.width / 2);
  const double shift = kMargin - min_left;
  double max_right = 0;
  for (auto& n : layout.nodes) {
    n.x += shift;
    max_right = std::max(max_right, n.x + n.width / 2);
  }
  layout.width = max_right + kMargin;
  layout.height = kMargin * 2 + static_cast<double>(max_depth + 1) * kLevelGap;
  return layout;
}

double node_top(std::size_t depth) { return kMargin + static_cast<double>(depth) * kLevelGap; }

std::string ast_svg(const AnnotatedTree& tree, const RenderConfig& cfg,
                    const std::vector<const AnnotatedNode*>& visible) {
  const TreeLayout layout = layout_tree(visible);
  std::string edges;
  std::string shapes;
  for (const auto& ln : layout.nodes) {
    const AnnotatedNode& n = *ln.node;
    const double top = node_top(ln.depth);
    for (std::size_t c : ln.children) {
      const auto& child = layout.nodes[c];
      edges += fmt::format(
          "<line class=\"edge\" data-from=\"{}\" data-to=\"{}\" x1=\"{:.1f}\" y1=\"{:.1f}\" "
          "x2=\"{:.1f}\" y2=\"{:.1f}\"/>\n",
          n.node_id, child.node->node_id, ln.x, top + kBoxHeight, child.x, node_top(child.depth));
    }
    const bool gen = cfg.highlight_generated && in_generated(tree.generated_span, n.span);
    shapes += fmt::format(
        "<g class=\"node {}{}\" id=\"n{}\"><title>{} [{}, {}) tokens={}</title>"
        "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.0f}\" rx=\"5\" fill=\"{}\" "
        "fill-opacity=\"0.85\" stroke=\"#333\"/>"
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>"
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"10\">{}</text></g>\n",
        class_for(cfg.palette, n.confidence), gen ? " generated" : "", n.node_id,
        xml_escape(node_title(n)), n.span.start, n.span.end, n.token_count, ln.x - ln.width / 2, top,
        ln.width, kBoxHeight, fill_for(cfg.palette, n.confidence), ln.x, top + 14,
        xml_escape(node_title(n)), ln.x, top + 28, xml_escape(format_confidence(n.confidence)));
  }
  return svg_document(tree.snippet_id.empty() ? "syntax tree" : tree.snippet_id, layout.width,
                      layout.height, edges + shapes);
}

std::string ast_dot(const AnnotatedTree& tree, const RenderConfig& cfg,
                    const std::vector<const AnnotatedNode*>& visible) {
  std::vector<NodeId> ids;
  for (const auto* n : visible) ids.push_back(n->node_id);
  std::sort(ids.begin(), ids.end());

  std::string out =
      "digraph ast {\n  node [shape=box, style=\"rounded,filled\", fontname=\"Helvetica\"];\n";
  for (const auto* n : visible) {
    const bool gen = cfg.highlight_generated && in_generated(tree.generated_span, n->span);
    out += fmt::format("  n{} [label=\"{}\\n{}\", fillcolor=\"{}\"{}];\n", n->node_id,
                       dot_escape(node_title(*n)), dot_escape(format_confidence(n->confidence)),
                       fill_for(cfg.palette, n->confidence),
                       gen ? fmt::format(", penwidth=3, color=\"{}\"", kGeneratedColor) : "");
  }
  for (const auto* n : visible) {
    for (const auto& c : n->children) {
      if (std::binary_search(ids.begin(), ids.end(), c.node_id)) {
        out += fmt::format("  n{} -> n{};\n", n->node_id, c.node_id);
      }
    }
  }
  out += "}\n";
  return out;
}

void collect_visible(const AnnotatedNode& node, const std::optional<Span>& generated, bool partial,
                     std::vector<const AnnotatedNode*>& out) {
  if (partial && !intersects(node.span, *generated)) return;
  out.push_back(&node);
  for (const auto& c : node.children) collect_visible(c, generated, partial, out);
}

}  // namespace

Palette::Palette(std::vector<ColorStop> stops) : stops_(std::move(stops)) {
  if (stops_.empty()) throw Error(ErrorCode::InvalidConfig, "palette needs at least one stop");
  for (std::size_t i = 0; i < stops_.size(); ++i) {
    const double t = stops_[i].threshold;
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidConfig, "palette threshold outside [0,1]");
    if (i > 0 && !(t > stops_[i - 1].threshold)) {
      throw Error(ErrorCode::InvalidConfig, "palette thresholds must be strictly increasing");
    }
  }
}

Palette Palette::standard() {
  return Palette({{0.0, "#d73027", "low"}, {0.3, "#f39c12", "medium"}, {0.6, "#2c7bb6", "high"}});
}

std::size_t Palette::class_index(double probability) const noexcept {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < stops_.size(); ++i) {
    if (probability >= stops_[i].threshold) idx = i;
  }
  return idx;
}

const ColorStop& Palette::stop_for(double probability) const noexcept {
  return stops_[class_index(probability)];
}

std::string format_confidence(std::optional<double> confidence) {
  return confidence ? fmt::format("{:.2f}", *confidence) : std::string(kNullLabel);
}

std::vector<const AnnotatedNode*> visible_nodes(const AnnotatedTree& annotated, RenderMode mode) {
  const bool partial = mode == RenderMode::AstPartial;
  if (partial && !annotated.generated_span) {
    throw Error(ErrorCode::MissingGeneratedSpan, "ast_partial needs a generated span");
  }
  std::vector<const AnnotatedNode*> out;
  collect_visible(annotated.root, annotated.generated_span, partial, out);
  return out;
}

std::string render_sequence(const TlpSequence& seq, const RenderConfig& cfg) {
  if (cfg.mode != RenderMode::Sequence) {
    throw Error(ErrorCode::InvalidConfig, "render_sequence requires mode=sequence");
  }
  switch (cfg.format) {
    case OutputFormat::Dot:
      return sequence_dot(seq, cfg);
    case OutputFormat::Svg: {
      double w = 0, h = 0;
      const std::string body = sequence_svg_body(seq, cfg, w, h);
      return svg_document(seq.snippet_id.empty() ? "sequence" : seq.snippet_id, w, h, body);
    }
    case OutputFormat::Html:
      return sequence_html(seq, cfg);
  }
  return {};
}

std::string render_ast(const AnnotatedTree& annotated, const RenderConfig& cfg) {
  if (cfg.mode == RenderMode::Sequence) {
    throw Error(ErrorCode::InvalidConfig, "render_ast requires an ast mode");
  }
  const auto visible = visible_nodes(annotated, cfg.mode);
  switch (cfg.format) {
    case OutputFormat::Dot:
      return ast_dot(annotated, cfg, visible);
    case OutputFormat::Svg:
      return ast_svg(annotated, cfg, visible);
    case OutputFormat::Html: {
      const std::string caption =
          fmt::format("{} view, model {}, aggregator {}", to_string(cfg.mode),
                      xml_escape(annotated.model_id), to_string(annotated.aggregator));
      return html_wrap_svg(annotated.snippet_id.empty() ? "syntax tree" : annotated.snippet_id,
                           ast_svg(annotated, cfg, visible), caption);
    }
  }
  return {};
}

std::string_view to_string(RenderMode mode) noexcept {
  switch (mode) {
    case RenderMode::Sequence: return "sequence";
    case RenderMode::AstComplete: return "ast_complete";
    case RenderMode::AstPartial: return "ast_partial";
  }
  return "sequence";
}

std::string_view to_string(OutputFormat format) noexcept {
  switch (format) {
    case OutputFormat::Dot: return "dot";
    case OutputFormat::Svg: return "svg";
    case OutputFormat::Html: return "html";
  }
  return "svg";
}

RenderMode parse_render_mode(std::string_view name) {
  if (name == "sequence") return RenderMode::Sequence;
  if (name == "ast_complete") return RenderMode::AstComplete;
  if (name == "ast_partial") return RenderMode::AstPartial;
  throw Error(ErrorCode::InvalidConfig, "unknown render mode '" + std::string(name) + "'");
}

OutputFormat parse_output_format(std::string_view name) {
  if (name == "dot") return OutputFormat::Dot;
  if (name == "svg") return OutputFormat::Svg;
  if (name == "html") return OutputFormat::Html;
  throw Error(ErrorCode::InvalidConfig, "unknown output format '" + std::string(name) + "'");
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default:
        if (c < 0x20 && ch != '\n' && ch != '\t' && ch != '\r') {
          out += "\xEF\xBF\xBD";  // not representable in XML 1.0
        } else {
          out.push_back(ch);
        }
    }
  }
  return out;
}

std::string dot_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          out.push_back(' ');
        } else {
          out.push_back(ch);
        }
    }
  }
  return out;
}

}  // namespace syntaxlens
