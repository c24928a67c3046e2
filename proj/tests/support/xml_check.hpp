#pragma once

// Minimal XML well-formedness checker: balanced tags, quoted attributes,
// known entities, a single root element. Enough for SVG/XHTML output.

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xmlcheck {

struct Element {
  std::string name;
  std::map<std::string, std::string> attributes;
  int parent = -1;
  std::string text;  // concatenated character data directly inside
};

struct Document {
  std::vector<Element> elements;  // document order; elements[0] is the root
  std::string error;              // empty when well-formed

  bool ok() const { return error.empty() && !elements.empty(); }

  std::size_t count(std::string_view name) const {
    std::size_t n = 0;
    for (const auto& e : elements) n += e.name == name;
    return n;
  }

  /// Elements named `name` whose class list contains `cls`.
  std::vector<const Element*> with_class(std::string_view name, std::string_view cls) const {
    std::vector<const Element*> out;
    for (const auto& e : elements) {
      if (e.name != name) continue;
      const auto it = e.attributes.find("class");
      if (it == e.attributes.end()) continue;
      std::string_view list = it->second;
      std::size_t pos = 0;
      while (pos <= list.size()) {
        const auto end = std::min(list.find(' ', pos), list.size());
        if (list.substr(pos, end - pos) == cls) {
          out.push_back(&e);
          break;
        }
        pos = end + 1;
      }
    }
    return out;
  }
};

namespace detail {

inline bool name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':' || static_cast<unsigned char>(c) >= 0x80;
}
inline bool name_char(char c) {
  return name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Document run() {
    try {
      prolog();
      if (at_end() || s_[pos_] != '<') fail("expected root element");
      element(-1);
      misc();
      if (!at_end()) fail("content after root element");
    } catch (const std::string& e) {
      doc_.error = e + " at byte " + std::to_string(pos_);
    }
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw msg; }
  bool at_end() const { return pos_ >= s_.size(); }
  bool starts(std::string_view t) const { return s_.substr(pos_, t.size()) == t; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void skip_past(std::string_view t) {
    const auto e = s_.find(t, pos_);
    if (e == std::string_view::npos) fail("unterminated construct, missing " + std::string(t));
    pos_ = e + t.size();
  }

  void misc() {
    for (;;) {
      skip_ws();
      if (starts("<!--")) {
        comment();
      } else if (starts("<?")) {
        skip_past("?>");
      } else {
        return;
      }
    }
  }

  void prolog() {
    misc();
    if (starts("<!DOCTYPE")) {
      skip_past(">");
      misc();
    }
  }

  void comment() {
    pos_ += 4;
    const auto e = s_.find("--", pos_);
    if (e == std::string_view::npos || s_.substr(e, 3) != "-->") fail("bad comment");
    pos_ = e + 3;
  }

  std::string name() {
    if (at_end() || !name_start(s_[pos_])) fail("expected name");
    const auto b = pos_;
    while (!at_end() && name_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }

  void reference(std::string& out) {
    const auto e = s_.find(';', pos_);
    if (e == std::string_view::npos || e - pos_ > 12) fail("unterminated entity reference");
    const auto body = s_.substr(pos_ + 1, e - pos_ - 1);
    static const std::map<std::string_view, char> named{
        {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''}};
    if (!body.empty() && body[0] == '#') {
      const bool hex = body.size() > 1 && body[1] == 'x';
      const auto digits = body.substr(hex ? 2 : 1);
      if (digits.empty()) fail("empty character reference");
      for (char c : digits) {
        if (!(hex ? std::isxdigit(static_cast<unsigned char>(c)) : std::isdigit(static_cast<unsigned char>(c)))) {
          fail("bad character reference");
        }
      }
      const unsigned long cp = std::stoul(std::string(digits), nullptr, hex ? 16 : 10);
      if (cp == 0 || (cp < 0x20 && cp != 0x9 && cp != 0xA && cp != 0xD)) fail("illegal character reference");
      out += '?';
    } else if (const auto it = named.find(body); it != named.end()) {
      out += it->second;
    } else {
      fail("unknown entity &" + std::string(body) + ";");
    }
    pos_ = e + 1;
  }

  void check_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 && c != '\t' && c != '\n' && c != '\r') fail("illegal control character");
  }

  void element(int parent) {
    ++pos_;  // '<'
    Element el;
    el.name = name();
    el.parent = parent;
    for (;;) {
      const bool had_space = !at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]));
      skip_ws();
      if (at_end()) fail("unterminated start tag");
      if (starts("/>") || s_[pos_] == '>') break;
      if (!had_space) fail("attributes must be separated by whitespace");
      const std::string key = name();
      skip_ws();
      if (at_end() || s_[pos_] != '=') fail("expected '=' after attribute " + key);
      ++pos_;
      skip_ws();
      if (at_end() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("attribute value must be quoted");
      const char q = s_[pos_++];
      std::string value;
      while (!at_end() && s_[pos_] != q) {
        if (s_[pos_] == '<') fail("'<' in attribute value");
        if (s_[pos_] == '&') {
          reference(value);
        } else {
          check_char(s_[pos_]);
          value += s_[pos_++];
        }
      }
      if (at_end()) fail("unterminated attribute value");
      ++pos_;
      if (el.attributes.contains(key)) fail("duplicate attribute " + key);
      el.attributes[key] = value;
    }
    const int index = static_cast<int>(doc_.elements.size());
    doc_.elements.push_back(el);
    if (starts("/>")) {
      pos_ += 2;
      return;
    }
    ++pos_;  // '>'
    for (;;) {
      if (at_end()) fail("unclosed element <" + doc_.elements[index].name + ">");
      if (starts("</")) {
        pos_ += 2;
        const std::string closing = name();
        skip_ws();
        if (at_end() || s_[pos_] != '>') fail("bad end tag");
        ++pos_;
        if (closing != doc_.elements[index].name) {
          fail("mismatched end tag </" + closing + "> for <" + doc_.elements[index].name + ">");
        }
        return;
      }
      if (starts("<!--")) {
        comment();
      } else if (starts("<![CDATA[")) {
        pos_ += 9;
        const auto e = s_.find("]]>", pos_);
        if (e == std::string_view::npos) fail("unterminated CDATA");
        doc_.elements[index].text += s_.substr(pos_, e - pos_);
        pos_ = e + 3;
      } else if (starts("<?")) {
        skip_past("?>");
      } else if (s_[pos_] == '<') {
        element(index);
      } else if (s_[pos_] == '&') {
        reference(doc_.elements[index].text);
      } else {
        if (starts("]]>")) fail("']]>' in character data");
        check_char(s_[pos_]);
        doc_.elements[index].text += s_[pos_++];
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  Document doc_;
};

}  // namespace detail

inline Document parse(std::string_view text) { return detail::Parser(text).run(); }

}  // namespace xmlcheck
