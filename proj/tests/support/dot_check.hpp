#pragma once

// Recursive-descent reader for the DOT language (graph/digraph, node, edge
// and attribute statements, subgraphs). Collects nodes and edges.

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dotcheck {

struct Graph {
  bool directed = false;
  std::string id;
  std::vector<std::string> nodes;  // node statements, in order
  std::map<std::string, std::map<std::string, std::string>> node_attributes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::string error;

  bool ok() const { return error.empty(); }
};

namespace detail {

enum class Tok { Id, Punct, End };

struct Token {
  Tok type;
  std::string text;
  bool keyword_ok;  // unquoted, so may be a keyword
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Token next() {
    skip();
    if (pos_ >= s_.size()) return {Tok::End, "", false};
    const char c = s_[pos_];
    if (c == '-' && pos_ + 1 < s_.size() && (s_[pos_ + 1] == '>' || s_[pos_ + 1] == '-')) {
      pos_ += 2;
      return {Tok::Punct, std::string(s_.substr(pos_ - 2, 2)), false};
    }
    if (std::string_view("{}[]=;,:").find(c) != std::string_view::npos) {
      ++pos_;
      return {Tok::Punct, std::string(1, c), false};
    }
    if (c == '"') return quoted();
    if (c == '<') return html();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80) {
      const auto b = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                                  static_cast<unsigned char>(s_[pos_]) >= 0x80)) {
        ++pos_;
      }
      return {Tok::Id, std::string(s_.substr(b, pos_ - b)), true};
    }
    if (c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
      const auto b = pos_;
      if (s_[pos_] == '-') ++pos_;
      bool digits = false;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
        digits = true;
        ++pos_;
      }
      if (!digits) throw std::string("bad numeral");
      return {Tok::Id, std::string(s_.substr(b, pos_ - b)), false};
    }
    throw std::string("unexpected character '") + c + "'";
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip() {
    for (;;) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (s_.substr(pos_, 2) == "//" || (pos_ < s_.size() && s_[pos_] == '#')) {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (s_.substr(pos_, 2) == "/*") {
        const auto e = s_.find("*/", pos_ + 2);
        if (e == std::string_view::npos) throw std::string("unterminated comment");
        pos_ = e + 2;
      } else {
        return;
      }
    }
  }

  Token quoted() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        out += s_[pos_];
        out += s_[pos_ + 1];
        pos_ += 2;
      } else {
        if (s_[pos_] == '\n') {
          // raw newlines are legal but our emitter never writes them
          throw std::string("raw newline inside quoted string");
        }
        out += s_[pos_++];
      }
    }
    if (pos_ >= s_.size()) throw std::string("unterminated string");
    ++pos_;
    return {Tok::Id, out, false};
  }

  Token html() {
    int depth = 0;
    const auto b = pos_;
    while (pos_ < s_.size()) {
      if (s_[pos_] == '<') ++depth;
      if (s_[pos_] == '>' && --depth == 0) {
        ++pos_;
        return {Tok::Id, std::string(s_.substr(b, pos_ - b)), false};
      }
      ++pos_;
    }
    throw std::string("unterminated HTML string");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline bool is_kw(const Token& t, std::string_view kw) {
  if (!t.keyword_ok || t.text.size() != kw.size()) return false;
  for (std::size_t i = 0; i < kw.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(t.text[i])) != kw[i]) return false;
  }
  return true;
}

class Parser {
 public:
  explicit Parser(std::string_view s) : lex_(s) { advance(); }

  Graph run() {
    try {
      if (is_kw(cur_, "strict")) advance();
      if (is_kw(cur_, "digraph")) {
        g_.directed = true;
      } else if (!is_kw(cur_, "graph")) {
        fail("expected graph or digraph");
      }
      advance();
      if (cur_.type == Tok::Id) {
        g_.id = cur_.text;
        advance();
      }
      expect("{");
      stmt_list();
      expect("}");
      if (cur_.type != Tok::End) fail("content after graph");
    } catch (const std::string& e) {
      g_.error = e + " near byte " + std::to_string(lex_.pos());
    }
    return std::move(g_);
  }

 private:
  [[noreturn]] void fail(const std::string& m) { throw m; }
  void advance() { cur_ = lex_.next(); }
  bool punct(std::string_view p) const { return cur_.type == Tok::Punct && cur_.text == p; }
  void expect(std::string_view p) {
    if (!punct(p)) fail("expected '" + std::string(p) + "', got '" + cur_.text + "'");
    advance();
  }

  void stmt_list() {
    while (!punct("}") && cur_.type != Tok::End) {
      stmt();
      if (punct(";")) advance();
    }
  }

  std::map<std::string, std::string> attr_list() {
    std::map<std::string, std::string> attrs;
    while (punct("[")) {
      advance();
      while (!punct("]")) {
        if (cur_.type != Tok::Id) fail("expected attribute name");
        const std::string key = cur_.text;
        advance();
        expect("=");
        if (cur_.type != Tok::Id) fail("expected attribute value");
        attrs[key] = cur_.text;
        advance();
        if (punct(";") || punct(",")) advance();
      }
      advance();
    }
    return attrs;
  }

  // Returns the node ids an edge endpoint stands for.
  std::vector<std::string> endpoint() {
    if (is_kw(cur_, "subgraph") || punct("{")) return subgraph();
    if (cur_.type != Tok::Id) fail("expected node id");
    std::string id = cur_.text;
    advance();
    if (punct(":")) {  // port
      advance();
      if (cur_.type != Tok::Id) fail("expected port");
      advance();
      if (punct(":")) {
        advance();
        advance();
      }
    }
    return {id};
  }

  std::vector<std::string> subgraph() {
    if (is_kw(cur_, "subgraph")) {
      advance();
      if (cur_.type == Tok::Id) advance();
    }
    const std::size_t before = g_.nodes.size();
    expect("{");
    stmt_list();
    expect("}");
    return {g_.nodes.begin() + static_cast<std::ptrdiff_t>(before), g_.nodes.end()};
  }

  void stmt() {
    if (is_kw(cur_, "graph") || is_kw(cur_, "node") || is_kw(cur_, "edge")) {
      advance();
      if (!punct("[")) fail("expected attribute list");
      attr_list();
      return;
    }
    if (cur_.type == Tok::Id && !is_kw(cur_, "subgraph")) {
      const Token first = cur_;
      advance();
      if (punct("=")) {
        advance();
        if (cur_.type != Tok::Id) fail("expected value");
        advance();
        return;
      }
      std::vector<std::string> lhs{first.text};
      if (punct(":")) fail("ports are not expected in this output");
      if (punct("->") || punct("--")) {
        edge_rest(lhs);
        return;
      }
      g_.nodes.push_back(first.text);
      g_.node_attributes[first.text] = attr_list();
      return;
    }
    auto lhs = endpoint();
    if (punct("->") || punct("--")) edge_rest(lhs);
  }

  void edge_rest(std::vector<std::string> lhs) {
    while (punct("->") || punct("--")) {
      if ((cur_.text == "->") != g_.directed) fail("edge operator does not match graph type");
      advance();
      auto rhs = endpoint();
      for (const auto& a : lhs) {
        for (const auto& b : rhs) g_.edges.emplace_back(a, b);
      }
      lhs = std::move(rhs);
    }
    attr_list();
  }

  Lexer lex_;
  Token cur_{Tok::End, "", false};
  Graph g_;
};

}  // namespace detail

inline Graph parse(std::string_view text) {
  try {
    return detail::Parser(text).run();
  } catch (const std::string& e) {
    Graph g;
    g.error = e;
    return g;
  }
}

}  // namespace dotcheck
