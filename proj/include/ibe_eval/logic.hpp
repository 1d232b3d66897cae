#pragma once

// Text format for definite-clause programs:
//
//   head :- body1, body2.     rule
//   atom.                     fact (must be ground)
//   ?- atom.                  query (exactly one)
//   % comment                 to end of line
//
// Predicate and constant names are lowercased on read; names starting with
// an uppercase letter or '_' in argument position are variables.

#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ibe_eval/core.hpp"

namespace ibe::logic {

inline std::string render(const Term& t) { return t.name; }

inline std::string render(const Atom& a) {
  std::string out = a.predicate;
  if (!a.args.empty()) {
    out.push_back('(');
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) out += ", ";
      out += render(a.args[i]);
    }
    out.push_back(')');
  }
  return out;
}

inline std::string render(const Rule& r) {
  std::string out = render(r.head) + " :- ";
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    if (i) out += ", ";
    out += render(r.body[i]);
  }
  return out + ".";
}

// Rules, then facts, then the query; one clause per line, LF terminated.
inline std::string render(const LogicProgram& p) {
  std::string out;
  for (const auto& r : p.rules) out += render(r) + "\n";
  for (const auto& f : p.facts) out += render(f) + ".\n";
  out += "?- " + render(p.query) + ".\n";
  return out;
}

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  LogicProgram parse() {
    LogicProgram prog;
    bool have_query = false;
    skip_ws();
    while (!eof()) {
      if (peek_str("?-")) {
        auto line = line_, col = col_;
        advance(2);
        if (have_query) throw SyntaxError("more than one query", line, col);
        prog.query = parse_atom();
        skip_ws();
        if (peek() == ',') throw SyntaxError("conjunctive queries are not supported", line_, col_);
        expect('.');
        have_query = true;
      } else {
        auto line = line_, col = col_;
        Atom head = parse_atom();
        skip_ws();
        if (peek_str(":-")) {
          advance(2);
          Rule rule{std::move(head), {}};
          while (true) {
            rule.body.push_back(parse_atom());
            skip_ws();
            if (peek() == ',') {
              advance(1);
              continue;
            }
            break;
          }
          expect('.');
          prog.rules.push_back(std::move(rule));
        } else {
          expect('.');
          if (!head.is_ground()) throw SyntaxError("fact " + head.predicate + " is not ground", line, col);
          prog.facts.push_back(std::move(head));
        }
      }
      skip_ws();
    }
    if (!have_query) throw MissingQuery();
    if (prog.facts.empty()) throw NoFacts();
    return prog;
  }

 private:
  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return eof() ? '\0' : src_[pos_]; }
  bool peek_str(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && !eof(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_ws() {
    while (!eof()) {
      char c = peek();
      if (c == '%') {
        while (!eof() && peek() != '\n') advance(1);
      } else if (text::is_space(c)) {
        advance(1);
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) {
      std::string found = eof() ? "end of input" : std::string("'") + peek() + "'";
      throw SyntaxError(std::string("expected '") + c + "', found " + found, line_, col_);
    }
    advance(1);
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string parse_name() {
    skip_ws();
    if (eof()) throw SyntaxError("expected identifier, found end of input", line_, col_);
    if (!ident_start(peek()) && !std::isdigit(static_cast<unsigned char>(peek()))) {
      throw SyntaxError(std::string("expected identifier, found '") + peek() + "'", line_, col_);
    }
    std::size_t start = pos_;
    while (!eof() && ident_char(peek())) advance(1);
    return std::string(src_.substr(start, pos_ - start));
  }

  Atom parse_atom() {
    skip_ws();
    auto line = line_, col = col_;
    std::string name = parse_name();
    if (std::isdigit(static_cast<unsigned char>(name.front()))) {
      throw SyntaxError("predicate name cannot start with a digit", line, col);
    }
    Atom atom{text::to_lower(name), {}};
    skip_ws();
    if (peek() == '(') {
      auto open_line = line_, open_col = col_;
      advance(1);
      skip_ws();
      if (peek() == ')') {
        advance(1);
        return atom;
      }
      while (true) {
        skip_ws();
        if (eof()) throw SyntaxError("unclosed '('", open_line, open_col);
        std::string arg = parse_name();
        if (std::isupper(static_cast<unsigned char>(arg.front())) || arg.front() == '_') {
          atom.args.push_back(Term::variable(arg));
        } else {
          atom.args.push_back(Term::constant(text::to_lower(arg)));
        }
        skip_ws();
        if (peek() == ',') {
          advance(1);
          continue;
        }
        if (peek() == ')') {
          advance(1);
          break;
        }
        if (eof()) throw SyntaxError("unclosed '('", open_line, open_col);
        throw SyntaxError(std::string("expected ',' or ')', found '") + peek() + "'", line_, col_);
      }
    }
    return atom;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace detail

inline LogicProgram parse_logic_text(std::string_view src) {
  if (text::trim_view(src).empty()) throw SyntaxError("empty program text", 1, 1);
  return detail::Parser(src).parse();
}

}  // namespace ibe::logic
