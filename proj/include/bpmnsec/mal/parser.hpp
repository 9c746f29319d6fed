#pragma once

// Lexer and recursive-descent parser for the MAL subset:
//
//   program     := (category | associations)*
//   category    := "category" IDENT "{" asset* "}"
//   asset       := "asset" IDENT ("extends" IDENT)? "{" member* "}"
//   member      := ("|" | "&" | "#") IDENT ("[" dist "]")? ("->" path ("," path)*)?
//   dist        := ("Exp" | "Exponential" | "Constant") "(" NUMBER ")" | "Instant"
//   path        := IDENT ("." IDENT)*
//   associations:= "associations" "{" assoc* "}"
//   assoc       := IDENT "[" IDENT "]" mult "<-" IDENT "->" mult "[" IDENT "]" IDENT
//   mult        := "1" | "*"
//
// Anything from full MAL outside this subset is rejected as an unsupported
// construct rather than a plain syntax error.

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "bpmnsec/mal/ast.hpp"

namespace bpmnsec::mal {

namespace detail {

enum class Tok {
  Ident,
  Number,
  String,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  LParen,
  RParen,
  Comma,
  Dot,
  Bar,
  Amp,
  Hash,
  Arrow,
  LArrow,
  Star,
  Other,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceLoc loc;
};

class Lexer {
 public:
  explicit Lexer(const MalSource& src) : src_(src.text), origin_(src.origin) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::Number;
        t.text = lex_number();
      } else if (c == '"') {
        t.kind = Tok::String;
        advance();
        while (pos_ < src_.size() && src_[pos_] != '"') {
          if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) advance();
          advance();
        }
        if (pos_ >= src_.size()) throw LanguageError(origin_, t.loc, "unterminated string literal");
        advance();
      } else if (starts_with("-->") || starts_with("->")) {
        t.kind = Tok::Arrow;
        t.text = starts_with("-->") ? "-->" : "->";
        advance_n(t.text.size());
      } else if (starts_with("<--") || starts_with("<-")) {
        t.kind = Tok::LArrow;
        t.text = starts_with("<--") ? "<--" : "<-";
        advance_n(t.text.size());
      } else {
        t.text = std::string(1, c);
        switch (c) {
          case '{': t.kind = Tok::LBrace; break;
          case '}': t.kind = Tok::RBrace; break;
          case '[': t.kind = Tok::LBracket; break;
          case ']': t.kind = Tok::RBracket; break;
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case ',': t.kind = Tok::Comma; break;
          case '.': t.kind = Tok::Dot; break;
          case '|': t.kind = Tok::Bar; break;
          case '&': t.kind = Tok::Amp; break;
          case '#': t.kind = Tok::Hash; break;
          case '*': t.kind = Tok::Star; break;
          default:
            if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f)
              throw LanguageError(origin_, t.loc, "unexpected character");
            t.kind = Tok::Other;
        }
        advance();
      }
      out.push_back(std::move(t));
    }
  }

 private:
  bool starts_with(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void advance_n(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) advance();
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (starts_with("//")) {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (starts_with("/*")) {
        SourceLoc at{line_, col_};
        advance_n(2);
        while (pos_ < src_.size() && !starts_with("*/")) advance();
        if (pos_ >= src_.size()) throw LanguageError(origin_, at, "unterminated block comment");
        advance_n(2);
      } else {
        return;
      }
    }
  }

  std::string lex_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    };
    digits();
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      int sl = line_, sc = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits();
      } else {
        pos_ = save;
        line_ = sl;
        col_ = sc;
      }
    }
    return std::string(src_.substr(start, pos_ - start));
  }

  std::string_view src_;
  std::string origin_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string origin) : toks_(std::move(toks)), origin_(std::move(origin)) {}

  UnresolvedLanguage program() {
    UnresolvedLanguage out;
    out.origin = origin_;
    while (peek().kind != Tok::End) {
      const Token& t = peek();
      if (is_ident("category")) {
        out.categories.push_back(category());
      } else if (is_ident("associations")) {
        associations(out.associations);
      } else if (is_ident("include")) {
        unsupported(t, "'include' directives");
      } else if (t.kind == Tok::Hash) {
        unsupported(t, "language header '#id'/'#version'");
      } else {
        fail(t, "expected 'category' or 'associations', found " + describe(t));
      }
    }
    return out;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool is_ident(std::string_view word, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == word;
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw LanguageError(origin_, t.loc, msg); }
  [[noreturn]] void unsupported(const Token& t, const std::string& what) const {
    fail(t, "unsupported construct: " + what + " is outside the supported MAL subset");
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::End: return "end of input";
      case Tok::Ident: return "identifier '" + t.text + "'";
      case Tok::Number: return "number '" + t.text + "'";
      case Tok::String: return "string literal";
      default: return "'" + t.text + "'";
    }
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(peek(), std::string("expected ") + what + ", found " + describe(peek()));
    return next();
  }

  std::string ident(const char* what) { return expect(Tok::Ident, what).text; }

  void keyword(std::string_view word) {
    if (!is_ident(word)) fail(peek(), "expected '" + std::string(word) + "', found " + describe(peek()));
    next();
  }

  CategoryDecl category() {
    CategoryDecl c;
    c.loc = peek().loc;
    keyword("category");
    c.name = ident("category name");
    if (peek().kind == Tok::Other && peek().text == "@") unsupported(peek(), "category annotations");
    expect(Tok::LBrace, "'{' after category name");
    while (peek().kind != Tok::RBrace) {
      if (peek().kind == Tok::End) fail(peek(), "unterminated category '" + c.name + "'");
      if (is_ident("abstract")) unsupported(peek(), "'abstract' assets");
      if (is_ident("info") || is_ident("user") || is_ident("developer") || is_ident("modeler"))
        unsupported(peek(), "meta information ('" + peek().text + ":')");
      c.assets.push_back(asset());
    }
    next();
    return c;
  }

  AssetDecl asset() {
    AssetDecl a;
    a.loc = peek().loc;
    keyword("asset");
    a.name = ident("asset name");
    if (is_ident("extends")) {
      next();
      a.extends = ident("parent asset name after 'extends'");
    }
    expect(Tok::LBrace, "'{' after asset header");
    while (peek().kind != Tok::RBrace) {
      if (peek().kind == Tok::End) fail(peek(), "unterminated asset '" + a.name + "'");
      a.steps.push_back(member());
    }
    next();
    return a;
  }

  StepDecl member() {
    StepDecl s;
    const Token& head = peek();
    s.loc = head.loc;
    switch (head.kind) {
      case Tok::Bar: s.kind = StepKind::Or; break;
      case Tok::Amp: s.kind = StepKind::And; break;
      case Tok::Hash: s.kind = StepKind::Defense; break;
      case Tok::Ident:
        if (head.text == "E") unsupported(head, "existence steps ('E')");
        if (head.text == "let") unsupported(head, "'let' expressions");
        if (head.text == "info" || head.text == "user" || head.text == "developer" || head.text == "modeler")
          unsupported(head, "meta information ('" + head.text + ":')");
        fail(head, "expected '|', '&' or '#', found " + describe(head));
      case Tok::Other:
        if (head.text == "!") unsupported(head, "non-existence steps ('!E')");
        if (head.text == "@") unsupported(head, "step tags ('@')");
        [[fallthrough]];
      default:
        fail(head, "expected '|', '&' or '#', found " + describe(head));
    }
    next();
    if (peek().kind == Tok::Other && peek().text == "@") unsupported(peek(), "step tags ('@')");
    s.name = ident("attack step or defense name");
    if (peek().kind == Tok::LBracket) {
      if (s.kind == StepKind::Defense) unsupported(peek(), "probabilities on defenses");
      next();
      s.ttc = distribution();
      expect(Tok::RBracket, "']' after distribution");
    }
    if (peek().kind == Tok::Other && peek().text == "+") unsupported(peek(), "append inheritance ('+>')");
    if (peek().kind == Tok::LArrow) unsupported(peek(), "reverse step references ('<-')");
    if (peek().kind == Tok::Arrow) {
      next();
      s.targets.push_back(path());
      while (peek().kind == Tok::Comma) {
        next();
        s.targets.push_back(path());
      }
    }
    return s;
  }

  double number() {
    const Token& t = expect(Tok::Number, "numeric distribution parameter");
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) fail(t, "malformed number '" + t.text + "'");
    return v;
  }

  Distribution distribution() {
    const Token& name = expect(Tok::Ident, "distribution name");
    if (name.text == "Instant") return Distribution::instant();
    if (name.text == "Exp" || name.text == "Exponential") {
      expect(Tok::LParen, "'(' after distribution name");
      const Token& at = peek();
      double rate = number();
      expect(Tok::RParen, "')' after distribution parameter");
      if (!(rate > 0.0)) fail(at, "exponential rate must be > 0");
      return Distribution::exponential(rate);
    }
    if (name.text == "Constant") {
      expect(Tok::LParen, "'(' after distribution name");
      double days = number();
      expect(Tok::RParen, "')' after distribution parameter");
      return Distribution::constant(days);
    }
    fail(name, "unknown distribution '" + name.text + "' (supported: Instant, Exp, Exponential, Constant)");
  }

  TargetPath path() {
    TargetPath p;
    p.loc = peek().loc;
    if (peek().kind == Tok::LParen) unsupported(peek(), "grouped step expressions");
    p.segments.push_back(ident("step reference"));
    while (peek().kind == Tok::Dot) {
      next();
      p.segments.push_back(ident("role or step name after '.'"));
    }
    if (peek().kind == Tok::LBracket) unsupported(peek(), "subtype selectors ('[Type]')");
    if (peek().kind == Tok::Star) unsupported(peek(), "transitive role steps ('*')");
    if (peek().kind == Tok::Other && (peek().text == "/" || peek().text == "\\"))
      unsupported(peek(), "set operators in step expressions");
    return p;
  }

  Multiplicity multiplicity() {
    const Token& t = peek();
    if (t.kind == Tok::Star) {
      next();
      return Multiplicity::Many;
    }
    if (t.kind == Tok::Number && (peek(1).kind == Tok::Dot)) unsupported(t, "range multiplicities ('0..1', '1..*')");
    if (t.kind == Tok::Number && t.text == "1") {
      next();
      return Multiplicity::One;
    }
    fail(t, "expected multiplicity '1' or '*', found " + describe(t));
  }

  void associations(std::vector<AssociationDecl>& out) {
    keyword("associations");
    expect(Tok::LBrace, "'{' after 'associations'");
    while (peek().kind != Tok::RBrace) {
      if (peek().kind == Tok::End) fail(peek(), "unterminated associations block");
      AssociationDecl a;
      a.loc = peek().loc;
      a.leftAsset = ident("asset name");
      expect(Tok::LBracket, "'[' before role name");
      a.leftRole = ident("role name");
      expect(Tok::RBracket, "']' after role name");
      a.leftMultiplicity = multiplicity();
      expect(Tok::LArrow, "'<-'");
      a.name = ident("association name");
      expect(Tok::Arrow, "'->'");
      a.rightMultiplicity = multiplicity();
      expect(Tok::LBracket, "'[' before role name");
      a.rightRole = ident("role name");
      expect(Tok::RBracket, "']' after role name");
      a.rightAsset = ident("asset name");
      if (peek().kind == Tok::String) unsupported(peek(), "association info strings");
      out.push_back(std::move(a));
    }
    next();
  }

  std::vector<Token> toks_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses MAL subset source into an unresolved AST. Throws LanguageError
/// carrying origin, line and column.
inline UnresolvedLanguage parse_mal(const MalSource& src) {
  detail::Lexer lexer(src);
  detail::Parser parser(lexer.run(), src.origin);
  return parser.program();
}

}  // namespace bpmnsec::mal
