#include "lexer.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>

namespace adl::detail {

namespace {

constexpr std::array<std::string_view, 34> kKeywords = {
    "value",  "type",      "abstraction", "function", "replicate", "resuming",
    "choose", "or",        "via",         "send",     "receive",   "connection",
    "location", "deref",   "compose",     "and",      "as",        "where",
    "unifies", "decompose", "view",       "sequence", "if",        "then",
    "else",   "while",     "do",          "free",     "any",       "project",
    "not",    "true",      "false",       "behaviour"};

// Longest first so that `:=` wins over `:`.
constexpr std::array<std::string_view, 24> kPuncts = {
    ":=", "::", "->", "~=", "<=", ">=", "++", ":", ";", ",", ".", "(",
    ")",  "{",  "}",  "[",  "]",  "+",  "-",  "*", "/", "=", "<", ">"};

class Lexer {
 public:
  Lexer(std::string_view text, std::vector<ParseError>& errors)
      : text_(text), errors_(errors) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.span = here();
      if (pos_ >= text_.size()) {
        t.kind = TokenKind::kEof;
        out.push_back(t);
        return out;
      }
      if (lex_one(t)) {
        t.span.end = pos_;
        out.push_back(std::move(t));
      }
    }
  }

 private:
  SourceSpan here() const { return SourceSpan{pos_, pos_, line_, col_}; }

  char peek(size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '!') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void error(const SourceSpan& at, std::string message) {
    SourceSpan s = at;
    s.end = pos_;
    errors_.push_back(ParseError{s, std::move(message), {}});
  }

  bool lex_one(Token& t) {
    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
        advance();
      }
      t.text = std::string(text_.substr(start, pos_ - start));
      t.kind = is_keyword(t.text) ? TokenKind::kKeyword : TokenKind::kIdent;
      return true;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return lex_number(t);
    if (c == '"') return lex_string(t);
    if (c == '@' && peek(1) == '[') return lex_link(t);
    for (auto p : kPuncts) {
      if (text_.substr(pos_, p.size()) == p) {
        for (size_t i = 0; i < p.size(); ++i) advance();
        t.kind = TokenKind::kPunct;
        t.text = std::string(p);
        return true;
      }
    }
    SourceSpan at = here();
    advance();
    error(at, std::string("unexpected character '") + c + "'");
    return false;
  }

  bool lex_number(Token& t) {
    size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    bool real = false;
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      real = true;
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (std::isdigit(static_cast<unsigned char>(peek(1))) ||
         ((peek(1) == '+' || peek(1) == '-') &&
          std::isdigit(static_cast<unsigned char>(peek(2)))))) {
      real = true;
      advance();
      if (peek() == '+' || peek() == '-') advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    std::string spelling(text_.substr(start, pos_ - start));
    t.text = spelling;
    if (real) {
      t.kind = TokenKind::kReal;
      t.real_value = std::strtod(spelling.c_str(), nullptr);
      return true;
    }
    t.kind = TokenKind::kInteger;
    auto [ptr, ec] = std::from_chars(spelling.data(),
                                     spelling.data() + spelling.size(), t.int_value);
    if (ec != std::errc()) {
      error(t.span, "integer literal out of range");
      return false;
    }
    return true;
  }

  bool lex_string(Token& t) {
    SourceSpan at = here();
    advance();
    std::string out;
    while (pos_ < text_.size() && peek() != '"') {
      char c = peek();
      if (c == '\\') {
        advance();
        char e = peek();
        switch (e) {
          case 'n':
            out += '\n';
            break;
          case 't':
            out += '\t';
            break;
          case '"':
          case '\\':
            out += e;
            break;
          default:
            error(here(), "unknown escape sequence");
        }
        if (pos_ < text_.size()) advance();
        continue;
      }
      out += c;
      advance();
    }
    if (pos_ >= text_.size()) {
      error(at, "unterminated string literal");
      return false;
    }
    advance();
    t.kind = TokenKind::kString;
    t.text = std::move(out);
    return true;
  }

  bool lex_link(Token& t) {
    SourceSpan at = here();
    advance();
    advance();
    size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    if (start == pos_) {
      error(at, "link token needs a value id");
      return false;
    }
    std::string digits(text_.substr(start, pos_ - start));
    std::from_chars(digits.data(), digits.data() + digits.size(), t.link_id);
    if (peek() == ':') {
      advance();
      size_t hs = pos_;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
        advance();
      }
      t.hint = std::string(text_.substr(hs, pos_ - hs));
    }
    if (peek() != ']') {
      error(at, "unterminated link token");
      return false;
    }
    advance();
    t.kind = TokenKind::kLink;
    return true;
  }

  std::string_view text_;
  std::vector<ParseError>& errors_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords) {
    if (k == word) return true;
  }
  return false;
}

std::vector<Token> tokenize(std::string_view text, std::vector<ParseError>& errors) {
  return Lexer(text, errors).run();
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case TokenKind::kEof:
      return "end of input";
    case TokenKind::kString:
      return "string literal";
    case TokenKind::kLink:
      return "link token";
    case TokenKind::kInteger:
    case TokenKind::kReal:
      return "number '" + t.text + "'";
    default:
      return "'" + t.text + "'";
  }
}

}  // namespace adl::detail
