#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "adl/hypercode.hpp"
#include "adl/syntax.hpp"

namespace adl::detail {

enum class TokenKind { kIdent, kKeyword, kInteger, kReal, kString, kLink, kPunct, kEof };

struct Token {
  TokenKind kind = TokenKind::kEof;
  std::string text;  // identifier/keyword/punctuation spelling, string contents
  std::int64_t int_value = 0;
  double real_value = 0;
  std::uint64_t link_id = 0;
  std::string hint;
  SourceSpan span;
};

bool is_keyword(std::string_view word);

// Tokenizes the whole input. Lexical errors are appended to `errors`; the
// offending characters are skipped.
std::vector<Token> tokenize(std::string_view text, std::vector<ParseError>& errors);

std::string describe(const Token& t);

}  // namespace adl::detail
