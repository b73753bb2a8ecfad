#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adl/error.hpp"
#include "adl/hypercode.hpp"
#include "adl/type.hpp"
#include "adl/value.hpp"

namespace adl {

struct ParseError {
  SourceSpan span;
  std::string message;
  std::vector<std::string> expected;
};

// Named types introduced by `type NAME = T` items. Aliases are expanded
// while parsing; hyper-code only ever holds structural types.
using TypeAliases = std::map<std::string, Type, std::less<>>;

struct ParseResult {
  std::optional<Node> tree;
  std::vector<ParseError> errors;

  bool ok() const { return errors.empty(); }
};

class ParseFailure : public Error {
 public:
  explicit ParseFailure(std::vector<ParseError> errors);
  const std::vector<ParseError>& errors() const { return errors_; }

 private:
  std::vector<ParseError> errors_;
};

// Parses a program (items separated by `;`) into a kBody node. Link tokens
// `@[id:hint]` must name ids present in `store`. When `aliases` is given,
// `type` items add to it and later items may use them.
ParseResult parse(std::string_view text, const ValueStore& store,
                  TypeAliases* aliases = nullptr);

// Parses a single expression.
ParseResult parse_expression(std::string_view text, const ValueStore& store,
                             const TypeAliases* aliases = nullptr);

// Throws ParseFailure.
Type parse_type(std::string_view text, const TypeAliases* aliases = nullptr);

// Concrete text for a tree; links render as `@[id:hint]`. Reparses to a
// structurally equal tree.
std::string render(const Node& h);

// `file:line:col: message`.
std::string format_diagnostic(std::string_view file, const SourceSpan& span,
                              std::string_view message);

}  // namespace adl
