#include <set>
#include <utility>

#include "adl/syntax.hpp"
#include "lexer.hpp"

namespace adl {

using detail::Token;
using detail::TokenKind;

namespace {

std::string join_messages(const std::vector<ParseError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    out += std::to_string(e.span.line) + ":" + std::to_string(e.span.column) +
           ": " + e.message;
  }
  return out;
}

// Thrown to abandon the current item; the error is already recorded.
struct Abort {};

class Parser {
 public:
  Parser(std::vector<Token> tokens, const ValueStore* store, TypeAliases* aliases,
         const TypeAliases* read_aliases, std::vector<ParseError>& errors)
      : toks_(std::move(tokens)),
        store_(store),
        aliases_(aliases),
        read_aliases_(aliases ? aliases : read_aliases),
        errors_(errors) {}

  Node program() {
    Node body(NodeKind::kBody);
    body.span = peek().span;
    while (!at_eof()) {
      if (accept(";")) continue;
      size_t before = errors_.size();
      try {
        if (peek_kw("type")) {
          type_item();
        } else {
          body.children.push_back(statement());
        }
        if (!at_eof() && !check(";")) {
          fail({"';'"});
        }
      } catch (const Abort&) {
        recover();
      }
      (void)before;
    }
    body.span.end = peek().span.start;
    return body;
  }

  Node single_expression() {
    Node e;
    try {
      e = expression();
      if (!at_eof()) fail({"end of input"});
    } catch (const Abort&) {
    }
    return e;
  }

  Type single_type() {
    Type t;
    try {
      t = type();
      if (!at_eof()) fail({"end of input"});
    } catch (const Abort&) {
    }
    return t;
  }

 private:
  // ---- token helpers ----

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at_eof() const { return peek().kind == TokenKind::kEof; }

  bool check(std::string_view punct) const {
    return peek().kind == TokenKind::kPunct && peek().text == punct;
  }
  bool peek_kw(std::string_view kw, size_t ahead = 0) const {
    return peek(ahead).kind == TokenKind::kKeyword && peek(ahead).text == kw;
  }
  bool accept(std::string_view punct) {
    if (!check(punct)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!peek_kw(kw)) return false;
    ++pos_;
    return true;
  }

  const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  void expect(std::string_view punct) {
    if (!accept(punct)) fail({"'" + std::string(punct) + "'"});
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail({"'" + std::string(kw) + "'"});
  }

  std::string expect_ident(const char* what = "identifier") {
    if (peek().kind != TokenKind::kIdent) fail({what});
    return take().text;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    std::string msg = "expected ";
    for (size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += " or ";
      msg += expected[i];
    }
    msg += ", found " + describe(peek());
    errors_.push_back(ParseError{peek().span, std::move(msg), std::move(expected)});
    throw Abort{};
  }

  [[noreturn]] void fail_at(const SourceSpan& span, std::string message) {
    errors_.push_back(ParseError{span, std::move(message), {}});
    throw Abort{};
  }

  // Skip to the next top-level `;`.
  void recover() {
    int depth = 0;
    while (!at_eof()) {
      const Token& t = peek();
      if (t.kind == TokenKind::kPunct) {
        if (t.text == "{" || t.text == "(" || t.text == "[") ++depth;
        if (t.text == "}" || t.text == ")" || t.text == "]") {
          if (depth > 0) --depth;
        }
        if (t.text == ";" && depth == 0) return;
      }
      ++pos_;
    }
  }

  Node start(NodeKind kind) {
    Node n(kind);
    n.span = peek().span;
    return n;
  }
  void finish(Node& n) {
    size_t last = pos_ > 0 ? pos_ - 1 : 0;
    n.span.end = toks_[last].span.end;
  }

  // Brackets re-enable `and`/`or` as operators inside restricted contexts.
  struct Unrestrict {
    Parser& p;
    int saved;
    explicit Unrestrict(Parser& parser) : p(parser), saved(parser.restricted_) {
      p.restricted_ = 0;
    }
    ~Unrestrict() { p.restricted_ = saved; }
  };
  struct Restrict {
    Parser& p;
    int saved;
    explicit Restrict(Parser& parser) : p(parser), saved(parser.restricted_) {
      p.restricted_ = 1;
    }
    ~Restrict() { p.restricted_ = saved; }
  };

  // ---- items and statements ----

  void type_item() {
    SourceSpan at = peek().span;
    expect_kw("type");
    std::string name = expect_ident("type name");
    expect("=");
    Type t = type();
    if (!aliases_) fail_at(at, "type declarations are not allowed here");
    (*aliases_)[name] = std::move(t);
  }

  Node statement() {
    if (peek_kw("value")) {
      Node n = start(NodeKind::kValueDecl);
      ++pos_;
      n.text = expect_ident("name");
      expect("=");
      n.children.push_back(expression());
      finish(n);
      return n;
    }
    if (peek_kw("via")) return via();
    if (peek_kw("replicate")) return replicate();
    if (peek_kw("choose")) return choose();
    if (check("{")) return block();
    if (peek_kw("if")) {
      Node n = start(NodeKind::kIf);
      ++pos_;
      n.children.push_back(expression());
      expect_kw("then");
      n.children.push_back(statement());
      if (accept_kw("else")) n.children.push_back(statement());
      finish(n);
      return n;
    }
    if (peek_kw("while")) {
      Node n = start(NodeKind::kWhile);
      ++pos_;
      n.children.push_back(expression());
      expect_kw("do");
      n.children.push_back(statement());
      finish(n);
      return n;
    }
    if (peek_kw("free")) {
      Node n = start(NodeKind::kFree);
      ++pos_;
      expect("{");
      do {
        n.names.push_back(expect_ident("name"));
      } while (accept(","));
      expect("}");
      finish(n);
      return n;
    }
    Node e = expression();
    if (check(":=")) {
      Node n(NodeKind::kAssign);
      n.span = e.span;
      ++pos_;
      n.children.push_back(std::move(e));
      n.children.push_back(expression());
      finish(n);
      return n;
    }
    return e;
  }

  Node block() {
    Node n = start(NodeKind::kSequence);
    Unrestrict u(*this);
    expect("{");
    while (!check("}")) {
      if (accept(";")) continue;
      n.children.push_back(statement());
      if (!check("}")) expect(";");
    }
    expect("}");
    finish(n);
    return n;
  }

  bool can_start_expression() const {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::kIdent:
      case TokenKind::kInteger:
      case TokenKind::kReal:
      case TokenKind::kString:
      case TokenKind::kLink:
        return true;
      case TokenKind::kPunct:
        return t.text == "(" || t.text == "-" || t.text == "{";
      case TokenKind::kKeyword: {
        static const std::set<std::string, std::less<>> starters = {
            "abstraction", "function", "replicate", "choose", "connection",
            "location", "deref", "compose", "decompose", "view", "sequence",
            "if", "any", "project", "not", "true", "false"};
        return starters.count(t.text) > 0;
      }
      default:
        return false;
    }
  }

  Node via() {
    SourceSpan at = peek().span;
    ++pos_;
    Node channel = postfix_expression();
    if (accept_kw("send")) {
      Node n(NodeKind::kSend);
      n.span = at;
      n.children.push_back(std::move(channel));
      if (can_start_expression()) {
        do {
          n.children.push_back(expression());
        } while (accept(","));
      }
      finish(n);
      return n;
    }
    if (accept_kw("receive")) {
      Node n(NodeKind::kReceive);
      n.span = at;
      n.children.push_back(std::move(channel));
      if (peek().kind == TokenKind::kIdent) {
        do {
          n.names.push_back(expect_ident("binder name"));
          if (!check(":")) {
            fail_at(peek().span, "receive binder '" + n.names.back() +
                                     "' needs a type annotation");
          }
          ++pos_;
          n.types.push_back(type());
        } while (accept(","));
      }
      finish(n);
      return n;
    }
    fail({"'send'", "'receive'"});
  }

  Node replicate() {
    Node n = start(NodeKind::kReplicate);
    ++pos_;
    n.children.push_back(statement());
    if (accept_kw("resuming")) n.children.push_back(statement());
    finish(n);
    return n;
  }

  Node choose() {
    Node n = start(NodeKind::kChoose);
    ++pos_;
    expect("{");
    {
      Restrict r(*this);
      n.children.push_back(statement());
      while (accept_kw("or")) n.children.push_back(statement());
    }
    expect("}");
    if (n.children.size() < 2) {
      fail_at(n.span, "choose needs at least two branches");
    }
    finish(n);
    return n;
  }

  // ---- expressions ----

  Node expression() { return or_expression(); }

  Node binary(Node lhs, std::string op, Node rhs) {
    Node n(NodeKind::kBinop);
    n.span = lhs.span;
    n.span.end = rhs.span.end;
    n.text = std::move(op);
    n.children.push_back(std::move(lhs));
    n.children.push_back(std::move(rhs));
    return n;
  }

  Node or_expression() {
    Node lhs = and_expression();
    while (!restricted_ && peek_kw("or")) {
      ++pos_;
      lhs = binary(std::move(lhs), "or", and_expression());
    }
    return lhs;
  }

  Node and_expression() {
    Node lhs = not_expression();
    while (!restricted_ && peek_kw("and")) {
      ++pos_;
      lhs = binary(std::move(lhs), "and", not_expression());
    }
    return lhs;
  }

  Node not_expression() {
    if (peek_kw("not")) {
      Node n = start(NodeKind::kBinop);
      ++pos_;
      n.text = "not";
      n.children.push_back(not_expression());
      finish(n);
      return n;
    }
    return comparison();
  }

  Node comparison() {
    Node lhs = concatenation();
    for (auto op : {"=", "~=", "<=", ">=", "<", ">"}) {
      if (check(op)) {
        ++pos_;
        return binary(std::move(lhs), op, concatenation());
      }
    }
    return lhs;
  }

  Node concatenation() {
    Node lhs = additive();
    while (check("++")) {
      ++pos_;
      lhs = binary(std::move(lhs), "++", additive());
    }
    return lhs;
  }

  Node additive() {
    Node lhs = multiplicative();
    while (check("+") || check("-")) {
      std::string op = take().text;
      lhs = binary(std::move(lhs), op, multiplicative());
    }
    return lhs;
  }

  Node multiplicative() {
    Node lhs = unary();
    while (check("*") || check("/")) {
      std::string op = take().text;
      lhs = binary(std::move(lhs), op, unary());
    }
    return lhs;
  }

  Node unary() {
    if (check("-")) {
      Node n = start(NodeKind::kBinop);
      ++pos_;
      Node operand = unary();
      if (operand.is(NodeKind::kLiteral)) {
        if (auto* i = std::get_if<std::int64_t>(&operand.literal)) {
          operand.literal = -*i;
          operand.span.start = n.span.start;
          return operand;
        }
        if (auto* r = std::get_if<double>(&operand.literal)) {
          operand.literal = -*r;
          operand.span.start = n.span.start;
          return operand;
        }
      }
      n.text = "-";
      n.children.push_back(std::move(operand));
      finish(n);
      return n;
    }
    if (peek_kw("deref") || peek_kw("decompose")) {
      Node n = start(peek_kw("deref") ? NodeKind::kDeref : NodeKind::kDecompose);
      ++pos_;
      n.children.push_back(unary());
      finish(n);
      return n;
    }
    return postfix_expression();
  }

  Node postfix_expression() {
    Node e = primary();
    for (;;) {
      if (check("(")) {
        Node n(NodeKind::kApplication);
        n.span = e.span;
        ++pos_;
        n.children.push_back(std::move(e));
        Unrestrict u(*this);
        if (!check(")")) {
          do {
            n.children.push_back(expression());
          } while (accept(","));
        }
        expect(")");
        finish(n);
        e = std::move(n);
      } else if (check(".")) {
        Node n(NodeKind::kProjection);
        n.span = e.span;
        ++pos_;
        n.text = expect_ident("field name");
        n.children.push_back(std::move(e));
        finish(n);
        e = std::move(n);
      } else if (check("::")) {
        Node n(NodeKind::kIndex);
        n.span = e.span;
        ++pos_;
        if (peek().kind == TokenKind::kIdent) {
          fail_at(peek().span,
                  "'name::name' connection references are only valid in a "
                  "where clause");
        }
        if (peek().kind != TokenKind::kInteger) fail({"sequence index"});
        n.literal = take().int_value;
        n.children.push_back(std::move(e));
        finish(n);
        e = std::move(n);
      } else {
        return e;
      }
    }
  }

  Node primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::kInteger: {
        Node n = make_literal(t.int_value);
        n.span = t.span;
        ++pos_;
        return n;
      }
      case TokenKind::kReal: {
        Node n = make_literal(t.real_value);
        n.span = t.span;
        ++pos_;
        return n;
      }
      case TokenKind::kString: {
        Node n = make_literal(t.text);
        n.span = t.span;
        ++pos_;
        return n;
      }
      case TokenKind::kIdent: {
        Node n = make_name(t.text);
        n.span = t.span;
        ++pos_;
        return n;
      }
      case TokenKind::kLink: {
        ValueId id{t.link_id};
        if (store_ && !store_->contains(id)) {
          fail_at(t.span, "link token names unknown value id " +
                              std::to_string(t.link_id));
        }
        Node n = make_link(id, t.hint.empty() ? std::nullopt
                                              : std::optional<std::string>(t.hint));
        n.span = t.span;
        ++pos_;
        return n;
      }
      case TokenKind::kPunct:
        if (t.text == "(") {
          ++pos_;
          Unrestrict u(*this);
          Node e = expression();
          expect(")");
          return e;
        }
        if (t.text == "{") return block();
        break;
      case TokenKind::kKeyword:
        return keyword_primary();
      default:
        break;
    }
    fail({"expression"});
  }

  Node keyword_primary() {
    const std::string kw = peek().text;
    if (kw == "true" || kw == "false") {
      Node n = make_literal(kw == "true");
      n.span = peek().span;
      ++pos_;
      return n;
    }
    if (kw == "abstraction") {
      Node n = start(NodeKind::kAbstraction);
      ++pos_;
      params(n);
      n.children.push_back(statement());
      finish(n);
      return n;
    }
    if (kw == "function") {
      Node n = start(NodeKind::kFunction);
      ++pos_;
      params(n);
      expect("->");
      n.types.push_back(type());
      expect("{");
      Unrestrict u(*this);
      n.children.push_back(expression());
      expect("}");
      finish(n);
      return n;
    }
    if (kw == "replicate") return replicate();
    if (kw == "choose") return choose();
    if (kw == "connection") {
      Node n = start(NodeKind::kConnectionNew);
      ++pos_;
      expect("(");
      if (!check(")")) {
        do {
          n.types.push_back(type());
        } while (accept(","));
      }
      expect(")");
      finish(n);
      return n;
    }
    if (kw == "location" || kw == "any") {
      Node n = start(kw == "location" ? NodeKind::kLocationNew : NodeKind::kAnyInject);
      ++pos_;
      expect("(");
      Unrestrict u(*this);
      n.children.push_back(expression());
      expect(")");
      finish(n);
      return n;
    }
    if (kw == "project") {
      Node n = start(NodeKind::kAnyProject);
      ++pos_;
      expect("(");
      Unrestrict u(*this);
      n.children.push_back(expression());
      expect(",");
      n.types.push_back(type());
      expect(")");
      finish(n);
      return n;
    }
    if (kw == "view") {
      Node n = start(NodeKind::kViewLiteral);
      ++pos_;
      expect("{");
      Unrestrict u(*this);
      if (!check("}")) {
        do {
          n.names.push_back(expect_ident("field name"));
          expect("=");
          n.children.push_back(expression());
        } while (accept(","));
      }
      expect("}");
      finish(n);
      return n;
    }
    if (kw == "sequence") {
      Node n = start(NodeKind::kSequenceLiteral);
      ++pos_;
      if (accept("[")) {
        n.types.push_back(type());
        expect("]");
      }
      expect("{");
      Unrestrict u(*this);
      if (!check("}")) {
        do {
          n.children.push_back(expression());
        } while (accept(","));
      }
      expect("}");
      finish(n);
      return n;
    }
    if (kw == "compose") return compose();
    if (kw == "if") {
      Node n = start(NodeKind::kIf);
      ++pos_;
      n.children.push_back(expression());
      expect_kw("then");
      n.children.push_back(expression());
      expect_kw("else");
      n.children.push_back(expression());
      finish(n);
      return n;
    }
    fail({"expression"});
  }

  void params(Node& n) {
    expect("(");
    if (!check(")")) {
      do {
        n.names.push_back(expect_ident("parameter name"));
        expect(":");
        n.types.push_back(type());
      } while (accept(","));
    }
    expect(")");
  }

  Node compose() {
    Node n = start(NodeKind::kCompose);
    ++pos_;
    expect("{");
    {
      Restrict r(*this);
      do {
        std::string label;
        if (peek().kind == TokenKind::kIdent && peek_kw("as", 1)) {
          label = take().text;
          ++pos_;
        }
        n.names.push_back(std::move(label));
        n.children.push_back(expression());
      } while (accept_kw("and"));
    }
    if (accept_kw("where")) {
      expect("{");
      do {
        Unification u;
        u.left_label = expect_ident("label");
        expect("::");
        u.left_conn = expect_ident("connection name");
        expect_kw("unifies");
        u.right_label = expect_ident("label");
        expect("::");
        u.right_conn = expect_ident("connection name");
        n.unifications.push_back(std::move(u));
      } while (accept(","));
      expect("}");
    }
    expect("}");
    finish(n);
    return n;
  }

  // ---- types ----

  Type type() {
    const Token& t = peek();
    if (t.kind == TokenKind::kIdent) {
      static const std::map<std::string, Type, std::less<>> base = {
          {"integer", Type::Integer()}, {"real", Type::Real()},
          {"boolean", Type::Boolean()}, {"string", Type::String()}};
      if (auto it = base.find(t.text); it != base.end()) {
        ++pos_;
        return it->second;
      }
      if (read_aliases_) {
        if (auto it = read_aliases_->find(t.text); it != read_aliases_->end()) {
          ++pos_;
          return it->second;
        }
      }
      fail_at(t.span, "unknown type '" + t.text + "'");
    }
    if (t.kind != TokenKind::kKeyword) fail({"type"});
    const std::string kw = t.text;
    if (kw == "any") {
      ++pos_;
      return Type::Any();
    }
    if (kw == "behaviour") {
      ++pos_;
      return Type::Behaviour();
    }
    if (kw == "location" || kw == "sequence") {
      ++pos_;
      expect("[");
      Type inner = type();
      expect("]");
      return kw == "location" ? Type::LocationOf(inner) : Type::SequenceOf(inner);
    }
    if (kw == "view") {
      ++pos_;
      expect("[");
      std::vector<std::pair<std::string, Type>> fields;
      std::set<std::string> seen;
      if (!check("]")) {
        do {
          SourceSpan at = peek().span;
          std::string name = expect_ident("field name");
          if (!seen.insert(name).second) {
            fail_at(at, "duplicate view field '" + name + "'");
          }
          expect(":");
          fields.emplace_back(name, type());
        } while (accept(","));
      }
      expect("]");
      return Type::View(std::move(fields));
    }
    if (kw == "function" || kw == "connection" || kw == "abstraction") {
      ++pos_;
      expect("[");
      std::vector<Type> list;
      if (!check("]")) {
        do {
          list.push_back(type());
        } while (accept(","));
      }
      expect("]");
      if (kw == "function") {
        expect("->");
        return Type::Function(std::move(list), type());
      }
      return kw == "connection" ? Type::Connection(std::move(list))
                                : Type::Abstraction(std::move(list));
    }
    fail({"type"});
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  int restricted_ = 0;
  const ValueStore* store_;
  TypeAliases* aliases_;
  const TypeAliases* read_aliases_;
  std::vector<ParseError>& errors_;
};

}  // namespace

ParseFailure::ParseFailure(std::vector<ParseError> errors)
    : Error(join_messages(errors)), errors_(std::move(errors)) {}

ParseResult parse(std::string_view text, const ValueStore& store,
                  TypeAliases* aliases) {
  ParseResult result;
  auto tokens = detail::tokenize(text, result.errors);
  Parser p(std::move(tokens), &store, aliases, nullptr, result.errors);
  Node tree = p.program();
  if (result.errors.empty()) result.tree = std::move(tree);
  return result;
}

ParseResult parse_expression(std::string_view text, const ValueStore& store,
                             const TypeAliases* aliases) {
  ParseResult result;
  auto tokens = detail::tokenize(text, result.errors);
  Parser p(std::move(tokens), &store, nullptr, aliases, result.errors);
  Node tree = p.single_expression();
  if (result.errors.empty()) result.tree = std::move(tree);
  return result;
}

Type parse_type(std::string_view text, const TypeAliases* aliases) {
  std::vector<ParseError> errors;
  auto tokens = detail::tokenize(text, errors);
  Parser p(std::move(tokens), nullptr, nullptr, aliases, errors);
  Type t = p.single_type();
  if (!errors.empty()) throw ParseFailure(std::move(errors));
  return t;
}

std::string format_diagnostic(std::string_view file, const SourceSpan& span,
                              std::string_view message) {
  return std::string(file) + ":" + std::to_string(span.line) + ":" +
         std::to_string(span.column) + ": " + std::string(message);
}

}  // namespace adl
