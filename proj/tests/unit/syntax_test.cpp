#include <doctest.h>

#include <random>

#include "adl/syntax.hpp"
#include "support/support.hpp"

using namespace adl;

namespace {

Node parse_ok(std::string_view text, const ValueStore& store) {
  ParseResult p = parse(text, store);
  if (!p.ok()) FAIL(p.errors.front().message);
  return *p.tree;
}

void check_roundtrip(const Node& tree, const ValueStore& store) {
  std::string text = render(tree);
  ParseResult again = parse(text, store);
  INFO(text);
  REQUIRE(again.ok());
  CHECK(structurally_equal(tree, *again.tree));
}

// Random program text over most of the grammar.
struct ProgramGen {
  std::mt19937_64 rng;
  int pick(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

  std::string expr(int depth) {
    if (depth == 0) {
      switch (pick(5)) {
        case 0: return std::to_string(pick(100));
        case 1: return "x";
        case 2: return "\"s" + std::to_string(pick(9)) + "\"";
        case 3: return pick(2) ? "true" : "false";
        default: return "2.5";
      }
    }
    switch (pick(9)) {
      case 0: return expr(depth - 1) + " + " + expr(depth - 1);
      case 1: return "(" + expr(depth - 1) + " * " + expr(depth - 1) + ")";
      case 2: return "(not " + expr(depth - 1) + ")";
      case 3: return "sequence{ " + expr(depth - 1) + ", " + expr(depth - 1) + " }";
      case 4: return "view{ a = " + expr(depth - 1) + ", b = " + expr(depth - 1) + " }";
      case 5: return "f( " + expr(depth - 1) + " )";
      case 6: return "deref " + expr(0);
      case 7: return "any( " + expr(depth - 1) + " )";
      default: return "s::" + std::to_string(1 + pick(3)) + ".a";
    }
  }

  std::string stmt(int depth) {
    if (depth == 0) {
      switch (pick(4)) {
        case 0: return "via c send " + expr(1);
        case 1: return "via c receive n : integer";
        case 2: return "l := " + expr(1);
        default: return "value y = " + expr(2);
      }
    }
    switch (pick(5)) {
      case 0: return "replicate{ " + stmt(depth - 1) + " ; " + stmt(depth - 1) + " }";
      case 1: return "choose{ " + stmt(depth - 1) + " or " + stmt(depth - 1) + " }";
      case 2: return "{ " + stmt(depth - 1) + " ; " + stmt(depth - 1) + " }";
      case 3:
        return "value p = abstraction( n : integer ) { " + stmt(depth - 1) + " }";
      default: return "if " + expr(1) + " then { " + stmt(depth - 1) + " } else { " + stmt(depth - 1) + " }";
    }
  }
};

}  // namespace

TEST_CASE("replicate body parses to a sequence of receive and send") {
  ValueStore s;
  Node t = parse_ok("replicate{ via in_channel receive num : integer ; via out_channel send 2 * num }", s);
  const Node& rep = t.children.at(0);
  REQUIRE(rep.is(NodeKind::kReplicate));
  const Node& seq = rep.children.at(0);
  REQUIRE(seq.is(NodeKind::kSequence));
  REQUIRE(seq.children.size() == 2);
  CHECK(seq.children[0].is(NodeKind::kReceive));
  CHECK(seq.children[1].is(NodeKind::kSend));
  const Node& payload = seq.children[1].children.at(1);
  CHECK(payload.is(NodeKind::kBinop));
  CHECK(payload.text == "*");
}

TEST_CASE("three-way choose") {
  ValueStore s;
  Node t = parse_ok("choose{ client1 or client2 or client3 }", s);
  REQUIRE(t.children.at(0).is(NodeKind::kChoose));
  CHECK(t.children[0].children.size() == 3);
}

TEST_CASE("truncated declaration expects an expression at end of input") {
  ValueStore s;
  ParseResult p = parse("value x = ", s);
  REQUIRE_FALSE(p.ok());
  const ParseError& e = p.errors.front();
  CHECK(e.span.line == 1);
  CHECK(e.span.column >= 10);
  CHECK(e.message.find("expression") != std::string::npos);
}

TEST_CASE("compose with labels and a unification") {
  ValueStore s;
  Node t = parse_ok("compose{ a as p and b as q where { a::c unifies b::d } }", s);
  const Node& c = t.children.at(0);
  REQUIRE(c.is(NodeKind::kCompose));
  CHECK(c.children.size() == 2);
  CHECK(c.names == std::vector<std::string>{"a", "b"});
  REQUIRE(c.unifications.size() == 1);
  CHECK(c.unifications[0] == Unification{"a", "c", "b", "d"});
}

TEST_CASE("label-scoped references outside where are rejected") {
  ValueStore s;
  CHECK_FALSE(parse("value x = a::b", s).ok());
  CHECK(parse("value x = a::2", s).ok());
}

TEST_CASE("links render as id and hint") {
  CHECK(render(make_link(ValueId{7}, "client_abs")) == "@[7:client_abs]");
}

TEST_CASE("links to unknown ids do not parse") {
  ValueStore s;
  CHECK_FALSE(parse("@[3:x]", s).ok());
}

TEST_CASE("type spellings") {
  Type c = parse_type("connection[string]");
  CHECK(c.is(TypeKind::kConnection));
  CHECK(c.args == std::vector<Type>{Type::String()});
  Type n = parse_type("sequence[view[label: string]]");
  CHECK(n.is(TypeKind::kSequence));
  CHECK(n.element().is(TypeKind::kView));
  Type f = parse_type("function[integer] -> integer");
  CHECK(f.is(TypeKind::kFunction));
  CHECK(f.params().size() == 1);
  CHECK(f.result() == Type::Integer());
  CHECK_THROWS_AS(parse_type("view[a: ]"), ParseFailure);
}

TEST_CASE("every item error is reported") {
  ValueStore s;
  ParseResult p = parse("value a = ;\nvalue b = 1 ;\nvalue c = )", s);
  REQUIRE(p.errors.size() >= 2);
  CHECK(p.errors[0].span.line == 1);
  CHECK(p.errors.back().span.line == 3);
}

TEST_CASE("render then parse is the identity on the corpus") {
  for (const char* name : {"replicate_doubling.adl", "choose_three.adl", "abstraction_apply.adl",
                           "position_compose.adl", "position_decompose.adl", "position_recompose.adl",
                           "tracking_unify.adl", "tracking_no_unify.adl", "cs_client.adl", "cs_server.adl",
                           "cs_system1.adl", "cs_decompose.adl", "cs_servers.adl",
                           "cs_system2.adl"}) {
    CAPTURE(name);
    ValueStore s;
    TypeAliases aliases{{"exp_view", parse_type("view[step: integer, status: string]")}};
    ParseResult p = parse(adl::testing::read_corpus(name), s, &aliases);
    REQUIRE(p.ok());
    check_roundtrip(*p.tree, s);
  }
}

TEST_CASE("render then parse is the identity on generated programs") {
  ValueStore s;
  ProgramGen gen{std::mt19937_64(11)};
  for (int i = 0; i < 300; ++i) {
    std::string text = gen.stmt(gen.pick(3)) + " ;\n" + gen.stmt(gen.pick(3));
    ParseResult p = parse(text, s);
    INFO(text);
    REQUIRE(p.ok());
    check_roundtrip(*p.tree, s);
  }
}

TEST_CASE("diagnostics carry file, line and column") {
  CHECK(format_diagnostic("a.adl", SourceSpan{0, 0, 3, 4}, "bad") == "a.adl:3:4: bad");
}
