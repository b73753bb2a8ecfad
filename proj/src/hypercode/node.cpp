#include <array>
#include <utility>

#include "adl/hypercode.hpp"

namespace adl {

namespace {

constexpr std::array<std::pair<NodeKind, std::string_view>, 29> kKindNames{{
    {NodeKind::kLiteral, "lit"},
    {NodeKind::kName, "name"},
    {NodeKind::kValueDecl, "value"},
    {NodeKind::kAbstraction, "abstraction"},
    {NodeKind::kFunction, "function"},
    {NodeKind::kBody, "body"},
    {NodeKind::kSend, "send"},
    {NodeKind::kReceive, "receive"},
    {NodeKind::kReplicate, "replicate"},
    {NodeKind::kChoose, "choose"},
    {NodeKind::kSequence, "seq"},
    {NodeKind::kCompose, "compose"},
    {NodeKind::kDecompose, "decompose"},
    {NodeKind::kConnectionNew, "connection"},
    {NodeKind::kLocationNew, "location"},
    {NodeKind::kAssign, "assign"},
    {NodeKind::kDeref, "deref"},
    {NodeKind::kViewLiteral, "view"},
    {NodeKind::kSequenceLiteral, "sequence"},
    {NodeKind::kIndex, "index"},
    {NodeKind::kProjection, "field"},
    {NodeKind::kApplication, "apply"},
    {NodeKind::kIf, "if"},
    {NodeKind::kWhile, "while"},
    {NodeKind::kBinop, "binop"},
    {NodeKind::kFree, "free"},
    {NodeKind::kAnyInject, "any"},
    {NodeKind::kAnyProject, "project"},
    {NodeKind::kLink, "link"},
}};

}  // namespace

std::string_view kind_name(NodeKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<NodeKind> kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

Node make_link(ValueId id, std::optional<std::string> hint) {
  Node n(NodeKind::kLink);
  n.link = id;
  if (hint) n.hint = std::move(*hint);
  return n;
}

Node make_literal(Scalar value) {
  Node n(NodeKind::kLiteral);
  n.literal = std::move(value);
  return n;
}

Node make_name(std::string name) {
  Node n(NodeKind::kName);
  n.text = std::move(name);
  return n;
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == NodeKind::kLink) return a.link == b.link;
  if (a.text != b.text || a.names != b.names || a.types != b.types ||
      a.unifications != b.unifications || a.literal != b.literal ||
      a.children.size() != b.children.size()) {
    return false;
  }
  for (size_t i = 0; i < a.children.size(); ++i) {
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  }
  return true;
}

void visit(const Node& n, const std::function<void(const Node&)>& fn) {
  fn(n);
  for (const auto& c : n.children) visit(c, fn);
}

std::vector<ValueId> collect_links(const Node& n) {
  std::vector<ValueId> out;
  visit(n, [&](const Node& x) {
    if (x.is(NodeKind::kLink)) out.push_back(x.link);
  });
  return out;
}

}  // namespace adl
