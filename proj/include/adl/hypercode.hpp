#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adl/type.hpp"

namespace adl {

// Identity of an entry in a ValueStore. Never reused within one store.
enum class ValueId : std::uint64_t {};

inline std::uint64_t raw(ValueId id) { return static_cast<std::uint64_t>(id); }

// 0-based offsets, 1-based line/column.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  int line = 1;
  int column = 1;
};

enum class NodeKind {
  kLiteral,
  kName,
  kValueDecl,
  kAbstraction,
  kFunction,
  kBody,
  kSend,
  kReceive,
  kReplicate,
  kChoose,
  kSequence,
  kCompose,
  kDecompose,
  kConnectionNew,
  kLocationNew,
  kAssign,
  kDeref,
  kViewLiteral,
  kSequenceLiteral,
  kIndex,
  kProjection,
  kApplication,
  kIf,
  kWhile,
  kBinop,
  kFree,
  kAnyInject,
  kAnyProject,
  kLink,
};

std::string_view kind_name(NodeKind kind);
std::optional<NodeKind> kind_from_name(std::string_view name);

using Scalar = std::variant<std::monostate, std::int64_t, double, bool, std::string>;

// `left_label::left_conn unifies right_label::right_conn`.
struct Unification {
  std::string left_label;
  std::string left_conn;
  std::string right_label;
  std::string right_conn;

  friend bool operator==(const Unification&, const Unification&) = default;
};

// One hyper-code node. The payload fields used depend on the kind:
//
//   kLiteral          literal
//   kName             text = name
//   kValueDecl        text = name; children = {rhs}
//   kAbstraction      names = params; types = param types; children = {body}
//   kFunction         names = params; types = param types + result;
//                     children = {body expression}
//   kBody             children = program items (a scope)
//   kSend             children = {connection, payload...}
//   kReceive          children = {connection}; names/types = binders
//   kReplicate        children = {template} while waiting, or
//                     {template, working copy} once a copy is active
//   kChoose           children = branches (>= 2)
//   kSequence         children = statements of a braced block (a scope)
//   kCompose          children = parts; names = labels ("" when absent);
//                     unifications
//   kDecompose        children = {operand}
//   kConnectionNew    types = payload
//   kLocationNew      children = {initial contents}
//   kAssign           children = {location, value}
//   kDeref            children = {location}
//   kViewLiteral      names = fields; children = field values
//   kSequenceLiteral  children = items; types = {element} when annotated
//   kIndex            children = {sequence}; literal = 1-based index
//   kProjection       children = {view}; text = field
//   kApplication      children = {callee, args...}
//   kIf               children = {condition, then, else?}
//   kWhile            children = {condition, body}
//   kBinop            text = operator; children = {lhs, rhs} or {operand}
//   kFree             names = exported names
//   kAnyInject        children = {operand}
//   kAnyProject       children = {operand}; types = {target}
//   kLink             link; hint (display only)
struct Node {
  NodeKind kind = NodeKind::kBody;
  std::vector<Node> children;
  std::string text;
  std::vector<std::string> names;
  std::vector<Type> types;
  std::vector<Unification> unifications;
  Scalar literal;
  ValueId link{};
  std::string hint;
  SourceSpan span;

  explicit Node(NodeKind k = NodeKind::kBody) : kind(k) {}

  bool is(NodeKind k) const { return kind == k; }
};

// Link node to an extant value. The hint is for display only.
Node make_link(ValueId id, std::optional<std::string> hint = std::nullopt);
Node make_literal(Scalar value);
Node make_name(std::string name);

// Equality that ignores spans and link hints; links compare by id.
bool structurally_equal(const Node& a, const Node& b);

// Pre-order traversal.
void visit(const Node& n, const std::function<void(const Node&)>& fn);

// Ids of every link in the tree, in pre-order, with repeats.
std::vector<ValueId> collect_links(const Node& n);

}  // namespace adl
