#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace adl {

enum class TypeKind {
  kInteger,
  kReal,
  kBoolean,
  kString,
  kAny,
  kBehaviour,
  kLocation,
  kSequence,
  kView,
  kFunction,
  kConnection,
  kAbstraction,
};

// Structural type over the value universe. Component layout by kind:
//   Location, Sequence  args = {element}
//   View                args = field types, fields = field names (order is
//                       significant for equality)
//   Function            args = params..., result (result is always last)
//   Connection          args = payload types
//   Abstraction         args = parameter types
struct Type {
  TypeKind kind = TypeKind::kAny;
  std::vector<Type> args;
  std::vector<std::string> fields;

  static Type Integer() { return Type{TypeKind::kInteger, {}, {}}; }
  static Type Real() { return Type{TypeKind::kReal, {}, {}}; }
  static Type Boolean() { return Type{TypeKind::kBoolean, {}, {}}; }
  static Type String() { return Type{TypeKind::kString, {}, {}}; }
  static Type Any() { return Type{TypeKind::kAny, {}, {}}; }
  static Type Behaviour() { return Type{TypeKind::kBehaviour, {}, {}}; }
  static Type LocationOf(Type content);
  static Type SequenceOf(Type element);
  static Type View(std::vector<std::pair<std::string, Type>> fields);
  static Type Function(std::vector<Type> params, Type result);
  static Type Connection(std::vector<Type> payload);
  static Type Abstraction(std::vector<Type> params);

  bool is(TypeKind k) const { return kind == k; }

  // Location/Sequence element.
  const Type& element() const { return args.front(); }
  // Function parameters (all args but the last) or abstraction parameters.
  std::span<const Type> params() const;
  const Type& result() const { return args.back(); }
  // Index of a view field, or -1.
  int field_index(const std::string& name) const;
};

bool type_equal(const Type& a, const Type& b);
inline bool operator==(const Type& a, const Type& b) { return type_equal(a, b); }
inline bool operator!=(const Type& a, const Type& b) { return !type_equal(a, b); }

// Concrete spelling, e.g. `view[label: string, bhvr: behaviour]`. Reparses
// with parse_type to an equal type.
std::string to_string(const Type& t);
std::string to_string(std::span<const Type> types);

}  // namespace adl
