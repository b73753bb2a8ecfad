#include "adl/type.hpp"

namespace adl {

Type Type::LocationOf(Type content) {
  return Type{TypeKind::kLocation, {std::move(content)}, {}};
}

Type Type::SequenceOf(Type element) {
  return Type{TypeKind::kSequence, {std::move(element)}, {}};
}

Type Type::View(std::vector<std::pair<std::string, Type>> fields) {
  Type t{TypeKind::kView, {}, {}};
  for (auto& [name, type] : fields) {
    t.fields.push_back(std::move(name));
    t.args.push_back(std::move(type));
  }
  return t;
}

Type Type::Function(std::vector<Type> params, Type result) {
  params.push_back(std::move(result));
  return Type{TypeKind::kFunction, std::move(params), {}};
}

Type Type::Connection(std::vector<Type> payload) {
  return Type{TypeKind::kConnection, std::move(payload), {}};
}

Type Type::Abstraction(std::vector<Type> params) {
  return Type{TypeKind::kAbstraction, std::move(params), {}};
}

std::span<const Type> Type::params() const {
  if (kind == TypeKind::kFunction) {
    return std::span<const Type>(args.data(), args.size() - 1);
  }
  return std::span<const Type>(args);
}

int Type::field_index(const std::string& name) const {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (fields[i] == name) return static_cast<int>(i);
  }
  return -1;
}

bool type_equal(const Type& a, const Type& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size() ||
      a.fields != b.fields) {
    return false;
  }
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (!type_equal(a.args[i], b.args[i])) return false;
  }
  return true;
}

std::string to_string(std::span<const Type> types) {
  std::string out;
  for (size_t i = 0; i < types.size(); ++i) {
    if (i) out += ", ";
    out += to_string(types[i]);
  }
  return out;
}

std::string to_string(const Type& t) {
  switch (t.kind) {
    case TypeKind::kInteger:
      return "integer";
    case TypeKind::kReal:
      return "real";
    case TypeKind::kBoolean:
      return "boolean";
    case TypeKind::kString:
      return "string";
    case TypeKind::kAny:
      return "any";
    case TypeKind::kBehaviour:
      return "behaviour";
    case TypeKind::kLocation:
      return "location[" + to_string(t.element()) + "]";
    case TypeKind::kSequence:
      return "sequence[" + to_string(t.element()) + "]";
    case TypeKind::kView: {
      std::string out = "view[";
      for (size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ", ";
        out += t.fields[i] + ": " + to_string(t.args[i]);
      }
      return out + "]";
    }
    case TypeKind::kFunction:
      return "function[" + to_string(t.params()) + "] -> " +
             to_string(t.result());
    case TypeKind::kConnection:
      return "connection[" + to_string(std::span<const Type>(t.args)) + "]";
    case TypeKind::kAbstraction:
      return "abstraction[" + to_string(std::span<const Type>(t.args)) + "]";
  }
  return "?";
}

}  // namespace adl
