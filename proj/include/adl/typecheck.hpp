#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adl/hypercode.hpp"
#include "adl/type.hpp"
#include "adl/value.hpp"

namespace adl {

// Block-structured scope chain. Frames are immutable once pushed; extending
// returns a new environment sharing the enclosing frames.
class TypeEnv {
 public:
  TypeEnv() = default;

  TypeEnv bind(const std::string& name, Type type) const;
  const Type* lookup(const std::string& name) const;

 private:
  struct Frame {
    std::string name;
    Type type;
    std::shared_ptr<const Frame> next;
  };
  std::shared_ptr<const Frame> head_;
};

struct TypeError {
  SourceSpan span;
  std::string message;
  std::optional<Type> expected;
  std::optional<Type> found;
};

struct CheckResult {
  std::optional<Type> type;
  std::vector<TypeError> errors;

  bool ok() const { return errors.empty(); }
};

// Principal type of `h`. Statement-shaped trees (sequences, replicate,
// choose, via, assignment, programs) have type behaviour. All errors are
// collected.
CheckResult typecheck(const Node& h, const TypeEnv& env, const ValueStore& store);

// Runtime type carried by a value. Any-values report Any; their witness is
// only inspected by projection.
Type type_of_value(const Value& v);

// Element type of the sequence returned by decompose.
Type decomposed_element_type();

}  // namespace adl
