#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "adl/error.hpp"
#include "adl/hypercode.hpp"
#include "adl/runtime.hpp"
#include "adl/syntax.hpp"
#include "adl/typecheck.hpp"

namespace adl {

using Entity = Value;
using Representation = Node;

// reflect of an ill-typed representation.
class ReflectError : public Error {
 public:
  explicit ReflectError(std::vector<TypeError> errors);
  const std::vector<TypeError>& errors() const { return errors_; }

 private:
  std::vector<TypeError> errors_;
};

// Hyper-code denoting `e`. Locations, connections, behaviours inside data and
// host functions become links, reusing the store id already holding the same
// identity when there is one. A suspended behaviour yields its continuation;
// a group of several parts yields a labelled compose. A part's connection
// endpoints lead its block as `value NAME = @[link]` declarations. Throws
// Error for a running behaviour.
Representation reify(const Entity& e, Engine& engine);

// The entity denoted by `r`, after typechecking it. Behaviour-shaped trees
// become a suspended, detached behaviour, whose leading declarations of
// connection links are bound as its endpoints without taking steps;
// everything else is evaluated.
// Links keep their referents. Throws ReflectError on type errors.
Entity reflect(const Representation& r, Engine& engine);

// Behaviours are resumed (attached to the session when detached) and
// returned; functions and abstractions of no arguments are applied. Throws
// Error for any other entity.
Entity execute(const Entity& e, Engine& engine);

struct ReplaceSubtree {
  std::vector<std::size_t> path;
  Node subtree;
};

struct ReplaceWithText {
  std::vector<std::size_t> path;
  std::string text;
};

struct RelinkValue {
  ValueId from{};
  ValueId to{};
};

using Edit = std::variant<ReplaceSubtree, ReplaceWithText, RelinkValue>;

// A copy of `r` with the edit applied. Paths index `children` from the root.
// Replacement text is parsed as an expression, or failing that as a single
// statement. Throws Error on a bad path, ParseFailure on bad text.
Representation transform(const Representation& r, const Edit& edit, const ValueStore& store,
                         const TypeAliases* aliases = nullptr);

// {"op":"replace_text","path":[..],"text":S}
// {"op":"replace_subtree","path":[..],"hypercode":node}
// {"op":"relink","from":N,"to":M}
Edit edit_from_json(const nlohmann::json& j, const ValueStore& store);

}  // namespace adl
