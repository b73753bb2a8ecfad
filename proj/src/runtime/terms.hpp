#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adl/hypercode.hpp"
#include "adl/value.hpp"

namespace adl::detail {

// Replaces free uses of `name` in `n` by `link`. Bindings in sequences,
// receive binders and parameters shadow; a recursive value binding shadows
// its own right-hand side.
void substitute(Node& n, const std::string& name, const Node& link);

// Same, over the statements stmts[from..] of one block.
void substitute_suffix(std::vector<Node>& stmts, std::size_t from, const std::string& name,
                       const Node& link);

// True if some statement in stmts[from..] is `free{..name..}`.
bool frees(const std::vector<Node>& stmts, std::size_t from, const std::string& name);

// `value x = abstraction ..` and `value x = function ..` bind recursively.
bool recursive_rhs(const Node& decl);

// Splits leading `value NAME = @[connection]` declarations off a block,
// substituting the links for the names in what follows. Returns the rest of
// the block, or `block` itself when it has no such prefix or nothing after it.
Node split_endpoints(const Node& block, const ValueStore& store,
                     std::vector<std::pair<std::string, Value>>& endpoints);

// Drops finished prefixes: leading `free` statements, empty blocks, and
// replicates whose working copy ran to completion. Returns true when nothing
// is left to execute.
bool normalize(Node& n);

}  // namespace adl::detail
