#include "terms.hpp"

#include <algorithm>

namespace adl::detail {

namespace {

bool is_block(const Node& n) { return n.is(NodeKind::kSequence) || n.is(NodeKind::kBody); }

bool binds(const Node& s, const std::string& name);

// A block exports `name` when it binds it at its own level and frees it.
bool block_exports(const Node& block, const std::string& name) {
  bool bound = false;
  bool freed = false;
  for (const auto& s : block.children) {
    if (binds(s, name)) bound = true;
    if (s.is(NodeKind::kFree) &&
        std::find(s.names.begin(), s.names.end(), name) != s.names.end()) {
      freed = true;
    }
  }
  return bound && freed;
}

bool binds(const Node& s, const std::string& name) {
  switch (s.kind) {
    case NodeKind::kValueDecl:
      return s.text == name;
    case NodeKind::kReceive:
      return std::find(s.names.begin(), s.names.end(), name) != s.names.end();
    case NodeKind::kSequence:
    case NodeKind::kBody:
      return block_exports(s, name);
    default:
      return false;
  }
}

}  // namespace

bool recursive_rhs(const Node& decl) {
  const Node& rhs = decl.children[0];
  return rhs.is(NodeKind::kAbstraction) || rhs.is(NodeKind::kFunction);
}

void substitute_suffix(std::vector<Node>& stmts, std::size_t from, const std::string& name,
                       const Node& link) {
  for (std::size_t i = from; i < stmts.size(); ++i) {
    Node& s = stmts[i];
    if (s.is(NodeKind::kValueDecl)) {
      if (s.text == name) {
        if (!recursive_rhs(s)) substitute(s.children[0], name, link);
        return;
      }
      substitute(s.children[0], name, link);
      continue;
    }
    if (s.is(NodeKind::kReceive)) {
      substitute(s.children[0], name, link);
      if (binds(s, name)) return;
      continue;
    }
    substitute(s, name, link);
    if (is_block(s) && block_exports(s, name)) return;
  }
}

void substitute(Node& n, const std::string& name, const Node& link) {
  switch (n.kind) {
    case NodeKind::kName:
      if (n.text == name) {
        Node l = link;
        l.span = n.span;
        n = std::move(l);
      }
      return;
    case NodeKind::kSequence:
    case NodeKind::kBody:
      substitute_suffix(n.children, 0, name, link);
      return;
    case NodeKind::kAbstraction:
    case NodeKind::kFunction:
      if (std::find(n.names.begin(), n.names.end(), name) != n.names.end()) return;
      break;
    case NodeKind::kValueDecl:
      if (n.text == name && recursive_rhs(n)) return;
      break;
    default:
      break;
  }
  for (auto& c : n.children) substitute(c, name, link);
}

bool frees(const std::vector<Node>& stmts, std::size_t from, const std::string& name) {
  for (std::size_t i = from; i < stmts.size(); ++i) {
    const Node& s = stmts[i];
    if (s.is(NodeKind::kFree) &&
        std::find(s.names.begin(), s.names.end(), name) != s.names.end()) {
      return true;
    }
  }
  return false;
}

bool normalize(Node& n) {
  switch (n.kind) {
    case NodeKind::kSequence:
    case NodeKind::kBody:
      while (!n.children.empty()) {
        Node& head = n.children.front();
        if (head.is(NodeKind::kFree) || normalize(head)) {
          n.children.erase(n.children.begin());
          continue;
        }
        break;
      }
      return n.children.empty();
    case NodeKind::kReplicate:
      return n.children.size() == 2 && normalize(n.children[1]);
    case NodeKind::kFree:
      return true;
    default:
      return false;
  }
}

Node split_endpoints(const Node& block, const ValueStore& store,
                     std::vector<std::pair<std::string, Value>>& endpoints) {
  if (!block.is(NodeKind::kSequence) && !block.is(NodeKind::kBody)) return block;
  std::vector<Node> items = block.children;
  std::vector<std::pair<std::string, Value>> found;
  std::size_t k = 0;
  for (; k < items.size(); ++k) {
    const Node& d = items[k];
    if (!d.is(NodeKind::kValueDecl) || !d.children.front().is(NodeKind::kLink)) break;
    ValueId id = d.children.front().link;
    if (!store.contains(id) || !store.lookup(id).holds<ConnectionValue>()) break;
    found.emplace_back(d.text, store.lookup(id));
    substitute_suffix(items, k + 1, d.text, make_link(id, d.text));
  }
  if (k == 0 || k == items.size()) return block;
  endpoints.insert(endpoints.end(), found.begin(), found.end());
  if (items.size() - k == 1 && !items.back().is(NodeKind::kValueDecl)) return items.back();
  Node rest(NodeKind::kSequence);
  rest.span = block.span;
  rest.children.assign(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(k)),
                       std::make_move_iterator(items.end()));
  return rest;
}

}  // namespace adl::detail
