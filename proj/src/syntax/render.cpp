#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <span>
#include <string>

#include "adl/syntax.hpp"

namespace adl {

namespace {

constexpr int kLow = 0;
constexpr int kOr = 1;
constexpr int kAnd = 2;
constexpr int kNot = 3;
constexpr int kCompare = 4;
constexpr int kConcat = 5;
constexpr int kAdd = 6;
constexpr int kMul = 7;
constexpr int kUnary = 8;
constexpr int kPostfix = 9;
constexpr int kPrimary = 10;

int binop_precedence(const Node& n) {
  const std::string& op = n.text;
  if (n.children.size() == 1) return op == "not" ? kNot : kUnary;
  if (op == "or") return kOr;
  if (op == "and") return kAnd;
  if (op == "++") return kConcat;
  if (op == "+" || op == "-") return kAdd;
  if (op == "*" || op == "/") return kMul;
  return kCompare;
}

int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::kBinop:
      return binop_precedence(n);
    case NodeKind::kLiteral:
      if (auto* i = std::get_if<std::int64_t>(&n.literal); i && *i < 0) return kUnary;
      if (auto* r = std::get_if<double>(&n.literal); r && std::signbit(*r)) return kUnary;
      return kPrimary;
    case NodeKind::kDeref:
    case NodeKind::kDecompose:
      return kUnary;
    case NodeKind::kApplication:
    case NodeKind::kProjection:
    case NodeKind::kIndex:
      return kPostfix;
    case NodeKind::kAbstraction:
    case NodeKind::kReplicate:
    case NodeKind::kIf:
    case NodeKind::kWhile:
    case NodeKind::kSend:
    case NodeKind::kReceive:
    case NodeKind::kAssign:
    case NodeKind::kValueDecl:
    case NodeKind::kFree:
    case NodeKind::kBody:
      return kLow;
    default:
      return kPrimary;
  }
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        out += c;
    }
  }
  return out + "\"";
}

std::string real_text(double r) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, r);
  std::string s(buf, end);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

bool plain_identifier(const std::string& s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

class Renderer {
 public:
  std::string program(const Node& body) {
    std::string out;
    for (size_t i = 0; i < body.children.size(); ++i) {
      if (i) out += " ;\n";
      out += statement(body.children[i], 0, false);
    }
    return out;
  }

  std::string top(const Node& n) {
    if (n.is(NodeKind::kBody)) return program(n);
    return statement(n, 0, false);
  }

 private:
  static std::string pad(int indent) { return std::string(indent * 2, ' '); }

  std::string block(const Node& n, int indent) {
    if (n.children.empty()) return "{ }";
    std::string out = "{\n";
    for (size_t i = 0; i < n.children.size(); ++i) {
      out += pad(indent + 1) + statement(n.children[i], indent + 1, false);
      out += i + 1 < n.children.size() ? " ;\n" : "\n";
    }
    return out + pad(indent) + "}";
  }

  std::string statement(const Node& n, int indent, bool restricted) {
    switch (n.kind) {
      case NodeKind::kValueDecl:
        return "value " + n.text + " = " + expr(n.children[0], indent, restricted, kLow);
      case NodeKind::kSend: {
        std::string out = "via " + expr(n.children[0], indent, restricted, kPostfix) + " send";
        for (size_t i = 1; i < n.children.size(); ++i) {
          out += i == 1 ? " " : ", ";
          out += expr(n.children[i], indent, restricted, kLow);
        }
        return out;
      }
      case NodeKind::kReceive: {
        std::string out =
            "via " + expr(n.children[0], indent, restricted, kPostfix) + " receive";
        for (size_t i = 0; i < n.names.size(); ++i) {
          out += i == 0 ? " " : ", ";
          out += n.names[i] + " : " + to_string(n.types[i]);
        }
        return out;
      }
      case NodeKind::kAssign:
        return expr(n.children[0], indent, restricted, kLow) + " := " +
               expr(n.children[1], indent, restricted, kLow);
      case NodeKind::kIf: {
        std::string out = "if " + expr(n.children[0], indent, restricted, kLow) +
                          " then " + statement(n.children[1], indent, restricted);
        if (n.children.size() > 2) {
          out += " else " + statement(n.children[2], indent, restricted);
        }
        return out;
      }
      case NodeKind::kWhile:
        return "while " + expr(n.children[0], indent, restricted, kLow) + " do " +
               statement(n.children[1], indent, restricted);
      case NodeKind::kFree: {
        std::string out = "free{ ";
        for (size_t i = 0; i < n.names.size(); ++i) {
          if (i) out += ", ";
          out += n.names[i];
        }
        return out + " }";
      }
      case NodeKind::kBody:
        return block(n, indent);
      default:
        return expr(n, indent, restricted, kLow);
    }
  }

  std::string expr(const Node& n, int indent, bool restricted, int min_prec) {
    int floor = restricted ? kNot : kLow;
    int need = std::max(min_prec, floor);
    if (precedence(n) < need) {
      return "(" + expr(n, indent, false, kLow) + ")";
    }
    return bare(n, indent, restricted);
  }

  std::string list(const std::vector<Node>& items, size_t from, int indent) {
    std::string out;
    for (size_t i = from; i < items.size(); ++i) {
      if (i > from) out += ", ";
      out += expr(items[i], indent, false, kLow);
    }
    return out;
  }

  std::string params(const Node& n) {
    std::string out = "(";
    for (size_t i = 0; i < n.names.size(); ++i) {
      if (i) out += ", ";
      out += n.names[i] + ": " + to_string(n.types[i]);
    }
    return out + ")";
  }

  std::string bare(const Node& n, int indent, bool restricted) {
    switch (n.kind) {
      case NodeKind::kLiteral:
        return literal(n.literal);
      case NodeKind::kName:
        return n.text;
      case NodeKind::kLink:
        if (plain_identifier(n.hint)) {
          return "@[" + std::to_string(raw(n.link)) + ":" + n.hint + "]";
        }
        return "@[" + std::to_string(raw(n.link)) + "]";
      case NodeKind::kBinop: {
        int p = binop_precedence(n);
        if (n.children.size() == 1) {
          std::string sep = n.text == "not" ? " " : "";
          return n.text + sep + expr(n.children[0], indent, restricted, p);
        }
        int lhs_prec = p == kCompare ? p + 1 : p;
        return expr(n.children[0], indent, restricted, lhs_prec) + " " + n.text +
               " " + expr(n.children[1], indent, restricted, p + 1);
      }
      case NodeKind::kDeref:
        return "deref " + expr(n.children[0], indent, restricted, kUnary);
      case NodeKind::kDecompose:
        return "decompose " + expr(n.children[0], indent, restricted, kUnary);
      case NodeKind::kApplication:
        return expr(n.children[0], indent, restricted, kPostfix) + "(" +
               list(n.children, 1, indent) + ")";
      case NodeKind::kProjection:
        return expr(n.children[0], indent, restricted, kPostfix) + "." + n.text;
      case NodeKind::kIndex:
        return expr(n.children[0], indent, restricted, kPostfix) +
               "::" + std::to_string(std::get<std::int64_t>(n.literal));
      case NodeKind::kAbstraction:
        return "abstraction" + params(n) + " " + statement(n.children[0], indent, restricted);
      case NodeKind::kFunction:
        return "function" + params(n) + " -> " + to_string(n.types.back()) + " { " +
               expr(n.children[0], indent, false, kLow) + " }";
      case NodeKind::kReplicate: {
        std::string out = "replicate " + statement(n.children[0], indent, restricted);
        if (n.children.size() > 1) {
          out += " resuming " + statement(n.children[1], indent, restricted);
        }
        return out;
      }
      case NodeKind::kChoose: {
        std::string out = "choose{\n";
        for (size_t i = 0; i < n.children.size(); ++i) {
          if (i) out += "\n" + pad(indent + 1) + "or\n";
          out += pad(indent + 1) + statement(n.children[i], indent + 1, true);
        }
        return out + "\n" + pad(indent) + "}";
      }
      case NodeKind::kSequence:
      case NodeKind::kBody:
        return block(n, indent);
      case NodeKind::kCompose: {
        std::string out = "compose{ ";
        for (size_t i = 0; i < n.children.size(); ++i) {
          if (i) out += "\n" + pad(indent + 1) + "and ";
          if (i < n.names.size() && !n.names[i].empty()) out += n.names[i] + " as ";
          out += expr(n.children[i], indent + 1, true, kLow);
        }
        if (!n.unifications.empty()) {
          out += "\n" + pad(indent + 1) + "where{ ";
          for (size_t i = 0; i < n.unifications.size(); ++i) {
            const auto& u = n.unifications[i];
            if (i) out += ",\n" + pad(indent + 3);
            out += u.left_label + "::" + u.left_conn + " unifies " + u.right_label +
                   "::" + u.right_conn;
          }
          out += " }";
        }
        return out + " }";
      }
      case NodeKind::kConnectionNew:
        return "connection(" + to_string(std::span<const Type>(n.types)) + ")";
      case NodeKind::kLocationNew:
        return "location(" + expr(n.children[0], indent, false, kLow) + ")";
      case NodeKind::kAnyInject:
        return "any(" + expr(n.children[0], indent, false, kLow) + ")";
      case NodeKind::kAnyProject:
        return "project(" + expr(n.children[0], indent, false, kLow) + ", " +
               to_string(n.types[0]) + ")";
      case NodeKind::kViewLiteral: {
        std::string out = "view{ ";
        for (size_t i = 0; i < n.names.size(); ++i) {
          if (i) out += ", ";
          out += n.names[i] + " = " + expr(n.children[i], indent, false, kLow);
        }
        return out + (n.names.empty() ? "}" : " }");
      }
      case NodeKind::kSequenceLiteral: {
        std::string out = "sequence";
        if (!n.types.empty()) out += "[" + to_string(n.types[0]) + "]";
        if (n.children.empty()) return out + "{ }";
        return out + "{ " + list(n.children, 0, indent) + " }";
      }
      case NodeKind::kIf:
        return "if " + expr(n.children[0], indent, restricted, kLow) + " then " +
               expr(n.children[1], indent, restricted, kLow) + " else " +
               expr(n.children[2], indent, restricted, kLow);
      default:
        return statement(n, indent, restricted);
    }
  }

  static std::string literal(const Scalar& s) {
    if (auto* i = std::get_if<std::int64_t>(&s)) return std::to_string(*i);
    if (auto* r = std::get_if<double>(&s)) return real_text(*r);
    if (auto* b = std::get_if<bool>(&s)) return *b ? "true" : "false";
    if (auto* str = std::get_if<std::string>(&s)) return quote(*str);
    return "?";
  }
};

}  // namespace

std::string render(const Node& h) { return Renderer().top(h); }

}  // namespace adl
