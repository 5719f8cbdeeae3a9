#include "tameflow/expr.hpp"

#include <cctype>
#include <cmath>
#include <charconv>

#include "tameflow/errors.hpp"

namespace tameflow::expr {

namespace {

// opcodes for kBinary and kCall nodes
enum Op : int { kAdd, kSub, kMul, kDiv, kExp, kLog, kMin, kMax };

struct Parser {
  const std::string& text;
  int n;  // highest price index allowed
  std::size_t pos = 0;
  std::vector<Expression::Node>* nodes = nullptr;

  Parser(const std::string& t, int n_, std::vector<Expression::Node>* sink)
      : text(t), n(n_), nodes(sink) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidInput("expression error at position " +
                       std::to_string(pos) + ": " + what + " in '" + text +
                       "'");
  }

  void skip_ws() {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
  }

  bool consume(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  int push(Expression::Node node) {
    nodes->push_back(node);
    return static_cast<int>(nodes->size()) - 1;
  }

  int parse_expression() {
    int lhs = parse_term();
    while (true) {
      const char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos;
      const int rhs = parse_term();
      Expression::Node node;
      node.kind = Expression::Kind::kBinary;
      node.index = c == '+' ? kAdd : kSub;
      node.a = lhs;
      node.b = rhs;
      lhs = push(node);
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    while (true) {
      const char c = peek();
      if (c != '*' && c != '/') return lhs;
      ++pos;
      const int rhs = parse_unary();
      Expression::Node node;
      node.kind = Expression::Kind::kBinary;
      node.index = c == '*' ? kMul : kDiv;
      node.a = lhs;
      node.b = rhs;
      lhs = push(node);
    }
  }

  int parse_unary() {
    if (consume('-')) {
      Expression::Node node;
      node.kind = Expression::Kind::kNegate;
      node.a = parse_unary();
      return push(node);
    }
    return parse_primary();
  }

  int parse_primary() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    const char c = text[pos];
    if (c == '(') {
      ++pos;
      const int inner = parse_expression();
      if (!consume(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    fail("unexpected character");
  }

  int parse_number() {
    double value = 0.0;
    const char* begin = text.data() + pos;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{}) fail("malformed number");
    pos += static_cast<std::size_t>(res.ptr - begin);
    Expression::Node node;
    node.kind = Expression::Kind::kNumber;
    node.number = value;
    return push(node);
  }

  int parse_ident() {
    const std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_')) {
      ++pos;
    }
    const std::string name = text.substr(start, pos - start);
    if (name == "t") {
      Expression::Node node;
      node.kind = Expression::Kind::kTime;
      return push(node);
    }
    if (name.size() >= 2 && name[0] == 'p') {
      int index = -1;
      const auto res = std::from_chars(name.data() + 1,
                                       name.data() + name.size(), index);
      if (res.ec == std::errc{} && res.ptr == name.data() + name.size()) {
        if (index < 0 || index > n) {
          pos = start;
          fail("price index out of range, have p0..p" + std::to_string(n));
        }
        Expression::Node node;
        node.kind = Expression::Kind::kPrice;
        node.index = index;
        return push(node);
      }
    }
    if (name == "exp" || name == "log") {
      if (!consume('(')) fail("expected '(' after " + name);
      const int arg = parse_expression();
      if (!consume(')')) fail("expected ')'");
      Expression::Node node;
      node.kind = Expression::Kind::kCall1;
      node.index = name == "exp" ? kExp : kLog;
      node.a = arg;
      return push(node);
    }
    if (name == "min" || name == "max") {
      if (!consume('(')) fail("expected '(' after " + name);
      const int a = parse_expression();
      if (!consume(',')) fail("expected ',' between arguments");
      const int b = parse_expression();
      if (!consume(')')) fail("expected ')'");
      Expression::Node node;
      node.kind = Expression::Kind::kCall2;
      node.index = name == "min" ? kMin : kMax;
      node.a = a;
      node.b = b;
      return push(node);
    }
    pos = start;
    fail("unknown identifier '" + name + "'");
  }
};

}  // namespace

Expression Expression::parse(const std::string& text, int n) {
  if (n < 0) throw InvalidInput("expression needs a non-negative price count");
  Expression out;
  out.text_ = text;
  Parser parser(text, n, &out.nodes_);
  out.root_ = parser.parse_expression();
  parser.skip_ws();
  if (parser.pos != text.size()) parser.fail("trailing input");
  for (const Node& node : out.nodes_) {
    if (node.kind == Kind::kTime) out.uses_time_ = true;
    if (node.kind == Kind::kPrice) out.uses_price_ = true;
  }
  return out;
}

double Expression::eval_node(int node, const Vec& p, double t) const {
  const Node& nd = nodes_[static_cast<std::size_t>(node)];
  switch (nd.kind) {
    case Kind::kNumber:
      return nd.number;
    case Kind::kPrice:
      return p[nd.index];
    case Kind::kTime:
      return t;
    case Kind::kNegate:
      return -eval_node(nd.a, p, t);
    case Kind::kBinary: {
      const double a = eval_node(nd.a, p, t);
      const double b = eval_node(nd.b, p, t);
      switch (nd.index) {
        case kAdd: return a + b;
        case kSub: return a - b;
        case kMul: return a * b;
        default: return a / b;
      }
    }
    case Kind::kCall1: {
      const double a = eval_node(nd.a, p, t);
      return nd.index == kExp ? std::exp(a) : std::log(a);
    }
    case Kind::kCall2: {
      const double a = eval_node(nd.a, p, t);
      const double b = eval_node(nd.b, p, t);
      return nd.index == kMin ? std::min(a, b) : std::max(a, b);
    }
  }
  return 0.0;  // unreachable
}

double Expression::eval(const Vec& p, double t) const {
  if (root_ < 0) throw InvalidInput("empty expression");
  return eval_node(root_, p, t);
}

}  // namespace tameflow::expr
