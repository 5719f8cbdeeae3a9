// Small arithmetic expression grammar for coefficient definitions in config
// files: + - * / with unary minus, exp/log/min/max, parentheses, numeric
// literals, and the identifiers p0..pn and t. Deliberately not a scripting
// language; anything richer belongs in compiled code.
#pragma once

#include <string>
#include <vector>

#include "tameflow/util.hpp"

namespace tameflow::expr {

class Expression {
 public:
  // parses text over variables p0..p{n} and t; throws InvalidInput with the
  // offending position on malformed input
  static Expression parse(const std::string& text, int n);

  double eval(const Vec& p, double t) const;

  bool uses_time() const { return uses_time_; }
  bool uses_price() const { return uses_price_; }
  const std::string& text() const { return text_; }

  // flat AST; public only for the parser implementation
  enum class Kind { kNumber, kPrice, kTime, kNegate, kBinary, kCall1, kCall2 };
  struct Node {
    Kind kind = Kind::kNumber;
    double number = 0.0;  // kNumber
    int index = 0;        // kPrice: price coordinate; kBinary/kCall: opcode
    int a = -1;           // child slots
    int b = -1;
  };

 private:
  double eval_node(int node, const Vec& p, double t) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  bool uses_time_ = false;
  bool uses_price_ = false;
  std::string text_;
};

}  // namespace tameflow::expr
