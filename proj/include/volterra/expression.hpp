#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "volterra/errors.hpp"

namespace volterra {

/// Parse error with the 1-based character position inside the expression.
class ExpressionError : public ConfigError {
 public:
  ExpressionError(const std::string& what, int position)
      : ConfigError(what + " at position " + std::to_string(position)), position_(position) {}
  int position() const noexcept { return position_; }

 private:
  int position_;
};

/// Arithmetic expression over the variables t and v (for test functions the
/// single variable x is also accepted and is bound to the first argument).
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?
///   primary := number | 't' | 'v' | 'x' | 'pi' | func '(' expr [',' expr] ')' | '(' expr ')'
///   func    := exp | log | sin | cos | sqrt | pow (two arguments)
class Expression {
 public:
  static Expression parse(std::string_view text);

  double operator()(double t, double v) const;
  const std::string& text() const noexcept { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace volterra
