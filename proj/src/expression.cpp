#include "volterra/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace volterra {

struct Expression::Node {
  enum class Kind { Number, T, V, Add, Sub, Mul, Div, Pow, Neg, Call } kind;
  double number = 0.0;
  std::string function;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(double t, double v) const {
    switch (kind) {
      case Kind::Number:
        return number;
      case Kind::T:
        return t;
      case Kind::V:
        return v;
      case Kind::Add:
        return args[0]->eval(t, v) + args[1]->eval(t, v);
      case Kind::Sub:
        return args[0]->eval(t, v) - args[1]->eval(t, v);
      case Kind::Mul:
        return args[0]->eval(t, v) * args[1]->eval(t, v);
      case Kind::Div:
        return args[0]->eval(t, v) / args[1]->eval(t, v);
      case Kind::Pow:
        return std::pow(args[0]->eval(t, v), args[1]->eval(t, v));
      case Kind::Neg:
        return -args[0]->eval(t, v);
      case Kind::Call: {
        const double a = args[0]->eval(t, v);
        if (function == "exp") return std::exp(a);
        if (function == "log") return std::log(a);
        if (function == "sin") return std::sin(a);
        if (function == "cos") return std::cos(a);
        if (function == "sqrt") return std::sqrt(a);
        return std::pow(a, args[1]->eval(t, v));
      }
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, std::vector<NodePtr> args = {}) {
  auto node = std::make_shared<Expression::Node>();
  node->kind = kind;
  node->args = std::move(args);
  return node;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip_space();
    if (pos_ < text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError(what, static_cast<int>(pos_) + 1);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr left = term();
    while (true) {
      if (accept('+')) {
        left = make(Kind::Add, {left, term()});
      } else if (accept('-')) {
        left = make(Kind::Sub, {left, term()});
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    while (true) {
      if (accept('*')) {
        left = make(Kind::Mul, {left, unary()});
      } else if (accept('/')) {
        left = make(Kind::Div, {left, unary()});
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::Pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const char* begin = text_.data() + pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    auto node = std::make_shared<Expression::Node>();
    node->kind = Kind::Number;
    node->number = value;
    return node;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));
    if (name == "t") return make(Kind::T);
    if (name == "v" || name == "x") return make(Kind::V);
    if (name == "pi") {
      auto node = std::make_shared<Expression::Node>();
      node->kind = Kind::Number;
      node->number = std::numbers::pi;
      return node;
    }
    const bool unary_fn =
        name == "exp" || name == "log" || name == "sin" || name == "cos" || name == "sqrt";
    if (!unary_fn && name != "pow") {
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    expect('(');
    std::vector<NodePtr> args{expr()};
    if (name == "pow") {
      expect(',');
      args.push_back(expr());
    }
    expect(')');
    auto node = std::make_shared<Expression::Node>();
    node->kind = Kind::Call;
    node->function = name;
    node->args = std::move(args);
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  e.root_ = Parser(e.text_).parse();
  return e;
}

double Expression::operator()(double t, double v) const { return root_->eval(t, v); }

}  // namespace volterra
