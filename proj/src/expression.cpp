#include "recon/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "recon/errors.hpp"

namespace recon {

struct Expression::Node {
  enum class Kind { number, var_x, var_y, unary_minus, binary, call } kind;
  double value = 0.0;
  std::string op;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, std::string op = {}, std::vector<NodePtr> args = {}, double v = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = k;
  n->op = std::move(op);
  n->args = std::move(args);
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = comparison();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "': " + what + " at position " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(const std::string& tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  NodePtr comparison() {
    NodePtr lhs = additive();
    for (const char* op : {"<=", ">=", "==", "!=", "<", ">"}) {
      if (accept(op)) return make(Kind::binary, op, {lhs, additive()});
    }
    return lhs;
  }

  NodePtr additive() {
    NodePtr lhs = multiplicative();
    while (true) {
      if (accept("+")) {
        lhs = make(Kind::binary, "+", {lhs, multiplicative()});
      } else if (accept("-")) {
        lhs = make(Kind::binary, "-", {lhs, multiplicative()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr multiplicative() {
    NodePtr lhs = unary();
    while (true) {
      if (accept("*")) {
        lhs = make(Kind::binary, "*", {lhs, unary()});
      } else if (accept("/")) {
        lhs = make(Kind::binary, "/", {lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept("-")) return make(Kind::unary_minus, "-", {unary()});
    if (accept("+")) return unary();
    NodePtr base = primary();
    if (accept("^")) return make(Kind::binary, "^", {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = comparison();
      if (!accept(")")) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      const auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
      if (ec != std::errc()) fail("bad number");
      pos_ = static_cast<std::size_t>(end - s_.data());
      return make(Kind::number, {}, {}, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (accept("(")) {
        std::vector<NodePtr> args;
        if (!accept(")")) {
          do {
            args.push_back(comparison());
          } while (accept(","));
          if (!accept(")")) fail("expected ')' after arguments of " + name);
        }
        check_call(name, args.size());
        return make(Kind::call, name, std::move(args));
      }
      if (name == "x") return make(Kind::var_x);
      if (name == "y") return make(Kind::var_y);
      if (name == "pi") return make(Kind::number, {}, {}, std::numbers::pi);
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  void check_call(const std::string& name, std::size_t n) {
    static const std::vector<std::string> unary{"exp", "log", "sin", "cos", "tan", "sqrt", "abs"};
    for (const auto& f : unary)
      if (name == f) {
        if (n != 1) fail(name + " takes one argument");
        return;
      }
    if (name == "min" || name == "max") {
      if (n < 2) fail(name + " takes at least two arguments");
      return;
    }
    if (name == "piecewise") {
      if (n < 3 || n % 2 == 0) fail("piecewise takes (cond, value, ..., otherwise)");
      return;
    }
    fail("unknown function '" + name + "'");
  }
};

double eval(const Expression::Node& n, double x, double y) {
  switch (n.kind) {
    case Kind::number: return n.value;
    case Kind::var_x: return x;
    case Kind::var_y: return y;
    case Kind::unary_minus: return -eval(*n.args[0], x, y);
    case Kind::binary: {
      const double a = eval(*n.args[0], x, y);
      const double b = eval(*n.args[1], x, y);
      const std::string& op = n.op;
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (op == "/") return a / b;
      if (op == "^") return std::pow(a, b);
      if (op == "<") return a < b;
      if (op == "<=") return a <= b;
      if (op == ">") return a > b;
      if (op == ">=") return a >= b;
      if (op == "==") return a == b;
      return a != b;
    }
    case Kind::call: {
      const std::string& f = n.op;
      if (f == "piecewise") {
        for (std::size_t i = 0; i + 1 < n.args.size(); i += 2)
          if (eval(*n.args[i], x, y) != 0.0) return eval(*n.args[i + 1], x, y);
        return eval(*n.args.back(), x, y);
      }
      if (f == "min" || f == "max") {
        double r = eval(*n.args[0], x, y);
        for (std::size_t i = 1; i < n.args.size(); ++i) {
          const double v = eval(*n.args[i], x, y);
          r = f == "min" ? std::min(r, v) : std::max(r, v);
        }
        return r;
      }
      const double a = eval(*n.args[0], x, y);
      if (f == "exp") return std::exp(a);
      if (f == "log") return std::log(a);
      if (f == "sin") return std::sin(a);
      if (f == "cos") return std::cos(a);
      if (f == "tan") return std::tan(a);
      if (f == "sqrt") return std::sqrt(a);
      return std::abs(a);
    }
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).parse();
  return e;
}

double Expression::operator()(double x, double y) const { return eval(*root_, x, y); }

}  // namespace recon
