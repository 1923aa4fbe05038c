#pragma once

// Arithmetic expressions over x and y used in experiment configs, e.g.
//   piecewise(x < 0.5, 1.3125 - 5*(x-0.5)^4, 1.1875 + 1/(8 + exp(-50*(x-0.65))))
// Operators: + - * / ^ (right associative), comparisons < <= > >= == != (1 or 0).
// Functions: exp log sin cos tan sqrt abs min max, piecewise(c1, v1, ..., else).
// Constants: pi.

#include <memory>
#include <string>

namespace recon {

class Expression {
 public:
  /// Throws ConfigError with the offending position on a syntax error.
  static Expression parse(const std::string& text);

  double operator()(double x, double y = 0.0) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace recon
