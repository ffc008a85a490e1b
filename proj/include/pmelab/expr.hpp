#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pmelab::expr {

/// Malformed source text; offset is the byte position in the input.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : std::runtime_error(message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation left the real domain: log/sqrt of a negative argument,
/// division by zero, or a non-finite result.
class EvalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class VarId : std::uint8_t { x, y, t, p, r };

const char* var_name(VarId v);

/// Scalar variable bindings. r is derived: |x| in 1D, sqrt(x^2+y^2) when y
/// is bound as well.
struct Env {
  std::optional<double> x, y, t, p;
  double lookup(VarId v) const;
};

/// Whole-grid bindings: x (and y in 2D) per cell, t a scalar, p optional
/// per cell. Arrays must have equal sizes.
struct BatchEnv {
  const Eigen::ArrayXd* x = nullptr;
  const Eigen::ArrayXd* y = nullptr;
  std::optional<double> t;
  const Eigen::ArrayXd* p = nullptr;
};

enum class OpCode : std::uint8_t {
  push_number,
  push_var,
  negate,
  fn_sin,
  fn_cos,
  fn_tanh,
  fn_cosh,
  fn_exp,
  fn_log,
  fn_sqrt,
  fn_abs,
  add,
  subtract,
  multiply,
  divide,
  power,
  fn_min,
  fn_max,
};

/// Immutable expression in the variables x, y, t, p, r. Evaluation is pure;
/// an Expr may be shared freely across threads.
class Expr {
 public:
  Expr() = default;

  /// Recursive-descent parse. ^ binds tightest (right-associative), then
  /// unary minus, then * /, then + -. Parentheses override.
  static Expr parse(std::string_view source);

  // Programmatic construction, used to compose derived coefficients such as
  // log(b/a) from user-supplied trees.
  static Expr number(double value, const char* constant_name = nullptr);
  static Expr variable(VarId v);
  static Expr unary(OpCode op, Expr operand);
  static Expr binary(OpCode op, Expr lhs, Expr rhs);

  bool empty() const { return root_ == nullptr; }

  double eval(const Env& env) const;
  Eigen::ArrayXd eval(const BatchEnv& env) const;

  /// True if the tree mentions v. `r` counts as a reference to x (and y).
  bool references(VarId v) const;

  /// Precedence-aware printing; parse(to_string()) reproduces the exact
  /// tree, hence bitwise-identical evaluations.
  std::string to_string() const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> root);
  void compile();

  struct Instr {
    OpCode op;
    double number;
    VarId var;
  };

  std::shared_ptr<const Node> root_;
  std::vector<Instr> program_;
  int stack_need_ = 0;
};

/// Centered finite difference of e in one variable at env.
/// order 1: (f(+h) - f(-h)) / 2h;  order 2: (f(+h) - 2 f(0) + f(-h)) / h^2.
/// Default step 1e-5 * max(1, |value of var|). Domain errors propagate.
double fd_derivative(const Expr& e, const Env& env, VarId var, int order,
                     std::optional<double> step = std::nullopt);

}  // namespace pmelab::expr
