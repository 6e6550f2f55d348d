#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lyapset/geometry.h"

namespace lyapset {

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax, identifier, arity and dimension errors from Parse().
class ParseError : public ExprError {
 public:
  ParseError(const std::string& message, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Division by zero, square root of a negative number, or any other
/// operation whose IEEE result is NaN or infinite.
class EvalError : public ExprError {
 public:
  using ExprError::ExprError;
};

/// Raised when a derivative is requested through abs, min or max.
class NondifferentiableError : public ExprError {
 public:
  using ExprError::ExprError;
};

enum class ExprKind { kConstant, kVariable, kUnary, kBinary, kNary };
enum class UnaryOp { kNeg, kSin, kCos, kExp, kSqrt, kAbs, kTanh };
enum class BinaryOp { kAdd, kSub, kMul, kDiv, kPow };
enum class NaryOp { kMin, kMax };

/// Immutable expression tree over the variables x1..xn. Copies share nodes.
class Expr {
 public:
  static Expr Constant(double value);
  /// `index` is 1-based, matching the x1..xn spelling.
  static Expr Variable(int index);
  static Expr Unary(UnaryOp op, Expr operand);
  /// For kPow the exponent must be a constant node.
  static Expr Binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr Nary(NaryOp op, std::vector<Expr> operands);

  ExprKind kind() const;
  double constant() const;
  int variable() const;
  UnaryOp unary_op() const;
  BinaryOp binary_op() const;
  NaryOp nary_op() const;
  const std::vector<Expr>& children() const;

  /// Largest variable index referenced, 0 for a closed expression.
  int max_variable() const;
  bool DependsOn(int index) const;
  bool IsConstant(double value) const;
  std::size_t node_count() const;

  /// Canonical text; Parse(ToString()) rebuilds an identical tree.
  std::string ToString() const;

  /// Tree-walking evaluation. Throws EvalError on domain errors.
  double Evaluate(const StatePoint& x) const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;

  friend class CompiledExpr;
};

/// Parses `text` with variables x1..xn.
///
/// Precedence from tightest: `^` (right associative), unary minus, `*` `/`,
/// `+` `-`. So `-x1^2` is −(x1²) and `-x1*x2` is (−x1)·x2. Functions are
/// sin cos exp sqrt abs tanh (one argument) and min max (two or more); `pi`
/// names the constant. Exponents must be free of variables.
Expr Parse(std::string_view text, int n);

/// Exact symbolic partial derivative ∂e/∂x_index with light constant
/// folding. Subtrees independent of x_index differentiate to zero even when
/// they contain abs/min/max.
Expr Differentiate(const Expr& e, int index);

/// Flattened postfix form of an Expr for fast repeated evaluation.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  /// `x` must have at least max_variable() entries.
  double Evaluate(const double* x) const;

 private:
  struct Instr {
    int code;
    int arg;
    double value;
  };
  std::vector<Instr> program_;
  int max_depth_ = 0;
};

/// The right-hand side V of ẋ = V(x): one expression per coordinate.
class VectorField {
 public:
  VectorField(std::vector<Expr> components);
  static VectorField Parse(const std::vector<std::string>& components);

  int dimension() const { return static_cast<int>(components_.size()); }
  const std::vector<Expr>& components() const { return components_; }

  /// Writes V(x) into `out` (resized as needed). Throws EvalError.
  void Evaluate(const StatePoint& x, StatePoint& out) const;
  StatePoint Evaluate(const StatePoint& x) const;

  /// Text form, e.g. "[x2, -x1]", used to tag trajectories.
  std::string id() const;

 private:
  std::vector<Expr> components_;
  std::vector<CompiledExpr> compiled_;
};

/// A scalar function on ℝⁿ, typically a candidate Lyapunov function.
class ScalarField {
 public:
  ScalarField(Expr body, int dimension);
  static ScalarField Parse(std::string_view text, int n);

  int dimension() const { return dimension_; }
  const Expr& body() const { return body_; }

  double Evaluate(const StatePoint& x) const;

  /// True when every partial derivative exists symbolically.
  bool differentiable() const { return !nondifferentiable_reason_; }

  /// Symbolic gradient. Throws NondifferentiableError when the body has a
  /// kink in some variable, EvalError on domain errors.
  StatePoint Gradient(const StatePoint& x) const;

  /// Central differences with step 1e-6·max(1, |x_i|).
  StatePoint FiniteDifferenceGradient(const StatePoint& x) const;

 private:
  void RequireDimension(const StatePoint& x) const;

  Expr body_;
  int dimension_;
  CompiledExpr compiled_;
  std::vector<CompiledExpr> partials_;
  std::optional<std::string> nondifferentiable_reason_;
};

/// Convenience: Differentiate each coordinate and evaluate at x.
StatePoint Gradient(const ScalarField& s, const StatePoint& x);

}  // namespace lyapset
