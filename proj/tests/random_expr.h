#pragma once

#include <cmath>
#include <optional>
#include <random>

#include "lyapset/expr.h"

namespace lyapset {
namespace test {

/// Random smooth expression trees: no abs/min/max, and every division or
/// square root is guarded so the result is C^∞ on all of ℝⁿ.
class RandomSmoothExpr {
 public:
  RandomSmoothExpr(int n, std::uint64_t seed) : n_(n), rng_(seed) {}

  Expr Next(int depth = 4) { return Build(depth); }

  StatePoint Point(double lo = -1.5, double hi = 1.5) {
    std::uniform_real_distribution<double> u(lo, hi);
    StatePoint x(n_);
    for (int i = 0; i < n_; ++i) x[i] = u(rng_);
    return x;
  }

 private:
  int Pick(int count) { return std::uniform_int_distribution<int>(0, count - 1)(rng_); }

  Expr Leaf() {
    if (Pick(3) == 0) {
      return Expr::Constant(std::round(std::uniform_real_distribution<double>(-3, 3)(rng_) * 4) / 4);
    }
    return Expr::Variable(1 + Pick(n_));
  }

  // 1 + e²: strictly positive, used to guard division and sqrt.
  static Expr PositiveOf(const Expr& e) {
    return Expr::Binary(BinaryOp::kAdd, Expr::Constant(1.0),
                        Expr::Binary(BinaryOp::kPow, e, Expr::Constant(2.0)));
  }

  Expr Build(int depth) {
    if (depth <= 0 || Pick(5) == 0) return Leaf();
    switch (Pick(10)) {
      case 0: return Expr::Unary(UnaryOp::kNeg, Build(depth - 1));
      case 1: return Expr::Unary(UnaryOp::kSin, Build(depth - 1));
      case 2: return Expr::Unary(UnaryOp::kCos, Build(depth - 1));
      case 3: return Expr::Unary(UnaryOp::kTanh, Build(depth - 1));
      case 4: return Expr::Unary(UnaryOp::kExp, Expr::Unary(UnaryOp::kSin, Build(depth - 1)));
      case 5: return Expr::Unary(UnaryOp::kSqrt, PositiveOf(Build(depth - 1)));
      case 6:
        return Expr::Binary(BinaryOp::kDiv, Build(depth - 1), PositiveOf(Build(depth - 1)));
      case 7: {
        static constexpr double kExponents[] = {2.0, 3.0, -1.0, 0.5};
        const double p = kExponents[Pick(4)];
        // Non-integer and negative powers get a positive base.
        Expr base = Build(depth - 1);
        if (p < 0 || p != std::floor(p)) base = PositiveOf(base);
        return Expr::Binary(BinaryOp::kPow, base, Expr::Constant(p));
      }
      case 8: return Expr::Binary(BinaryOp::kMul, Build(depth - 1), Build(depth - 1));
      default:
        return Expr::Binary(Pick(2) ? BinaryOp::kAdd : BinaryOp::kSub, Build(depth - 1),
                            Build(depth - 1));
    }
  }

  int n_;
  std::mt19937_64 rng_;
};

struct GradientComparison {
  double relative_error = 0.0;
  bool skipped = false;  // |L| too large for a meaningful central difference
};

/// ‖∇_symbolic − ∇_FD‖ / max(1, ‖∇_symbolic‖) at x.
inline GradientComparison CompareGradients(const ScalarField& s, const StatePoint& x) {
  const double value = s.Evaluate(x);
  if (std::fabs(value) > 1e8) return {0.0, true};
  const StatePoint g = s.Gradient(x);
  const StatePoint fd = s.FiniteDifferenceGradient(x);
  return {(g - fd).norm() / std::max(1.0, g.norm()), false};
}

}  // namespace test
}  // namespace lyapset
