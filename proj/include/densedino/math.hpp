#pragma once

#include <array>
#include <cmath>

#include "densedino/types.hpp"

namespace densedino {

/// Numerically stable softmax of a vector (max-subtracted).
template <typename Derived>
VecX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  VecX<S> z = logits;
  z.array() -= z.maxCoeff();
  VecX<S> e = z.array().exp();
  return e / e.sum();
}

/// Stable log-softmax of a vector.
template <typename Derived>
VecX<typename Derived::Scalar> log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  VecX<S> z = logits;
  z.array() -= z.maxCoeff();
  const S lse = std::log(z.array().exp().sum());
  return z.array() - lse;
}

/// Exact GELU, x * Phi(x) with the Gaussian CDF.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

/// d/dx of exact GELU: Phi(x) + x * phi(x).
inline double gelu_grad(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Entropy of a probability vector; 0*log(0) treated as 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& p) {
  using S = typename Derived::Scalar;
  S h = 0;
  for (Index i = 0; i < p.size(); ++i) {
    const S pi = p(i);
    if (pi > S(0)) h -= pi * std::log(pi);
  }
  return h;
}

/// Cubic convolution (Catmull-Rom, a = -0.5) kernel value at distance s.
inline double cubic_kernel(double s) {
  constexpr double a = -0.5;
  const double t = std::abs(s);
  if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a;
  return 0.0;
}

/// Weights for the four taps at integer offsets {-1, 0, 1, 2} around a
/// sample at fractional position t in [0, 1).
inline std::array<double, 4> cubic_weights(double t) {
  return {cubic_kernel(-1.0 - t), cubic_kernel(-t), cubic_kernel(1.0 - t), cubic_kernel(2.0 - t)};
}

/// Row-normalized copy; rows with norm below eps become zero rows.
inline Mat l2_normalize_rows(const Mat& x, double eps = 1e-12) {
  Mat out = x;
  for (Index i = 0; i < x.rows(); ++i) {
    const double n = x.row(i).norm();
    if (n < eps)
      out.row(i).setZero();
    else
      out.row(i) /= n;
  }
  return out;
}

inline double cosine_ramp(double from, double to, double t01) {
  const double t = std::min(1.0, std::max(0.0, t01));
  return to + 0.5 * (from - to) * (1.0 + std::cos(M_PI * t));
}

}  // namespace densedino
