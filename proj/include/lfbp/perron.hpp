#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lfbp {

template <typename Scalar>
struct PerronResult {
  Scalar value;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;
  int iterations;
  bool converged;
};

/// Perron root of a non-negative square matrix by power iteration.
///
/// Iterates on A + I, whose dominant eigenvalue is r(A) + 1 and is strictly
/// dominant in modulus whenever A is irreducible, so periodic matrices still
/// converge. Stops when the Collatz-Wielandt bounds
/// min_i (Bx)_i / x_i <= r(B) <= max_i (Bx)_i / x_i close to `rel_tol`.
template <typename Derived>
PerronResult<typename Derived::Scalar> perron_root(const Eigen::MatrixBase<Derived>& A,
                                                   typename Derived::Scalar rel_tol = 1e-14,
                                                   int max_iter = 200000) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = A.rows();
  Vec x = Vec::Ones(n) / static_cast<Scalar>(n);
  Scalar lo = 0, hi = 0;
  for (int it = 1; it <= max_iter; ++it) {
    Vec y = A * x + x;
    lo = std::numeric_limits<Scalar>::infinity();
    hi = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar ratio = y(i) / x(i);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    x = y / y.sum();
    if (hi - lo <= rel_tol * hi) {
      return {static_cast<Scalar>(0.5) * (lo + hi) - 1, x, it, true};
    }
  }
  return {static_cast<Scalar>(0.5) * (lo + hi) - 1, x, max_iter, false};
}

/// Largest eigenvalue modulus; power iteration first, dense eigensolver when
/// the Collatz-Wielandt bounds fail to close (reducible input).
template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() == 0) return 0;
  const auto pr = perron_root(A, Scalar(1e-14), 20000);
  if (pr.converged) return std::max(pr.value, Scalar(0));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense = A;
  Eigen::EigenSolver<decltype(dense)> es(dense, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// States reachable (in zero or more steps) from `sources` along positive entries of K.
template <typename Derived>
std::vector<Eigen::Index> reachable_states(const Eigen::MatrixBase<Derived>& K,
                                           const std::vector<Eigen::Index>& sources) {
  std::vector<char> seen(static_cast<std::size_t>(K.rows()), 0);
  std::vector<Eigen::Index> stack = sources;
  for (auto s : sources) seen[static_cast<std::size_t>(s)] = 1;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      if (K(i, j) > 0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
    }
  }
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    if (seen[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

}  // namespace lfbp
