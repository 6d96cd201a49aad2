// spectral.hpp - eigen-decomposition of a reversible kernel in L^2(pi).
//
// P is self-adjoint in L^2(pi), so S = D^{1/2} P D^{-1/2} (D = diag(pi)) is
// symmetric with the same spectrum. Eigenvectors u of S map to pi-orthonormal
// eigenvectors phi = D^{-1/2} u of P.

#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "relax/chain.hpp"

namespace relax {

struct SpectralDecomposition {
  Vector eigenvalues;   // descending, eigenvalues(0) = 1
  Matrix eigenvectors;  // column i is phi_i, pi-orthonormal

  Eigen::Index size() const { return eigenvalues.size(); }
  Vector relaxation_spectrum() const { return Vector::Ones(size()) - eigenvalues; }
  const Matrix::ConstColXpr phi(Eigen::Index i) const { return eigenvectors.col(i); }
};

namespace detail {

// First entry with magnitude above `floor` is made positive so repeated
// decompositions agree on signs.
inline void normalize_sign(Eigen::Ref<Vector> v) {
  const double floor = 1e-12 * v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > floor) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

// Symmetric eigenproblem with eigenpairs sorted by descending eigenvalue.
inline std::pair<Vector, Matrix> sorted_symmetric_eigen(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::EigensolveFailure, "symmetric eigensolver did not converge");
  const Eigen::Index n = sym.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return solver.eigenvalues()(a) > solver.eigenvalues()(b);
  });
  Vector values(n);
  Matrix vectors(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = solver.eigenvalues()(order[static_cast<std::size_t>(i)]);
    vectors.col(i) = solver.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  return {values, vectors};
}

}  // namespace detail

inline SpectralDecomposition spectral_decomposition(const ReversibleChain& chain) {
  const Vector sqrt_pi = chain.pi().cwiseSqrt();
  const Vector inv_sqrt_pi = sqrt_pi.cwiseInverse();
  Matrix sym = sqrt_pi.asDiagonal() * chain.kernel() * inv_sqrt_pi.asDiagonal();
  sym = 0.5 * (sym + sym.transpose()).eval();

  auto [values, vectors] = detail::sorted_symmetric_eigen(sym);
  if (std::abs(values(0) - 1.0) > 1e-10)
    fail(ErrorKind::EigensolveFailure, "leading eigenvalue is not 1");

  Matrix phi = inv_sqrt_pi.asDiagonal() * vectors;
  for (Eigen::Index i = 0; i < phi.cols(); ++i) {
    auto column = phi.col(i);
    detail::normalize_sign(column);
  }
  values(0) = 1.0;
  // zero eigenvalues come back as roundoff; exact zeros let such modes die
  const double zero_tol = 32.0 * static_cast<double>(values.size()) * std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    values(i) = std::clamp(values(i), -1.0, 1.0);
    if (std::abs(values(i)) <= zero_tol) values(i) = 0.0;
  }
  return {std::move(values), std::move(phi)};
}

/// max_{i,j} |<phi_i, phi_j>_pi - delta_ij|
inline double orthonormality_residual(const ReversibleChain& chain,
                                      const SpectralDecomposition& decomp) {
  const Matrix gram =
      decomp.eigenvectors.transpose() * chain.pi().asDiagonal() * decomp.eigenvectors;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

/// max_i ||P phi_i - lambda_i phi_i||_pi
inline double eigen_residual(const ReversibleChain& chain, const SpectralDecomposition& decomp) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < decomp.size(); ++i) {
    const Vector r = chain.kernel() * decomp.phi(i) - decomp.eigenvalues(i) * decomp.phi(i);
    worst = std::max(worst, std::sqrt(pi_norm_sq(chain, r)));
  }
  return worst;
}

}  // namespace relax
