// chain.hpp - validated reversible Markov kernels and the pi-weighted
// Hilbert structure L^2(pi).

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "relax/errors.hpp"

namespace relax {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ChainTolerances {
  double row_sum = 1e-12;
  double pi_sum = 1e-12;
  double detailed_balance = 1e-10;
  double pi_floor = 1e-300;
  double power_fallback = 1e-14;
};

/// Row-stochastic kernel P together with its stationary law pi.
///
/// Instances only come out of build_chain(), which checks stochasticity,
/// irreducibility, positivity of pi and detailed balance
/// pi(x)P(x,y) = pi(y)P(y,x). Immutable afterwards.
class ReversibleChain {
 public:
  Eigen::Index size() const { return kernel_.rows(); }
  const Matrix& kernel() const { return kernel_; }
  const Vector& pi() const { return pi_; }

 private:
  ReversibleChain(Matrix kernel, Vector pi) : kernel_(std::move(kernel)), pi_(std::move(pi)) {}
  friend ReversibleChain build_chain(Matrix kernel, const ChainTolerances& tol);

  Matrix kernel_;
  Vector pi_;
};

namespace detail {

inline std::string index_pair(Eigen::Index x, Eigen::Index y) {
  std::ostringstream os;
  os << "(" << x << "," << y << ")";
  return os.str();
}

// Forward and backward reachability from state 0 over positive entries.
inline bool strongly_connected(const Matrix& kernel) {
  const Eigen::Index n = kernel.rows();
  auto reach = [&](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const Eigen::Index x = stack.back();
      stack.pop_back();
      for (Eigen::Index y = 0; y < n; ++y) {
        const double w = transpose ? kernel(y, x) : kernel(x, y);
        if (w > 0.0 && !seen[static_cast<std::size_t>(y)]) {
          seen[static_cast<std::size_t>(y)] = 1;
          ++count;
          stack.push_back(y);
        }
      }
    }
    return count == n;
  };
  return reach(false) && reach(true);
}

// Stationary law by power iteration on the lazy kernel (I+P)/2, which is
// aperiodic whenever P is irreducible.
inline Vector stationary_by_power(const Matrix& kernel, double tol) {
  const Eigen::Index n = kernel.rows();
  Vector pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const Matrix lazy_t = 0.5 * (Matrix::Identity(n, n) + kernel).transpose();
  for (int it = 0; it < 1000000; ++it) {
    Vector next = lazy_t * pi;
    next /= next.sum();
    const double change = (next - pi).lpNorm<1>();
    pi = std::move(next);
    if (change < tol) break;
  }
  return pi;
}

inline Vector stationary_distribution(const Matrix& kernel, const ChainTolerances& tol) {
  const Eigen::Index n = kernel.rows();
  if (n == 1) return Vector::Ones(1);
  Eigen::EigenSolver<Matrix> solver(kernel.transpose(), true);
  if (solver.info() == Eigen::Success) {
    const auto& values = solver.eigenvalues();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(values(i) - 1.0) < std::abs(values(best) - 1.0)) best = i;
    const Eigen::VectorXcd v = solver.eigenvectors().col(best);
    const std::complex<double> total = v.sum();
    if (std::abs(total) > 0.0) {
      const Eigen::VectorXcd w = v / total;
      const double imag = w.imag().cwiseAbs().maxCoeff();
      Vector pi = w.real();
      if (imag < 1e-10 && pi.minCoeff() > -1e-14) return pi / pi.sum();
    }
  }
  return stationary_by_power(kernel, tol.power_fallback);
}

}  // namespace detail

/// Validates a dense kernel and solves for its stationary distribution.
inline ReversibleChain build_chain(Matrix kernel, const ChainTolerances& tol = {}) {
  const Eigen::Index n = kernel.rows();
  if (n == 0 || kernel.cols() != n)
    fail(ErrorKind::DimensionMismatch, "kernel must be a non-empty square matrix");
  if (!kernel.allFinite()) fail(ErrorKind::InvalidArguments, "kernel has non-finite entries");
  if (kernel.minCoeff() < 0.0) fail(ErrorKind::InvalidArguments, "kernel has negative entries");

  for (Eigen::Index x = 0; x < n; ++x) {
    const double s = kernel.row(x).sum();
    if (std::abs(s - 1.0) > tol.row_sum) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << x << " sums to " << s;
      fail(ErrorKind::RowSumError, os.str());
    }
  }
  if (!detail::strongly_connected(kernel))
    fail(ErrorKind::Reducible, "positive-entry graph is not strongly connected");

  Vector pi = detail::stationary_distribution(kernel, tol);
  if (pi.minCoeff() <= tol.pi_floor)
    fail(ErrorKind::DegeneratePi, "stationary distribution has a non-positive entry");
  if (std::abs(pi.sum() - 1.0) > tol.pi_sum)
    fail(ErrorKind::DegeneratePi, "stationary distribution does not sum to one");

  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = x + 1; y < n; ++y) {
      const double forward = pi(x) * kernel(x, y);
      const double backward = pi(y) * kernel(y, x);
      if (std::abs(forward - backward) > tol.detailed_balance * std::max(forward, backward))
        fail(ErrorKind::NotReversible, "detailed balance fails at " + detail::index_pair(x, y));
    }
  }
  return ReversibleChain(std::move(kernel), std::move(pi));
}

inline void require_length(const ReversibleChain& chain, const Vector& f) {
  if (f.size() != chain.size())
    fail(ErrorKind::DimensionMismatch, "vector length " + std::to_string(f.size()) +
                                           " does not match chain size " +
                                           std::to_string(chain.size()));
}

/// <f, g>_pi = sum_x f(x) g(x) pi(x)
inline double pi_inner(const ReversibleChain& chain, const Vector& f, const Vector& g) {
  require_length(chain, f);
  require_length(chain, g);
  return (f.array() * g.array() * chain.pi().array()).sum();
}

inline double pi_norm_sq(const ReversibleChain& chain, const Vector& f) {
  return pi_inner(chain, f, f);
}

/// pi(f) = <f, 1>_pi
inline double pi_mean(const ReversibleChain& chain, const Vector& f) {
  require_length(chain, f);
  return chain.pi().dot(f);
}

struct DirichletForm {
  double edge_sum;       // 1/2 sum_{x,y} pi(x) P(x,y) (f(x) - f(y))^2
  double operator_form;  // <f, (I - P) f>_pi
};

inline DirichletForm dirichlet_form(const ReversibleChain& chain, const Vector& f) {
  require_length(chain, f);
  const Matrix& p = chain.kernel();
  const Vector& pi = chain.pi();
  double edge = 0.0;
  for (Eigen::Index x = 0; x < chain.size(); ++x) {
    double row = 0.0;
    for (Eigen::Index y = 0; y < chain.size(); ++y) {
      const double diff = f(x) - f(y);
      row += p(x, y) * diff * diff;
    }
    edge += pi(x) * row;
  }
  const Vector relaxed = f - p * f;
  return {0.5 * edge, pi_inner(chain, f, relaxed)};
}

}  // namespace relax
