// first_passage.hpp - hitting times of a single state.
//
// Making state a absorbing leaves the substochastic block B = P restricted to
// the other states. B is self-adjoint for the restricted pi weights, so
//   P(tau_a > k) = start^T B^k 1 = sum_i alpha_i nu_i^k
// with nu_i the eigenvalues of D^{1/2} B D^{-1/2} = U diag(nu) U^T and
//   alpha_i = (start^T D^{-1/2} u_i) (u_i^T D^{1/2} 1).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "relax/chain.hpp"
#include "relax/spectral.hpp"

namespace relax {

struct AbsorbingModel {
  Matrix base_kernel;
  Vector base_pi;
  Eigen::Index target = 0;
  Matrix absorbed_kernel;              // P_a, n x n
  Matrix block;                        // B, (n-1) x (n-1)
  std::vector<Eigen::Index> states;    // original index of each block row
  Vector sqrt_pi;                      // restricted pi, square roots
  Vector nu;                           // absorbed spectrum, descending
  Matrix U;                            // orthonormal eigenvectors of the symmetrized block

  Eigen::Index size() const { return base_kernel.rows(); }
};

inline AbsorbingModel absorb(const ReversibleChain& chain, Eigen::Index a) {
  const Eigen::Index n = chain.size();
  if (a < 0 || a >= n) fail(ErrorKind::InvalidState, "target state " + std::to_string(a) + " out of range");
  if (n < 2) fail(ErrorKind::InvalidState, "absorbing a one-state chain leaves nothing");
  AbsorbingModel m;
  m.base_kernel = chain.kernel();
  m.base_pi = chain.pi();
  m.target = a;
  m.absorbed_kernel = chain.kernel();
  m.absorbed_kernel.row(a).setZero();
  m.absorbed_kernel(a, a) = 1.0;
  for (Eigen::Index x = 0; x < n; ++x)
    if (x != a) m.states.push_back(x);
  const Eigen::Index r = n - 1;
  m.block.resize(r, r);
  m.sqrt_pi.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    m.sqrt_pi(i) = std::sqrt(chain.pi()(m.states[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < r; ++j)
      m.block(i, j) = chain.kernel()(m.states[static_cast<std::size_t>(i)], m.states[static_cast<std::size_t>(j)]);
  }
  Matrix sym = m.sqrt_pi.asDiagonal() * m.block * m.sqrt_pi.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose()).eval();
  auto [values, vectors] = detail::sorted_symmetric_eigen(sym);
  m.nu = std::move(values);
  m.U = std::move(vectors);
  return m;
}

/// max over k = 2..n of the amount by which lambda_{k-1} >= nu_k >= lambda_k fails.
inline double interlacing_violation(const AbsorbingModel& model, const SpectralDecomposition& decomp) {
  const Eigen::Index r = model.nu.size();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < r; ++j) {
    worst = std::max(worst, model.nu(j) - decomp.eigenvalues(j));
    worst = std::max(worst, decomp.eigenvalues(j + 1) - model.nu(j));
  }
  return worst;
}

/// Checks a start law given on all n states (start(a) = 0) and returns its
/// restriction to the block states.
inline Vector restrict_start(const AbsorbingModel& model, const Vector& start) {
  if (start.size() != model.size()) fail(ErrorKind::BadStart, "start has the wrong length");
  if (!start.allFinite() || start.minCoeff() < 0.0) fail(ErrorKind::BadStart, "start has negative entries");
  if (start(model.target) != 0.0) fail(ErrorKind::BadStart, "start puts mass on the target");
  if (std::abs(start.sum() - 1.0) > 1e-12) fail(ErrorKind::BadStart, "start does not sum to 1");
  Vector s(model.nu.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = start(model.states[static_cast<std::size_t>(i)]);
  return s;
}

inline Vector expand_start(const AbsorbingModel& model, const Vector& restricted) {
  Vector full = Vector::Zero(model.size());
  for (Eigen::Index i = 0; i < restricted.size(); ++i)
    full(model.states[static_cast<std::size_t>(i)]) = restricted(i);
  return full;
}

inline Vector uniform_start(const AbsorbingModel& model) {
  return expand_start(model, Vector::Constant(model.nu.size(), 1.0 / static_cast<double>(model.nu.size())));
}

/// pi conditioned on leaving the target.
inline Vector restricted_pi_start(const AbsorbingModel& model) {
  Vector w = model.sqrt_pi.cwiseAbs2();
  return expand_start(model, w / w.sum());
}

/// Left eigenvector of B for its top eigenvalue, sqrt(pi) * u_top.
inline Vector quasi_stationary_start(const AbsorbingModel& model) {
  Vector w = (model.sqrt_pi.array() * model.U.col(0).array()).abs().matrix();
  const double total = w.sum();
  if (!(total > 0.0)) fail(ErrorKind::BadStart, "quasi-stationary vector vanished");
  return expand_start(model, w / total);
}

inline Vector tail_coefficients(const AbsorbingModel& model, const Vector& start) {
  const Vector s = restrict_start(model, start);
  const Vector left = model.U.transpose() * s.cwiseQuotient(model.sqrt_pi);
  const Vector right = model.U.transpose() * model.sqrt_pi;
  return left.cwiseProduct(right);
}

struct TailSeries {
  std::vector<double> matrix;    // survival mass of start B^k
  std::vector<double> spectral;  // sum_i alpha_i nu_i^k
};

inline TailSeries fpt_tail_series(const AbsorbingModel& model, const Vector& start, std::int64_t kmax) {
  if (kmax < 0) fail(ErrorKind::InvalidArguments, "kmax must be nonnegative");
  const Vector alpha = tail_coefficients(model, start);
  Eigen::RowVectorXd mass = restrict_start(model, start).transpose();
  TailSeries out;
  Vector powers = Vector::Ones(model.nu.size());
  for (std::int64_t k = 0; k <= kmax; ++k) {
    out.matrix.push_back(mass.sum());
    out.spectral.push_back(k == 0 ? 1.0 : alpha.dot(powers));
    mass = mass * model.block;
    powers = powers.cwiseProduct(model.nu);
  }
  return out;
}

struct TailValue {
  double spectral;
  double matrix;
};

/// P(tau_a > k) both ways; spectral is the reported value.
inline TailValue fpt_tail(const AbsorbingModel& model, const Vector& start, std::int64_t k) {
  const TailSeries s = fpt_tail_series(model, start, k);
  return {s.spectral.back(), s.matrix.back()};
}

struct TailBound {
  double bound;   // C (delta + init_ratio (lambda3/lambda2)^{2k})
  double actual;  // |P(tau > k) / (alpha2 nu2^k) - 1|
  double C;
  bool holds;
};

inline TailBound exponential_tail_bound(double lambda2, double lambda3, double delta, double init_ratio,
                                        std::int64_t k, double nu2, double alpha2_coef, double tail) {
  if (!(lambda2 > std::abs(lambda3))) fail(ErrorKind::Degenerate, "need lambda2 > |lambda3|");
  if (!(nu2 > 0.0) || alpha2_coef == 0.0) fail(ErrorKind::Degenerate, "need nu2 > 0 and alpha2 != 0");
  TailBound out;
  out.C = (1.0 - lambda3 * lambda3) / (lambda2 * lambda2 - lambda3 * lambda3);
  out.bound = out.C * (delta + init_ratio * std::pow(std::abs(lambda3) / lambda2, 2.0 * static_cast<double>(k)));
  const double approx = alpha2_coef * std::pow(nu2, static_cast<double>(k));
  out.actual = std::abs(tail / approx - 1.0);
  out.holds = out.actual <= out.bound;
  return out;
}

struct TailBoundRow {
  std::int64_t k;
  double tail;
  double exp_approx;  // alpha2 nu2^k
  TailBound check;
};

struct TailBoundSweep {
  double lambda2, lambda3;  // top absorbed eigenvalue and max |nu| below it
  double init_ratio;        // sum_{i>=3} |alpha_i| / |alpha_2|
  std::int64_t k_start;     // first k with the top mode holding 1 - delta of sum alpha_i^2 nu_i^{2k}
  std::vector<TailBoundRow> rows;
  std::size_t violations = 0;
};

/// Monitors the exponential-tail bound over k_start..k_start+span. The ratios
/// are measured on the absorbed-chain coefficients.
inline TailBoundSweep tail_bound_sweep(const AbsorbingModel& model, const Vector& start, double delta,
                                       std::int64_t span) {
  const Vector alpha = tail_coefficients(model, start);
  const Eigen::Index r = model.nu.size();
  TailBoundSweep out;
  out.lambda2 = model.nu(0);
  out.lambda3 = 0.0;
  double rest = 0.0;
  for (Eigen::Index i = 1; i < r; ++i) {
    out.lambda3 = std::max(out.lambda3, std::abs(model.nu(i)));
    rest += std::abs(alpha(i));
  }
  if (!(out.lambda2 > out.lambda3)) fail(ErrorKind::Degenerate, "absorbed spectrum has no gap below nu2");
  if (alpha(0) == 0.0) fail(ErrorKind::Degenerate, "start has no component on the top absorbed mode");
  out.init_ratio = rest / std::abs(alpha(0));

  // Energy-weighted slow fraction of the tail coordinates; increasing in k.
  auto slow_share = [&](std::int64_t k) {
    const double lead = 2.0 * std::log(std::abs(alpha(0))) + 2.0 * static_cast<double>(k) * std::log(out.lambda2);
    double others = 0.0;
    for (Eigen::Index i = 1; i < r; ++i) {
      if (alpha(i) == 0.0 || model.nu(i) == 0.0) continue;
      const double li = 2.0 * std::log(std::abs(alpha(i))) + 2.0 * static_cast<double>(k) * std::log(std::abs(model.nu(i)));
      others += std::exp(li - lead);
    }
    return 1.0 / (1.0 + others);
  };
  out.k_start = 0;
  while (slow_share(out.k_start) < 1.0 - delta && out.k_start < 1000000) ++out.k_start;

  const TailSeries series = fpt_tail_series(model, start, out.k_start + span);
  for (std::int64_t k = out.k_start; k <= out.k_start + span; ++k) {
    TailBoundRow row;
    row.k = k;
    row.tail = series.spectral[static_cast<std::size_t>(k)];
    row.exp_approx = alpha(0) * std::pow(out.lambda2, static_cast<double>(k));
    row.check = exponential_tail_bound(out.lambda2, out.lambda3, delta, out.init_ratio, k, out.lambda2,
                                       alpha(0), row.tail);
    if (!row.check.holds) ++out.violations;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace relax
