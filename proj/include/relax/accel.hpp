// accel.hpp - polynomial acceleration of a relaxation trajectory.
//
// One accelerated step applies Q_m(P) with Q_m(1) = 1, mapping every mode
// lambda -> Q_m(lambda). The optimal Q_m for a fast interval [a, b] is the
// rescaled Chebyshev polynomial T_m(phi(lambda)) / T_m(phi(1)) with
// phi(lambda) = (2 lambda - (a + b)) / (b - a).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "relax/rigidity.hpp"
#include "relax/trajectory.hpp"

namespace relax {

/// T_m(x) by the three-term recurrence.
inline double chebyshev_T(int m, double x) {
  if (m < 0) fail(ErrorKind::InvalidArguments, "Chebyshev degree must be nonnegative");
  if (m == 0) return 1.0;
  double t0 = 1.0, t1 = x;
  for (int j = 1; j < m; ++j) {
    const double t2 = 2.0 * x * t1 - t0;
    t0 = t1;
    t1 = t2;
  }
  return t1;
}

/// sum_j c_j T_j(x) by Clenshaw.
inline double chebyshev_series(std::span<const double> c, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t j = c.size(); j-- > 1;) {
    const double b0 = 2.0 * x * b1 - b2 + c[j];
    b2 = b1;
    b1 = b0;
  }
  return (c.empty() ? 0.0 : c[0]) + x * b1 - b2;
}

enum class PlanMode { Interval, PaperSimple };

struct AccelPlan {
  int m = 0;
  double a = -1.0, b = 0.0;   // suppressed interval
  PlanMode mode = PlanMode::Interval;
  double lambda2 = 0.0;       // PaperSimple only
  std::vector<double> coeffs;  // Q_m in the Chebyshev basis of [a, b]
  double eps = 1.0;            // max |Q_m| on [a, b]

  double map(double lambda) const { return (2.0 * lambda - (a + b)) / (b - a); }
  double operator()(double lambda) const { return chebyshev_series(coeffs, map(lambda)); }
};

namespace detail {

inline AccelPlan chebyshev_plan(int m, double a, double b) {
  AccelPlan plan;
  plan.m = m;
  plan.a = a;
  plan.b = b;
  const double scale = chebyshev_T(m, plan.map(1.0));
  plan.coeffs.assign(static_cast<std::size_t>(m) + 1, 0.0);
  plan.coeffs[static_cast<std::size_t>(m)] = 1.0 / scale;
  plan.eps = 1.0 / std::abs(scale);
  return plan;
}

}  // namespace detail

/// [min fast lambda, lambda3]; [-lambda3, lambda3] when that collapses to a
/// point and [-1, 0] when every fast mode is dead.
inline std::pair<double, double> default_fast_interval(const SpectralProfile& profile) {
  const SlowFastSplit s = split_modes(profile);
  if (!s.has_fast) return {-1.0, 0.0};
  double lo = s.lambda3;
  for (std::size_t i = 0; i < profile.size(); ++i)
    if (i != s.slow) lo = std::min(lo, profile[i].lambda);
  if (!(lo < s.lambda3)) lo = s.lambda3 > 0.0 ? -s.lambda3 : -1.0;
  return {lo, s.lambda3};
}

/// Minimax Q_m on [a, b] with Q_m(1) = 1.
inline AccelPlan build_Qm(int m, double a, double b) {
  if (m < 0) fail(ErrorKind::InvalidInterval, "degree must be nonnegative");
  if (!(a < b) || !(b < 1.0) || !std::isfinite(a))
    fail(ErrorKind::InvalidInterval, "need a < b < 1");
  return detail::chebyshev_plan(m, a, b);
}

/// Q_m(lambda) = T_m(lambda / lambda2) / T_m(1 / lambda2); eps holds on
/// [-lambda2, lambda2] only.
inline AccelPlan build_Qm_paper_simple(int m, double lambda2) {
  if (m < 0) fail(ErrorKind::InvalidInterval, "degree must be nonnegative");
  if (!(lambda2 > 0.0 && lambda2 < 1.0)) fail(ErrorKind::InvalidInterval, "need 0 < lambda2 < 1");
  AccelPlan plan = detail::chebyshev_plan(m, -lambda2, lambda2);
  plan.mode = PlanMode::PaperSimple;
  plan.lambda2 = lambda2;
  return plan;
}

inline double grid_max_abs(const AccelPlan& plan, double lo, double hi, std::size_t grid) {
  double best = 0.0;
  for (std::size_t j = 0; j < grid; ++j) {
    const double x = grid == 1 ? lo : lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(grid - 1);
    best = std::max(best, std::abs(plan(x)));
  }
  return best;
}

struct MinimaxReport {
  double grid_max = 0.0;
  std::size_t equioscillation = 0;  // separate grid peaks of |Q| at eps
  double best_rival = std::numeric_limits<double>::infinity();  // smallest rival grid max
  std::size_t rivals_beating = 0;   // rivals with grid max < eps (1 - 1e-8)
  double optimality_margin = 0.0;   // best_rival / eps - 1
};

/// Grid check of |Q_m| <= eps on [a, b] plus random rivals R of degree m
/// with R(1) = 1.
inline MinimaxReport minimax_verify(const AccelPlan& plan, std::size_t grid_size = 10000,
                                    std::size_t rival_samples = 100, std::uint64_t seed = 0) {
  if (grid_size < 2) fail(ErrorKind::InvalidArguments, "grid needs at least two points");
  MinimaxReport rep;
  std::vector<double> xs(grid_size), q(grid_size);
  for (std::size_t j = 0; j < grid_size; ++j) {
    xs[j] = plan.a + (plan.b - plan.a) * static_cast<double>(j) / static_cast<double>(grid_size - 1);
    q[j] = std::abs(plan(xs[j]));
    rep.grid_max = std::max(rep.grid_max, q[j]);
  }
  // Count runs of grid points at the extreme value, separated by dips.
  const double level = plan.eps * (1.0 - 1e-5);
  bool inside = false;
  for (double v : q) {
    if (v >= level && !inside) ++rep.equioscillation;
    inside = v >= level;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double one = plan.map(1.0);
  std::vector<double> c(static_cast<std::size_t>(plan.m) + 1);
  for (std::size_t r = 0; r < rival_samples; ++r) {
    for (double& x : c) x = normal(rng);
    const double at_one = chebyshev_series(c, one);
    if (at_one == 0.0) continue;
    double worst = 0.0;
    for (std::size_t j = 0; j < grid_size; ++j)
      worst = std::max(worst, std::abs(chebyshev_series(c, plan.map(xs[j])) / at_one));
    rep.best_rival = std::min(rep.best_rival, worst);
    if (worst < plan.eps * (1.0 - 1e-8)) ++rep.rivals_beating;
  }
  rep.optimality_margin = rival_samples > 0 ? rep.best_rival / plan.eps - 1.0 : 0.0;
  return rep;
}

/// Profile whose spectrum is Q_m(lambda_i): one step of it is one
/// application of Q_m(P). Modes landing on a zero of Q_m die in one step.
inline SpectralProfile accelerated_profile_step(const SpectralProfile& profile, const AccelPlan& plan) {
  for (const Mode& mode : profile.modes())
    if (std::abs(plan(mode.lambda)) > 1.0 + 1e-12)
      fail(ErrorKind::InvalidInterval, "plan amplifies a mode outside its interval");
  return profile.map_spectrum([&](double lam) {
    const double q = plan(lam);
    return std::clamp(q, -1.0, std::nextafter(1.0, 0.0));
  });
}

/// Heavy-ball parameter that makes the characteristic polynomial
/// r^2 - (1 + beta) lambda r + beta have a double root at lambda2.
inline double momentum_beta_star(double lambda2) {
  if (!(lambda2 > 0.0 && lambda2 < 1.0)) fail(ErrorKind::OutOfRange, "lambda2 must lie in (0, 1)");
  const double root = (1.0 - std::sqrt(1.0 - lambda2 * lambda2)) / lambda2;
  return root * root;
}

inline double momentum_discriminant(double beta, double lambda) {
  const double s = (1.0 + beta) * lambda;
  return s * s - 4.0 * beta;
}

/// Roots of r^2 - (1 + beta) lambda r + beta = 0.
inline std::pair<std::complex<double>, std::complex<double>> momentum_roots(double beta, double lambda) {
  const double s = (1.0 + beta) * lambda;
  const std::complex<double> disc = std::sqrt(std::complex<double>(s * s - 4.0 * beta, 0.0));
  return {(s + disc) / 2.0, (s - disc) / 2.0};
}

/// x_{k+1} = (1 + beta) lambda x_k - beta x_{k-1}, from x_0 = x_1 = 1.
inline std::vector<double> momentum_recurrence(double beta, double lambda, std::size_t steps) {
  std::vector<double> x{1.0, 1.0};
  while (x.size() < steps + 1) {
    const std::size_t k = x.size() - 1;
    x.push_back((1.0 + beta) * lambda * x[k] - beta * x[k - 1]);
  }
  x.resize(steps + 1);
  return x;
}

struct AccelBound {
  double bound;     // in accelerated steps; T_acc <= ceil(bound)
  double nominal;   // (1/m) ln(R0 / (c2 delta)) / (2 ln(1/q_fast)) + 1
  double q_fast;    // grid max |Q_m| over the fast interval
  double q_slow;    // |Q_m(lambda2)|
};

/// Rigidity bound for the accelerated trajectory. The slow mode decays as
/// |Q_m(lambda2)|^k and every fast mode at most as q_fast^k, so the plain
/// bound applies with ratio q_fast / |Q_m(lambda2)|.
inline AccelBound accelerated_rigidity_bound(const AccelPlan& plan, double lambda2, double c2_sq,
                                             double R0, double delta,
                                             std::optional<std::pair<double, double>> fast = std::nullopt,
                                             std::size_t grid = 10000) {
  detail::check_delta(delta);
  if (!(c2_sq > 0.0) || !(R0 >= 0.0)) fail(ErrorKind::InvalidArguments, "need c2_sq > 0 and R0 >= 0");
  const auto [lo, hi] = fast.value_or(std::pair{plan.a, plan.b});
  if (!(lo <= hi)) fail(ErrorKind::InvalidInterval, "fast interval is empty");
  AccelBound out;
  out.q_fast = grid_max_abs(plan, lo, hi, grid);
  out.q_slow = std::abs(plan(lambda2));
  if (out.q_slow <= out.q_fast) fail(ErrorKind::SlowModeSuppressed, "|Q(lambda2)| <= max fast |Q|");
  const double num = std::log(R0 / (c2_sq * delta));
  if (R0 == 0.0 || num <= 0.0) {
    out.bound = 1.0;
    out.nominal = 1.0;
    return out;
  }
  out.bound = (out.q_fast == 0.0 ? 0.0 : num / (2.0 * std::log(out.q_slow / out.q_fast))) + 1.0;
  out.nominal = (out.q_fast == 0.0 || plan.m == 0)
                    ? 1.0
                    : num / (2.0 * std::log(1.0 / out.q_fast)) / plan.m + 1.0;
  return out;
}

}  // namespace relax
