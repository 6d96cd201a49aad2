// thermo.hpp - spectral thermodynamics of a relaxation trajectory.
//
// The modal distribution p(k) evolves by p_i(k+1) = p_i(k) lambda_i^2 / rho_k,
// so entropy, covariance and KL terms are all closed-form in the profile.
// Entropies are in nats. Every sum runs over live modes only; a mode that died
// (lambda = 0, k >= 1) contributes 0 ln 0 = 0.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "relax/rigidity.hpp"
#include "relax/trajectory.hpp"

namespace relax {

inline double spectral_entropy(std::span<const double> p) {
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x))
      fail(ErrorKind::NotADistribution, "probabilities must be finite and nonnegative");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::NotADistribution, "probabilities do not sum to 1");
  double s = 0.0;
  for (double x : p)
    if (x > 0.0) s -= x * std::log(x);
  return s;
}

namespace detail {

// Entropy from log-probabilities; underflowed modes still contribute.
inline double entropy_of(const ModalLedger& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.p.size(); ++i)
    if (l.log_p[i] != kNegInf) s -= l.p[i] * l.log_p[i];
  return s;
}

// D_KL(p(k+1) || p(k)) as sum_i p_i(k) f(r_i) with r_i = p_i(k+1)/p_i(k) and
// f(r) = r ln r - r + 1 >= 0. Each term is nonnegative, and the sum equals
// the usual form because sum_i p_i(k) r_i = 1.
inline double kl_next(const ModalLedger& now, const ModalLedger& next) {
  double kl = 0.0;
  for (std::size_t i = 0; i < now.p.size(); ++i) {
    if (now.log_p[i] == kNegInf) continue;
    if (next.log_p[i] == kNegInf) {
      kl += now.p[i];
      continue;
    }
    const double log_r = next.log_p[i] - now.log_p[i];
    const double r = std::exp(log_r);
    kl += now.p[i] * (r * log_r - r + 1.0);
  }
  return kl;
}

inline std::pair<ModalLedger, ModalLedger> consecutive(const SpectralProfile& profile,
                                                       std::int64_t k) {
  ModalLedger now = live_ledger(profile, k);
  ModalLedger next = ledger_at(profile, k + 1);
  if (next.terminal)
    fail(ErrorKind::DeadTrajectory, "energy vanishes at step " + std::to_string(k + 1));
  return {std::move(now), std::move(next)};
}

}  // namespace detail

struct CovarianceTerms {
  double cov;            // canonical form, the reference value
  double cov_moment;     // -sum p_i (lambda_i^2 - rho) ln p_i
  double cov_flux;       // sum J_i A_i
  double scale;          // sum |J_i A_i|, for relative comparisons
  std::vector<std::size_t> mode;  // profile index of each fast term
  std::vector<double> J;          // p_i (rho - lambda_i^2)
  std::vector<double> A;          // ln(n_i / n_slow)
  std::vector<double> JA;
};

inline double covariance_moment(const SpectralProfile& profile, const ModalLedger& l) {
  double moment = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (l.log_p[i] == kNegInf) continue;
    const double lam2 = profile[i].lambda * profile[i].lambda;
    moment -= l.p[i] * (lam2 - l.rho) * l.log_p[i];
  }
  return moment;
}

inline CovarianceTerms covariance_at(const SpectralProfile& profile, const ModalLedger& l) {
  const std::size_t s = profile.slow_index();
  if (l.log_p[s] == kNegInf) fail(ErrorKind::NoSlowMode, "slow mode has died");
  CovarianceTerms out{};
  double canonical = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (l.log_p[i] == kNegInf || i == s) continue;
    const double lam2 = profile[i].lambda * profile[i].lambda;
    const double gap = l.rho - lam2;
    const double affinity = l.log_modal_energies[i] - l.log_modal_energies[s];
    canonical += std::exp(l.log_modal_energies[i] - l.log_E) * gap * affinity;
    out.mode.push_back(i);
    out.J.push_back(l.p[i] * gap);
    out.A.push_back(affinity);
    out.JA.push_back(out.J.back() * affinity);
  }
  double flux = 0.0, scale = 0.0;
  for (double t : out.JA) {
    flux += t;
    scale += std::abs(t);
  }
  out.cov = canonical;
  out.cov_moment = covariance_moment(profile, l);
  out.cov_flux = flux;
  out.scale = scale;
  return out;
}

inline CovarianceTerms canonical_covariance(const SpectralProfile& profile, std::int64_t k) {
  return covariance_at(profile, live_ledger(profile, k));
}

struct EntropyBalance {
  double dS;
  double cov_over_rho;
  double kl;
  double residual;  // |dS - cov/rho + kl|
  double S_k;
  double S_k1;
};

inline EntropyBalance entropy_balance(const SpectralProfile& profile, std::int64_t k) {
  const auto [now, next] = detail::consecutive(profile, k);
  EntropyBalance out;
  out.S_k = detail::entropy_of(now);
  out.S_k1 = detail::entropy_of(next);
  out.dS = out.S_k1 - out.S_k;
  const std::size_t s = profile.slow_index();
  // Canonical covariance needs a live slow mode; fall back to the moment form.
  const double cov = now.log_p[s] == kNegInf ? covariance_moment(profile, now)
                                              : covariance_at(profile, now).cov;
  out.cov_over_rho = cov / now.rho;
  out.kl = detail::kl_next(now, next);
  out.residual = std::abs(out.dS - out.cov_over_rho + out.kl);
  return out;
}

struct TwoModeTransition {
  std::int64_t k_star;         // first integer k with alpha2 >= 1/2
  double k_crossing;           // real k with alpha2 = 1/2
  double alpha_at_crossing;
  double entropy_at_crossing;  // H(alpha) at the real crossing
};

inline double binary_entropy(double a) {
  double h = 0.0;
  if (a > 0.0) h -= a * std::log(a);
  if (a < 1.0) h -= (1.0 - a) * std::log1p(-a);
  return h;
}

inline TwoModeTransition two_mode_transition(double lambda2, double lambdaj, double w2, double wj) {
  const double aj = std::abs(lambdaj);
  if (!(w2 > 0.0) || !(wj > 0.0) || !(aj > 0.0) || !(lambda2 < 1.0))
    fail(ErrorKind::InvalidArguments, "need 0 < |lambda_j|, lambda2 < 1 and positive weights");
  if (std::abs(lambda2 - aj) <= kClusterTol) fail(ErrorKind::Degenerate, "lambda2 = |lambda_j|");
  if (lambda2 < aj) fail(ErrorKind::InvalidArguments, "need lambda2 > |lambda_j|");

  const double log_ratio = 2.0 * std::log(lambda2 / aj);
  TwoModeTransition out;
  out.k_crossing = std::log(wj / w2) / log_ratio;
  // alpha(k) = 1 / (1 + (wj/w2) (lambda_j/lambda2)^{2k}), continued to real k.
  const double x = std::log(wj / w2) - out.k_crossing * log_ratio;
  out.alpha_at_crossing = 1.0 / (1.0 + std::exp(x));
  out.entropy_at_crossing = binary_entropy(out.alpha_at_crossing);

  const SpectralProfile profile =
      SpectralProfile::from_modes({{lambda2, std::log(w2)}, {lambdaj, std::log(wj)}}, 0.0);
  const RigidityReport rep = rigidity_time(profile, 0.5);
  if (!rep.reached()) fail(ErrorKind::NonConvergent, "two-mode crossing not reached");
  out.k_star = *rep.T_rigid;
  return out;
}

struct GeneralThreshold {
  double delta_star;
  std::int64_t T_threshold;
};

/// delta* = 1 - max(1/2, lambda3^2 / lambda2^2) and T_rigid(delta*).
inline GeneralThreshold general_threshold(const SpectralProfile& profile) {
  const SlowFastSplit s = split_modes(profile);
  if (s.has_fast && !(s.lambda3 < s.lambda2 - kClusterTol))
    fail(ErrorKind::Degenerate, "general threshold needs lambda2 > |lambda3|");
  const double ratio2 = s.has_fast ? (s.lambda3 * s.lambda3) / (s.lambda2 * s.lambda2) : 0.0;
  GeneralThreshold out;
  out.delta_star = 1.0 - std::max(0.5, ratio2);
  const RigidityReport rep = rigidity_time(profile, out.delta_star);
  if (!rep.reached()) fail(ErrorKind::NonConvergent, "T_rigid(delta*) not reached");
  out.T_threshold = *rep.T_rigid;
  return out;
}

struct ClausiusCheck {
  double lhs;          // sum_k D_KL(p(k+1) || p(k))
  double rhs;          // S(0) + sum_k Cov_k / rho_k
  double residual;
  double S_final;      // entropy at the truncation step
  std::int64_t steps_used;
};

/// Sums the Clausius series until S_spec < stop_entropy or the cap.
/// Ascending k, ascending mode index.
inline ClausiusCheck clausius_check(const SpectralProfile& profile, double stop_entropy = 1e-12,
                                    std::int64_t cap = 1000000) {
  const SlowFastSplit s = split_modes(profile);
  if (s.has_fast && s.lambda3 != 0.0 && !(s.lambda3 < s.lambda2 - kClusterTol))
    fail(ErrorKind::NonConvergent, "spectral entropy does not vanish without strict separation");
  ModalLedger now = live_ledger(profile, 0);
  const double S0 = detail::entropy_of(now);
  double lhs = 0.0, cov_sum = 0.0, S = S0;
  std::int64_t k = 0;
  while (S >= stop_entropy && k < cap) {
    ModalLedger next = ledger_at(profile, k + 1);
    if (next.terminal) break;
    const std::size_t si = profile.slow_index();
    const double cov = now.log_p[si] == kNegInf ? covariance_moment(profile, now)
                                                : covariance_at(profile, now).cov;
    lhs += detail::kl_next(now, next);
    cov_sum += cov / now.rho;
    now = std::move(next);
    S = detail::entropy_of(now);
    ++k;
  }
  ClausiusCheck out;
  out.lhs = lhs;
  out.rhs = S0 + cov_sum;
  out.residual = std::abs(out.lhs - out.rhs);
  out.S_final = S;
  out.steps_used = k;
  return out;
}

struct GStep {
  double G_k, G_k1;  // E S_spec at k and k+1
  double A, B;       // G_k - G_k1 = A + B
  double F_k, F_k1;  // E (1 - S_spec), not monotone
};

inline GStep G_step(const SpectralProfile& profile, std::int64_t k) {
  const auto [now, next] = detail::consecutive(profile, k);
  const double E0 = now.E(), E1 = next.E();
  const double S0 = detail::entropy_of(now), S1 = detail::entropy_of(next);
  GStep out;
  out.G_k = E0 * S0;
  out.G_k1 = E1 * S1;
  out.F_k = E0 * (1.0 - S0);
  out.F_k1 = E1 * (1.0 - S1);
  double A = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (now.log_p[i] == kNegInf) continue;
    const double lam2 = profile[i].lambda * profile[i].lambda;
    A += std::exp(now.log_modal_energies[i]) * (1.0 - lam2) * (-now.log_p[i]);
  }
  out.A = A;
  // E_k (E[lambda^2 ln lambda^2] - rho ln rho) = E_{k+1} D_KL(p(k+1) || p(k)).
  out.B = E1 * detail::kl_next(now, next);
  return out;
}

struct EntropyDecomposition {
  double S_spec;
  double H_binary;  // H(alpha2)
  double H_fast;    // H(q), q_i = p_i / (1 - alpha2) over fast modes
  double alpha2;
};

inline EntropyDecomposition entropy_decomposition(const SpectralProfile& profile, std::int64_t k) {
  const ModalLedger l = live_ledger(profile, k);
  const std::size_t s = profile.slow_index();
  EntropyDecomposition out;
  out.S_spec = detail::entropy_of(l);
  out.alpha2 = l.p[s];
  std::vector<double> fast;
  for (std::size_t i = 0; i < profile.size(); ++i)
    if (i != s) fast.push_back(l.log_p[i]);
  const double log_rest = log_sum_exp(fast);  // ln(1 - alpha2), accurate near alpha2 = 1
  const double rest = std::exp(log_rest);
  out.H_binary = 0.0;
  if (l.p[s] > 0.0) out.H_binary -= l.p[s] * l.log_p[s];
  if (rest > 0.0) out.H_binary -= rest * log_rest;
  out.H_fast = 0.0;
  if (rest > 0.0) {
    for (double lp : fast) {
      if (lp == kNegInf) continue;
      const double lq = lp - log_rest;
      out.H_fast -= std::exp(lq) * lq;
    }
  }
  return out;
}

struct FdtCheck {
  double ratio;     // (C_i(k+1) - C_i(k)) / C_i(k)
  double expected;  // lambda_i^2 - 1
};

inline FdtCheck fdt_check(const SpectralProfile& profile, std::size_t i, std::int64_t k) {
  require_step(k);
  if (i >= profile.size()) fail(ErrorKind::InvalidArguments, "mode index out of range");
  const Mode& m = profile[i];
  const double now = log_modal_energy(m, k);
  if (now == kNegInf) fail(ErrorKind::DeadMode, "mode " + std::to_string(i) + " is dead");
  const double next = log_modal_energy(m, k + 1);
  FdtCheck out;
  out.ratio = next == kNegInf ? -1.0 : std::expm1(next - now);
  out.expected = m.lambda * m.lambda - 1.0;
  return out;
}

/// One row of the per-step thermodynamic ledger. Quantities that need step
/// k+1 are absent when the trajectory dies there.
struct ThermoRow {
  std::int64_t k = 0;
  double E = 0.0, rho = 0.0, d = 1.0, alpha2 = 0.0, S_spec = 0.0;
  std::optional<double> cov, kl, dS, G, A, B, Gamma, Vhat;
  double H_binary = 0.0, H_fast = 0.0;
  bool terminal = false;
};

inline ThermoRow thermo_row(const SpectralProfile& profile, std::int64_t k) {
  ThermoRow row;
  row.k = k;
  const ModalLedger l = ledger_at(profile, k);
  if (l.terminal) {
    row.terminal = true;
    return row;
  }
  const std::size_t s = profile.slow_index();
  row.E = l.E();
  row.rho = l.rho;
  row.d = l.d;
  row.alpha2 = l.p[s];
  row.S_spec = detail::entropy_of(l);
  const EntropyDecomposition dec = entropy_decomposition(profile, k);
  row.H_binary = dec.H_binary;
  row.H_fast = dec.H_fast;
  row.G = row.E * row.S_spec;
  const double cov = l.log_p[s] == kNegInf ? covariance_moment(profile, l) : covariance_at(profile, l).cov;
  row.cov = cov;
  const ModalLedger next = ledger_at(profile, k + 1);
  if (!next.terminal) {
    row.kl = detail::kl_next(l, next);
    row.dS = detail::entropy_of(next) - row.S_spec;
    const GStep g = G_step(profile, k);
    row.A = g.A;
    row.B = g.B;
    row.Vhat = std::max(0.0, l.rho * (next.rho - l.rho));
    row.Gamma = std::max(0.0, next.rho / l.rho - 1.0);
  }
  return row;
}

}  // namespace relax
