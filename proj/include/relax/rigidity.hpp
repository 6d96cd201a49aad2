// rigidity.hpp - slow-mode fraction, rigidity times and their closed-form
// bound, rigidity detection from an energy sequence, dissipation closure.
//
// alpha2(k) = n_slow(k) / E_k where the slow mode is the mode of largest
// lambda. lambda3 below always means max |lambda| over the remaining modes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relax/trajectory.hpp"

namespace relax {

inline constexpr double kClusterTol = 1e-12;

inline double slow_fraction(const SpectralProfile& profile, std::int64_t k,
                            std::optional<double> expected_lambda2 = std::nullopt) {
  const std::size_t s = profile.slow_index();
  if (expected_lambda2 && profile[s].lambda < *expected_lambda2 - kClusterTol)
    fail(ErrorKind::NoSlowMode, "mode at lambda2 is absent from the profile");
  const ModalLedger l = live_ledger(profile, k);
  return std::exp(l.log_p[s]);
}

/// Slow/fast split of a profile in the quantities the bounds use.
struct SlowFastSplit {
  std::size_t slow = 0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;        // max |lambda| over fast modes, 0 if none
  double log_c2_sq = 0.0;
  double log_R0 = kNegInf;     // ln sum of fast weights
  double lambda_min = 0.0;     // smallest lambda in the profile
  bool has_fast = false;
};

inline SlowFastSplit split_modes(const SpectralProfile& profile) {
  SlowFastSplit s;
  s.slow = profile.slow_index();
  s.lambda2 = profile[s.slow].lambda;
  s.log_c2_sq = profile[s.slow].log_weight;
  s.lambda_min = s.lambda2;
  std::vector<double> fast;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    s.lambda_min = std::min(s.lambda_min, profile[i].lambda);
    if (i == s.slow) continue;
    s.has_fast = true;
    s.lambda3 = std::max(s.lambda3, std::abs(profile[i].lambda));
    fast.push_back(profile[i].log_weight);
  }
  s.log_R0 = log_sum_exp(fast);
  return s;
}

namespace detail {

inline void check_delta(double delta) {
  if (!(delta > 0.0 && delta <= 0.5))
    fail(ErrorKind::InvalidArguments, "delta must lie in (0, 1/2]");
}

// L from logarithms; ln(R0 / (c2 delta)) / (2 ln(lambda2 / lambda3)).
inline double bound_L_log(double lambda2, double lambda3, double log_c2_sq, double log_R0,
                          double delta) {
  const double num = log_R0 - log_c2_sq - std::log(delta);
  if (log_R0 == kNegInf || num <= 0.0) return 0.0;
  if (lambda3 == 0.0) return 0.0;
  if (lambda3 >= lambda2 - kClusterTol) return kInf;
  return num / (2.0 * std::log(lambda2 / lambda3));
}

}  // namespace detail

/// L(delta); +inf when lambda2 = |lambda3|, 0 when R0 <= c2_sq * delta.
/// lambda3 = 0 is accepted as the limit (L = 0).
inline double rigidity_bound_L(double lambda2, double lambda3, double c2_sq, double R0,
                               double delta) {
  detail::check_delta(delta);
  if (!(c2_sq > 0.0) || !(R0 >= 0.0))
    fail(ErrorKind::InvalidArguments, "need c2_sq > 0 and R0 >= 0");
  if (R0 == 0.0) return 0.0;
  const double a3 = std::abs(lambda3);
  if (!(lambda2 <= 1.0) || !(a3 <= lambda2 + kClusterTol))
    fail(ErrorKind::InvalidArguments, "need |lambda3| <= lambda2 <= 1");
  return detail::bound_L_log(lambda2, a3, std::log(c2_sq), std::log(R0), delta);
}

struct RigidityReport {
  double delta = 0.0;
  std::optional<std::int64_t> T_rigid;  // empty: not reached within cap
  std::int64_t cap = 0;
  double L = 0.0;
  std::vector<double> alpha2_trace;     // alpha2(k), k = 0..T_rigid (truncated for huge T)
  double ratio = 0.0;                   // lambda3 / lambda2
  double init_ratio = 0.0;              // R0 / |c2|^2
  bool terminal = false;                // energy vanished at T_rigid
  std::string diagnostic;

  bool reached() const { return T_rigid.has_value(); }
};

inline constexpr std::size_t kTraceLimit = 100000;

/// First k with alpha2(k) >= 1 - delta.
///
/// With strict separation alpha2 is increasing in k (every fast term
/// (lambda_i/lambda2)^{2k} decays), so an exponential-then-binary search is
/// exact. Otherwise the modes with |lambda_i| >= lambda2 form a contribution
/// that never decays; once it alone pushes alpha2 below the threshold the
/// scan stops with NotReached.
inline RigidityReport rigidity_time(const SpectralProfile& profile, double delta,
                                    std::optional<std::int64_t> cap = std::nullopt) {
  detail::check_delta(delta);
  const SlowFastSplit s = split_modes(profile);
  RigidityReport rep;
  rep.delta = delta;
  rep.init_ratio = std::exp(s.log_R0 - s.log_c2_sq);
  rep.ratio = s.lambda2 != 0.0 ? s.lambda3 / std::abs(s.lambda2) : kInf;
  // lambda3 = 0: every fast mode dies in one step.
  const bool separated = s.lambda3 < s.lambda2 - kClusterTol || s.lambda3 == 0.0;
  if (!s.has_fast) {
    rep.L = 0.0;
  } else if (separated) {
    rep.L = detail::bound_L_log(s.lambda2, s.lambda3, s.log_c2_sq, s.log_R0, delta);
  } else {
    rep.L = kInf;
  }
  std::int64_t default_cap = 1000000;
  if (std::isfinite(rep.L))
    default_cap = std::max<std::int64_t>(default_cap, 10 * static_cast<std::int64_t>(std::ceil(rep.L)));
  rep.cap = cap.value_or(default_cap);
  if (rep.cap < 1) fail(ErrorKind::InvalidArguments, "cap must be at least 1");

  const double target = 1.0 - delta;
  // alpha2 at k; nullopt when every mode has died.
  auto alpha_at = [&](std::int64_t k) -> std::optional<double> {
    const ModalLedger l = ledger_at(profile, k);
    if (l.terminal) return std::nullopt;
    return l.p[s.slow];
  };
  auto finish_trace = [&](std::int64_t T) {
    const std::int64_t last = std::min<std::int64_t>(T, kTraceLimit);
    for (std::int64_t k = 0; k <= last; ++k) {
      const auto a = alpha_at(k);
      rep.alpha2_trace.push_back(a ? *a : 1.0);
    }
  };

  if (separated || !s.has_fast) {
    // Monotone case: the slow mode is alive at every step unless lambda2 = 0,
    // in which case every mode is dead from k = 1 on.
    auto hit = [&](std::int64_t k) {
      const auto a = alpha_at(k);
      return !a || *a >= target;
    };
    std::int64_t T;
    if (hit(0)) {
      T = 0;
    } else {
      std::int64_t lo = 0, hi = 1;
      while (hi <= rep.cap && !hit(hi)) {
        lo = hi;
        hi = hi * 2;
      }
      if (hi > rep.cap) {
        if (!hit(rep.cap)) {
          rep.diagnostic = "threshold not reached within cap";
          return rep;
        }
        hi = rep.cap;
      }
      while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        (hit(mid) ? hi : lo) = mid;
      }
      T = hi;
      if (hit(T - 1)) fail(ErrorKind::NonConvergent, "rigidity scan lost monotonicity");
    }
    rep.T_rigid = T;
    rep.terminal = !alpha_at(T).has_value();
    if (rep.terminal) rep.diagnostic = "all modes dead at step " + std::to_string(T);
    finish_trace(T);
    return rep;
  }

  // Degenerate cluster or a fast mode dominating in |lambda|.
  std::vector<std::size_t> persistent;
  for (std::size_t i = 0; i < profile.size(); ++i)
    if (i != s.slow && profile[i].lambda != 0.0 &&
        std::abs(profile[i].lambda) >= s.lambda2 - kClusterTol)
      persistent.push_back(i);
  {
    std::ostringstream os;
    os.precision(17);
    const bool dominating = s.lambda3 > s.lambda2 + kClusterTol;
    os << (dominating ? "fast mode with |lambda| = " : "degenerate slow cluster at lambda = ")
       << (dominating ? s.lambda3 : s.lambda2) << " (" << persistent.size()
       << (dominating ? " mode(s) at or above lambda2)" : " companion mode(s))");
    rep.diagnostic = os.str();
  }
  const double log_gap = std::log(delta / (1.0 - delta));
  for (std::int64_t k = 0; k <= rep.cap; ++k) {
    const ModalLedger l = ledger_at(profile, k);
    if (l.terminal) {
      rep.T_rigid = k;
      rep.terminal = true;
      finish_trace(k);
      return rep;
    }
    if (l.p[s.slow] >= target) {
      rep.T_rigid = k;
      finish_trace(k);
      return rep;
    }
    std::vector<double> pers;
    for (std::size_t i : persistent) pers.push_back(l.log_p[i] - l.log_p[s.slow]);
    if (log_sum_exp(pers) > log_gap) return rep;
  }
  return rep;
}

struct RigidVerdict {
  bool rigid = false;
  std::size_t onset = 0;   // rigid from this step on
  double rho = 0.0;        // sqrt(E_{s+1} / E_s)
  double eta = 0.0;        // 1 - E_{s+1} / E_s
  std::size_t witness_a = 0, witness_b = 0;  // steps whose dissipation rates differ
  double d_a = 0.0, d_b = 0.0;
};

/// Constant relative dissipation d_k = 1 - E_{k+1}/E_k on a tail of at least
/// two steps means a single active mode.
inline RigidVerdict detect_rigid(std::span<const double> energies, double tol = 1e-12) {
  if (energies.size() < 3) fail(ErrorKind::TooShort, "need E_0..E_K with K >= 2");
  for (double e : energies)
    if (!(e > 0.0)) fail(ErrorKind::InvalidArguments, "energies must be positive");
  const std::size_t K = energies.size() - 1;
  std::vector<double> d(K);
  for (std::size_t k = 0; k < K; ++k) d[k] = 1.0 - energies[k + 1] / energies[k];

  // Smallest onset s such that d_s..d_{K-1} agree within tol.
  auto flat_from = [&](std::size_t s) {
    const auto [lo, hi] = std::minmax_element(d.begin() + static_cast<std::ptrdiff_t>(s), d.end());
    return *hi - *lo <= tol;
  };
  std::size_t s = 0;
  while (s + 2 <= K && !flat_from(s)) ++s;
  RigidVerdict v;
  if (s + 2 <= K) {
    v.rigid = true;
    v.onset = s;
    v.eta = d[s];
    v.rho = std::sqrt(energies[s + 1] / energies[s]);
    return v;
  }
  for (std::size_t k = 0; k + 1 < K; ++k) {
    if (std::abs(d[k] - d[k + 1]) > tol) {
      v.witness_a = k;
      v.witness_b = k + 1;
      v.d_a = d[k];
      v.d_b = d[k + 1];
      break;
    }
  }
  return v;
}

struct ClosureBound {
  double bound;
  double actual;  // |d_k - (1 - lambda2^2)|
};

inline ClosureBound closure_bound(const SpectralProfile& profile, double delta, std::int64_t k) {
  const SlowFastSplit s = split_modes(profile);
  if (s.has_fast && !(s.lambda3 < s.lambda2 - kClusterTol))
    fail(ErrorKind::PreconditionUnmet, "closure bound needs lambda2 > |lambda3|");
  const RigidityReport rep = rigidity_time(profile, delta);
  if (!rep.reached() || k < *rep.T_rigid)
    fail(ErrorKind::PreconditionUnmet, "step is below T_rigid(delta)");
  const ModalLedger l = live_ledger(profile, k);
  const double l2 = s.lambda2 * s.lambda2;
  ClosureBound out;
  out.actual = std::abs(l.d - (1.0 - l2));
  if (!s.has_fast) {
    out.bound = 0.0;
    return out;
  }
  const double l3 = s.lambda3 * s.lambda3;
  const double decay =
      std::exp(s.log_R0 - s.log_c2_sq + 2.0 * static_cast<double>(k) * std::log(s.lambda3 / s.lambda2));
  out.bound = (1.0 - l3) * delta + (1.0 - s.lambda_min * s.lambda_min) * decay;
  return out;
}

}  // namespace relax
