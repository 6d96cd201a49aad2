// power_iter.hpp - power iteration read through the modal distribution.
//
// For v_k = g_k / ||g_k||_pi the slow-mode fraction fixes the eigenvector
// error exactly, and the energy ratios rho_k = E_{k+1}/E_k give the modal
// variance of lambda^2 without any spectral knowledge:
//   V_k = rho_k (rho_{k+1} - rho_k) = Var_{p_k}[lambda^2].
// The stopping rule fires once Gamma_k = V_k / rho_k^2 <= tau^2 eps^4 / 8.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relax/chain.hpp"
#include "relax/errors.hpp"

namespace relax {

struct PowerRun {
  std::vector<double> log_E;  // ln E_k, k = 0..max_iter
  std::vector<double> rho;    // E_{k+1}/E_k, k = 0..max_iter-1
  std::vector<Vector> iterates;  // v_k when requested

  double E(std::size_t k) const { return std::exp(log_E[k]); }
};

/// Iterates g_{k+1} = P g_k from the centered g0, renormalizing every step
/// and accumulating ln E_k. The pi-mean is removed after each product so
/// roundoff cannot regrow the stationary mode. The visitor, if given, sees (k, v_k).
inline PowerRun run_power(const ReversibleChain& chain, const Vector& g0, std::size_t max_iter,
                          bool store_iterates = false,
                          const std::function<void(std::size_t, const Vector&)>& visit = {}) {
  require_length(chain, g0);
  Vector v = g0 - Vector::Constant(g0.size(), pi_mean(chain, g0));
  const double full = pi_norm_sq(chain, g0);
  const double e0 = pi_norm_sq(chain, v);
  if (!(e0 > 1e-28 * full) || !(e0 > 0.0))
    fail(ErrorKind::ZeroProjection, "initial condition has no nontrivial component");

  PowerRun run;
  run.log_E.reserve(max_iter + 1);
  run.rho.reserve(max_iter);
  run.log_E.push_back(std::log(e0));
  v /= std::sqrt(e0);
  for (std::size_t k = 0;; ++k) {
    if (visit) visit(k, v);
    if (store_iterates) run.iterates.push_back(v);
    if (k == max_iter) break;
    Vector w = chain.kernel() * v;
    w.array() -= pi_mean(chain, w);
    const double r = pi_norm_sq(chain, w);
    if (!(r > 0.0)) fail(ErrorKind::DeadTrajectory, "iterate vanished at step " + std::to_string(k + 1));
    run.rho.push_back(r);
    run.log_E.push_back(run.log_E.back() + std::log(r));
    v = w / std::sqrt(r);
  }
  return run;
}

/// ||v_k - s2 phi_2||_pi^2 = 2 (1 - sqrt(alpha2)).
inline double error_identity(double alpha2) {
  if (!(alpha2 > 0.0 && alpha2 <= 1.0)) fail(ErrorKind::OutOfRange, "alpha2 must lie in (0, 1]");
  return 2.0 * (1.0 - std::sqrt(alpha2));
}

namespace detail {

inline void check_rho_pair(double rho_k, double rho_k1) {
  if (!(rho_k > 0.0 && rho_k <= 1.0) || !(rho_k1 > 0.0 && rho_k1 <= 1.0))
    fail(ErrorKind::InvalidRho, "rho values must lie in (0, 1]");
  if (rho_k1 < rho_k - 1e-12) fail(ErrorKind::InvalidRho, "rho decreased between steps");
}

}  // namespace detail

inline double observable_variance(double rho_k, double rho_k1) {
  detail::check_rho_pair(rho_k, rho_k1);
  return std::max(0.0, rho_k * (rho_k1 - rho_k));
}

inline double gamma(double rho_k, double rho_k1) {
  detail::check_rho_pair(rho_k, rho_k1);
  return std::max(0.0, rho_k1 / rho_k - 1.0);
}

struct AlphaBounds {
  double lower;            // 1 - alpha2 >= V / lambda2^4
  double upper;            // 1 - alpha2 <= 2 V / (lambda2^2 - lambda3^2)^2, needs alpha2 >= 1/2
  double upper_quadratic;  // smaller root of x(1 - x) = V / Delta^2, needs alpha2 >= 1/2; 0.5 if none
  bool needs_alpha_half = true;
};

/// From alpha2 (1 - alpha2) Delta^2 <= V <= (1 - alpha2) lambda2^4.
inline AlphaBounds alpha_bounds_from_variance(double vhat, double lambda2, double lambda3) {
  if (!(vhat >= 0.0)) fail(ErrorKind::InvalidArguments, "variance must be nonnegative");
  if (!(lambda3 >= 0.0) || !(lambda2 > lambda3) || !(lambda2 <= 1.0))
    fail(ErrorKind::Degenerate, "need lambda2 > lambda3 >= 0");
  const double delta = lambda2 * lambda2 - lambda3 * lambda3;
  const double c = vhat / (delta * delta);
  AlphaBounds out;
  out.lower = vhat / std::pow(lambda2, 4);
  out.upper = 2.0 * c;
  out.upper_quadratic = c <= 0.25 ? 2.0 * c / (1.0 + std::sqrt(1.0 - 4.0 * c)) : 0.5;
  return out;
}

struct StoppingConfig {
  std::size_t k_min = 3;
  bool guard = false;          // require Gamma to fall on 3 consecutive steps
  std::size_t burn_in = 5;     // tau-hat starts after this many steps
  double tau_min = 1e-3;
  double freeze_ratio = 1e-13;  // tau-hat freezes once V_k < freeze_ratio rho_k^2
};

enum class Verdict { Running, Stopped, Failed };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Running: return "running";
    case Verdict::Stopped: return "stopped";
    case Verdict::Failed: return "failed";
  }
  return "unknown";
}

struct StoppingState {
  std::vector<double> rho_history;
  std::vector<double> vhat_history;   // V_k once rho_{k+1} is known
  std::vector<double> gamma_history;
  std::vector<std::optional<double>> tauhat_history;  // tau-hat as known at step k
  std::optional<double> tau;          // supplied separation
  std::optional<double> tauhat;       // online estimate, unfloored
  double tau_used = 0.0;
  double epsilon = 0.0;
  double eta = 0.0;
  Verdict verdict = Verdict::Running;
  std::optional<std::size_t> stop_k;
  std::optional<ErrorKind> failure;
};

inline double eta_threshold(double tau, double epsilon) {
  return tau * tau * std::pow(epsilon, 4) / 8.0;
}

/// Streaming form of the adaptive stopping rule. Feed rho_0, rho_1, ...;
/// step k is decided once rho_{k+1} has arrived.
class AdaptiveStopper {
 public:
  AdaptiveStopper(double epsilon, std::optional<double> tau = std::nullopt, StoppingConfig config = {})
      : config_(config) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) fail(ErrorKind::InvalidArguments, "epsilon must lie in (0, 1]");
    if (tau && !(*tau > 0.0 && *tau <= 1.0)) fail(ErrorKind::InvalidArguments, "tau must lie in (0, 1]");
    state_.epsilon = epsilon;
    state_.tau = tau;
    state_.tau_used = tau.value_or(config.tau_min);
    state_.eta = eta_threshold(state_.tau_used, epsilon);
  }

  const StoppingState& state() const { return state_; }
  bool done() const { return state_.verdict != Verdict::Running; }

  const StoppingState& push(double rho) {
    if (done()) return state_;
    if (!(rho > 0.0 && rho <= 1.0 + 1e-12)) fail(ErrorKind::InvalidRho, "rho must lie in (0, 1]");
    state_.rho_history.push_back(rho);
    const std::size_t n = state_.rho_history.size();
    if (n < 2) return state_;
    const std::size_t k = n - 2;
    const double rk = state_.rho_history[k], rk1 = state_.rho_history[k + 1];
    if (rk1 < rk - 1e-12) fail(ErrorKind::InvalidRho, "rho decreased at step " + std::to_string(k));
    const double vhat = std::max(0.0, rk * (rk1 - rk));
    const double g = std::max(0.0, rk1 / rk - 1.0);
    state_.vhat_history.push_back(vhat);
    state_.gamma_history.push_back(g);
    update_tau(k);
    state_.tauhat_history.push_back(state_.tauhat);
    decide(k);
    return state_;
  }

 private:
  void update_tau(std::size_t k) {
    if (state_.tau || k < config_.burn_in || k == 0) return;
    const double prev = state_.vhat_history[k - 1], cur = state_.vhat_history[k];
    const double rho = state_.rho_history[k];
    if (!(prev > config_.freeze_ratio * rho * rho) || !(cur > config_.freeze_ratio * rho * rho)) return;
    state_.tauhat = 1.0 - std::sqrt(cur / prev);
  }

  void decide(std::size_t k) {
    if (!state_.tau) {
      state_.tau_used = std::max(state_.tauhat.value_or(config_.tau_min), config_.tau_min);
      state_.eta = eta_threshold(state_.tau_used, state_.epsilon);
    }
    if (k < config_.k_min) return;
    if (config_.guard) {
      const auto& gh = state_.gamma_history;
      if (k < 3 || !(gh[k] < gh[k - 1] && gh[k - 1] < gh[k - 2] && gh[k - 2] < gh[k - 3]))
        if (gh[k] > 0.0) return;
    }
    if (state_.gamma_history[k] > state_.eta) return;
    if (!state_.tau && state_.tauhat && *state_.tauhat < config_.tau_min) {
      state_.verdict = Verdict::Failed;
      state_.failure = ErrorKind::TauCollapse;
      state_.stop_k = k;
      return;
    }
    state_.verdict = Verdict::Stopped;
    state_.stop_k = k;
  }

  StoppingConfig config_;
  StoppingState state_;
};

/// Runs the stopper over a finished rho stream. Throws StreamEnded or
/// TauCollapse instead of returning a non-stopped state.
inline StoppingState adaptive_stop(std::span<const double> rho, double epsilon,
                                   std::optional<double> tau = std::nullopt,
                                   StoppingConfig config = {}) {
  AdaptiveStopper stopper(epsilon, tau, config);
  for (double r : rho) {
    stopper.push(r);
    if (stopper.done()) break;
  }
  const StoppingState& st = stopper.state();
  if (st.verdict == Verdict::Failed)
    fail(ErrorKind::TauCollapse, "tau-hat fell below the floor at step " + std::to_string(*st.stop_k));
  if (st.verdict == Verdict::Running)
    fail(ErrorKind::StreamEnded, "no stop within " + std::to_string(rho.size()) + " rho values");
  return st;
}

}  // namespace relax
