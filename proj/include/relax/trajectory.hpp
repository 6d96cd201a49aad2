// trajectory.hpp - relaxation trajectories in log-domain spectral coordinates.
//
// A centered initial condition g0 = sum_i c_i phi_i evolves as
// g_k = sum_i c_i lambda_i^k phi_i, so everything about the trajectory is a
// function of the pairs (lambda_i, |c_i|^2). Modal energies are kept as
// logarithms: ln n_i(k) = ln|c_i|^2 + 2k ln|lambda_i|. Modes with lambda = 0
// die after one step and are masked instead of carrying ln 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "relax/chain.hpp"
#include "relax/spectral.hpp"

namespace relax {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// ln sum_i exp(x_i), with -inf entries ignored. Returns -inf for an empty
/// or all -inf input.
inline double log_sum_exp(std::span<const double> xs) {
  double top = kNegInf;
  for (double x : xs) top = std::max(top, x);
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : xs)
    if (x != kNegInf) acc += std::exp(x - top);
  return top + std::log(acc);
}

struct Mode {
  double lambda;
  double log_weight;  // ln |c_i|^2
};

/// Nontrivial modes of a trajectory. The stationary mode is excluded.
class SpectralProfile {
 public:
  /// Validates modes and prunes those below drop_tol * E0.
  static SpectralProfile from_modes(std::vector<Mode> modes, double drop_tol = 1e-14) {
    if (modes.empty()) fail(ErrorKind::InvalidProfile, "profile needs at least one mode");
    for (const Mode& m : modes) {
      if (!std::isfinite(m.lambda) || std::abs(m.lambda) > 1.0 + 1e-12)
        fail(ErrorKind::InvalidProfile, "mode eigenvalue outside [-1, 1]");
      if (m.lambda >= 1.0)
        fail(ErrorKind::InvalidProfile, "stationary mode (lambda = 1) in profile");
      if (!std::isfinite(m.log_weight))
        fail(ErrorKind::InvalidProfile, "non-finite log weight");
    }
    std::vector<double> lw;
    lw.reserve(modes.size());
    for (const Mode& m : modes) lw.push_back(m.log_weight);
    const double log_e0 = log_sum_exp(lw);
    const double cut = log_e0 + std::log(drop_tol);

    SpectralProfile out;
    std::size_t dropped = 0;
    for (Mode m : modes) {
      if (drop_tol > 0.0 && m.log_weight < cut) {
        ++dropped;
        continue;
      }
      m.lambda = std::clamp(m.lambda, -1.0, 1.0);
      out.modes_.push_back(m);
    }
    if (dropped > 0)
      out.note_ = "dropped " + std::to_string(dropped) + " mode(s) below " +
                  std::to_string(drop_tol) + " * E0";
    return out;
  }

  /// Linear weights |c_i|^2; zero weights are dropped (noted).
  static SpectralProfile from_weights(std::span<const double> lambdas,
                                      std::span<const double> weights, double drop_tol = 1e-14) {
    if (lambdas.size() != weights.size())
      fail(ErrorKind::DimensionMismatch, "eigenvalue and weight lists differ in length");
    std::vector<Mode> modes;
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
        fail(ErrorKind::InvalidProfile, "weights must be finite and nonnegative");
      if (weights[i] == 0.0) {
        ++zeros;
        continue;
      }
      modes.push_back({lambdas[i], std::log(weights[i])});
    }
    SpectralProfile p = from_modes(std::move(modes), drop_tol);
    if (zeros > 0) {
      const std::string z = "dropped " + std::to_string(zeros) + " zero-weight mode(s)";
      p.note_ = p.note_.empty() ? z : z + "; " + p.note_;
    }
    return p;
  }

  std::size_t size() const { return modes_.size(); }
  const std::vector<Mode>& modes() const { return modes_; }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }
  const std::string& note() const { return note_; }

  /// Index of the mode with maximal lambda (first one on ties).
  std::size_t slow_index() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < modes_.size(); ++i)
      if (modes_[i].lambda > modes_[best].lambda) best = i;
    return best;
  }

  double log_E0() const {
    std::vector<double> lw;
    for (const Mode& m : modes_) lw.push_back(m.log_weight);
    return log_sum_exp(lw);
  }

  /// Same weights, eigenvalues replaced by f(lambda). Used by acceleration.
  template <class F>
  SpectralProfile map_spectrum(F&& f) const {
    std::vector<Mode> mapped;
    mapped.reserve(modes_.size());
    for (const Mode& m : modes_) mapped.push_back({f(m.lambda), m.log_weight});
    return from_modes(std::move(mapped), 0.0);
  }

 private:
  SpectralProfile() = default;
  std::vector<Mode> modes_;
  std::string note_;
};

/// ln n_i(k); -inf for a mode with lambda = 0 once k >= 1.
inline double log_modal_energy(const Mode& m, std::int64_t k) {
  if (k == 0) return m.log_weight;
  if (m.lambda == 0.0) return kNegInf;
  return m.log_weight + 2.0 * static_cast<double>(k) * std::log(std::abs(m.lambda));
}

struct ModalLedger {
  std::int64_t k = 0;
  std::vector<double> log_modal_energies;
  double log_E = kNegInf;
  std::vector<double> p;       // modal distribution
  std::vector<double> log_p;   // ln p_i, -inf for dead modes
  double rho = 0.0;            // sum_i p_i lambda_i^2
  double d = 1.0;              // 1 - rho
  bool terminal = false;       // every mode dead, E_k = 0

  double E() const { return std::exp(log_E); }
};

inline void require_step(std::int64_t k) {
  if (k < 0) fail(ErrorKind::InvalidArguments, "step index must be nonnegative");
}

/// All ModalLedger fields at step k. When every mode has died the ledger is
/// returned with terminal = true, E = 0, p = 0 and rho = 0.
inline ModalLedger ledger_at(const SpectralProfile& profile, std::int64_t k) {
  require_step(k);
  ModalLedger out;
  out.k = k;
  const std::size_t n = profile.size();
  out.log_modal_energies.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.log_modal_energies[i] = log_modal_energy(profile[i], k);
  out.log_E = log_sum_exp(out.log_modal_energies);
  out.p.assign(n, 0.0);
  out.log_p.assign(n, kNegInf);
  if (out.log_E == kNegInf) {
    out.terminal = true;
    out.rho = 0.0;
    out.d = 1.0;
    return out;
  }
  double rho = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.log_modal_energies[i] == kNegInf) continue;
    out.log_p[i] = out.log_modal_energies[i] - out.log_E;
    out.p[i] = std::exp(out.log_p[i]);
    const double lam = profile[i].lambda;
    rho += out.p[i] * lam * lam;
  }
  out.rho = rho;
  out.d = 1.0 - rho;
  return out;
}

inline ModalLedger live_ledger(const SpectralProfile& profile, std::int64_t k) {
  ModalLedger l = ledger_at(profile, k);
  if (l.terminal)
    fail(ErrorKind::DeadTrajectory, "energy vanished at step " + std::to_string(k));
  return l;
}

struct DissipationStep {
  double delta_E;                      // E_k - E_{k+1}
  std::vector<double> modewise_terms;  // (1 - lambda_i^2) n_i(k)
  double relative;                     // d_k = sum_i p_i (2 mu_i - mu_i^2)
  double E_k;
  double E_k1;
};

inline DissipationStep dissipation_step(const SpectralProfile& profile, std::int64_t k) {
  const ModalLedger now = live_ledger(profile, k);
  const ModalLedger next = ledger_at(profile, k + 1);
  DissipationStep out;
  out.E_k = now.E();
  out.E_k1 = next.terminal ? 0.0 : next.E();
  out.delta_E = out.E_k - out.E_k1;
  out.modewise_terms.resize(profile.size());
  double rel = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double lam = profile[i].lambda;
    const double mu = 1.0 - lam;
    out.modewise_terms[i] = (1.0 - lam * lam) * std::exp(now.log_modal_energies[i]);
    rel += now.p[i] * (2.0 * mu - mu * mu);
  }
  out.relative = rel;
  return out;
}

/// Brute-force P g by dense product.
inline Vector matrix_oracle_step(const ReversibleChain& chain, const Vector& g) {
  require_length(chain, g);
  return chain.kernel() * g;
}

/// max_i |p_i(k+1) - p_i(k) - p_i(k) (lambda_i^2 - rho_k) / rho_k|
inline double transport_residual(const SpectralProfile& profile, std::int64_t k) {
  const ModalLedger now = live_ledger(profile, k);
  const ModalLedger next = ledger_at(profile, k + 1);
  if (next.terminal)
    fail(ErrorKind::DeadTrajectory, "energy vanishes at step " + std::to_string(k + 1));
  double worst = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double lam2 = profile[i].lambda * profile[i].lambda;
    const double predicted = now.p[i] * (lam2 - now.rho) / now.rho;
    worst = std::max(worst, std::abs(next.p[i] - now.p[i] - predicted));
  }
  return worst;
}

/// Centers g0 and expands it in the nontrivial eigenvectors.
inline SpectralProfile project_initial(const SpectralDecomposition& decomp,
                                       const ReversibleChain& chain, const Vector& g0,
                                       double drop_tol = 1e-14) {
  require_length(chain, g0);
  if (decomp.size() != chain.size())
    fail(ErrorKind::DimensionMismatch, "decomposition does not match chain");
  const Vector centered = g0 - Vector::Constant(g0.size(), pi_mean(chain, g0));
  const double full = std::sqrt(pi_norm_sq(chain, g0));
  const double rest = std::sqrt(pi_norm_sq(chain, centered));
  if (!(rest > 1e-14 * full))
    fail(ErrorKind::ZeroProjection, "initial condition has no nontrivial component");

  std::vector<double> lambdas, weights;
  for (Eigen::Index i = 1; i < decomp.size(); ++i) {
    const double c = pi_inner(chain, centered, decomp.phi(i));
    lambdas.push_back(decomp.eigenvalues(i));
    weights.push_back(c * c);
  }
  return SpectralProfile::from_weights(lambdas, weights, drop_tol);
}

}  // namespace relax
