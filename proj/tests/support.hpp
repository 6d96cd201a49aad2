// Shared generators and brute-force oracles for the test suite.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "relax/relax.hpp"

namespace relax::testing {

using Rng = std::mt19937_64;

/// Random reversible chain with 2..max_n states. Lazy with a in [0.2, 0.5]
/// when lazy is set, so all eigenvalues are nonnegative and lambda2 = max |lambda|.
inline ReversibleChain random_chain(Rng& rng, Eigen::Index max_n = 30, bool lazy = false) {
  std::uniform_int_distribution<Eigen::Index> size(2, max_n);
  std::uniform_real_distribution<double> spread(0.3, 2.5), lazi(0.2, 0.5);
  const Eigen::Index n = size(rng);
  const double s = spread(rng);
  if (lazy) return random_reversible_chain(n, rng, s, lazi(rng));
  return random_reversible_chain(n, rng, s);
}

inline Vector random_g0(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = normal(rng);
  return g;
}

/// Strictly separated profile: slow mode lambda2 in (0.3, 0.99), fast modes
/// with |lambda| <= lambda3 = r lambda2, one of them at +-lambda3.
inline SpectralProfile random_separated_profile(Rng& rng, std::size_t max_fast = 40) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> count(1, max_fast);
  std::normal_distribution<double> lw(0.0, 2.0);
  const double lambda2 = 0.3 + 0.69 * u(rng);
  const double lambda3 = lambda2 * (0.1 + 0.85 * u(rng));
  const std::size_t m = count(rng);
  std::vector<Mode> modes;
  modes.push_back({lambda2, lw(rng)});
  modes.push_back({u(rng) < 0.5 ? lambda3 : -lambda3, lw(rng)});
  for (std::size_t i = 1; i < m; ++i) modes.push_back({lambda3 * (2.0 * u(rng) - 1.0), lw(rng)});
  std::shuffle(modes.begin(), modes.end(), rng);
  return SpectralProfile::from_modes(std::move(modes), 0.0);
}

/// pi-energies of the centered trajectory P^k g0 by repeated dense products.
inline std::vector<double> matrix_energies(const ReversibleChain& chain, const Vector& g0, std::size_t K) {
  Vector g = g0 - Vector::Constant(g0.size(), pi_mean(chain, g0));
  std::vector<double> out;
  for (std::size_t k = 0; k <= K; ++k) {
    out.push_back(pi_norm_sq(chain, g));
    g = matrix_oracle_step(chain, g);
  }
  return out;
}

/// <g, (2G - G^2) g>_pi with G = I - P, from dense products only.
inline double oracle_dissipation(const ReversibleChain& chain, const Vector& g) {
  const Vector Gg = g - chain.kernel() * g;
  const Vector GGg = Gg - chain.kernel() * Gg;
  return pi_inner(chain, g, 2.0 * Gg - GGg);
}

/// Var_p[lambda^2] by direct moments.
inline double variance_of_lambda_sq(const SpectralProfile& p, const ModalLedger& l) {
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double s = p[i].lambda * p[i].lambda;
    m1 += l.p[i] * s;
    m2 += l.p[i] * s * s;
  }
  return m2 - m1 * m1;
}

struct HypercubeOracle {
  double E;
  double S_spec;  // over eigenvectors
  double level1;
};

/// Direct summation in the linear domain with binomials built by products.
inline HypercubeOracle hypercube_oracle(int n, std::int64_t k) {
  std::vector<double> binom(static_cast<std::size_t>(n) + 1, 1.0);
  for (int j = 1; j <= n; ++j) binom[j] = binom[j - 1] * (n - j + 1) / j;
  std::vector<double> mode(static_cast<std::size_t>(n) + 1, 0.0);
  double E = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double lam = 1.0 - 2.0 * j / n;
    mode[j] = std::pow(lam * lam, static_cast<double>(k));
    E += binom[j] * mode[j];
  }
  double S = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double q = mode[j] / E;
    if (q > 0.0) S -= binom[j] * q * std::log(q);
  }
  return {E, S, binom[1] * mode[1] / E};
}

}  // namespace relax::testing
