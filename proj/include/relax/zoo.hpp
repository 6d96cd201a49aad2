// zoo.hpp - example chains and profiles: complete graph, cycle, lazy walks,
// chains with a prescribed spectrum, a metastable barbell, random reversible
// chains and the hypercube level profile.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "relax/chain.hpp"
#include "relax/trajectory.hpp"

namespace relax {

inline ReversibleChain complete_graph(Eigen::Index n) {
  if (n < 2) fail(ErrorKind::InvalidSize, "complete graph needs n >= 2");
  return build_chain(Matrix::Constant(n, n, 1.0 / static_cast<double>(n)));
}

/// Simple random walk on the n-cycle, 1/2 to each neighbour.
inline ReversibleChain cycle_graph(Eigen::Index n) {
  if (n < 2) fail(ErrorKind::InvalidSize, "cycle needs n >= 2");
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    p(x, (x + 1) % n) += 0.5;
    p(x, (x + n - 1) % n) += 0.5;
  }
  return build_chain(std::move(p));
}

/// P_a = (1 - a) I + a P.
inline ReversibleChain lazy_transform(const ReversibleChain& chain, double a) {
  if (!(a > 0.0 && a <= 1.0)) fail(ErrorKind::InvalidLaziness, "laziness must lie in (0, 1]");
  const Eigen::Index n = chain.size();
  return build_chain((1.0 - a) * Matrix::Identity(n, n) + a * chain.kernel());
}

/// Kernel P(x, y) = W(x, y) / sum_z W(x, z) of symmetric weights.
inline ReversibleChain chain_from_weights(const Matrix& w) {
  if (w.rows() != w.cols()) fail(ErrorKind::DimensionMismatch, "weights must be square");
  Matrix p = w;
  for (Eigen::Index x = 0; x < p.rows(); ++x) {
    const double s = p.row(x).sum();
    if (!(s > 0.0)) fail(ErrorKind::Reducible, "state " + std::to_string(x) + " has no weight");
    p.row(x) /= s;
  }
  return build_chain(std::move(p));
}

/// Two lazy triangles {0,1,2} and {3,4,5} joined by a weak edge 2-3.
inline ReversibleChain barbell_metastable(double bridge = 0.01) {
  Matrix w = Matrix::Zero(6, 6);
  for (int block = 0; block < 2; ++block)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) w(3 * block + i, 3 * block + j) = i == j ? 2.0 : 1.0;
  w(2, 3) = w(3, 2) = bridge;
  return chain_from_weights(w);
}

/// Dense reversible chain from log-normal symmetric weights; if laziness is
/// given, returns (1 - a) I + a P.
template <class Rng>
ReversibleChain random_reversible_chain(Eigen::Index n, Rng& rng, double spread = 2.0,
                                        std::optional<double> laziness = std::nullopt) {
  if (n < 2) fail(ErrorKind::InvalidSize, "random chain needs n >= 2");
  std::normal_distribution<double> normal(0.0, spread);
  Matrix w(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = x; y < n; ++y) w(x, y) = w(y, x) = std::exp(normal(rng));
  ReversibleChain c = chain_from_weights(w);
  return laziness ? lazy_transform(c, *laziness) : c;
}

struct SpectrumRealization {
  ReversibleChain chain;
  std::size_t attempts;  // bases tried, including the successful one
};

namespace detail {

// Orthonormal basis from a random binary partition tree of the states. The
// first column is 1/sqrt(n); a tree node splitting A | B contributes
// (|B| 1_A - |A| 1_B) / norm. Nodes come in breadth-first order, so early
// columns are smooth across large blocks.
template <class Rng>
Matrix tree_basis(Eigen::Index n, Rng& rng) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix q = Matrix::Zero(n, n);
  q.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  std::deque<std::vector<Eigen::Index>> queue{perm};
  Eigen::Index col = 1;
  while (!queue.empty()) {
    std::vector<Eigen::Index> s = std::move(queue.front());
    queue.pop_front();
    const auto len = static_cast<double>(s.size());
    if (s.size() < 2) continue;
    std::normal_distribution<double> jitter(0.0, len / 8.0);
    const auto cut = static_cast<std::size_t>(
        std::clamp<long>(std::lround(len / 2.0 + jitter(rng)), 1L, static_cast<long>(s.size()) - 1));
    std::vector<Eigen::Index> a(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<Eigen::Index> b(s.begin() + static_cast<std::ptrdiff_t>(cut), s.end());
    Vector v = Vector::Zero(n);
    for (Eigen::Index x : a) v(x) = static_cast<double>(b.size());
    for (Eigen::Index x : b) v(x) = -static_cast<double>(a.size());
    q.col(col++) = v.normalized();
    queue.push_back(std::move(a));
    queue.push_back(std::move(b));
  }
  return q;
}

}  // namespace detail

/// Symmetric kernel Q diag(lambda) Q^T with uniform pi and the requested
/// spectrum. Q is a random tree basis; eigenvalues are placed with the two
/// largest on the coarsest splits and the rest by decreasing |lambda|, then
/// random swaps that raise the smallest kernel entry are accepted until the
/// kernel is nonnegative. Each failed basis is redrawn, up to max_resample.
inline SpectrumRealization realize_spectrum(std::vector<double> eigenvalues, std::uint64_t seed = 0,
                                            std::size_t max_resample = 1000) {
  const auto n = static_cast<Eigen::Index>(eigenvalues.size());
  if (n < 2) fail(ErrorKind::InvalidSize, "spectrum needs at least two eigenvalues");
  if (std::abs(eigenvalues[0] - 1.0) > 1e-12) fail(ErrorKind::InvalidArguments, "first eigenvalue must be 1");
  bool some_below = false;
  for (std::size_t i = 1; i < eigenvalues.size(); ++i) {
    if (!(std::abs(eigenvalues[i]) <= 1.0)) fail(ErrorKind::InvalidArguments, "eigenvalues must lie in [-1, 1]");
    if (eigenvalues[i] < 1.0) some_below = true;
  }
  if (!some_below) fail(ErrorKind::InvalidArguments, "need at least one eigenvalue below 1");

  std::vector<double> rest(eigenvalues.begin() + 1, eigenvalues.end());
  std::sort(rest.begin(), rest.end(), std::greater<>());
  std::vector<double> start;
  const std::size_t top = std::min<std::size_t>(2, rest.size());
  start.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(top));
  std::vector<double> tail(rest.begin() + static_cast<std::ptrdiff_t>(top), rest.end());
  std::stable_sort(tail.begin(), tail.end(), [](double x, double y) { return std::abs(x) > std::abs(y); });
  start.insert(start.end(), tail.begin(), tail.end());

  std::mt19937_64 rng(seed);
  const std::size_t m = start.size();
  for (std::size_t attempt = 1; attempt <= max_resample; ++attempt) {
    const Matrix q = detail::tree_basis(n, rng);
    std::vector<double> lam = start;
    Matrix p = q.col(0) * q.col(0).transpose();
    for (std::size_t i = 0; i < m; ++i) {
      const auto c = static_cast<Eigen::Index>(i + 1);
      p += lam[i] * q.col(c) * q.col(c).transpose();
    }
    double best = p.minCoeff();
    if (m > 3) {
      std::uniform_int_distribution<std::size_t> pick(2, m - 1);
      for (std::size_t sweep = 0; sweep < 20 * static_cast<std::size_t>(n) && best < 0.0; ++sweep) {
        const std::size_t i = pick(rng), j = pick(rng);
        if (i == j || lam[i] == lam[j]) continue;
        const auto ci = static_cast<Eigen::Index>(i + 1), cj = static_cast<Eigen::Index>(j + 1);
        const double diff = lam[j] - lam[i];
        Matrix trial = p + diff * (q.col(ci) * q.col(ci).transpose() - q.col(cj) * q.col(cj).transpose());
        const double low = trial.minCoeff();
        if (low > best) {
          p = std::move(trial);
          best = low;
          std::swap(lam[i], lam[j]);
        }
      }
    }
    if (best >= -1e-14) {
      p = p.cwiseMax(0.0);
      p = 0.5 * (p + p.transpose()).eval();
      return {build_chain(std::move(p)), attempt};
    }
  }
  fail(ErrorKind::NonRealizable,
       "no nonnegative kernel after " + std::to_string(max_resample) + " attempts");
}

inline ReversibleChain chain_from_spectrum(std::vector<double> eigenvalues, std::uint64_t seed = 0,
                                           std::size_t max_resample = 1000) {
  return realize_spectrum(std::move(eigenvalues), seed, max_resample).chain;
}

struct HypercubeLevel {
  double lambda;            // 1 - 2j/n
  double log_multiplicity;  // ln C(n, j)
};

struct HypercubeProfile {
  int n = 0;
  std::vector<HypercubeLevel> levels;  // j = 0..n

  /// Levels j = 1..n with weights C(n, j): the point-mass start, grouped by level.
  SpectralProfile to_profile() const {
    std::vector<Mode> modes;
    for (std::size_t j = 1; j < levels.size(); ++j)
      modes.push_back({levels[j].lambda, levels[j].log_multiplicity});
    return SpectralProfile::from_modes(std::move(modes), 0.0);
  }
};

inline double log_binomial(int n, int j) {
  return std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
}

inline HypercubeProfile hypercube_profile(int n) {
  if (n < 1) fail(ErrorKind::InvalidSize, "hypercube dimension must be >= 1");
  HypercubeProfile h;
  h.n = n;
  for (int j = 0; j <= n; ++j)
    h.levels.push_back({1.0 - 2.0 * j / static_cast<double>(n), log_binomial(n, j)});
  h.levels.front().log_multiplicity = 0.0;
  h.levels.back().log_multiplicity = 0.0;
  h.levels.back().lambda = -1.0;
  return h;
}

/// k = round((n/4) ln n + alpha n), clamped at 0.
inline std::int64_t hypercube_step(int n, double alpha) {
  const double nn = static_cast<double>(n);
  return std::max<std::int64_t>(0, std::llround(0.25 * nn * std::log(nn) + alpha * nn));
}

struct HypercubePoint {
  std::int64_t k = 0;
  double log_E = 0.0;
  double S_spec = 0.0;    // over eigenvectors: level j is C(n, j) equal modes
  double S_levels = 0.0;  // over levels j = 1..n
  double alpha2 = 0.0;    // share of the j = 1 eigenspace
};

/// Point-mass start at step k, entirely in the log domain.
inline HypercubePoint hypercube_point(const HypercubeProfile& h, std::int64_t k) {
  require_step(k);
  const std::size_t L = h.levels.size();
  std::vector<double> per_mode(L, kNegInf), level(L, kNegInf);
  for (std::size_t j = 1; j < L; ++j) {
    const double lam = std::abs(h.levels[j].lambda);
    if (lam == 0.0 && k > 0) continue;
    per_mode[j] = k == 0 ? 0.0 : 2.0 * static_cast<double>(k) * std::log(lam);
    level[j] = h.levels[j].log_multiplicity + per_mode[j];
  }
  HypercubePoint out;
  out.k = k;
  out.log_E = log_sum_exp(level);
  for (std::size_t j = 1; j < L; ++j) {
    if (level[j] == kNegInf) continue;
    const double log_pj = level[j] - out.log_E;
    const double pj = std::exp(log_pj);
    out.S_levels -= pj * log_pj;
    out.S_spec -= pj * (per_mode[j] - out.log_E);
  }
  if (L > 1 && level[1] != kNegInf) out.alpha2 = std::exp(level[1] - out.log_E);
  return out;
}

/// Synthetic spectrum: 1, 0.95, 0.70 and 47 draws from Uniform(-0.3, 0.5).
inline std::vector<double> paper_s8_spectrum(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fast(-0.3, 0.5);
  std::vector<double> eig{1.0, 0.95, 0.70};
  for (int i = 0; i < 47; ++i) eig.push_back(fast(rng));
  return eig;
}

/// Profile on the synthetic spectrum: |c2|^2 = 0.1 on 0.95, 0.8 on 0.70 and
/// 0.1 shared evenly by the remaining modes.
inline SpectralProfile paper_s8_profile(std::uint64_t seed) {
  const std::vector<double> eig = paper_s8_spectrum(seed);
  std::vector<double> lambdas(eig.begin() + 1, eig.end());
  std::vector<double> weights(lambdas.size(), 0.1 / static_cast<double>(lambdas.size() - 2));
  weights[0] = 0.1;
  weights[1] = 0.8;
  return SpectralProfile::from_weights(lambdas, weights, 0.0);
}

/// The two-mode reduction: (0.95, 0.1), (0.70, 0.9).
inline SpectralProfile paper_s8_two_mode() {
  const double lambdas[] = {0.95, 0.70};
  const double weights[] = {0.1, 0.9};
  return SpectralProfile::from_weights(lambdas, weights, 0.0);
}

}  // namespace relax
