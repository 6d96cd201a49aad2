// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "cli_runner.hpp"
#include "support.hpp"

using namespace relax;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

template <class... Args>
std::string str(const Args&... args) {
  std::ostringstream os;
  os.precision(6);
  (os << ... << args);
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SpectralProfile profile_of(std::vector<double> lam, std::vector<double> w) {
  return SpectralProfile::from_weights(lam, w, 0.0);
}

std::vector<SpectralProfile> test_profiles() {
  std::vector<SpectralProfile> out{profile_of({0.9, 0.1}, {1.0, 1.0}), paper_s8_two_mode(), paper_s8_profile(42),
                                   profile_of({0.6, -0.5, 0.0, 0.3}, {1.0, 2.0, 0.5, 0.25})};
  testing::Rng rng(99);
  for (int t = 0; t < 30; ++t) out.push_back(testing::random_separated_profile(rng));
  return out;
}

Outcome dissipation_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  testing::Rng rng(1);
  double worst_matrix = 0.0, worst_spectral = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const ReversibleChain c = testing::random_chain(rng, 30);
    const Vector g0 = testing::random_g0(rng, c.size());
    const SpectralProfile p = project_initial(spectral_decomposition(c), c, g0, 0.0);
    Vector g = g0 - Vector::Constant(g0.size(), pi_mean(c, g0));
    const double E0 = pi_norm_sq(c, g);
    for (std::int64_t k = 0; k <= 200; ++k) {
      const Vector next = matrix_oracle_step(c, g);
      const double lhs = pi_norm_sq(c, g) - pi_norm_sq(c, next);
      worst_matrix = std::max(worst_matrix, std::abs(lhs - testing::oracle_dissipation(c, g)) / E0);
      g = next;
      if (ledger_at(p, k + 1).terminal) continue;
      const DissipationStep d = dissipation_step(p, k);
      worst_spectral = std::max(worst_spectral, std::abs(d.delta_E - d.E_k * d.relative) / E0);
    }
  }
  const double secs = seconds_since(t0);
  return {worst_matrix <= 1e-12 && worst_spectral <= 1e-12 && secs < 10.0,
          str("max |residual|/E0 oracle ", worst_matrix, ", spectral ", worst_spectral, ", ", secs, " s")};
}

Outcome modewise_decomposition() {
  testing::Rng rng(1);
  double worst_modes = 0.0, worst_moment = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const ReversibleChain c = testing::random_chain(rng, 30);
    const Vector g0 = testing::random_g0(rng, c.size());
    const SpectralProfile p = project_initial(spectral_decomposition(c), c, g0, 0.0);
    for (std::int64_t k = 0; k <= 200; ++k) {
      const ModalLedger l = ledger_at(p, k), l2 = ledger_at(p, k + 2);
      if (l2.terminal) break;
      const DissipationStep d = dissipation_step(p, k);
      double sum = 0.0;
      for (double t : d.modewise_terms) sum += t;
      worst_modes = std::max(worst_modes, std::abs(sum - d.delta_E) / d.delta_E);
      double m4 = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) m4 += l.p[i] * std::pow(p[i].lambda, 4);
      const double ratio = std::exp(l2.log_E - l.log_E);
      worst_moment = std::max(worst_moment, std::abs(ratio - m4) / m4);
    }
  }
  return {worst_modes <= 1e-12 && worst_moment <= 1e-12,
          str("max rel error modewise ", worst_modes, ", second moment ", worst_moment)};
}

Outcome rigidity_sandwich() {
  testing::Rng rng(17);
  std::size_t checks = 0, upper = 0, lower = 0;
  double worst_gap = 0.0;
  for (int t = 0; t < 200; ++t) {
    const SpectralProfile p = testing::random_separated_profile(rng);
    for (double delta : {0.3, 0.1, 0.01}) {
      const RigidityReport r = rigidity_time(p, delta);
      ++checks;
      if (!r.reached()) {
        ++upper;
        continue;
      }
      const auto T = static_cast<double>(*r.T_rigid);
      if (T > std::floor(r.L) + 1.0) ++upper;
      if (T < r.L) {
        ++lower;
        worst_gap = std::max(worst_gap, r.L - T);
      }
    }
  }
  const RigidityReport two = rigidity_time(paper_s8_two_mode(), 0.1);
  const bool targets = std::abs(two.L - 7.367) <= 1e-3 && two.T_rigid && *two.T_rigid == 8;
  return {upper == 0 && lower == 0 && targets,
          str("upper-edge violations ", upper, "/", checks, ", lower-edge violations ", lower, "/", checks,
              " (max L - T ", worst_gap, "); two-mode L(0.1) = ", two.L, ", T_rigid = ",
              two.T_rigid ? *two.T_rigid : -1)};
}

Outcome two_mode() {
  std::size_t bad = 0;
  double at_half = 0.0;
  for (int j = 1; j <= 99; ++j) {
    const double a = j / 100.0;
    const double cov = canonical_covariance(profile_of({0.9, 0.3}, {a, 1.0 - a}), 0).cov;
    const double expected = std::log((1.0 - a) / a);
    if (j == 50) {
      at_half = std::abs(cov);
      if (at_half > 1e-15) ++bad;
    } else if ((cov > 0.0) != (expected > 0.0) || cov == 0.0) {
      ++bad;
    }
  }
  const TwoModeTransition s8 = two_mode_transition(0.95, 0.70, 0.1, 0.9);
  const double h_err = std::abs(s8.entropy_at_crossing - std::log(2.0));
  return {bad == 0 && s8.k_star == 4 && h_err <= 1e-12,
          str("sign mismatches ", bad, "/99 (|Cov| at 1/2 = ", at_half, "); k* = ", s8.k_star,
              ", crossing k = ", s8.k_crossing, ", |H - ln 2| = ", h_err)};
}

Outcome entropy_balance_check() {
  double worst_balance = 0.0, worst_cov = 0.0;
  std::size_t steps = 0;
  for (const SpectralProfile& p : test_profiles()) {
    for (std::int64_t k = 0; k <= 100; ++k) {
      if (ledger_at(p, k + 1).terminal) break;
      ++steps;
      worst_balance = std::max(worst_balance, entropy_balance(p, k).residual);
      const CovarianceTerms c = canonical_covariance(p, k);
      const double scale = std::max(1.0, c.scale);
      worst_cov = std::max({worst_cov, std::abs(c.cov - c.cov_moment) / scale, std::abs(c.cov - c.cov_flux) / scale});
    }
  }
  return {worst_balance <= 1e-11 && worst_cov <= 1e-11,
          str(steps, " steps; max balance residual ", worst_balance, ", max covariance disagreement ", worst_cov)};
}

Outcome general_threshold_check() {
  testing::Rng rng(31);
  std::size_t checked = 0, bad = 0, resolved = 0;
  for (int t = 0; t < 100; ++t) {
    const SpectralProfile p = testing::random_separated_profile(rng);
    const GeneralThreshold g = general_threshold(p);
    for (std::int64_t k = g.T_threshold; k <= g.T_threshold + 200; ++k) {
      const ModalLedger l = ledger_at(p, k);
      const double S = detail::entropy_of(l);
      // below this the fast modes have underflowed out of the ledger
      if (S < 1e-13) {
        ++resolved;
        break;
      }
      ++checked;
      if (!(canonical_covariance(p, k).cov < 0.0) || !(detail::entropy_of(ledger_at(p, k + 1)) < S)) ++bad;
    }
  }
  return {bad == 0, str("violations ", bad, " in ", checked, " steps (", resolved,
                        " profiles reached S < 1e-13 inside the window)")};
}

Outcome clausius() {
  std::size_t bad = 0, n = 0;
  double worst = 0.0, s8_residual = 0.0;
  for (const SpectralProfile& p : test_profiles()) {
    const ClausiusCheck c = clausius_check(p);
    ++n;
    worst = std::max(worst, c.residual);
    if (c.residual > std::max(1e-8, 10.0 * c.S_final)) ++bad;
    if (p.size() == 49) s8_residual = c.residual;
  }
  return {bad == 0, str(bad, "/", n, " profiles over tolerance; max residual ", worst, ", 50-state preset ",
                        s8_residual)};
}

Outcome second_law() {
  std::size_t bad = 0, steps = 0;
  double min_ab = kInf;
  for (const SpectralProfile& p : test_profiles()) {
    const double G0 = G_step(p, 0).G_k;
    for (std::int64_t k = 0; k <= 100; ++k) {
      if (ledger_at(p, k + 1).terminal) break;
      const GStep g = G_step(p, k);
      ++steps;
      min_ab = std::min({min_ab, g.A, g.B});
      if (g.A < -1e-15 || g.B < -1e-15 || g.G_k1 > g.G_k + 1e-12 * G0) ++bad;
    }
  }
  const GStep neg = G_step(profile_of({0.9, 0.1}, {1.0, 1.0}), 0);
  const bool control = std::abs(neg.F_k - 0.6137) <= 1e-3 && std::abs(neg.F_k1 - 0.7660) <= 1e-3;
  return {bad == 0 && control, str("violations ", bad, "/", steps, ", min(A, B) ", min_ab,
                                   "; negative control F(0) = ", neg.F_k, ", F(1) = ", neg.F_k1)};
}

Outcome observable_variance_check() {
  testing::Rng rng(77);
  std::vector<SpectralProfile> profiles = test_profiles();
  for (int t = 0; t < 30; ++t) profiles.push_back(testing::random_separated_profile(rng, 49));
  double worst = 0.0;
  for (const SpectralProfile& p : profiles)
    for (std::int64_t k = 0; k <= 100; ++k) {
      const ModalLedger l = ledger_at(p, k), l1 = ledger_at(p, k + 1);
      if (l1.terminal) break;
      worst = std::max(worst, std::abs(observable_variance(l.rho, l1.rho) - testing::variance_of_lambda_sq(p, l)));
    }
  const SpectralProfile hand = profile_of({0.9, 0.1}, {1.0, 1.0});
  const double rho0 = ledger_at(hand, 0).rho, rho1 = ledger_at(hand, 1).rho;
  const double v0 = observable_variance(rho0, rho1);
  const bool exact = std::abs(rho0 - 0.41) <= 1e-15 && std::abs(v0 - 0.16) <= 1e-15;
  return {worst <= 1e-12 && exact, str("max |Vhat - Var| ", worst, "; hand case rho0 = ", rho0, ", Vhat0 = ", v0)};
}

Outcome error_identity_check() {
  testing::Rng rng(12);
  double worst = 0.0;
  std::size_t steps = 0;
  for (int t = 0; t < 50; ++t) {
    const ReversibleChain c = testing::random_chain(rng, 30, true);
    const SpectralDecomposition d = spectral_decomposition(c);
    const Vector g0 = testing::random_g0(rng, c.size());
    const SpectralProfile p = project_initial(d, c, g0, 0.0);
    const std::size_t slow = split_modes(p).slow;
    const Vector phi2 = d.phi(1);
    relax::run_power(c, g0, 60, false, [&](std::size_t k, const Vector& v) {
      const double s2 = pi_inner(c, v, phi2) >= 0.0 ? 1.0 : -1.0;
      const double err = pi_norm_sq(c, v - s2 * phi2);
      const double alpha2 = ledger_at(p, static_cast<std::int64_t>(k)).p[slow];
      worst = std::max(worst, std::abs(err - error_identity(alpha2)));
      ++steps;
    });
  }
  return {worst <= 1e-10, str("max |error - 2(1 - sqrt alpha2)| ", worst, " over ", steps, " steps")};
}

Outcome stopping_soundness() {
  testing::Rng rng(2024);
  std::size_t stops = 0, unsound = 0, skipped = 0;
  double worst_ratio = 0.0;
  for (int t = 0; t < 100; ++t) {
    const ReversibleChain c = testing::random_chain(rng, 25, true);
    const SpectralDecomposition d = spectral_decomposition(c);
    const Vector g0 = testing::random_g0(rng, c.size());
    const SpectralProfile p = project_initial(d, c, g0, 0.0);
    const SlowFastSplit sp = split_modes(p);
    if (!sp.has_fast || !(sp.lambda3 < sp.lambda2)) {
      ++skipped;
      continue;
    }
    const double tau = 1.0 - std::pow(sp.lambda3 / sp.lambda2, 2);
    const Vector phi2 = d.phi(1);
    std::vector<double> errors;
    const PowerRun run = relax::run_power(c, g0, 3000, false, [&](std::size_t, const Vector& v) {
      const double s2 = pi_inner(c, v, phi2) >= 0.0 ? 1.0 : -1.0;
      errors.push_back(std::sqrt(pi_norm_sq(c, v - s2 * phi2)));
    });
    for (double eps : {0.2, 0.1, 0.05}) {
      AdaptiveStopper s(eps, tau);
      for (double r : run.rho) {
        s.push(r);
        if (s.done()) break;
      }
      if (s.state().verdict != Verdict::Stopped) continue;
      ++stops;
      const double err = errors[*s.state().stop_k];
      worst_ratio = std::max(worst_ratio, err / eps);
      if (err > eps) ++unsound;
    }
  }
  return {stops > 0 && unsound == 0, str(stops, " stops, ", unsound, " with error > eps, max error/eps ",
                                         worst_ratio, " (", skipped, " chains without a separated slow mode)")};
}

Outcome chebyshev() {
  std::size_t bad = 0, beating = 0;
  double worst_grid = 0.0, min_margin = kInf;
  const std::pair<double, double> intervals[] = {{-1.0, 0.7}, {-0.6, 0.5}, {-0.3, 0.9}};
  for (int m = 1; m <= 6; ++m)
    for (const auto& [a, b] : intervals) {
      const AccelPlan plan = build_Qm(m, a, b);
      const MinimaxReport r = minimax_verify(plan, 10000, 1000, static_cast<std::uint64_t>(m));
      worst_grid = std::max(worst_grid, std::abs(r.grid_max - plan.eps));
      if (r.equioscillation < static_cast<std::size_t>(m) + 1) ++bad;
      beating += r.rivals_beating;
      min_margin = std::min(min_margin, r.optimality_margin);
    }
  const SpectralProfile s8 = paper_s8_profile(42);
  const auto [a, b] = default_fast_interval(s8);
  const AccelPlan plan = build_Qm(4, a, b);
  const RigidityReport plain = rigidity_time(s8, 0.1);
  const RigidityReport fast = rigidity_time(accelerated_profile_step(s8, plan), 0.1);
  const bool speedup = plain.reached() && fast.reached() &&
                       4.0 * static_cast<double>(*fast.T_rigid) <= 0.8 * static_cast<double>(*plain.T_rigid);
  return {worst_grid <= 1e-10 && bad == 0 && beating == 0 && speedup,
          str("max |grid max - eps| ", worst_grid, ", equioscillation shortfalls ", bad, ", rivals beating ",
              beating, " (min margin ", min_margin, "); preset T_rigid accelerated ",
              fast.T_rigid ? *fast.T_rigid : -1, " x 4 vs plain ", plain.T_rigid ? *plain.T_rigid : -1)};
}

Outcome momentum() {
  const double beta = momentum_beta_star(0.95);
  const double disc = momentum_discriminant(beta, 0.95);
  return {std::abs(beta - 0.52410) <= 1e-5 && std::abs(disc) <= 1e-12,
          str("beta* = ", std::to_string(beta), ", discriminant ", disc)};
}

Outcome interlacing() {
  testing::Rng rng(11);
  double worst_interlace = 0.0, worst_dual = 0.0;
  std::size_t models = 0, rows = 0, violations = 0, degenerate = 0;
  for (int t = 0; t < 20; ++t) {
    const ReversibleChain c = testing::random_chain(rng, 20);
    const SpectralDecomposition d = spectral_decomposition(c);
    for (Eigen::Index a = 0; a < c.size(); ++a) {
      const AbsorbingModel m = absorb(c, a);
      ++models;
      worst_interlace = std::max(worst_interlace, interlacing_violation(m, d));
      const Vector start = restricted_pi_start(m);
      const TailSeries s = fpt_tail_series(m, start, 200);
      for (std::size_t k = 0; k <= 200; ++k) worst_dual = std::max(worst_dual, std::abs(s.matrix[k] - s.spectral[k]));
      try {
        const TailBoundSweep sw = tail_bound_sweep(m, start, 0.1, 50);
        rows += sw.rows.size();
        violations += sw.violations;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Degenerate) throw;
        ++degenerate;
      }
    }
  }
  const AbsorbingModel bar = absorb(barbell_metastable(), 0);
  const TailBoundSweep bs = tail_bound_sweep(bar, restricted_pi_start(bar), 0.1, 50);
  return {worst_interlace <= 1e-9 && worst_dual <= 1e-10,
          str(models, " absorbing models; max interlacing violation ", worst_interlace, ", max dual gap ", worst_dual,
              "; tail bound monitor: ", violations, "/", rows, " rows over bound (", degenerate,
              " degenerate), barbell ", bs.violations, "/", bs.rows.size(), " from k = ", bs.k_start)};
}

Outcome hypercube() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  double worst_oracle = 0.0;
  std::string detail;
  for (int n : {64, 256}) {
    const HypercubeProfile h = hypercube_profile(n);
    std::vector<double> S;
    for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      const std::int64_t k = hypercube_step(n, a);
      const HypercubePoint pt = hypercube_point(h, k);
      const testing::HypercubeOracle o = testing::hypercube_oracle(n, k);
      worst_oracle = std::max({worst_oracle, std::abs(pt.S_spec - o.S_spec),
                               std::abs(std::exp(pt.log_E) - o.E) / o.E, std::abs(pt.alpha2 - o.level1)});
      S.push_back(pt.S_spec);
    }
    for (std::size_t i = 1; i < S.size(); ++i) ok = ok && S[i] < S[i - 1];
    ok = ok && S.front() >= 2.0 && S.back() <= 0.05;
    detail += str("n = ", n, ": S(-2) = ", S.front(), ", S(2) = ", S.back(), "; ");
  }
  const double secs = seconds_since(t0);
  return {ok && worst_oracle <= 1e-10 && secs < 5.0,
          detail + str("max oracle gap ", worst_oracle, ", ", secs, " s")};
}

Outcome determinism() {
  const std::string cli = RELAX_CLI_PATH;
  std::vector<std::string> runs;
  for (const std::string input : {"paper-s8", "paper-s8-two-mode", "k5", "cycle-6", "barbell-metastable"}) {
    for (const std::string cmd : {"analyze", "simulate", "rigidity", "thermo", "accel --compare-plain"})
      runs.push_back(cmd + " " + input);
  }
  for (const std::string input : {"paper-s8", "paper-s8-two-mode", "cycle-6 --g0 random", "barbell-metastable"})
    runs.push_back("power " + input);
  for (const std::string input : {"paper-s8", "k5", "cycle-6", "barbell-metastable"}) runs.push_back("fpt " + input);
  runs.push_back("hypercube --n 256");
  runs.push_back("--seed 7 --format json power paper-s8");
  std::size_t differ = 0, ok_runs = 0;
  std::string first_diff;
  for (const std::string& args : runs) {
    const testing::CliResult a = testing::run_cli(cli, args), b = testing::run_cli(cli, args);
    if (a.status == 0) ++ok_runs;
    if (a.out != b.out || a.err != b.err || a.status != b.status) {
      ++differ;
      if (first_diff.empty()) first_diff = args;
    }
  }
  return {differ == 0, str(runs.size(), " invocations (", ok_runs, " exit 0), ", differ, " differ",
                           first_diff.empty() ? "" : " first: " + first_diff)};
}

}  // namespace

int main() {
  criterion(1, "exact dissipation identity", dissipation_identity);
  criterion(2, "modewise decomposition and second moment", modewise_decomposition);
  criterion(3, "rigidity sandwich", rigidity_sandwich);
  criterion(4, "two-mode transition", two_mode);
  criterion(5, "entropy balance and covariance agreement", entropy_balance_check);
  criterion(6, "general threshold", general_threshold_check);
  criterion(7, "Clausius equality", clausius);
  criterion(8, "spectral second law", second_law);
  criterion(9, "observable variance", observable_variance_check);
  criterion(10, "error identity", error_identity_check);
  criterion(11, "stopping soundness", stopping_soundness);
  criterion(12, "Chebyshev optimality", chebyshev);
  criterion(13, "momentum", momentum);
  criterion(14, "interlacing and first passage", interlacing);
  criterion(15, "hypercube collapse", hypercube);
  criterion(16, "CLI determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
