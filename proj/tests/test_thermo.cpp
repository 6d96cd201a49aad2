#include <catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"

using namespace relax;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpectralProfile profile_of(std::vector<double> lam, std::vector<double> w) {
  return SpectralProfile::from_weights(lam, w, 0.0);
}

SpectralProfile remark_pair() { return profile_of({0.9, 0.1}, {1.0, 1.0}); }

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected relax::Error");
  return ErrorKind::ConfigError;
}

// A handful of fixed profiles plus random separated ones.
std::vector<SpectralProfile> test_profiles() {
  std::vector<SpectralProfile> out{remark_pair(), paper_s8_two_mode(), paper_s8_profile(42),
                                   profile_of({0.6, -0.5, 0.0, 0.3}, {1.0, 2.0, 0.5, 0.25})};
  testing::Rng rng(99);
  for (int t = 0; t < 30; ++t) out.push_back(testing::random_separated_profile(rng));
  return out;
}

}  // namespace

TEST_CASE("spectral_entropy", "[thermo]") {
  const double one[] = {1.0};
  CHECK(spectral_entropy(one) == 0.0);
  const double half[] = {0.5, 0.5};
  CHECK_THAT(spectral_entropy(half), WithinAbs(0.69314718055994529, 1e-15));
  const std::vector<double> uni(7, 1.0 / 7.0);
  CHECK_THAT(spectral_entropy(uni), WithinAbs(std::log(7.0), 1e-14));
  const double with_zero[] = {0.0, 1.0};
  CHECK(spectral_entropy(with_zero) == 0.0);
  const double bad[] = {0.5, 0.6};
  CHECK(kind_of([&] { spectral_entropy(bad); }) == ErrorKind::NotADistribution);
  const double neg[] = {1.5, -0.5};
  CHECK(kind_of([&] { spectral_entropy(neg); }) == ErrorKind::NotADistribution);
}

TEST_CASE("entropy_balance examples", "[thermo]") {
  const EntropyBalance single = entropy_balance(profile_of({0.7}, {1.0}), 3);
  CHECK(single.dS == 0.0);
  CHECK(single.cov_over_rho == 0.0);
  CHECK(single.kl == 0.0);

  const EntropyBalance b = entropy_balance(remark_pair(), 0);
  CHECK_THAT(b.dS, WithinAbs(-0.62728624461846707, 1e-14));
  CHECK_THAT(b.S_k1, WithinAbs(0.065860935941478235, 1e-15));
  CHECK(b.residual <= 1e-12);
}

TEST_CASE("entropy balance and covariance forms on test profiles", "[thermo][property]") {
  for (const SpectralProfile& p : test_profiles()) {
    for (std::int64_t k = 0; k <= 100; ++k) {
      const ModalLedger next = ledger_at(p, k + 1);
      if (next.terminal) break;
      const EntropyBalance b = entropy_balance(p, k);
      CHECK(b.residual <= 1e-11);
      CHECK(b.kl >= 0.0);
      const CovarianceTerms c = canonical_covariance(p, k);
      CHECK(std::abs(c.cov - c.cov_moment) <= 1e-11 * std::max(1.0, c.scale));
      CHECK(std::abs(c.cov - c.cov_flux) <= 1e-11 * std::max(1.0, c.scale));
      // dS >= 0 exactly when cov >= rho kl
      const double rho = ledger_at(p, k).rho;
      if (b.dS > 1e-11) CHECK(c.cov >= rho * b.kl - 1e-11);
      if (b.dS < -1e-11) CHECK(c.cov < rho * b.kl + 1e-11);
    }
  }
}

TEST_CASE("canonical_covariance signs", "[thermo]") {
  CHECK(canonical_covariance(profile_of({0.9, 0.4}, {1.0, 1.0}), 0).cov == 0.0);
  CHECK(canonical_covariance(paper_s8_two_mode(), 0).cov > 0.0);
  CHECK(canonical_covariance(paper_s8_two_mode(), 8).cov < 0.0);
  const CovarianceTerms t = canonical_covariance(paper_s8_two_mode(), 0);
  REQUIRE(t.J.size() == 1);
  CHECK_THAT(t.JA[0], WithinAbs(t.J[0] * t.A[0], 1e-16));
}

TEST_CASE("two-mode sign law on an alpha grid", "[thermo][property]") {
  for (int j = 1; j <= 99; ++j) {
    const double a = j / 100.0;
    const SpectralProfile p = profile_of({0.9, 0.3}, {a, 1.0 - a});
    const double cov = canonical_covariance(p, 0).cov;
    const double expected = std::log((1.0 - a) / a);
    if (j == 50) {
      CHECK(std::abs(cov) <= 1e-15);
    } else {
      CHECK((cov > 0.0) == (expected > 0.0));
      CHECK(cov != 0.0);
    }
  }
}

TEST_CASE("two_mode_transition", "[thermo]") {
  const TwoModeTransition eq = two_mode_transition(0.9, 0.5, 1.0, 1.0);
  CHECK(eq.k_star == 0);
  CHECK_THAT(eq.entropy_at_crossing, WithinAbs(std::log(2.0), 1e-15));

  const TwoModeTransition s8 = two_mode_transition(0.95, 0.70, 0.1, 0.9);
  CHECK(s8.k_star == 4);
  CHECK_THAT(s8.k_crossing, WithinAbs(3.5975059086973158, 1e-13));
  CHECK_THAT(s8.alpha_at_crossing, WithinAbs(0.5, 1e-14));
  CHECK_THAT(s8.entropy_at_crossing, WithinAbs(0.69314718055994529, 1e-12));

  const TwoModeTransition rem = two_mode_transition(0.9, 0.1, 1.0, 1.0);
  CHECK(rem.k_star == 0);
  CHECK(canonical_covariance(remark_pair(), 0).cov == 0.0);

  CHECK(kind_of([] { two_mode_transition(0.5, -0.5, 1.0, 1.0); }) == ErrorKind::Degenerate);
}

TEST_CASE("general_threshold", "[thermo]") {
  CHECK_THAT(general_threshold(paper_s8_two_mode()).delta_star, WithinAbs(0.45706371191135734, 1e-15));
  CHECK(general_threshold(profile_of({0.95, 0.5}, {1.0, 1.0})).delta_star == 0.5);
  const GeneralThreshold single = general_threshold(profile_of({0.4}, {1.0}));
  CHECK(single.T_threshold == 0);
  CHECK(kind_of([] { general_threshold(profile_of({0.5, 0.5}, {1.0, 1.0})); }) == ErrorKind::Degenerate);
}

TEST_CASE("entropy decreases past the general threshold", "[thermo][property]") {
  testing::Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    const SpectralProfile p = testing::random_separated_profile(rng);
    const GeneralThreshold g = general_threshold(p);
    for (std::int64_t k = g.T_threshold; k <= g.T_threshold + 200; ++k) {
      const ModalLedger l = ledger_at(p, k);
      if (detail::entropy_of(l) < 1e-13) break;
      CHECK(canonical_covariance(p, k).cov < 0.0);
      CHECK(detail::entropy_of(ledger_at(p, k + 1)) < detail::entropy_of(l));
    }
  }
}

TEST_CASE("clausius_check", "[thermo]") {
  const ClausiusCheck single = clausius_check(profile_of({0.8}, {1.0}));
  CHECK(single.lhs == 0.0);
  CHECK(single.rhs == 0.0);

  const ClausiusCheck rem = clausius_check(remark_pair());
  CHECK(rem.residual <= 1e-10);
  CHECK(rem.steps_used <= 15);

  const ClausiusCheck s8 = clausius_check(paper_s8_profile(42));
  CHECK(s8.residual <= std::max(1e-8, 10.0 * s8.S_final));

  for (const SpectralProfile& p : test_profiles()) {
    const ClausiusCheck c = clausius_check(p);
    CHECK(c.residual <= std::max(1e-8, 10.0 * c.S_final));
  }

  const double c5 = 0.30901699437494742;
  CHECK(kind_of([&] { clausius_check(profile_of({c5, c5}, {1.0, 1.0})); }) == ErrorKind::NonConvergent);
}

TEST_CASE("G_step", "[thermo]") {
  const GStep g = G_step(remark_pair(), 0);
  CHECK_THAT(g.G_k, WithinAbs(1.3862943611198906, 1e-15));
  CHECK_THAT(g.G_k1, WithinAbs(0.054005967472012153, 1e-15));
  CHECK_THAT(g.F_k, WithinAbs(0.61370563888010938, 1e-15));
  CHECK_THAT(g.F_k1, WithinAbs(0.76599403252798785, 1e-15));
  CHECK(g.F_k1 > g.F_k);
  CHECK_THAT(g.A + g.B, WithinRel(g.G_k - g.G_k1, 1e-12));

  const GStep one = G_step(profile_of({0.5}, {2.0}), 4);
  CHECK(one.G_k == 0.0);
  CHECK(one.A == 0.0);
  CHECK(one.B == 0.0);
}

TEST_CASE("spectral second law on test profiles", "[thermo][property]") {
  for (const SpectralProfile& p : test_profiles()) {
    const double G0 = G_step(p, 0).G_k;
    for (std::int64_t k = 0; k <= 100; ++k) {
      if (ledger_at(p, k + 1).terminal) break;
      const GStep g = G_step(p, k);
      CHECK(g.A >= -1e-15);
      CHECK(g.B >= -1e-15);
      CHECK(g.G_k1 <= g.G_k + 1e-12 * G0);
      CHECK(std::abs(g.G_k - g.G_k1 - g.A - g.B) <= 1e-11 * std::max(g.G_k, 1e-4 * G0));
    }
  }
}

TEST_CASE("entropy_decomposition", "[thermo]") {
  const EntropyDecomposition two = entropy_decomposition(paper_s8_two_mode(), 3);
  CHECK(two.H_fast == 0.0);
  CHECK_THAT(two.S_spec, WithinAbs(two.H_binary, 1e-15));

  const std::size_t m = 6;
  std::vector<double> lam{0.9}, w{0.5};
  for (std::size_t i = 0; i < m; ++i) {
    lam.push_back(0.1 * static_cast<double>(i));
    w.push_back(0.5 / m);
  }
  const EntropyDecomposition u = entropy_decomposition(profile_of(lam, w), 0);
  CHECK_THAT(u.S_spec, WithinAbs(std::log(2.0) + 0.5 * std::log(static_cast<double>(m)), 1e-14));

  const EntropyDecomposition one = entropy_decomposition(profile_of({0.3}, {1.0}), 2);
  CHECK(one.S_spec == 0.0);
  CHECK(one.H_binary == 0.0);
  CHECK(one.H_fast == 0.0);

  for (const SpectralProfile& p : test_profiles())
    for (std::int64_t k = 0; k <= 40; k += 5) {
      if (ledger_at(p, k).terminal) break;
      const EntropyDecomposition d = entropy_decomposition(p, k);
      CHECK_THAT(d.S_spec, WithinAbs(d.H_binary + (1.0 - d.alpha2) * d.H_fast, 1e-12));
    }
}

TEST_CASE("fdt_check", "[thermo]") {
  for (std::int64_t k : {0, 5, 40}) {
    const FdtCheck f = fdt_check(profile_of({0.9}, {1.0}), 0, k);
    CHECK_THAT(f.ratio, WithinAbs(-0.19, 1e-14));
    CHECK_THAT(f.ratio, WithinAbs(f.expected, 1e-14));
  }
  const FdtCheck neg = fdt_check(profile_of({-0.5}, {1.0}), 0, 3);
  CHECK_THAT(neg.ratio, WithinAbs(-0.75, 1e-14));

  const SpectralProfile p = paper_s8_profile(42);
  double summed = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const FdtCheck f = fdt_check(p, i, 2);
    CHECK_THAT(f.ratio, WithinAbs(f.expected, 1e-14));
    summed += -f.ratio * std::exp(log_modal_energy(p[i], 2));
  }
  CHECK_THAT(summed, WithinRel(dissipation_step(p, 2).delta_E, 1e-12));

  const SpectralProfile dead = profile_of({0.0, 0.5}, {1.0, 1.0});
  CHECK(kind_of([&] { fdt_check(dead, 0, 1); }) == ErrorKind::DeadMode);
}

TEST_CASE("thermo_row", "[thermo]") {
  const ThermoRow r = thermo_row(remark_pair(), 0);
  CHECK_THAT(r.E, WithinAbs(2.0, 1e-15));
  CHECK_THAT(r.rho, WithinAbs(0.41, 1e-15));
  REQUIRE(r.Vhat);
  CHECK_THAT(*r.Vhat, WithinAbs(0.16, 1e-15));
  REQUIRE(r.G);
  CHECK_THAT(*r.G, WithinAbs(2.0 * std::log(2.0), 1e-15));

  std::vector<Mode> kn(3, Mode{0.0, 0.0});
  const SpectralProfile k4 = SpectralProfile::from_modes(kn);
  const ThermoRow last = thermo_row(k4, 0);
  CHECK_FALSE(last.kl);
  CHECK(thermo_row(k4, 1).terminal);
}
