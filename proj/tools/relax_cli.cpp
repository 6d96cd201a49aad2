// relax_cli - command-line front end for the relax library.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relax/io.hpp"
#include "relax/relax.hpp"

namespace {

using namespace relax;
using json = nlohmann::ordered_json;

struct Config {
  std::string input = "paper-s8";
  std::uint64_t seed = 42;
  std::string out;
  std::string format = "csv";
  std::vector<std::string> tol;
  std::string config_path;
  std::string g0 = "delta";

  std::vector<double> delta{0.3, 0.1, 0.01};
  double analyze_delta = 0.1;
  std::int64_t horizon = 100;
  std::vector<std::int64_t> detail_steps;

  double epsilon = 0.1;
  std::optional<double> tau;
  std::size_t kmin = 3;
  std::size_t max_iter = 1000;
  bool guard = false;

  int degree = 4;
  std::vector<double> interval;
  std::optional<double> paper_simple;
  bool compare_plain = false;
  std::int64_t steps = 10;

  Eigen::Index target = 0;
  std::string start = "pi";
  std::int64_t kmax = 100;

  int n = 64;
  std::vector<double> alpha{-2.0, -1.0, 0.0, 1.0, 2.0};
};

// ---------------------------------------------------------------- output

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  json meta = json::object();
  std::optional<json> trailer;  // one JSON line after the CSV body
};

Cell opt_cell(const std::optional<double>& x) { return x ? Cell{*x} : Cell{}; }

std::string csv_cell(const Cell& c) {
  if (std::holds_alternative<double>(c)) return fmt(std::get<double>(c));
  if (std::holds_alternative<std::int64_t>(c)) return std::to_string(std::get<std::int64_t>(c));
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  return {};
}

json json_number(double x) {
  if (std::isfinite(x)) return x;
  return fmt(x);
}

json json_cell(const Cell& c) {
  if (std::holds_alternative<double>(c)) return json_number(std::get<double>(c));
  if (std::holds_alternative<std::int64_t>(c)) return std::get<std::int64_t>(c);
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  return nullptr;
}

void emit(const Table& t, const std::string& command, const Config& cfg) {
  std::ostringstream os;
  if (cfg.format == "csv") {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
      os << '\n';
    }
    if (t.trailer) os << t.trailer->dump() << '\n';
  } else {
    json j;
    j["command"] = command;
    j["input"] = command == "hypercube" ? json(nullptr) : json(cfg.input);
    j["seed"] = cfg.seed;
    for (const auto& [k, v] : t.meta.items()) j[k] = v;
    j["columns"] = t.columns;
    json rows = json::array();
    for (const auto& row : t.rows) {
      json r = json::array();
      for (const Cell& c : row) r.push_back(json_cell(c));
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    if (t.trailer) j["verdict"] = *t.trailer;
    os << j.dump(2) << '\n';
  }
  if (cfg.out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) fail(ErrorKind::IoError, "cannot write " + cfg.out);
    f << os.str();
  }
}

// ---------------------------------------------------------------- inputs

struct Tolerances {
  ChainTolerances chain;
  double drop = 1e-14;
};

Tolerances parse_tolerances(const std::vector<std::string>& items) {
  Tolerances t;
  const std::map<std::string, double*> slots{{"row_sum", &t.chain.row_sum},
                                             {"pi_sum", &t.chain.pi_sum},
                                             {"detailed_balance", &t.chain.detailed_balance},
                                             {"pi_floor", &t.chain.pi_floor},
                                             {"power_fallback", &t.chain.power_fallback},
                                             {"drop", &t.drop}};
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) fail(ErrorKind::ConfigError, "--tol expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const auto it = slots.find(key);
    if (it == slots.end()) fail(ErrorKind::ConfigError, "unknown tolerance '" + key + "'");
    const double v = parse_double(item.substr(eq + 1));
    if (!(v >= 0.0)) fail(ErrorKind::ConfigError, "tolerance '" + key + "' must be nonnegative");
    *it->second = v;
  }
  return t;
}

struct Input {
  std::optional<ReversibleChain> chain;
  std::optional<SpectralDecomposition> decomp;
  std::optional<Vector> g0;
  SpectralProfile profile;
  std::string kind;  // "chain" or "profile"
};

std::optional<Eigen::Index> preset_size(const std::string& name, const std::string& prefix) {
  if (name.rfind(prefix, 0) != 0) return std::nullopt;
  const std::string rest = name.substr(prefix.size());
  if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
  if (rest.size() > 6) fail(ErrorKind::ConfigError, "preset size too large: " + name);
  return static_cast<Eigen::Index>(std::stol(rest));
}

Vector read_vector(const std::string& path, const std::string& key) {
  const std::string text = read_text(path);
  std::vector<double> v;
  if (looks_like_json(text)) {
    json j;
    try {
      j = json::parse(text);
      v = j.at(key).get<std::vector<double>>();
    } catch (const json::exception& e) {
      fail(ErrorKind::IoError, path + ": expected {\"" + key + "\": [numbers]}: " + e.what());
    }
  } else {
    std::string line;
    std::istringstream is(text);
    while (std::getline(is, line))
      for (const std::string& cell : split_csv_line(line))
        if (!cell.empty()) v.push_back(parse_double(cell));
  }
  if (v.empty()) fail(ErrorKind::IoError, path + ": empty vector");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vector initial_function(const ReversibleChain& chain, const Config& cfg) {
  const Eigen::Index n = chain.size();
  if (cfg.g0 == "delta") {
    Vector g = Vector::Zero(n);
    g(0) = 1.0;
    return g;
  }
  if (cfg.g0.rfind("delta:", 0) == 0) {
    const auto idx = preset_size(cfg.g0, "delta:");
    if (!idx || *idx >= n) fail(ErrorKind::ConfigError, "bad --g0 state in '" + cfg.g0 + "'");
    Vector g = Vector::Zero(n);
    g(*idx) = 1.0;
    return g;
  }
  if (cfg.g0 == "random") {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector g(n);
    for (Eigen::Index i = 0; i < n; ++i) g(i) = normal(rng);
    return g;
  }
  Vector g = read_vector(cfg.g0, "g0");
  if (g.size() != n) fail(ErrorKind::DimensionMismatch, "g0 has " + std::to_string(g.size()) + " entries for " +
                                                            std::to_string(n) + " states");
  return g;
}

Input from_chain(ReversibleChain chain, const Config& cfg, double drop) {
  Input in{std::move(chain), std::nullopt, std::nullopt, SpectralProfile::from_modes({{0.5, 0.0}}), "chain"};
  in.decomp = spectral_decomposition(*in.chain);
  in.g0 = initial_function(*in.chain, cfg);
  in.profile = project_initial(*in.decomp, *in.chain, *in.g0, drop);
  return in;
}

/// Realizes the synthetic spectrum as a chain and starts from the function
/// whose modal weights are those of the synthetic profile.
Input realize_s8(const Config& cfg) {
  const std::vector<double> eig = paper_s8_spectrum(cfg.seed);
  const SpectralProfile target = paper_s8_profile(cfg.seed);
  ReversibleChain chain = chain_from_spectrum(eig, cfg.seed);
  SpectralDecomposition d = spectral_decomposition(chain);
  std::vector<bool> used(target.size(), false);
  Vector g = Vector::Zero(chain.size());
  for (Eigen::Index i = 1; i < d.size(); ++i) {
    std::size_t best = 0;
    double gap = kInf;
    for (std::size_t j = 0; j < target.size(); ++j)
      if (!used[j] && std::abs(target[j].lambda - d.eigenvalues(i)) < gap) {
        gap = std::abs(target[j].lambda - d.eigenvalues(i));
        best = j;
      }
    used[best] = true;
    g += std::exp(0.5 * target[best].log_weight) * d.phi(i);
  }
  Input in{std::move(chain), std::move(d), g, target, "chain"};
  in.profile = project_initial(*in.decomp, *in.chain, g, 0.0);
  return in;
}

/// want_chain realizes the synthetic spectrum; need_chain also rejects profiles.
Input load_input(const Config& cfg, const Tolerances& tol, bool want_chain, bool need_chain) {
  const std::string& name = cfg.input;
  if (name == "paper-s8") {
    if (want_chain || need_chain) return realize_s8(cfg);
    return {std::nullopt, std::nullopt, std::nullopt, paper_s8_profile(cfg.seed), "profile"};
  }
  if (name == "paper-s8-two-mode") {
    if (need_chain) fail(ErrorKind::ConfigError, "paper-s8-two-mode is a profile; this command needs a chain");
    return {std::nullopt, std::nullopt, std::nullopt, paper_s8_two_mode(), "profile"};
  }
  if (name == "barbell-metastable") return from_chain(barbell_metastable(), cfg, 0.0);
  if (const auto n = preset_size(name, "k")) return from_chain(complete_graph(*n), cfg, 0.0);
  if (const auto n = preset_size(name, "cycle-")) return from_chain(cycle_graph(*n), cfg, 0.0);

  const std::string text = read_text(name);
  if (looks_like_json(text)) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      fail(ErrorKind::IoError, name + ": " + e.what());
    }
    if (j.contains("eigenvalues")) {
      if (need_chain) fail(ErrorKind::ConfigError, name + " is a profile; this command needs a chain");
      return {std::nullopt, std::nullopt, std::nullopt, parse_profile(text, tol.drop), "profile"};
    }
  }
  return from_chain(build_chain(parse_kernel(text), tol.chain), cfg, tol.drop);
}

// ---------------------------------------------------------------- commands

Table run_analyze(const Input& in, const Config& cfg) {
  Table t;
  t.columns = {"key", "value"};
  auto row = [&](const std::string& k, Cell v) { t.rows.push_back({k, std::move(v)}); };

  std::vector<double> spectrum;
  if (in.decomp) {
    for (Eigen::Index i = 1; i < in.decomp->size(); ++i) spectrum.push_back(in.decomp->eigenvalues(i));
  } else {
    for (const Mode& m : in.profile.modes()) spectrum.push_back(m.lambda);
    std::sort(spectrum.begin(), spectrum.end(), std::greater<>());
  }
  const double lambda2 = spectrum.front();
  double lambda3 = 0.0, lambda_min = lambda2;
  for (std::size_t i = 1; i < spectrum.size(); ++i) {
    lambda3 = std::max(lambda3, std::abs(spectrum[i]));
    lambda_min = std::min(lambda_min, spectrum[i]);
  }
  const double ratio = lambda2 > 0.0 ? lambda3 / lambda2 : kInf;
  const bool separated = spectrum.size() == 1 || lambda3 < lambda2 - kClusterTol;

  row("source", in.kind);
  if (in.chain) row("states", static_cast<std::int64_t>(in.chain->size()));
  row("modes", static_cast<std::int64_t>(in.profile.size()));
  row("lambda2", lambda2);
  row("lambda3", lambda3);
  row("lambda_min", lambda_min);
  row("spectral_gap", 1.0 - lambda2);
  row("absolute_gap", 1.0 - std::max(lambda2, std::abs(lambda_min)));
  row("ratio", ratio);
  row("separated", std::string(separated ? "true" : "false"));
  row("delta_star", separated ? Cell{1.0 - std::max(0.5, ratio * ratio)} : Cell{});
  const double delta = cfg.analyze_delta;
  const RigidityReport r = rigidity_time(in.profile, delta);
  row("delta", delta);
  row("L", r.L);
  row("T_rigid", r.T_rigid ? Cell{*r.T_rigid} : Cell{});
  row("diagnostic", r.diagnostic.empty() ? Cell{} : Cell{r.diagnostic});
  for (std::size_t i = 0; i < spectrum.size(); ++i) row("lambda_" + std::to_string(i + 2), spectrum[i]);
  return t;
}

std::vector<ThermoRow> ledger_rows(const SpectralProfile& p, std::int64_t horizon) {
  if (horizon < 0) fail(ErrorKind::ConfigError, "--horizon must be nonnegative");
  std::vector<ThermoRow> rows;
  for (std::int64_t k = 0; k <= horizon; ++k) {
    ThermoRow r = thermo_row(p, k);
    if (r.terminal) break;
    rows.push_back(std::move(r));
  }
  return rows;
}

Table ledger_table(const std::vector<ThermoRow>& rows) {
  Table t;
  std::istringstream header(kLedgerHeader);
  for (std::string c; std::getline(header, c, ',');) t.columns.push_back(c);
  for (const ThermoRow& r : rows)
    t.rows.push_back({r.k, r.E, r.rho, r.d, r.alpha2, r.S_spec, opt_cell(r.cov), opt_cell(r.kl), opt_cell(r.G),
                      opt_cell(r.A), opt_cell(r.B), opt_cell(r.Gamma), opt_cell(r.Vhat)});
  return t;
}

Table run_simulate(const Input& in, const Config& cfg) {
  std::vector<ThermoRow> rows = ledger_rows(in.profile, cfg.horizon);
  for (ThermoRow& r : rows) r.cov = r.kl = r.dS = r.G = r.A = r.B = r.Gamma = r.Vhat = std::nullopt;
  return ledger_table(rows);
}

Table run_thermo(const Input& in, const Config& cfg) {
  Table t = ledger_table(ledger_rows(in.profile, cfg.horizon));
  const SpectralProfile& p = in.profile;
  try {
    const GeneralThreshold g = general_threshold(p);
    t.meta["delta_star"] = g.delta_star;
    t.meta["T_threshold"] = g.T_threshold;
  } catch (const Error& e) {
    t.meta["threshold_error"] = e.what();
  }
  json detail = json::array();
  for (std::int64_t k : cfg.detail_steps) {
    const ModalLedger l = ledger_at(p, k);
    json step;
    step["k"] = k;
    if (l.terminal) {
      step["terminal"] = true;
    } else {
      const CovarianceTerms c = canonical_covariance(p, k);
      json modes = json::array();
      std::size_t fast = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        json m;
        m["lambda"] = p[i].lambda;
        m["p"] = l.p[i];
        if (fast < c.mode.size() && c.mode[fast] == i) {
          m["flux"] = json_number(c.J[fast]);
          m["affinity"] = json_number(c.A[fast]);
          ++fast;
        }
        modes.push_back(std::move(m));
      }
      step["cov"] = c.cov;
      step["modes"] = std::move(modes);
    }
    detail.push_back(std::move(step));
  }
  if (!cfg.detail_steps.empty()) t.meta["detail"] = std::move(detail);
  return t;
}

Table run_rigidity(const Input& in, const Config& cfg) {
  Table t;
  t.columns = {"delta", "L", "T_rigid", "ratio", "init_ratio"};
  for (double d : cfg.delta) {
    const RigidityReport r = rigidity_time(in.profile, d);
    t.rows.push_back({d, r.L, r.T_rigid ? Cell{*r.T_rigid} : Cell{}, r.ratio, r.init_ratio});
    if (!r.diagnostic.empty()) t.meta["diagnostic_" + fmt(d)] = r.diagnostic;
  }
  return t;
}

Table run_power(const Input& in, const Config& cfg) {
  StoppingConfig sc;
  sc.k_min = cfg.kmin;
  sc.guard = cfg.guard;
  AdaptiveStopper stopper(cfg.epsilon, cfg.tau, sc);
  const SpectralProfile& p = in.profile;
  const std::size_t slow = p.slow_index();

  std::vector<double> logE, rho, err;
  if (in.chain) {
    const Vector phi2 = in.decomp->phi(1);
    const PowerRun run = relax::run_power(*in.chain, *in.g0, cfg.max_iter, false, [&](std::size_t, const Vector& v) {
      const double s2 = pi_inner(*in.chain, v, phi2) >= 0.0 ? 1.0 : -1.0;
      err.push_back(std::sqrt(pi_norm_sq(*in.chain, v - s2 * phi2)));
    });
    logE = run.log_E;
    rho = run.rho;
  } else {
    for (std::size_t k = 0; k <= cfg.max_iter; ++k) {
      const ModalLedger l = ledger_at(p, static_cast<std::int64_t>(k));
      if (l.terminal) break;
      logE.push_back(l.log_E);
      if (k < cfg.max_iter) rho.push_back(l.rho);
      err.push_back(std::sqrt(error_identity(l.p[slow])));
    }
  }
  for (double r : rho) {
    stopper.push(r);
    if (stopper.done()) break;
  }
  const StoppingState& st = stopper.state();

  Table t;
  t.columns = {"k", "E", "rho", "Gamma", "Vhat", "tauhat", "true_error"};
  const std::size_t last = st.stop_k ? *st.stop_k : st.gamma_history.size();
  for (std::size_t k = 0; k <= last && k < logE.size(); ++k) {
    std::vector<Cell> row{static_cast<std::int64_t>(k), std::exp(logE[k])};
    row.push_back(k < st.rho_history.size() ? Cell{st.rho_history[k]} : Cell{});
    row.push_back(k < st.gamma_history.size() ? Cell{st.gamma_history[k]} : Cell{});
    row.push_back(k < st.vhat_history.size() ? Cell{st.vhat_history[k]} : Cell{});
    row.push_back(k < st.tauhat_history.size() ? opt_cell(st.tauhat_history[k]) : Cell{});
    row.push_back(k < err.size() ? Cell{err[k]} : Cell{});
    t.rows.push_back(std::move(row));
  }

  json v;
  switch (st.verdict) {
    case Verdict::Stopped: v["verdict"] = "stopped"; break;
    case Verdict::Failed: v["verdict"] = "failed"; break;
    case Verdict::Running: v["verdict"] = "stream_ended"; break;
  }
  v["stop_k"] = st.stop_k ? json(*st.stop_k) : json(nullptr);
  if (st.failure) v["failure"] = std::string(to_string(*st.failure));
  v["epsilon"] = cfg.epsilon;
  v["tau"] = st.tau ? json(*st.tau) : json(nullptr);
  v["tauhat"] = st.tauhat ? json_number(*st.tauhat) : json(nullptr);
  v["tau_used"] = st.tau_used;
  v["eta"] = st.eta;
  if (st.stop_k && *st.stop_k < err.size()) {
    v["true_error"] = err[*st.stop_k];
    v["within_epsilon"] = err[*st.stop_k] <= cfg.epsilon;
  }
  t.trailer = v;
  return t;
}

Table run_accel(const Input& in, const Config& cfg) {
  const SpectralProfile& p = in.profile;
  const SlowFastSplit s = split_modes(p);
  AccelPlan plan;
  if (cfg.paper_simple) {
    if (!cfg.interval.empty()) fail(ErrorKind::ConfigError, "--interval and --paper-simple are exclusive");
    plan = build_Qm_paper_simple(cfg.degree, *cfg.paper_simple);
  } else if (!cfg.interval.empty()) {
    if (cfg.interval.size() != 2) fail(ErrorKind::ConfigError, "--interval expects a,b");
    plan = build_Qm(cfg.degree, cfg.interval[0], cfg.interval[1]);
  } else {
    if (s.has_fast && !(s.lambda3 < s.lambda2))
      fail(ErrorKind::Degenerate, "fast modes reach |lambda| >= lambda2; give --interval explicitly");
    const auto [a, b] = default_fast_interval(p);
    plan = build_Qm(cfg.degree, a, b);
  }
  if (cfg.steps < 0) fail(ErrorKind::ConfigError, "--steps must be nonnegative");
  const SpectralProfile acc = accelerated_profile_step(p, plan);

  Table t;
  t.columns = {"step_equivalent", "alpha2_plain", "alpha2_accel"};
  for (std::int64_t j = 0; j <= cfg.steps; ++j) {
    const std::int64_t eq = j * plan.m;
    const ModalLedger la = ledger_at(acc, j);
    const Cell accel = la.terminal ? Cell{} : Cell{la.p[s.slow]};
    Cell plain{};
    if (cfg.compare_plain) {
      const ModalLedger lp = ledger_at(p, eq);
      if (!lp.terminal) plain = lp.p[s.slow];
    }
    t.rows.push_back({eq, plain, accel});
  }
  t.meta["degree"] = plan.m;
  t.meta["interval"] = json::array({plan.a, plan.b});
  t.meta["mode"] = plan.mode == PlanMode::PaperSimple ? "paper_simple" : "interval";
  t.meta["eps"] = plan.eps;
  const double delta = 0.1;
  const RigidityReport rp = rigidity_time(p, delta), ra = rigidity_time(acc, delta);
  t.meta["T_rigid_plain"] = rp.T_rigid ? json(*rp.T_rigid) : json(nullptr);
  t.meta["T_rigid_accel_steps"] = ra.T_rigid ? json(*ra.T_rigid) : json(nullptr);
  return t;
}

Vector fpt_start(const AbsorbingModel& m, const Config& cfg) {
  if (cfg.start == "uniform") return uniform_start(m);
  if (cfg.start == "quasistationary") return quasi_stationary_start(m);
  if (cfg.start == "pi") return restricted_pi_start(m);
  return read_vector(cfg.start, "start");
}

Table run_fpt(const Input& in, const Config& cfg) {
  if (cfg.kmax < 0) fail(ErrorKind::ConfigError, "--kmax must be nonnegative");
  const AbsorbingModel m = absorb(*in.chain, cfg.target);
  const Vector start = fpt_start(m, cfg);
  const Vector alpha = tail_coefficients(m, start);
  const TailSeries series = fpt_tail_series(m, start, cfg.kmax);
  const double delta = 0.1;

  // bound column only once the top absorbed mode dominates
  std::optional<TailBoundSweep> sweep;
  try {
    sweep = tail_bound_sweep(m, start, delta, 0);
    sweep = tail_bound_sweep(m, start, delta, std::max<std::int64_t>(cfg.kmax - sweep->k_start, 0));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Degenerate) throw;
  }

  const double nu2 = m.nu(0);
  Table t;
  t.columns = {"k", "tail", "spectral_tail", "exp_approx", "rel_err", "bound"};
  std::size_t violations = 0;
  for (std::int64_t k = 0; k <= cfg.kmax; ++k) {
    const auto K = static_cast<std::size_t>(k);
    const double approx = alpha(0) * std::pow(nu2, static_cast<double>(k));
    std::vector<Cell> row{k, series.matrix[K], series.spectral[K], approx};
    row.push_back(approx != 0.0 ? Cell{std::abs(series.spectral[K] / approx - 1.0)} : Cell{});
    if (sweep && k >= sweep->k_start) {
      const TailBoundRow& b = sweep->rows[static_cast<std::size_t>(k - sweep->k_start)];
      row.push_back(b.check.bound);
      if (!b.check.holds) ++violations;
    } else {
      row.push_back(Cell{});
    }
    t.rows.push_back(std::move(row));
  }
  t.meta["target"] = static_cast<std::int64_t>(cfg.target);
  t.meta["start"] = cfg.start;
  t.meta["nu2"] = nu2;
  t.meta["alpha2"] = alpha(0);
  if (sweep) {
    t.meta["nu3"] = sweep->lambda3;
    t.meta["init_ratio"] = sweep->init_ratio;
    t.meta["k_start"] = sweep->k_start;
    t.meta["bound_violations"] = violations;
  }
  return t;
}

Table run_hypercube(const Config& cfg) {
  if (cfg.n < 1 || cfg.n > 100000) fail(ErrorKind::ConfigError, "--n must lie in [1, 100000]");
  const HypercubeProfile h = hypercube_profile(cfg.n);
  Table t;
  t.columns = {"alpha", "k", "S_spec", "E", "alpha2"};
  for (double a : cfg.alpha) {
    const HypercubePoint pt = hypercube_point(h, hypercube_step(cfg.n, a));
    t.rows.push_back({a, pt.k, pt.S_spec, std::exp(pt.log_E), pt.alpha2});
  }
  t.meta["n"] = cfg.n;
  return t;
}

// ---------------------------------------------------------------- config file

struct Binding {
  std::vector<CLI::Option*> options;
  std::function<void(const json&)> apply;
};

template <class T>
std::function<void(const json&)> setter(T& slot) {
  return [&slot](const json& v) { slot = v.get<T>(); };
}

std::function<void(const json&)> list_setter(std::vector<double>& slot) {
  return [&slot](const json& v) {
    if (v.is_number()) {
      slot = {v.get<double>()};
    } else if (v.is_string()) {
      slot.clear();
      for (const std::string& c : split_csv_line(v.get<std::string>())) slot.push_back(parse_double(c));
    } else {
      slot = v.get<std::vector<double>>();
    }
  };
}

void apply_config_file(const std::string& path, std::map<std::string, Binding>& bindings) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, path + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::ConfigError, path + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = bindings.find(key);
    if (it == bindings.end()) fail(ErrorKind::ConfigError, path + ": unknown key '" + key + "'");
    bool given = false;
    for (CLI::Option* o : it->second.options) given = given || o->count() > 0;
    if (given) continue;
    try {
      it->second.apply(value);
    } catch (const json::exception& e) {
      fail(ErrorKind::ConfigError, path + ": bad value for '" + key + "': " + e.what());
    }
  }
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"Finite-time spectral relaxation of reversible Markov chains"};
  app.require_subcommand(1);
  app.fallthrough();
  std::map<std::string, Binding> bindings;
  auto bind = [&](const std::string& key, CLI::Option* o, std::function<void(const json&)> f) {
    auto& b = bindings[key];
    if (o) b.options.push_back(o);
    if (!b.apply) b.apply = std::move(f);
  };

  bind("input", app.add_option("-i,--input", cfg.input, "preset (paper-s8, paper-s8-two-mode, kN, cycle-N, "
                                                         "barbell-metastable) or chain/profile file"),
       setter(cfg.input));
  bind("seed", app.add_option("--seed", cfg.seed, "seed for synthetic spectra and random g0"), setter(cfg.seed));
  bind("out", app.add_option("-o,--out", cfg.out, "output path (default stdout)"), setter(cfg.out));
  bind("format", app.add_option("--format", cfg.format)->check(CLI::IsMember({"csv", "json"})),
       setter(cfg.format));
  bind("tol", app.add_option("--tol", cfg.tol, "tolerance override key=value")->delimiter(',')->allow_extra_args(false),
       [&](const json& v) {
         cfg.tol.clear();
         for (const auto& [k, x] : v.items()) cfg.tol.push_back(k + "=" + fmt(x.get<double>()));
       });
  bind("g0", app.add_option("--g0", cfg.g0, "initial function for chains: delta, delta:i, random or file"),
       setter(cfg.g0));
  app.add_option("--config", cfg.config_path, "JSON config mirroring the flags");

  auto* analyze = app.add_subcommand("analyze", "spectrum, gaps, delta*, rigidity bound");
  auto* simulate = app.add_subcommand("simulate", "ledger CSV to a horizon");
  auto* rigidity = app.add_subcommand("rigidity", "L and T_rigid per delta");
  auto* thermo = app.add_subcommand("thermo", "ledger with thermodynamic columns");
  auto* power = app.add_subcommand("power", "power iteration with adaptive stopping");
  auto* accel = app.add_subcommand("accel", "Chebyshev acceleration");
  auto* fpt = app.add_subcommand("fpt", "first-passage tails");
  auto* hypercube = app.add_subcommand("hypercube", "entropy collapse on the hypercube");

  for (CLI::App* sub : {analyze, simulate, rigidity, thermo, power, accel, fpt})
    bindings["input"].options.push_back(sub->add_option("input", cfg.input, "preset or file"));
  bind("delta", rigidity->add_option("--delta", cfg.delta)->delimiter(',')->allow_extra_args(false), [&](const json& v) {
    list_setter(cfg.delta)(v);
    if (!cfg.delta.empty()) cfg.analyze_delta = cfg.delta.front();
  });
  bindings["delta"].options.push_back(analyze->add_option("--delta", cfg.analyze_delta));
  for (CLI::App* sub : {simulate, thermo})
    bind("horizon", sub->add_option("--horizon", cfg.horizon), setter(cfg.horizon));
  bind("detail_steps", thermo->add_option("--detail-steps", cfg.detail_steps)->delimiter(',')->allow_extra_args(false),
       setter(cfg.detail_steps));

  bind("epsilon", power->add_option("--epsilon", cfg.epsilon), setter(cfg.epsilon));
  bind("tau", power->add_option("--tau", cfg.tau), [&](const json& v) { cfg.tau = v.get<double>(); });
  bind("kmin", power->add_option("--kmin", cfg.kmin), setter(cfg.kmin));
  bind("max_iter", power->add_option("--max-iter", cfg.max_iter), setter(cfg.max_iter));
  bind("guard", power->add_flag("--guard", cfg.guard, "require Gamma to fall 3 steps in a row"),
       setter(cfg.guard));

  bind("degree", accel->add_option("--degree", cfg.degree), setter(cfg.degree));
  bind("interval", accel->add_option("--interval", cfg.interval, "a,b")->delimiter(',')->allow_extra_args(false),
       list_setter(cfg.interval));
  bind("paper_simple", accel->add_option("--paper-simple", cfg.paper_simple, "lambda2"),
       [&](const json& v) { cfg.paper_simple = v.get<double>(); });
  bind("compare_plain", accel->add_flag("--compare-plain", cfg.compare_plain), setter(cfg.compare_plain));
  bind("steps", accel->add_option("--steps", cfg.steps, "accelerated steps"), setter(cfg.steps));

  bind("target", fpt->add_option("--target", cfg.target), setter(cfg.target));
  bind("start", fpt->add_option("--start", cfg.start, "uniform, quasistationary, pi or file"), setter(cfg.start));
  bind("kmax", fpt->add_option("--kmax", cfg.kmax), setter(cfg.kmax));

  bind("n", hypercube->add_option("--n", cfg.n), setter(cfg.n));
  bind("alpha", hypercube->add_option("--alpha", cfg.alpha)->delimiter(',')->allow_extra_args(false), list_setter(cfg.alpha));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ConfigError: " << one_line(e.what()) << '\n';
    return 1;
  }

  try {
    if (!cfg.config_path.empty()) apply_config_file(cfg.config_path, bindings);
    if (cfg.format != "csv" && cfg.format != "json") fail(ErrorKind::ConfigError, "format must be csv or json");
    const Tolerances tol = parse_tolerances(cfg.tol);
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();

    Table table;
    if (command == "hypercube") {
      table = run_hypercube(cfg);
    } else {
      const Input in = load_input(cfg, tol, command == "power", command == "fpt");
      if (command == "analyze") table = run_analyze(in, cfg);
      else if (command == "simulate") table = run_simulate(in, cfg);
      else if (command == "rigidity") table = run_rigidity(in, cfg);
      else if (command == "thermo") table = run_thermo(in, cfg);
      else if (command == "power") table = run_power(in, cfg);
      else if (command == "accel") table = run_accel(in, cfg);
      else table = run_fpt(in, cfg);
    }
    emit(table, command, cfg);
  } catch (const Error& e) {
    std::cerr << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "IoError: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
