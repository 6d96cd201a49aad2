// io.hpp - chain/profile readers and the ledger CSV format.
//
// Floats are written with 17 significant digits so they round-trip exactly.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relax/chain.hpp"
#include "relax/thermo.hpp"
#include "relax/trajectory.hpp"

namespace relax {

inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

inline double parse_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return kNegInf;
  if (s == "nan") return std::nan("");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::IoError, "not a number: '" + s + "'");
  }
  if (used != s.size()) fail(ErrorKind::IoError, "trailing characters in number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline bool looks_like_json(const std::string& text) {
  for (char c : text) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') continue;
    return c == '{';
  }
  return false;
}

/// {"kernel": [[...], ...]} or n rows of n comma-separated numbers.
inline Matrix parse_kernel(const std::string& text) {
  std::vector<std::vector<double>> rows;
  if (looks_like_json(text)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::IoError, std::string("bad chain JSON: ") + e.what());
    }
    if (!j.contains("kernel") || !j["kernel"].is_array()) fail(ErrorKind::IoError, "chain JSON needs a \"kernel\" array");
    for (const auto& row : j["kernel"]) {
      if (!row.is_array()) fail(ErrorKind::IoError, "kernel rows must be arrays");
      std::vector<double> r;
      for (const auto& v : row) {
        if (!v.is_number()) fail(ErrorKind::IoError, "kernel entries must be numbers");
        r.push_back(v.get<double>());
      }
      rows.push_back(std::move(r));
    }
  } else {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::vector<double> r;
      for (const std::string& cell : split_csv_line(line)) r.push_back(parse_double(cell));
      rows.push_back(std::move(r));
    }
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) fail(ErrorKind::IoError, "empty kernel");
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n)
      fail(ErrorKind::DimensionMismatch, "kernel row " + std::to_string(i) + " has the wrong length");
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return k;
}

inline ReversibleChain read_chain(const std::string& path, const ChainTolerances& tol = {}) {
  return build_chain(parse_kernel(read_text(path)), tol);
}

/// {"eigenvalues": [...], "log_weights": [...]}
inline SpectralProfile parse_profile(const std::string& text, double drop_tol = 1e-14) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::IoError, std::string("bad profile JSON: ") + e.what());
  }
  if (!j.contains("eigenvalues") || !j.contains("log_weights"))
    fail(ErrorKind::IoError, "profile JSON needs \"eigenvalues\" and \"log_weights\"");
  std::vector<double> lam, lw;
  try {
    lam = j["eigenvalues"].get<std::vector<double>>();
    lw = j["log_weights"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::IoError, std::string("bad profile arrays: ") + e.what());
  }
  if (lam.size() != lw.size()) fail(ErrorKind::DimensionMismatch, "eigenvalues and log_weights differ in length");
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < lam.size(); ++i) modes.push_back({lam[i], lw[i]});
  return SpectralProfile::from_modes(std::move(modes), drop_tol);
}

inline SpectralProfile read_profile(const std::string& path, double drop_tol = 1e-14) {
  return parse_profile(read_text(path), drop_tol);
}

inline const char* const kLedgerHeader = "k,E,rho,d,alpha2,S_spec,Cov,KL,G,A,B,Gamma,Vhat";

inline void write_ledger_row(std::ostream& os, const ThermoRow& r) {
  os << r.k << ',' << fmt(r.E) << ',' << fmt(r.rho) << ',' << fmt(r.d) << ',' << fmt(r.alpha2) << ','
     << fmt(r.S_spec) << ',' << fmt(r.cov) << ',' << fmt(r.kl) << ',' << fmt(r.G) << ',' << fmt(r.A) << ','
     << fmt(r.B) << ',' << fmt(r.Gamma) << ',' << fmt(r.Vhat) << '\n';
}

inline void write_ledger_csv(std::ostream& os, const std::vector<ThermoRow>& rows) {
  os << kLedgerHeader << '\n';
  for (const ThermoRow& r : rows) write_ledger_row(os, r);
}

inline std::vector<ThermoRow> parse_ledger_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::IoError, "ledger CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLedgerHeader) fail(ErrorKind::IoError, "unexpected ledger header: " + line);
  std::vector<ThermoRow> rows;
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return parse_double(s);
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> c = split_csv_line(line);
    if (c.size() != 13) fail(ErrorKind::IoError, "ledger row has " + std::to_string(c.size()) + " cells");
    ThermoRow r;
    try {
      r.k = std::stoll(c[0]);
    } catch (const std::exception&) {
      fail(ErrorKind::IoError, "bad step index: '" + c[0] + "'");
    }
    r.E = parse_double(c[1]);
    r.rho = parse_double(c[2]);
    r.d = parse_double(c[3]);
    r.alpha2 = parse_double(c[4]);
    r.S_spec = parse_double(c[5]);
    r.cov = opt(c[6]);
    r.kl = opt(c[7]);
    r.G = opt(c[8]);
    r.A = opt(c[9]);
    r.B = opt(c[10]);
    r.Gamma = opt(c[11]);
    r.Vhat = opt(c[12]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace relax
