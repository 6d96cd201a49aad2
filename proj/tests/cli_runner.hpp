// Runs the relax_cli binary and captures stdout, stderr and the exit code.

#pragma once

#include <sys/wait.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace relax::testing {

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline std::filesystem::path scratch_path(const std::string& stem) {
  static std::atomic<int> counter{0};
  return std::filesystem::temp_directory_path() /
         ("relax_" + stem + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
}

inline CliResult run_cli(const std::string& cli, const std::string& args) {
  const auto err_path = scratch_path("stderr");
  const std::string cmd = "'" + cli + "' " + args + " 2>'" + err_path.string() + "'";
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err_path);
  std::filesystem::remove(err_path);
  return r;
}

}  // namespace relax::testing
