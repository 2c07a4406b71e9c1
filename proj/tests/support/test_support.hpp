#pragma once

#include "loadmix/dataset.hpp"
#include "loadmix/mixture.hpp"

#include <array>
#include <cstdio>
#include <sys/wait.h>
#include <fstream>
#include <sstream>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

inline std::array<double, 48> random_curve(std::mt19937_64& rng, double lo = -5.0, double hi = 5.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::array<double, 48> c{};
  for (double& v : c) v = u(rng);
  return c;
}

inline loadmix::DayCurve to_curve(const std::array<double, 48>& v) {
  loadmix::DayCurve c;
  c.values = v;
  return c;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(LOADMIX_FIXTURES) / name;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("loadmix-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

#ifdef LOADMIX_CLI
struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

/// Runs the loadmix binary with `args` (already shell-quoted where needed).
inline CliRun run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + LOADMIX_CLI + "\" " + args + " 2>&1";
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}
#endif

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline loadmix::mixture::MixtureParams random_params(int k, int p, int q, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> var(0.2, 2.0);
  loadmix::mixture::MixtureParams m;
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    const double w = 0.5 + std::abs(u(rng));
    m.pi.push_back(w);
    total += w;
    loadmix::Matrix b(q, p);
    for (int l = 0; l < q; ++l)
      for (int j = 0; j < p; ++j) b(l, j) = u(rng);
    m.beta.push_back(b);
    loadmix::Vector s(q);
    for (int l = 0; l < q; ++l) s(l) = var(rng);
    m.sigma_diag.push_back(s);
  }
  for (double& w : m.pi) w /= total;
  return m;
}

inline loadmix::RegressionDataset random_dataset(int n, int p, int q, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  loadmix::RegressionDataset d;
  d.x.resize(n, p);
  d.y.resize(n, q);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.x(i, j) = z(rng);
    for (int l = 0; l < q; ++l) d.y(i, l) = z(rng);
  }
  d.meta.assign(static_cast<std::size_t>(n), loadmix::RowMeta{});
  return d;
}

} // namespace testsupport
