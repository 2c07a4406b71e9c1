#include "loadmix/synth.hpp"

#include "loadmix/errors.hpp"
#include "loadmix/rng.hpp"
#include "loadmix/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace loadmix::synth {

void GeneratorSpec::validate() const {
  if (k < 1) throw ConfigError("generator needs k >= 1");
  if (n < 1) throw ConfigError("generator needs n >= 1");
  if (static_cast<int>(pi.size()) != k || static_cast<int>(beta.size()) != k ||
      static_cast<int>(sigma_diag.size()) != k)
    throw ConfigError("pi, beta and sigma_diag must each have k entries");
  double sum = 0.0;
  for (double v : pi) {
    if (!(v >= 0.0)) throw ConfigError("pi must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("pi must sum to 1");
  for (int c = 0; c < k; ++c) {
    if (beta[c].rows() != q() || beta[c].cols() != p())
      throw ConfigError("beta matrices must share one q x p shape");
    if (sigma_diag[c].size() != q()) throw ConfigError("sigma_diag must have q entries");
    if ((sigma_diag[c].array() < 0.0).any() || !sigma_diag[c].allFinite())
      throw ConfigError("variances must be finite and non-negative");
    if (!beta[c].allFinite()) throw ConfigError("beta must be finite");
  }
  if (p() < 1 || q() < 1) throw ConfigError("beta must be non-empty");
  if (x_law == XLaw::resample && (fixture_x.rows() < 1 || fixture_x.cols() != p()))
    throw ConfigError("resample law needs a fixture with p columns");
}

Generated generate(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::discrete_distribution<int> cat(spec.pi.begin(), spec.pi.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<Eigen::Index> pick(
      0, spec.x_law == XLaw::resample ? spec.fixture_x.rows() - 1 : 0);

  const Eigen::Index p = spec.p();
  const Eigen::Index q = spec.q();
  Generated g;
  g.data.x.resize(spec.n, p);
  g.data.y.resize(spec.n, q);
  g.data.meta.assign(static_cast<std::size_t>(spec.n), RowMeta{});
  g.labels.resize(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    const int k = cat(rng);
    g.labels[static_cast<std::size_t>(i)] = k;
    if (spec.x_law == XLaw::resample) {
      g.data.x.row(i) = spec.fixture_x.row(pick(rng));
    } else {
      for (Eigen::Index j = 0; j < p; ++j) g.data.x(i, j) = normal(rng);
    }
    const Vector mean = spec.beta[k] * g.data.x.row(i).transpose();
    for (Eigen::Index l = 0; l < q; ++l)
      g.data.y(i, l) = mean(l) + std::sqrt(spec.sigma_diag[k](l)) * normal(rng);
    g.data.meta[static_cast<std::size_t>(i)].consumer = "s" + std::to_string(i + 1);
  }
  g.truth.pi = spec.pi;
  g.truth.beta = spec.beta;
  g.truth.sigma_diag = spec.sigma_diag;
  return g;
}

GeneratorSpec separated_regime(int k, int p, int q, int n, double snr, std::uint64_t seed) {
  if (k < 1 || p < 1 || q < 1 || n < 1) throw ConfigError("separated_regime needs positive sizes");
  if (!(snr > 0.0)) throw ConfigError("snr must be positive");
  const int cells = p * q;
  if (cells < k) throw ConfigError("too few coefficient cells for disjoint supports");
  Rng rng(derive_seed(seed, {0x5eedULL}));
  std::vector<int> order(static_cast<std::size_t>(cells));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  GeneratorSpec spec;
  spec.k = k;
  spec.n = n;
  spec.seed = seed;
  spec.pi.assign(static_cast<std::size_t>(k), 1.0 / k);
  // 5 to 10 entries per cluster, fewer when p * q cannot hold that many.
  const int max_size = std::min(10, cells / k);
  std::uniform_int_distribution<int> size_dist(std::min(5, max_size), max_size);
  std::uniform_real_distribution<double> mag(1.0, 2.0);
  std::bernoulli_distribution sign(0.5);
  std::size_t cursor = 0;
  for (int c = 0; c < k; ++c) {
    Matrix b = Matrix::Zero(q, p);
    const int s = size_dist(rng);
    for (int e = 0; e < s; ++e) {
      const int cell = order[cursor++];
      b(cell / p, cell % p) = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    }
    spec.beta.push_back(b);
    const double var = b.squaredNorm() / (static_cast<double>(q) * snr);
    spec.sigma_diag.push_back(Vector::Constant(q, var));
  }
  return spec;
}

void PanelSpec::validate() const {
  if (consumers < 1 || days < 2) throw ConfigError("panel needs consumers >= 1 and days >= 2");
  if (transitions.empty()) throw ConfigError("panel needs at least one transition");
  for (const auto& m : transitions)
    if (m.rows() != 9 || m.cols() != 9) throw ConfigError("panel transitions must be 9 x 9");
  if (static_cast<int>(regime.size()) != consumers)
    throw ConfigError("panel needs one regime per consumer");
  for (int r : regime)
    if (r < 0 || r >= static_cast<int>(transitions.size()))
      throw ConfigError("panel regime index out of range");
  if (noise_sd < 0.0 || fine_sd < 0.0) throw ConfigError("panel noise must be non-negative");
}

ingest::MeterPanel regime_panel(const PanelSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {0x9a9e1ULL}));
  std::normal_distribution<double> z(0.0, 1.0);
  ingest::MeterPanel panel;
  for (int d = 0; d < spec.days; ++d) {
    Date day = spec.start;
    for (int s = 0; s < d; ++s) day = day.next();
    panel.days.push_back(day);
  }
  for (int i = 0; i < spec.consumers; ++i) {
    panel.consumer_ids.push_back("c" + std::to_string(i + 1));
    const Matrix& m = spec.transitions[static_cast<std::size_t>(spec.regime[static_cast<std::size_t>(i)])];
    Vector f(9);
    for (Eigen::Index j = 0; j < 9; ++j) f(j) = z(rng);
    std::vector<std::array<double, kSlotsPerDay>> curves;
    for (int d = 0; d < spec.days; ++d) {
      if (d > 0) {
        Vector next = m * f;
        for (Eigen::Index j = 0; j < 9; ++j) next(j) += spec.noise_sd * z(rng);
        f = next;
      }
      wavelet::WaveletDecomp w{};
      // A constant c over a 16-sample block has approximation coefficient 4c.
      for (double& a : w.a4) a = 4.0 * spec.level;
      for (std::size_t j = 0; j < 3; ++j) w.d4[j] = f(static_cast<Eigen::Index>(j));
      for (std::size_t j = 0; j < 6; ++j) w.d3[j] = f(static_cast<Eigen::Index>(3 + j));
      for (double& v : w.d2) v = spec.fine_sd * z(rng);
      for (double& v : w.d1) v = spec.fine_sd * z(rng);
      curves.push_back(wavelet::haar_idwt(w));
    }
    panel.readings.push_back(std::move(curves));
  }
  panel.validate();
  return panel;
}

PanelSpec two_regime_panel(int consumers, int days, std::uint64_t seed) {
  if (consumers < 1) throw ConfigError("panel needs consumers >= 1");
  Rng rng(derive_seed(seed, {0x7e61ULL}));
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix g(9, 9);
  for (Eigen::Index r = 0; r < 9; ++r)
    for (Eigen::Index c = 0; c < 9; ++c) g(r, c) = z(rng);
  const Matrix rotation = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(9, 9);
  PanelSpec spec;
  spec.consumers = consumers;
  spec.days = days;
  spec.transitions = {0.9 * Matrix::Identity(9, 9), 0.9 * rotation};
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < consumers; ++i) spec.regime.push_back(coin(rng) ? 1 : 0);
  spec.seed = seed;
  return spec;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("label vectors differ in length");
  if (a.size() < 2) throw DataError("adjusted Rand index needs at least 2 labels");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra;
  std::map<int, double> rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_joint = 0.0;
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto& [key, m] : joint) sum_joint += pairs(m);
  for (const auto& [key, m] : ra) sum_a += pairs(m);
  for (const auto& [key, m] : rb) sum_b += pairs(m);
  const double total = pairs(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both labelings trivial in the same way
  return (sum_joint - expected) / (max_index - expected);
}

} // namespace loadmix::synth
