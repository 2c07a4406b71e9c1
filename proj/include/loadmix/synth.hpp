#pragma once

#include "loadmix/dataset.hpp"
#include "loadmix/date.hpp"
#include "loadmix/ingest.hpp"
#include "loadmix/mixture.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace loadmix::synth {

enum class XLaw { standard_normal, resample };

struct GeneratorSpec {
  int k = 0;
  std::vector<double> pi;
  std::vector<Matrix> beta;        // q x p each
  std::vector<Vector> sigma_diag;  // q each; zero allowed (noiseless)
  int n = 0;
  XLaw x_law = XLaw::standard_normal;
  Matrix fixture_x;  // rows to bootstrap from when x_law == resample
  std::uint64_t seed = 1;

  Eigen::Index p() const { return beta.empty() ? 0 : beta.front().cols(); }
  Eigen::Index q() const { return beta.empty() ? 0 : beta.front().rows(); }

  /// Throws ConfigError on a malformed spec.
  void validate() const;
};

struct Generated {
  RegressionDataset data;
  std::vector<int> labels;  // 0-based
  mixture::MixtureParams truth;
};

/// Draws k_i ~ Categorical(pi), x_i ~ x_law, y_i = beta_{k_i} x_i + eps_i.
/// Bit-identical for identical specs.
Generated generate(const GeneratorSpec& spec);

/// A well-separated regime: each beta_k has 5 to 10 non-zero entries (capped
/// at p q / k) of
/// magnitude in [1, 2] on distinct positions, sigma^2 set so that
/// ||beta_k||_F^2 / (q sigma_k^2) = snr. Standard-normal x, equal proportions.
GeneratorSpec separated_regime(int k, int p, int q, int n, double snr, std::uint64_t seed);

/// Raw 48-slot consumer curves whose day-to-day dynamics follow one of
/// several linear laws on the (D4, D3) wavelet coefficients: day t =
/// M_r day t-1 + noise, with r the consumer's regime. A4 holds a constant
/// level and D2, D1 carry small independent noise, so preprocessing 2
/// features follow a mixture of regressions exactly.
struct PanelSpec {
  int consumers = 0;
  Date start{2010, 1, 5};
  int days = 3;
  std::vector<Matrix> transitions;  // 9 x 9 each
  std::vector<int> regime;          // per consumer, index into transitions
  double noise_sd = 0.3;
  double fine_sd = 0.05;
  double level = 5.0;
  std::uint64_t seed = 1;

  void validate() const;
};

ingest::MeterPanel regime_panel(const PanelSpec& spec);

/// Two regimes, persistence 0.9 I against 0.9 Q with Q a random rotation,
/// consumers assigned by fair coin. Starts on a Tuesday.
PanelSpec two_regime_panel(int consumers, int days, std::uint64_t seed);

/// Adjusted Rand index from the pair-counting contingency table. Labels are
/// arbitrary integers. Two single-cluster labelings give 1.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

} // namespace loadmix::synth
