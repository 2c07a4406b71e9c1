#pragma once

#include "loadmix/dataset.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace loadmix::wavelet {

enum class Band { a4, d4, d3, d2, d1 };

/// Orthonormal Haar analysis of a 48-sample day at level 4.
/// Coefficients are stored left-to-right in time within each band.
struct WaveletDecomp {
  std::array<double, 3> a4{};
  std::array<double, 3> d4{};
  std::array<double, 6> d3{};
  std::array<double, 12> d2{};
  std::array<double, 24> d1{};

  std::span<double> band(Band b);
  std::span<const double> band(Band b) const;
  double energy() const;
};

/// Preprocessing 1: centre the curve, keep (A4, D4, D3) -> 12 features.
/// Preprocessing 2: keep (D4, D3) -> 9 features.
struct PreprocessSpec {
  int mode = 2;

  /// Throws ConfigError unless mode is 1 or 2.
  void validate() const;
  int feature_dim() const;
  /// Band label for every feature position, e.g. "A4_1", "D3_6".
  std::vector<std::string> feature_labels() const;
};

/// Throws DimensionError when `signal` is not 48 samples long.
WaveletDecomp haar_dwt(std::span<const double> signal);
WaveletDecomp haar_dwt(const DayCurve& curve);

std::array<double, kSlotsPerDay> haar_idwt(const WaveletDecomp& decomp);

/// Time-domain contribution of one band; the five bands sum to the signal.
std::array<double, kSlotsPerDay> reconstruct_band(const WaveletDecomp& decomp, Band band);

Vector preprocess(const DayCurve& curve, const PreprocessSpec& spec);
Vector preprocess(std::span<const double> signal, const PreprocessSpec& spec);

/// Inverse of `preprocess` up to what it discards: the returned curve is the
/// (A4, D4, D3) reconstruction with D2 = D1 = 0. `a4` supplies the
/// approximation for mode 2 (mode 2 features carry none); `level` is added
/// back for mode 1.
std::array<double, kSlotsPerDay> reconstruct_features(const Vector& features,
                                                      const PreprocessSpec& spec,
                                                      const std::array<double, 3>& a4,
                                                      double level);

} // namespace loadmix::wavelet
