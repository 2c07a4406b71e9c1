#include "loadmix/wavelet.hpp"

#include "loadmix/errors.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace loadmix::wavelet {

namespace {

const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// One analysis step: approximation and detail halves of `in`.
void analyse(std::span<const double> in, std::span<double> approx, std::span<double> detail) {
  for (std::size_t i = 0; i < approx.size(); ++i) {
    approx[i] = (in[2 * i] + in[2 * i + 1]) * kInvSqrt2;
    detail[i] = (in[2 * i] - in[2 * i + 1]) * kInvSqrt2;
  }
}

void synthesise(std::span<const double> approx, std::span<const double> detail,
                std::span<double> out) {
  for (std::size_t i = 0; i < approx.size(); ++i) {
    out[2 * i] = (approx[i] + detail[i]) * kInvSqrt2;
    out[2 * i + 1] = (approx[i] - detail[i]) * kInvSqrt2;
  }
}

} // namespace

std::span<double> WaveletDecomp::band(Band b) {
  switch (b) {
  case Band::a4: return a4;
  case Band::d4: return d4;
  case Band::d3: return d3;
  case Band::d2: return d2;
  case Band::d1: return d1;
  }
  return {};
}

std::span<const double> WaveletDecomp::band(Band b) const {
  return const_cast<WaveletDecomp*>(this)->band(b);
}

double WaveletDecomp::energy() const {
  double e = 0.0;
  for (Band b : {Band::a4, Band::d4, Band::d3, Band::d2, Band::d1})
    for (double c : band(b)) e += c * c;
  return e;
}

void PreprocessSpec::validate() const {
  if (mode != 1 && mode != 2)
    throw ConfigError("preprocessing mode must be 1 or 2, got " + std::to_string(mode));
}

int PreprocessSpec::feature_dim() const {
  validate();
  return mode == 1 ? 12 : 9;
}

std::vector<std::string> PreprocessSpec::feature_labels() const {
  validate();
  std::vector<std::string> out;
  auto add = [&out](const char* name, int count) {
    for (int i = 1; i <= count; ++i) out.push_back(std::string(name) + "_" + std::to_string(i));
  };
  if (mode == 1) add("A4", 3);
  add("D4", 3);
  add("D3", 6);
  return out;
}

WaveletDecomp haar_dwt(std::span<const double> signal) {
  if (signal.size() != kSlotsPerDay)
    throw DimensionError("Haar level-4 transform needs 48 samples, got " +
                         std::to_string(signal.size()));
  WaveletDecomp out;
  std::array<double, 24> a1{};
  std::array<double, 12> a2{};
  std::array<double, 6> a3{};
  analyse(signal, a1, out.d1);
  analyse(a1, a2, out.d2);
  analyse(a2, a3, out.d3);
  analyse(a3, out.a4, out.d4);
  return out;
}

WaveletDecomp haar_dwt(const DayCurve& curve) { return haar_dwt(curve.values); }

std::array<double, kSlotsPerDay> haar_idwt(const WaveletDecomp& decomp) {
  std::array<double, 6> a3{};
  std::array<double, 12> a2{};
  std::array<double, 24> a1{};
  std::array<double, kSlotsPerDay> out{};
  synthesise(decomp.a4, decomp.d4, a3);
  synthesise(a3, decomp.d3, a2);
  synthesise(a2, decomp.d2, a1);
  synthesise(a1, decomp.d1, out);
  return out;
}

std::array<double, kSlotsPerDay> reconstruct_band(const WaveletDecomp& decomp, Band band) {
  WaveletDecomp only;
  const auto src = decomp.band(band);
  const auto dst = only.band(band);
  std::copy(src.begin(), src.end(), dst.begin());
  return haar_idwt(only);
}

Vector preprocess(std::span<const double> signal, const PreprocessSpec& spec) {
  spec.validate();
  if (signal.size() != kSlotsPerDay)
    throw DimensionError("preprocessing needs 48 samples, got " + std::to_string(signal.size()));
  std::array<double, kSlotsPerDay> work{};
  std::copy(signal.begin(), signal.end(), work.begin());
  if (spec.mode == 1) {
    const double mean = std::accumulate(work.begin(), work.end(), 0.0) / kSlotsPerDay;
    for (double& v : work) v -= mean;
  }
  const WaveletDecomp d = haar_dwt(work);
  Vector out(spec.feature_dim());
  Eigen::Index pos = 0;
  if (spec.mode == 1)
    for (double c : d.a4) out(pos++) = c;
  for (double c : d.d4) out(pos++) = c;
  for (double c : d.d3) out(pos++) = c;
  return out;
}

Vector preprocess(const DayCurve& curve, const PreprocessSpec& spec) {
  return preprocess(curve.values, spec);
}

std::array<double, kSlotsPerDay> reconstruct_features(const Vector& features,
                                                      const PreprocessSpec& spec,
                                                      const std::array<double, 3>& a4,
                                                      double level) {
  if (features.size() != spec.feature_dim())
    throw DimensionError("feature vector has " + std::to_string(features.size()) +
                         " entries, preprocessing " + std::to_string(spec.mode) + " expects " +
                         std::to_string(spec.feature_dim()));
  WaveletDecomp d;
  Eigen::Index pos = 0;
  if (spec.mode == 1) {
    for (double& c : d.a4) c = features(pos++);
  } else {
    d.a4 = a4;
  }
  for (double& c : d.d4) c = features(pos++);
  for (double& c : d.d3) c = features(pos++);
  auto curve = haar_idwt(d);
  if (spec.mode == 1)
    for (double& v : curve) v += level;
  return curve;
}

} // namespace loadmix::wavelet
