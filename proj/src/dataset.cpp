#include "loadmix/dataset.hpp"

#include "loadmix/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace loadmix {

void RegressionDataset::validate() const {
  if (x.rows() < 1) throw DataError("empty dataset");
  if (x.rows() != y.rows())
    throw DimensionError("x has " + std::to_string(x.rows()) + " rows but y has " +
                         std::to_string(y.rows()));
  if (!meta.empty() && static_cast<Eigen::Index>(meta.size()) != x.rows())
    throw DimensionError("metadata is not row-aligned with features");
  if (!raw.empty() && static_cast<Eigen::Index>(raw.size()) != x.rows())
    throw DimensionError("raw curves are not row-aligned with features");
  if (!x.allFinite() || !y.allFinite()) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (!x.row(i).allFinite() || !y.row(i).allFinite())
        throw DataError("row " + std::to_string(i + 1) + " contains non-finite values");
  }
}

RegressionDataset RegressionDataset::subset(const std::vector<Eigen::Index>& idx) const {
  RegressionDataset out;
  out.preprocessing = preprocessing;
  out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
  out.y.resize(static_cast<Eigen::Index>(idx.size()), y.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto i = idx[r];
    out.x.row(static_cast<Eigen::Index>(r)) = x.row(i);
    out.y.row(static_cast<Eigen::Index>(r)) = y.row(i);
    if (!meta.empty()) out.meta.push_back(meta[static_cast<std::size_t>(i)]);
    if (!raw.empty()) out.raw.push_back(raw[static_cast<std::size_t>(i)]);
  }
  return out;
}

void RegressionDataset::append(const RegressionDataset& other) {
  if (x.rows() == 0) {
    *this = other;
    return;
  }
  if (other.p() != p() || other.q() != q())
    throw DimensionError("cannot append datasets with different feature dimensions");
  Matrix nx(n() + other.n(), p());
  nx << x, other.x;
  Matrix ny(n() + other.n(), q());
  ny << y, other.y;
  x = std::move(nx);
  y = std::move(ny);
  meta.insert(meta.end(), other.meta.begin(), other.meta.end());
  raw.insert(raw.end(), other.raw.begin(), other.raw.end());
}

std::string fingerprint(const RegressionDataset& data) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* ptr, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(ptr);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int64_t dims[3] = {data.n(), data.p(), data.q()};
  mix(dims, sizeof dims);
  // Column-major traversal; values hashed by bit pattern.
  for (Eigen::Index j = 0; j < data.x.cols(); ++j)
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
      const double v = data.x(i, j);
      mix(&v, sizeof v);
    }
  for (Eigen::Index j = 0; j < data.y.cols(); ++j)
    for (Eigen::Index i = 0; i < data.y.rows(); ++i) {
      const double v = data.y(i, j);
      mix(&v, sizeof v);
    }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace loadmix
