#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "knnrate/errors.hpp"

namespace knnrate {

// Row-major set of n points in R^dim. Point i keeps index i for its lifetime.
class PointSet {
 public:
  PointSet() = default;

  PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw ValidationError("point set dimension must be positive");
    if (coords_.size() % dim_ != 0)
      throw ValidationError("coordinate count " + std::to_string(coords_.size()) +
                            " is not a multiple of dimension " + std::to_string(dim_));
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (!std::isfinite(coords_[i]))
        throw ValidationError("non-finite coordinate at point " + std::to_string(i / dim_) +
                              ", axis " + std::to_string(i % dim_));
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  const std::vector<double>& coords() const noexcept { return coords_; }

  void push_back(std::span<const double> p) {
    if (dim_ == 0) dim_ = p.size();
    if (p.size() != dim_) throw ValidationError("point dimension mismatch");
    for (double c : p)
      if (!std::isfinite(c)) throw ValidationError("non-finite coordinate");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

// Squared Euclidean distance, accumulated in axis order. Every distance in the
// library goes through this function so the tree and the brute-force scan see
// bit-identical values.
inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

}  // namespace knnrate
