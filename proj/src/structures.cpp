#include "knnrate/structures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace knnrate {

std::vector<double> fit_samples(const Regressor& reg) { return predict_batch(reg, reg.data().x); }

LevelSetEstimate estimate_level_set(const Regressor& reg, std::span<const double> fitted,
                                    double lambda, double epsilon) {
  if (!(epsilon >= 0.0)) throw ValidationError("level-set epsilon must be nonnegative");
  if (fitted.size() != reg.data().size())
    throw ValidationError("fitted values do not match the dataset size");
  LevelSetEstimate out;
  out.lambda = lambda;
  out.epsilon = epsilon;
  const double threshold = lambda - epsilon;
  for (std::uint32_t i = 0; i < fitted.size(); ++i) {
    if (fitted[i] >= threshold) {
      out.member_indices.push_back(i);
      out.member_points.push_back(reg.data().x[i]);
    }
  }
  return out;
}

LevelSetEstimate estimate_level_set(const Regressor& reg, double lambda, double epsilon) {
  if (!(epsilon >= 0.0)) throw ValidationError("level-set epsilon must be nonnegative");
  const auto fitted = fit_samples(reg);
  return estimate_level_set(reg, fitted, lambda, epsilon);
}

PointCloud true_level_set_grid(const ScalarField& field, double lambda, const PointSet& grid,
                               std::optional<double> spacing) {
  if (grid.empty()) throw ValidationError("level-set grid is empty");
  PointCloud out;
  out.source = CloudSource::grid_truth;
  out.spacing = spacing;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (field.evaluate(grid[i]) >= lambda) out.points.push_back(grid[i]);
  if (out.points.empty())
    throw EmptySetError("level " + std::to_string(lambda) + " lies above the field on the grid");
  return out;
}

namespace {

double directed_squared(const PointSet& from, const KdTree& to) {
  const auto m = static_cast<std::ptrdiff_t>(from.size());
  double worst = 0.0;
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i)
    worst = std::max(worst, to.nearest_squared_distance(from[i]));
  return worst;
}

void check_pair(const PointSet& a, const PointSet& b) {
  if (a.empty() || b.empty()) throw EmptySetError("Hausdorff distance needs nonempty sets");
  if (a.dim() != b.dim()) throw ValidationError("Hausdorff inputs differ in dimension");
}

}  // namespace

double hausdorff_distance(const PointSet& a, const PointSet& b) {
  check_pair(a, b);
  const KdTree ta(a), tb(b);
  // sqrt is monotone, so the max-min over squared distances gives the
  // same value as the double loop over distances.
  return std::sqrt(std::max(directed_squared(a, tb), directed_squared(b, ta)));
}

double hausdorff_distance(const PointCloud& a, const PointCloud& b) {
  return hausdorff_distance(a.points, b.points);
}

double hausdorff_distance_reference(const PointSet& a, const PointSet& b) {
  check_pair(a, b);
  auto directed = [](const PointSet& from, const PointSet& to) {
    double worst = 0.0;
    for (std::size_t i = 0; i < from.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < to.size(); ++j) best = std::min(best, distance(from[i], to[j]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

MaximaEstimate estimate_maxima(const Regressor& reg, std::span<const double> fitted) {
  if (fitted.size() != reg.data().size())
    throw ValidationError("fitted values do not match the dataset size");
  MaximaEstimate out;
  out.value = fitted[0];
  for (std::uint32_t i = 1; i < fitted.size(); ++i) {
    if (fitted[i] > out.value) {
      out.value = fitted[i];
      out.argmax_index = i;
    }
  }
  auto p = reg.data().x[out.argmax_index];
  out.location.assign(p.begin(), p.end());
  return out;
}

MaximaEstimate estimate_maxima(const Regressor& reg) {
  const auto fitted = fit_samples(reg);
  return estimate_maxima(reg, fitted);
}

std::size_t count_distinct_knn_sets(const Dataset& data, std::size_t k, const PointSet& probes) {
  if (probes.empty()) throw ValidationError("set counting needs at least one probe");
  const KdTree index(data.x);
  const auto m = static_cast<std::ptrdiff_t>(probes.size());
  std::vector<std::vector<std::uint32_t>> sets(probes.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < m; ++i) sets[i] = index.knn(probes[i], k).members;
  std::set<std::vector<std::uint32_t>> distinct(sets.begin(), sets.end());
  return distinct.size();
}

}  // namespace knnrate
