#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "knnrate/regression.hpp"

namespace knnrate {

struct LevelSetEstimate {
  double lambda = 0.0;
  double epsilon = 0.0;
  std::vector<std::uint32_t> member_indices;  // ascending
  PointSet member_points;
};

enum class CloudSource { samples, grid_truth };

struct PointCloud {
  PointSet points;
  CloudSource source = CloudSource::samples;
  std::optional<double> spacing;  // grid spacing h for discretized truth
};

struct MaximaEstimate {
  std::uint32_t argmax_index = 0;
  std::vector<double> location;
  double value = 0.0;
};

// {x_i : f_k(x_i) >= lambda - epsilon}, equality included.
LevelSetEstimate estimate_level_set(const Regressor& reg, double lambda, double epsilon);

// Same rule given precomputed f_k at the samples.
LevelSetEstimate estimate_level_set(const Regressor& reg, std::span<const double> fitted,
                                    double lambda, double epsilon);

// Grid points with f >= lambda. Throws EmptySetError when none qualify.
PointCloud true_level_set_grid(const ScalarField& field, double lambda, const PointSet& grid,
                               std::optional<double> spacing = std::nullopt);

// Exact over finite sets. Indexed search over the larger side, OpenMP over the
// query side.
double hausdorff_distance(const PointCloud& a, const PointCloud& b);
double hausdorff_distance(const PointSet& a, const PointSet& b);
// Serial double loop twin.
double hausdorff_distance_reference(const PointSet& a, const PointSet& b);

// argmax of f_k over the samples, smallest index on ties.
MaximaEstimate estimate_maxima(const Regressor& reg);
MaximaEstimate estimate_maxima(const Regressor& reg, std::span<const double> fitted);

// f_k at every sample point.
std::vector<double> fit_samples(const Regressor& reg);

// Distinct k-NN member sets over the probes: a lower bound on the number of
// distinct k-NN sets over the whole domain.
std::size_t count_distinct_knn_sets(const Dataset& data, std::size_t k, const PointSet& probes);

}  // namespace knnrate
