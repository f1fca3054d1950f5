#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "knnrate/point_set.hpp"

namespace knnrate {

// k-NN set with the inf-radius, tie-inclusive semantics: `radius` is the
// smallest r whose closed ball holds at least k points, and `members` is every
// point inside that closed ball. Ties are decided by exact equality of squared
// distances, with no epsilon.
struct NeighborSet {
  double radius = 0.0;
  double squared_radius = 0.0;
  std::vector<std::uint32_t> members;  // ascending

  std::size_t count() const noexcept { return members.size(); }
  friend bool operator==(const NeighborSet&, const NeighborSet&) = default;
};

// Exact Euclidean kd-tree. Immutable after construction; concurrent queries
// are safe. The index keeps a reference to `points`, which must outlive it.
class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 16;

  explicit KdTree(const PointSet& points);

  const PointSet& points() const noexcept { return *points_; }
  std::size_t size() const noexcept { return points_->size(); }
  std::size_t dim() const noexcept { return points_->dim(); }

  NeighborSet knn(std::span<const double> query, std::size_t k) const;

  // Indices at distance <= r, ascending.
  std::vector<std::uint32_t> range(std::span<const double> query, double r) const;

  // Squared distance to the nearest indexed point.
  double nearest_squared_distance(std::span<const double> query) const;

 private:
  struct Node {
    std::uint32_t begin, end;          // slice of order_
    std::int32_t left = -1, right = -1;  // child node ids, -1 for leaves
    std::vector<double> lo, hi;        // bounding box
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  double box_squared_distance(const Node& node, std::span<const double> q) const noexcept;

  // Appends (squared distance, index) for every point with squared distance <= bound.
  void collect(std::int32_t node, std::span<const double> q, double bound,
               std::vector<std::pair<double, std::uint32_t>>& out) const;
  void nearest(std::int32_t node, std::span<const double> q, double& best) const;

  void check_query(std::span<const double> query) const;

  const PointSet* points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

using SpatialIndex = KdTree;

SpatialIndex build_index(const PointSet& points);

NeighborSet knn_query(const SpatialIndex& index, std::span<const double> query, std::size_t k);

std::vector<std::uint32_t> range_query(const SpatialIndex& index, std::span<const double> query,
                                       double r);

// Reference twin of knn_query: full scan, stable sort by (distance, index).
NeighborSet brute_force_knn(const PointSet& points, std::span<const double> query, std::size_t k);

// Reference twin of range_query.
std::vector<std::uint32_t> brute_force_range(const PointSet& points,
                                             std::span<const double> query, double r);

}  // namespace knnrate
