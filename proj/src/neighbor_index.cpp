#include "knnrate/neighbor_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace knnrate {

namespace {

void check_k(std::size_t k, std::size_t n) {
  if (k == 0) throw ValidationError("k must be at least 1");
  if (k > n)
    throw ValidationError("k = " + std::to_string(k) + " exceeds sample count n = " +
                          std::to_string(n));
}

void check_dim(std::span<const double> query, std::size_t dim) {
  if (query.size() != dim)
    throw ValidationError("query dimension " + std::to_string(query.size()) +
                          " does not match index dimension " + std::to_string(dim));
}

void check_radius(double r) {
  if (!(r >= 0.0)) throw ValidationError("range radius must be nonnegative");
  if (!std::isfinite(r)) throw ValidationError("range radius must be finite");
}

// Writes `members` in ascending order. A bitmap scan over all n indices beats
// a comparison sort once the member list is a sizeable fraction of n.
void sort_members(std::vector<std::uint32_t>& members, std::size_t n) {
  const std::size_t m = members.size();
  if (m < 64 || m * 16 < n / 64) {
    std::sort(members.begin(), members.end());
    return;
  }
  thread_local std::vector<std::uint64_t> bits;
  bits.assign((n + 63) / 64, 0);
  for (auto i : members) bits[i >> 6] |= std::uint64_t{1} << (i & 63);
  std::size_t out = 0;
  for (std::size_t w = 0; w < bits.size(); ++w)
    for (std::uint64_t b = bits[w]; b; b &= b - 1)
      members[out++] = static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(std::countr_zero(b)));
}

NeighborSet finish(std::vector<std::pair<double, std::uint32_t>>& cand, std::size_t k, std::size_t n) {
  auto kth = cand.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(cand.begin(), kth, cand.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  NeighborSet out;
  out.squared_radius = kth->first;
  out.radius = std::sqrt(out.squared_radius);
  out.members.reserve(k);
  for (const auto& [d2, i] : cand)
    if (d2 <= out.squared_radius) out.members.push_back(i);
  sort_members(out.members, n);
  return out;
}

}  // namespace

KdTree::KdTree(const PointSet& points) : points_(&points) {
  if (points.empty()) throw ValidationError("cannot index an empty point set");
  if (points.size() > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("point set too large for 32-bit indices");
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(points.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const std::size_t dim = points_->dim();
  Node node{begin, end, -1, -1, std::vector<double>(dim, std::numeric_limits<double>::infinity()),
            std::vector<double>(dim, -std::numeric_limits<double>::infinity())};
  for (std::uint32_t i = begin; i < end; ++i) {
    auto p = (*points_)[order_[i]];
    for (std::size_t j = 0; j < dim; ++j) {
      node.lo[j] = std::min(node.lo[j], p[j]);
      node.hi[j] = std::max(node.hi[j], p[j]);
    }
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  std::size_t axis = 0;
  double spread = -1.0;
  for (std::size_t j = 0; j < dim; ++j) {
    if (node.hi[j] - node.lo[j] > spread) {
      spread = node.hi[j] - node.lo[j];
      axis = j;
    }
  }
  nodes_.push_back(std::move(node));
  if (end - begin <= kLeafSize || spread <= 0.0) return id;

  // Median split on the widest axis; index breaks coordinate ties so the
  // layout depends only on the input order.
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = (*points_)[a][axis], cb = (*points_)[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

// Accumulates in axis order with zero for interior axes, so for any point p in
// the box the rounded result never exceeds squared_distance(q, p).
double KdTree::box_squared_distance(const Node& node, std::span<const double> q) const noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    double d = 0.0;
    if (q[j] < node.lo[j])
      d = q[j] - node.lo[j];
    else if (q[j] > node.hi[j])
      d = q[j] - node.hi[j];
    s += d * d;
  }
  return s;
}

void KdTree::collect(std::int32_t id, std::span<const double> q, double bound,
                     std::vector<std::pair<double, std::uint32_t>>& out) const {
  const Node& node = nodes_[id];
  if (box_squared_distance(node, q) > bound) return;
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d2 = squared_distance(q, (*points_)[order_[i]]);
      if (d2 <= bound) out.emplace_back(d2, order_[i]);
    }
    return;
  }
  collect(node.left, q, bound, out);
  collect(node.right, q, bound, out);
}

void KdTree::nearest(std::int32_t id, std::span<const double> q, double& best) const {
  const Node& node = nodes_[id];
  if (box_squared_distance(node, q) > best) return;
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i)
      best = std::min(best, squared_distance(q, (*points_)[order_[i]]));
    return;
  }
  const double dl = box_squared_distance(nodes_[node.left], q);
  const double dr = box_squared_distance(nodes_[node.right], q);
  if (dl <= dr) {
    nearest(node.left, q, best);
    nearest(node.right, q, best);
  } else {
    nearest(node.right, q, best);
    nearest(node.left, q, best);
  }
}

void KdTree::check_query(std::span<const double> query) const {
  check_dim(query, dim());
  for (double c : query)
    if (!std::isfinite(c)) throw ValidationError("query has a non-finite coordinate");
}

NeighborSet KdTree::knn(std::span<const double> query, std::size_t k) const {
  check_query(query);
  check_k(k, size());

  // Best-first over nodes by box distance. Once k points are in hand their
  // k-th distance bounds r_k^2; every node whose box lies within the bound
  // is then opened, so all points at squared distance <= r_k^2 are seen.
  using Entry = std::pair<double, std::int32_t>;
  thread_local std::vector<Entry> heap;
  thread_local std::vector<std::pair<double, std::uint32_t>> cand;
  thread_local std::vector<double> scratch;
  heap.clear();
  cand.clear();
  const auto later = [](const Entry& a, const Entry& b) { return a.first > b.first; };
  heap.emplace_back(0.0, 0);
  double bound = std::numeric_limits<double>::infinity();
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), later);
    const auto [box, id] = heap.back();
    heap.pop_back();
    if (box > bound) break;
    const Node& node = nodes_[id];
    if (node.left >= 0) {
      for (std::int32_t child : {node.left, node.right}) {
        const double d = box_squared_distance(nodes_[child], query);
        if (d <= bound) {
          heap.emplace_back(d, child);
          std::push_heap(heap.begin(), heap.end(), later);
        }
      }
      continue;
    }
    const bool had_k = cand.size() >= k;
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d2 = squared_distance(query, (*points_)[order_[i]]);
      if (d2 <= bound) cand.emplace_back(d2, order_[i]);
    }
    if (!had_k && cand.size() >= k) {
      scratch.resize(cand.size());
      for (std::size_t i = 0; i < cand.size(); ++i) scratch[i] = cand[i].first;
      std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
      bound = scratch[k - 1];
    }
  }
  return finish(cand, k, size());
}

std::vector<std::uint32_t> KdTree::range(std::span<const double> query, double r) const {
  check_query(query);
  check_radius(r);
  // Pad the squared bound, then filter on the rounded distance itself so the
  // membership test matches brute_force_range exactly.
  const double bound = std::nextafter(r * r, std::numeric_limits<double>::infinity()) * (1 + 1e-12);
  std::vector<std::pair<double, std::uint32_t>> cand;
  collect(0, query, bound, cand);
  std::vector<std::uint32_t> out;
  for (const auto& [d2, i] : cand)
    if (std::sqrt(d2) <= r) out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

double KdTree::nearest_squared_distance(std::span<const double> query) const {
  check_query(query);
  double best = std::numeric_limits<double>::infinity();
  nearest(0, query, best);
  return best;
}

SpatialIndex build_index(const PointSet& points) { return KdTree(points); }

NeighborSet knn_query(const SpatialIndex& index, std::span<const double> query, std::size_t k) {
  return index.knn(query, k);
}

std::vector<std::uint32_t> range_query(const SpatialIndex& index, std::span<const double> query,
                                       double r) {
  return index.range(query, r);
}

NeighborSet brute_force_knn(const PointSet& points, std::span<const double> query, std::size_t k) {
  if (points.empty()) throw ValidationError("cannot query an empty point set");
  check_dim(query, points.dim());
  check_k(k, points.size());
  std::vector<std::pair<double, std::uint32_t>> all(points.size());
  for (std::uint32_t i = 0; i < points.size(); ++i)
    all[i] = {squared_distance(query, points[i]), i};
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  NeighborSet out;
  out.squared_radius = all[k - 1].first;
  out.radius = std::sqrt(out.squared_radius);
  for (const auto& [d2, i] : all) {
    if (d2 > out.squared_radius) break;
    out.members.push_back(i);
  }
  std::sort(out.members.begin(), out.members.end());
  return out;
}

std::vector<std::uint32_t> brute_force_range(const PointSet& points,
                                             std::span<const double> query, double r) {
  check_dim(query, points.dim());
  check_radius(r);
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < points.size(); ++i)
    if (std::sqrt(squared_distance(query, points[i])) <= r) out.push_back(i);
  return out;
}

}  // namespace knnrate
