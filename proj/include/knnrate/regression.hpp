#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnrate/neighbor_index.hpp"
#include "knnrate/point_set.hpp"

namespace knnrate {

struct Dataset {
  PointSet x;
  std::vector<double> y;

  Dataset() = default;
  Dataset(PointSet points, std::vector<double> observations);

  std::size_t size() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return x.dim(); }
};

// Text format: first line "D n", then n lines of D coordinates followed by the
// observation, whitespace separated.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::string& path, const Dataset& data);

// Constants a generator declares about its field. Level-set constants refer to
// `level`; for a peaked field (beta = 2) they refer to the neighbourhood of `peak`.
struct FieldMetadata {
  std::optional<double> alpha, c_alpha;
  std::optional<double> level, beta, c_low, c_high, r_m;
  std::optional<std::vector<double>> peak;
};

class ScalarField {
 public:
  using Function = std::function<double(std::span<const double>)>;
  // (x, r) -> sup over |x' - x| <= r of a one-sided change.
  using Modulus = std::function<double(std::span<const double>, double)>;

  ScalarField() = default;
  ScalarField(std::size_t dim, Function f, FieldMetadata meta = {}, Modulus rise = {},
              Modulus drop = {});

  std::size_t dim() const noexcept { return dim_; }
  const FieldMetadata& metadata() const noexcept { return meta_; }
  FieldMetadata& metadata() noexcept { return meta_; }

  double evaluate(std::span<const double> x) const;
  double operator()(std::span<const double> x) const { return evaluate(x); }

  bool has_closed_form_modulus() const noexcept { return rise_ && drop_; }
  // sup f(x') - f(x) and sup f(x) - f(x') over the ball; computed over all of
  // R^D, so they upper-bound the support-restricted values.
  double rise(std::span<const double> x, double r) const;
  double drop(std::span<const double> x, double r) const;
  double modulus(std::span<const double> x, double r) const;

 private:
  std::size_t dim_ = 0;
  Function f_;
  FieldMetadata meta_;
  Modulus rise_, drop_;
};

class Regressor {
 public:
  Regressor(Dataset data, std::size_t k);

  const Dataset& data() const noexcept { return *data_; }
  const SpatialIndex& index() const noexcept { return index_; }
  std::size_t k() const noexcept { return k_; }

  NeighborSet neighbors(std::span<const double> query) const { return index_.knn(query, k_); }

 private:
  std::shared_ptr<const Dataset> data_;
  SpatialIndex index_;
  std::size_t k_;
};

double predict(const Regressor& reg, std::span<const double> query);
double knn_radius(const Regressor& reg, std::span<const double> query);

// f_k at every probe; OpenMP over probes.
std::vector<double> predict_batch(const Regressor& reg, const PointSet& probes);
// Serial brute-force twin of predict_batch.
std::vector<double> predict_batch_reference(const Dataset& data, std::size_t k,
                                            const PointSet& probes);
// r_k at every probe; OpenMP over probes.
std::vector<double> knn_radius_batch(const Regressor& reg, const PointSet& probes);

struct SupError {
  double sup = 0.0;
  std::size_t argmax_probe = 0;
  std::vector<double> per_probe;
};

SupError sup_error(const Regressor& reg, const ScalarField& field, const PointSet& probes);

struct ModulusEstimate {
  double value = 0.0;
  bool approximate = false;  // sampled lower bound rather than closed form
};

ModulusEstimate empirical_modulus(const ScalarField& field, std::span<const double> x, double r,
                                  std::size_t resolution);

}  // namespace knnrate
