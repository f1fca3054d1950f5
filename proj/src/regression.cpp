#include "knnrate/regression.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "knnrate/sequences.hpp"

namespace knnrate {

Dataset::Dataset(PointSet points, std::vector<double> observations)
    : x(std::move(points)), y(std::move(observations)) {
  if (x.size() != y.size())
    throw ValidationError("dataset has " + std::to_string(x.size()) + " points but " +
                          std::to_string(y.size()) + " observations");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i]))
      throw ValidationError("non-finite observation at index " + std::to_string(i));
}

Dataset read_dataset(std::istream& in) {
  std::size_t dim = 0, n = 0;
  if (!(in >> dim >> n)) throw ValidationError("dataset header must be 'D n'");
  if (dim == 0) throw ValidationError("dataset dimension must be positive");
  std::vector<double> coords(dim * n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j)
      if (!(in >> coords[i * dim + j]))
        throw ValidationError("dataset row " + std::to_string(i + 1) + " is truncated");
    if (!(in >> y[i]))
      throw ValidationError("dataset row " + std::to_string(i + 1) + " lacks an observation");
  }
  std::string extra;
  if (in >> extra) throw ValidationError("trailing content after " + std::to_string(n) + " rows");
  return Dataset(PointSet(dim, std::move(coords)), std::move(y));
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);
  return read_dataset(in);
}

namespace {

// Shortest round-trip representation in plain decimal notation.
void put_decimal(std::ostream& out, double v) {
  char buf[512];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  out << data.dim() << ' ' << data.size() << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double c : data.x[i]) {
      put_decimal(out, c);
      out << ' ';
    }
    put_decimal(out, data.y[i]);
    out << '\n';
  }
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  write_dataset(out, data);
}

ScalarField::ScalarField(std::size_t dim, Function f, FieldMetadata meta, Modulus rise,
                         Modulus drop)
    : dim_(dim), f_(std::move(f)), meta_(std::move(meta)), rise_(std::move(rise)),
      drop_(std::move(drop)) {
  if (dim_ == 0) throw ValidationError("field dimension must be positive");
  if (!f_) throw ValidationError("field needs an evaluation function");
}

double ScalarField::evaluate(std::span<const double> x) const {
  if (x.size() != dim_)
    throw ValidationError("field expects dimension " + std::to_string(dim_) + ", got " +
                          std::to_string(x.size()));
  return f_(x);
}

double ScalarField::rise(std::span<const double> x, double r) const {
  if (!rise_) throw ValidationError("field has no closed-form modulus");
  return rise_(x, r);
}

double ScalarField::drop(std::span<const double> x, double r) const {
  if (!drop_) throw ValidationError("field has no closed-form modulus");
  return drop_(x, r);
}

double ScalarField::modulus(std::span<const double> x, double r) const {
  return std::max(rise(x, r), drop(x, r));
}

Regressor::Regressor(Dataset data, std::size_t k)
    : data_(std::make_shared<const Dataset>(std::move(data))), index_(data_->x), k_(k) {
  if (k_ == 0 || k_ > data_->size())
    throw ValidationError("k = " + std::to_string(k_) + " outside [1, " +
                          std::to_string(data_->size()) + "]");
}

namespace {

double average(const std::vector<double>& y, const std::vector<std::uint32_t>& members) {
  double s = 0.0;
  for (auto i : members) s += y[i];
  return s / static_cast<double>(members.size());
}

}  // namespace

double predict(const Regressor& reg, std::span<const double> query) {
  return average(reg.data().y, reg.neighbors(query).members);
}

double knn_radius(const Regressor& reg, std::span<const double> query) {
  return reg.neighbors(query).radius;
}

std::vector<double> predict_batch(const Regressor& reg, const PointSet& probes) {
  if (probes.dim() != reg.data().dim()) throw ValidationError("probe dimension mismatch");
  const auto m = static_cast<std::ptrdiff_t>(probes.size());
  std::vector<double> out(probes.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < m; ++i) out[i] = predict(reg, probes[i]);
  return out;
}

std::vector<double> predict_batch_reference(const Dataset& data, std::size_t k,
                                            const PointSet& probes) {
  std::vector<double> out(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i)
    out[i] = average(data.y, brute_force_knn(data.x, probes[i], k).members);
  return out;
}

std::vector<double> knn_radius_batch(const Regressor& reg, const PointSet& probes) {
  if (probes.dim() != reg.data().dim()) throw ValidationError("probe dimension mismatch");
  const auto m = static_cast<std::ptrdiff_t>(probes.size());
  std::vector<double> out(probes.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < m; ++i) out[i] = knn_radius(reg, probes[i]);
  return out;
}

SupError sup_error(const Regressor& reg, const ScalarField& field, const PointSet& probes) {
  if (probes.empty()) throw ValidationError("sup_error needs at least one probe");
  if (field.dim() != probes.dim()) throw ValidationError("field and probe dimensions differ");
  SupError out;
  out.per_probe = predict_batch(reg, probes);
  for (std::size_t i = 0; i < probes.size(); ++i)
    out.per_probe[i] = std::abs(out.per_probe[i] - field.evaluate(probes[i]));
  // Serial scan keeps the first maximiser regardless of thread count.
  for (std::size_t i = 0; i < out.per_probe.size(); ++i) {
    if (out.per_probe[i] > out.sup || i == 0) {
      out.sup = out.per_probe[i];
      out.argmax_probe = i;
    }
  }
  return out;
}

ModulusEstimate empirical_modulus(const ScalarField& field, std::span<const double> x, double r,
                                  std::size_t resolution) {
  if (x.size() != field.dim()) throw ValidationError("modulus point dimension mismatch");
  if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("modulus radius must be finite and >= 0");
  if (field.has_closed_form_modulus()) return {field.modulus(x, r), false};
  if (resolution == 0) throw ValidationError("modulus resolution must be positive");
  const std::size_t dim = x.size();
  if (dim > kMaxHaltonDim) throw ValidationError("sampled modulus supports at most 32 dimensions");

  const double fx = field.evaluate(x);
  ModulusEstimate est{0.0, true};
  std::vector<double> v(dim), p(dim);
  std::size_t accepted = 0;
  // Halton points of [-1,1]^D, kept when inside the unit ball.
  for (std::uint64_t idx = 0; accepted < resolution && idx < 1000 * resolution; ++idx) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      v[j] = 2.0 * radical_inverse(idx, kHaltonPrimes[j]) - 1.0;
      norm2 += v[j] * v[j];
    }
    if (norm2 > 1.0) continue;
    for (std::size_t j = 0; j < dim; ++j) p[j] = x[j] + r * v[j];
    est.value = std::max(est.value, std::abs(fx - field.evaluate(p)));
    ++accepted;
  }
  return est;
}

}  // namespace knnrate
