#include "knnrate/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "knnrate/bounds.hpp"
#include "knnrate/rng.hpp"

namespace knnrate {

namespace {

constexpr double kPi = std::numbers::pi;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

double circular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 1.0);
  return std::min(d, 1.0 - d);
}

double wrap01(double t) {
  t -= std::floor(t);
  return t >= 1.0 ? 0.0 : t;
}

}  // namespace

void DensitySpec::validate() const {
  if (dim == 0) throw ValidationError("density.dim must be positive");
  switch (kind) {
    case DensityKind::uniform_box:
      if (!(high > low)) throw ValidationError("density box needs high > low");
      break;
    case DensityKind::uniform_ball:
      if (!(radius > 0.0)) throw ValidationError("density ball needs radius > 0");
      if (!center.empty() && center.size() != dim)
        throw ValidationError("density ball center has the wrong dimension");
      break;
    case DensityKind::truncated_mixture:
      if (!(high > low)) throw ValidationError("density mixture needs high > low");
      if (!(floor_weight > 0.0 && floor_weight <= 1.0))
        throw ValidationError("density mixture floor weight must lie in (0, 1]");
      if (floor_weight < 1.0 && components.empty())
        throw ValidationError("density mixture needs at least one component");
      for (const auto& c : components)
        if (c.size() != dim) throw ValidationError("mixture component has the wrong dimension");
      if (!(component_std > 0.0)) throw ValidationError("mixture component std must be positive");
      break;
  }
}

double DensitySpec::p0() const {
  const double D = static_cast<double>(dim);
  switch (kind) {
    case DensityKind::uniform_box: return 1.0 / std::pow(high - low, D);
    case DensityKind::uniform_ball: return 1.0 / (unit_ball_volume(dim) * std::pow(radius, D));
    case DensityKind::truncated_mixture: return floor_weight / std::pow(high - low, D);
  }
  return 0.0;
}

// For the ball: B(x, r) with x on the boundary and r <= radius contains the
// ball of radius r/2 centred r/2 inward, hence the 2^-D fraction.
double DensitySpec::gamma() const { return std::pow(0.5, static_cast<double>(dim)); }

double DensitySpec::r0() const {
  return kind == DensityKind::uniform_ball ? radius : 0.5 * (high - low);
}

bool DensitySpec::contains(std::span<const double> x) const {
  if (x.size() != dim) return false;
  if (kind == DensityKind::uniform_ball) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = x[j] - (center.empty() ? 0.0 : center[j]);
      s += d * d;
    }
    return std::sqrt(s) <= radius;
  }
  return std::all_of(x.begin(), x.end(), [&](double c) { return c >= low && c <= high; });
}

void NoiseSpec::validate() const {
  if (kind != NoiseKind::none && !(scale >= 0.0 && std::isfinite(scale)))
    throw ValidationError("noise.scale must be finite and nonnegative");
}

double NoiseSpec::sigma() const { return kind == NoiseKind::none ? 0.0 : scale; }

PointSet sample_points(const DensitySpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw ValidationError("sample_points needs n >= 1");
  Rng rng(seed);
  const std::size_t D = spec.dim;
  std::vector<double> coords(n * D);
  std::vector<double> p(D);
  for (std::size_t i = 0; i < n; ++i) {
    switch (spec.kind) {
      case DensityKind::uniform_box:
        for (auto& c : p) c = rng.uniform(spec.low, spec.high);
        break;
      case DensityKind::uniform_ball: {
        // Direction from normals, radius by inversion of r^D.
        double s = 0.0;
        do {
          s = 0.0;
          for (auto& c : p) {
            c = rng.normal();
            s += c * c;
          }
        } while (s == 0.0);
        const double r = spec.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(D));
        const double scale = r / std::sqrt(s);
        for (std::size_t j = 0; j < D; ++j)
          p[j] = (spec.center.empty() ? 0.0 : spec.center[j]) + scale * p[j];
        break;
      }
      case DensityKind::truncated_mixture: {
        if (rng.uniform() < spec.floor_weight) {
          for (auto& c : p) c = rng.uniform(spec.low, spec.high);
          break;
        }
        const auto& mu = spec.components[static_cast<std::size_t>(
            rng.uniform() * static_cast<double>(spec.components.size()))];
        do {
          for (std::size_t j = 0; j < D; ++j) p[j] = mu[j] + spec.component_std * rng.normal();
        } while (!spec.contains(p));
        break;
      }
    }
    std::copy(p.begin(), p.end(), coords.begin() + static_cast<std::ptrdiff_t>(i * D));
  }
  return PointSet(D, std::move(coords));
}

std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw ValidationError("sample_noise needs n >= 1");
  std::vector<double> out(n, 0.0);
  if (spec.kind == NoiseKind::none) return out;
  Rng rng(seed);
  for (auto& v : out) {
    switch (spec.kind) {
      case NoiseKind::gaussian: v = spec.scale * rng.normal(); break;
      case NoiseKind::uniform_bounded: v = rng.uniform(-spec.scale, spec.scale); break;
      case NoiseKind::rademacher: v = (rng.next() >> 63) ? spec.scale : -spec.scale; break;
      case NoiseKind::none: break;
    }
  }
  return out;
}

namespace {

std::vector<double> resolve_center(const FieldParams& p) {
  if (p.center.empty()) return std::vector<double>(p.dim, 0.5);
  if (p.center.size() == 1 && p.dim > 1) return std::vector<double>(p.dim, p.center[0]);
  if (p.center.size() != p.dim) throw ValidationError("field center has the wrong dimension");
  return p.center;
}

double dist_to(std::span<const double> x, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) s += (x[j] - c[j]) * (x[j] - c[j]);
  return std::sqrt(s);
}

// Field h - C * g(|x - c|) for increasing g; the one-sided moduli follow from
// the range [g(max(0, rho - r)), g(rho + r)] over the ball.
template <class G>
ScalarField radial_field(std::size_t dim, std::vector<double> c, double h, double C, G g,
                         FieldMetadata meta) {
  auto f = [=](std::span<const double> x) { return h - C * g(dist_to(x, c)); };
  auto rise = [=](std::span<const double> x, double r) {
    const double rho = dist_to(x, c);
    return C * (g(rho) - g(std::max(0.0, rho - r)));
  };
  auto drop = [=](std::span<const double> x, double r) {
    const double rho = dist_to(x, c);
    return C * (g(rho + r) - g(rho));
  };
  return ScalarField(dim, f, std::move(meta), rise, drop);
}

}  // namespace

ScalarField make_field(FieldKind kind, const FieldParams& p) {
  if (p.dim == 0) throw ValidationError("field.dim must be positive");
  FieldMetadata meta;
  switch (kind) {
    case FieldKind::holder_cusp:
    case FieldKind::tent: {
      const double alpha = kind == FieldKind::tent ? 1.0 : p.alpha;
      if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("field.alpha must lie in (0, 1]");
      if (!(p.slope >= 0.0)) throw ValidationError("field.slope must be nonnegative");
      meta.alpha = alpha;
      meta.c_alpha = p.slope;
      if (kind == FieldKind::tent && p.level) {
        if (!(*p.level < p.height) || !(p.slope > 0.0))
          throw ValidationError("tent level must lie below the height with a positive slope");
        meta.level = *p.level;
        meta.beta = 1.0;
        meta.c_low = meta.c_high = p.slope;
        meta.r_m = (p.height - *p.level) / p.slope;
      }
      auto c = resolve_center(p);
      meta.peak = c;
      return radial_field(p.dim, c, p.height, p.slope,
                          [alpha](double rho) { return std::pow(rho, alpha); }, std::move(meta));
    }
    case FieldKind::quadratic_peak: {
      if (!(p.curvature > 0.0)) throw ValidationError("field.curvature must be positive");
      if (!(p.r_m > 0.0)) throw ValidationError("field.r_m must be positive");
      auto c = resolve_center(p);
      meta.peak = c;
      meta.beta = 2.0;
      meta.c_low = meta.c_high = p.curvature;
      meta.r_m = p.r_m;
      meta.level = p.height - p.curvature * p.r_m * p.r_m;
      return radial_field(p.dim, c, p.height, p.curvature, [](double rho) { return rho * rho; },
                          std::move(meta));
    }
    case FieldKind::constant: {
      meta.alpha = 1.0;
      meta.c_alpha = 0.0;
      const double v = p.value;
      auto zero = [](std::span<const double>, double) { return 0.0; };
      return ScalarField(p.dim, [v](std::span<const double>) { return v; }, meta, zero, zero);
    }
    case FieldKind::linear: {
      std::vector<double> a = p.coef;
      if (a.empty()) {
        a.assign(p.dim, 0.0);
        a[0] = 1.0;
      }
      if (a.size() != p.dim) throw ValidationError("field.coef has the wrong dimension");
      const double b = p.offset;
      const double slope = norm(a);
      meta.alpha = 1.0;
      meta.c_alpha = slope;
      auto f = [a, b](std::span<const double> x) {
        double s = b;
        for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * x[j];
        return s;
      };
      auto mod = [slope](std::span<const double>, double r) { return slope * r; };
      return ScalarField(p.dim, f, meta, mod, mod);
    }
  }
  throw ValidationError("unknown field kind");
}

FieldKind parse_field_kind(const std::string& s) {
  if (s == "holder-cusp") return FieldKind::holder_cusp;
  if (s == "tent") return FieldKind::tent;
  if (s == "quadratic-peak") return FieldKind::quadratic_peak;
  if (s == "constant") return FieldKind::constant;
  if (s == "linear") return FieldKind::linear;
  throw ValidationError("unknown field kind: " + s);
}

DensityKind parse_density_kind(const std::string& s) {
  if (s == "uniform-box") return DensityKind::uniform_box;
  if (s == "uniform-ball") return DensityKind::uniform_ball;
  if (s == "truncated-mixture") return DensityKind::truncated_mixture;
  throw ValidationError("unknown density kind: " + s);
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::none;
  if (s == "gaussian") return NoiseKind::gaussian;
  if (s == "uniform-bounded") return NoiseKind::uniform_bounded;
  if (s == "rademacher") return NoiseKind::rademacher;
  throw ValidationError("unknown noise kind: " + s);
}

ManifoldKind parse_manifold_kind(const std::string& s) {
  if (s == "circle") return ManifoldKind::circle;
  if (s == "torus-curve") return ManifoldKind::torus_curve;
  if (s == "swiss-roll-curve") return ManifoldKind::swiss_roll_curve;
  throw ValidationError("unknown manifold kind: " + s);
}

void ManifoldSpec::validate() const {
  const std::size_t needed = kind == ManifoldKind::torus_curve ? 3 : 2;
  if (ambient_dim < needed)
    throw ValidationError("manifold kind needs ambient dimension >= " + std::to_string(needed) +
                          " (intrinsic d = 1 must stay below D)");
  switch (kind) {
    case ManifoldKind::circle:
      if (!(radius > 0.0)) throw ValidationError("manifold.radius must be positive");
      break;
    case ManifoldKind::torus_curve:
      if (!(major > minor && minor > 0.0))
        throw ValidationError("torus curve needs major > minor > 0");
      if (winds_major < 1 || winds_minor < 1 || std::gcd(winds_major, winds_minor) != 1)
        throw ValidationError("torus winding numbers must be positive and coprime");
      break;
    case ManifoldKind::swiss_roll_curve:
      if (!(spiral_end > spiral_start && spiral_start >= 0.0 && spiral_scale > 0.0))
        throw ValidationError("swiss roll curve needs 0 <= start < end and scale > 0");
      break;
  }
  if (!(field_slope >= 0.0)) throw ValidationError("manifold field slope must be nonnegative");
}

Manifold::Manifold(ManifoldSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t D = spec_.ambient_dim;
  rotation_.assign(D * D, 0.0);
  for (std::size_t i = 0; i < D; ++i) rotation_[i * D + i] = 1.0;
  if (!spec_.rotate) return;
  // Gram-Schmidt on a Gaussian matrix; rows form an orthonormal basis.
  Rng rng(spec_.rotation_seed);
  for (auto& v : rotation_) v = rng.normal();
  for (std::size_t i = 0; i < D; ++i) {
    double* row = &rotation_[i * D];
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const double* prev = &rotation_[j * D];
        double dot = 0.0;
        for (std::size_t c = 0; c < D; ++c) dot += row[c] * prev[c];
        for (std::size_t c = 0; c < D; ++c) row[c] -= dot * prev[c];
      }
    }
    const double len = norm({row, D});
    for (std::size_t c = 0; c < D; ++c) row[c] /= len;
  }
}

std::vector<double> Manifold::embed(double t) const {
  const std::size_t D = spec_.ambient_dim;
  std::vector<double> local(D, 0.0);
  switch (spec_.kind) {
    case ManifoldKind::circle:
      local[0] = spec_.radius * std::cos(2 * kPi * t);
      local[1] = spec_.radius * std::sin(2 * kPi * t);
      break;
    case ManifoldKind::torus_curve: {
      const double a = 2 * kPi * spec_.winds_major * t, b = 2 * kPi * spec_.winds_minor * t;
      const double ring = spec_.major + spec_.minor * std::cos(b);
      local[0] = ring * std::cos(a);
      local[1] = ring * std::sin(a);
      local[2] = spec_.minor * std::sin(b);
      break;
    }
    case ManifoldKind::swiss_roll_curve: {
      const double phi = spec_.spiral_start + (spec_.spiral_end - spec_.spiral_start) * t;
      local[0] = spec_.spiral_scale * phi * std::cos(phi);
      local[1] = spec_.spiral_scale * phi * std::sin(phi);
      break;
    }
  }
  if (!spec_.rotate) return local;
  // x = R^T local, so local = R x.
  std::vector<double> x(D, 0.0);
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t c = 0; c < D; ++c) x[c] += rotation_[i * D + c] * local[i];
  return x;
}

PointSet Manifold::embed_all(std::span<const double> ts) const {
  std::vector<double> coords;
  coords.reserve(ts.size() * ambient_dim());
  for (double t : ts) {
    auto x = embed(t);
    coords.insert(coords.end(), x.begin(), x.end());
  }
  return PointSet(ambient_dim(), std::move(coords));
}

double Manifold::intrinsic(std::span<const double> x) const {
  const std::size_t D = spec_.ambient_dim;
  if (x.size() != D) throw ValidationError("manifold point has the wrong dimension");
  double l0 = x[0], l1 = x[1], l2 = D > 2 ? x[2] : 0.0;
  if (spec_.rotate) {
    l0 = l1 = l2 = 0.0;
    for (std::size_t c = 0; c < D; ++c) {
      l0 += rotation_[0 * D + c] * x[c];
      l1 += rotation_[1 * D + c] * x[c];
      if (D > 2) l2 += rotation_[2 * D + c] * x[c];
    }
  }
  switch (spec_.kind) {
    case ManifoldKind::circle: return wrap01(std::atan2(l1, l0) / (2 * kPi));
    case ManifoldKind::torus_curve: {
      const double a = wrap01(std::atan2(l1, l0) / (2 * kPi));
      const double b = wrap01(std::atan2(l2, std::hypot(l0, l1) - spec_.major) / (2 * kPi));
      double best_t = 0.0, best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < spec_.winds_major; ++j) {
        const double t = (a + j) / spec_.winds_major;
        const double miss = circular_distance(wrap01(spec_.winds_minor * t), b);
        if (miss < best) {
          best = miss;
          best_t = t;
        }
      }
      return wrap01(best_t);
    }
    case ManifoldKind::swiss_roll_curve: {
      const double phi = std::hypot(l0, l1) / spec_.spiral_scale;
      return (phi - spec_.spiral_start) / (spec_.spiral_end - spec_.spiral_start);
    }
  }
  return 0.0;
}

double Manifold::intrinsic_field(double t) const {
  const double d = closed() ? circular_distance(t, spec_.field_center)
                            : std::abs(t - spec_.field_center);
  return spec_.field_height - spec_.field_slope * d;
}

ScalarField Manifold::field() const {
  FieldMetadata meta;
  meta.alpha = 1.0;
  // Slope per unit t becomes slope / (2 pi rho) per unit arc; chord >= (2/pi) arc.
  if (spec_.kind == ManifoldKind::circle) meta.c_alpha = spec_.field_slope / (4.0 * spec_.radius);
  auto self = *this;
  return ScalarField(
      ambient_dim(), [self](std::span<const double> x) { return self.intrinsic_field(self.intrinsic(x)); },
      std::move(meta));
}

double Manifold::speed_max() const {
  switch (spec_.kind) {
    case ManifoldKind::circle: return 2 * kPi * spec_.radius;
    case ManifoldKind::torus_curve: {
      const double p = spec_.winds_major, q = spec_.winds_minor;
      return 2 * kPi * std::sqrt(p * p * (spec_.major + spec_.minor) * (spec_.major + spec_.minor) +
                                 q * q * spec_.minor * spec_.minor);
    }
    case ManifoldKind::swiss_roll_curve: {
      const double span = spec_.spiral_end - spec_.spiral_start;
      return spec_.spiral_scale * span * std::sqrt(1.0 + spec_.spiral_end * spec_.spiral_end);
    }
  }
  return 0.0;
}

double Manifold::p0() const { return 1.0 / speed_max(); }

std::optional<double> Manifold::tau() const {
  if (spec_.kind == ManifoldKind::circle) return spec_.radius;
  return std::nullopt;
}

double Manifold::length() const {
  return spec_.kind == ManifoldKind::circle ? 2 * kPi * spec_.radius
                                            : std::numeric_limits<double>::quiet_NaN();
}

ManifoldSample embed_manifold(const ManifoldSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("embed_manifold needs n >= 1");
  Manifold m(spec);
  Rng rng(seed);
  std::vector<double> ts(n);
  for (auto& t : ts) t = rng.uniform();
  return {m.embed_all(ts), std::move(ts), m.field()};
}

}  // namespace knnrate
