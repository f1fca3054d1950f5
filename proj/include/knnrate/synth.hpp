#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "knnrate/point_set.hpp"
#include "knnrate/regression.hpp"

namespace knnrate {

enum class DensityKind { uniform_box, uniform_ball, truncated_mixture };

// Sampling density with closed-form declared constants. The box and the
// mixture live on the cube [low, high]^dim; the ball on B(center, radius).
struct DensitySpec {
  DensityKind kind = DensityKind::uniform_box;
  std::size_t dim = 1;
  double low = 0.0, high = 1.0;
  std::vector<double> center;  // ball; empty means origin
  double radius = 1.0;
  // Mixture: with probability floor_weight a uniform draw on the cube,
  // otherwise a Gaussian bump around one of `components`, truncated to the cube.
  double floor_weight = 0.5;
  std::vector<std::vector<double>> components;
  double component_std = 0.1;

  void validate() const;
  double p0() const;     // exact density floor
  double gamma() const;  // 2^-D: worst case at a cube corner / ball boundary
  double r0() const;     // half the side, or the ball radius
  bool contains(std::span<const double> x) const;
};

enum class NoiseKind { none, gaussian, uniform_bounded, rademacher };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double scale = 0.0;

  void validate() const;
  // gaussian: scale; uniform on [-a, a]: a (valid, not tight); rademacher: scale.
  double sigma() const;
};

PointSet sample_points(const DensitySpec& spec, std::size_t n, std::uint64_t seed);
std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed);

enum class FieldKind { holder_cusp, tent, quadratic_peak, constant, linear };

struct FieldParams {
  std::size_t dim = 1;
  double height = 1.0;                 // cusp, tent, peak
  double slope = 1.0;                  // C_alpha for cusp / tent
  double alpha = 1.0;                  // cusp exponent
  std::vector<double> center;          // cusp / tent / peak location; empty means 0.5 * ones
  std::optional<double> level;         // tent: declared level for beta-regularity
  double curvature = 1.0;              // peak q
  double r_m = 0.5;                    // peak regularity neighbourhood
  double value = 0.0;                  // constant
  std::vector<double> coef;            // linear; empty means e_1
  double offset = 0.0;                 // linear
};

// holder-cusp h - C|x-c|^alpha; tent (alpha = 1, level-set constants at
// `level`); quadratic-peak h - q|x-x0|^2; constant; linear a.x + b.
ScalarField make_field(FieldKind kind, const FieldParams& params);

FieldKind parse_field_kind(const std::string& s);
DensityKind parse_density_kind(const std::string& s);
NoiseKind parse_noise_kind(const std::string& s);

enum class ManifoldKind { circle, torus_curve, swiss_roll_curve };

ManifoldKind parse_manifold_kind(const std::string& s);

// One-dimensional manifolds parametrised by t in [0, 1), embedded in R^ambient
// through an optional fixed rotation.
struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::circle;
  std::size_t ambient_dim = 2;
  double radius = 0.15915494309189535;  // circle: 1 / (2 pi), circumference 1
  double major = 1.0, minor = 0.25;     // torus curve
  int winds_major = 2, winds_minor = 3;
  double spiral_start = 1.5 * 3.141592653589793, spiral_end = 4.5 * 3.141592653589793;
  double spiral_scale = 0.05;
  bool rotate = false;
  std::uint64_t rotation_seed = 0;
  // Tent in the intrinsic coordinate: height - slope * dist(t, t0), circular
  // distance for closed curves.
  double field_height = 1.0, field_slope = 1.0, field_center = 0.5;

  void validate() const;
};

class Manifold {
 public:
  explicit Manifold(ManifoldSpec spec);

  const ManifoldSpec& spec() const noexcept { return spec_; }
  std::size_t intrinsic_dim() const noexcept { return 1; }
  std::size_t ambient_dim() const noexcept { return spec_.ambient_dim; }
  bool closed() const noexcept { return spec_.kind != ManifoldKind::swiss_roll_curve; }

  std::vector<double> embed(double t) const;
  PointSet embed_all(std::span<const double> ts) const;
  // Inverse of embed for points on the manifold.
  double intrinsic(std::span<const double> x) const;

  double intrinsic_field(double t) const;
  // Field on ambient points via the intrinsic coordinate.
  ScalarField field() const;

  double p0() const;                   // floor of the density w.r.t. arc length
  std::optional<double> tau() const;   // closed form only for the circle
  double length() const;               // circle only; NaN otherwise

 private:
  double speed_max() const;

  ManifoldSpec spec_;
  std::vector<double> rotation_;  // row-major ambient x ambient
};

struct ManifoldSample {
  PointSet points;
  std::vector<double> intrinsic;
  ScalarField field;
};

ManifoldSample embed_manifold(const ManifoldSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace knnrate
