#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnrate/regression.hpp"

namespace knnrate {

// Theorem constants. Only `dim` is mandatory; a calculator that needs an
// absent constant throws MissingParameter naming it. All logarithms are natural.
struct BoundParams {
  std::size_t dim = 1;             // ambient D
  std::optional<double> gamma;     // support regularity, (0, 1]
  std::optional<double> p0;        // density floor
  std::optional<double> r0;        // regularity radius
  std::optional<double> sigma;     // sub-Gaussian parameter
  std::optional<double> delta;     // confidence, (0, 1)
  std::optional<double> alpha;     // Hölder exponent, (0, 1]
  std::optional<double> c_alpha;   // Hölder constant
  std::optional<double> beta;      // level-set regularity exponent
  std::optional<double> c_low;     // lower regularity constant
  std::optional<double> c_high;    // upper regularity constant
  std::optional<double> r_m;       // regularity neighbourhood
  std::optional<double> d;         // intrinsic dimension
  std::optional<double> tau;       // reciprocal condition number
  std::optional<double> m2;        // sqrt(E[y^2])

  // Throws ValidationError for any present field outside its range.
  void validate() const;
};

enum class Setting { full, manifold, levelset, maxima };
enum class KMode { regression, levelset_beta, maxima };

double unit_ball_volume(std::size_t dim);

double variance_term(const BoundParams& p, std::size_t n, std::size_t k);

// Uniform bound on r_k(x). Meaningful only when k_range_check passes for the
// full setting; evaluated regardless.
double radius_bound(const BoundParams& p, std::size_t n, std::size_t k);
double manifold_radius_bound(const BoundParams& p, std::size_t n, std::size_t k);

// C_alpha * radius^alpha + variance term.
double holder_bound(const BoundParams& p, std::size_t n, std::size_t k, bool manifold);

// Bound on d_H between the true and estimated level sets.
double levelset_hausdorff_bound(const BoundParams& p, std::size_t n, std::size_t k);

// Bound on |x_hat - x_0| (square root of the max-term bound on its square).
double maxima_distance_bound(const BoundParams& p, std::size_t n, std::size_t k);

struct Inequality {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;  // lhs <= rhs
};

struct KRangeReport {
  Setting setting = Setting::full;
  std::vector<Inequality> checks;
  bool pass = false;
  std::string diagnostic;  // set when k > n short-circuits the check
};

KRangeReport k_range_check(const BoundParams& p, std::size_t n, std::size_t k, Setting setting);

std::size_t optimal_k(std::size_t n, double alpha, double dim, KMode mode);

// D * n^D, exact; throws std::overflow_error instead of wrapping.
std::uint64_t knn_set_count_bound(std::uint64_t n, std::uint64_t dim);

struct LevelSetEpsilon {
  double sigma_hat = 0.0;
  double epsilon = 0.0;
};

LevelSetEpsilon level_set_epsilon(const Dataset& data, std::size_t dim, std::size_t k,
                                  double delta);

// One-sided band [f - drop(eps_k) - eps_var, f + rise(eps_k) + eps_var]
// around f(x) that contains f_k(x) on the high-probability event.
struct ValueBand {
  double lower = 0.0;
  double upper = 0.0;
};

ValueBand knn_value_band(const ScalarField& field, std::span<const double> x,
                         const BoundParams& p, std::size_t n, std::size_t k);

std::string to_string(Setting s);

}  // namespace knnrate
