#include "knnrate/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace knnrate {

namespace {

double need(const std::optional<double>& v, const char* name) {
  if (!v) throw MissingParameter(name);
  return *v;
}

void check_nk(std::size_t n, std::size_t k) {
  if (n < 2) throw ValidationError("bounds require n >= 2");
  if (k < 1) throw ValidationError("bounds require k >= 1");
}

double log_n(std::size_t n) { return std::log(static_cast<double>(n)); }

void in_range(const std::optional<double>& v, const char* name, double lo, double hi,
              bool lo_open, bool hi_open) {
  if (!v) return;
  const double x = *v;
  const bool ok = std::isfinite(x) && (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
  if (!ok) throw ValidationError(std::string("parameter ") + name + " out of range");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void BoundParams::validate() const {
  if (dim == 0) throw ValidationError("parameter D must be positive");
  in_range(gamma, "gamma", 0, 1, true, false);
  in_range(p0, "p0", 0, kInf, true, true);
  in_range(r0, "r0", 0, kInf, true, true);
  in_range(sigma, "sigma", 0, kInf, false, true);
  in_range(delta, "delta", 0, 1, true, true);
  in_range(alpha, "alpha", 0, 1, true, false);
  in_range(c_alpha, "c_alpha", 0, kInf, false, true);
  in_range(beta, "beta", 0, kInf, true, true);
  in_range(c_low, "c_low", 0, kInf, true, true);
  in_range(c_high, "c_high", 0, kInf, true, true);
  in_range(r_m, "r_m", 0, kInf, true, true);
  in_range(d, "d", 1, static_cast<double>(dim), false, false);
  in_range(tau, "tau", 0, kInf, true, true);
  in_range(m2, "m2", 0, kInf, false, true);
}

double unit_ball_volume(std::size_t dim) {
  if (dim == 0) throw ValidationError("unit ball volume needs D >= 1");
  const double h = 0.5 * static_cast<double>(dim);
  return std::exp(h * std::log(std::numbers::pi) - std::lgamma(h + 1.0));
}

double variance_term(const BoundParams& p, std::size_t n, std::size_t k) {
  check_nk(n, k);
  const double sigma = need(p.sigma, "sigma");
  const double delta = need(p.delta, "delta");
  const double D = static_cast<double>(p.dim);
  return 2.0 * sigma * std::sqrt((D * log_n(n) + std::log(2.0 / delta)) / static_cast<double>(k));
}

double radius_bound(const BoundParams& p, std::size_t n, std::size_t k) {
  check_nk(n, k);
  const double gamma = need(p.gamma, "gamma");
  const double p0 = need(p.p0, "p0");
  const double vd = unit_ball_volume(p.dim);
  return std::pow(2.0 * static_cast<double>(k) / (gamma * vd * static_cast<double>(n) * p0),
                  1.0 / static_cast<double>(p.dim));
}

double manifold_radius_bound(const BoundParams& p, std::size_t n, std::size_t k) {
  check_nk(n, k);
  const double d = need(p.d, "d");
  const double p0 = need(p.p0, "p0");
  const double vd = unit_ball_volume(static_cast<std::size_t>(d));
  return std::pow(4.0 * static_cast<double>(k) / (vd * static_cast<double>(n) * p0), 1.0 / d);
}

double holder_bound(const BoundParams& p, std::size_t n, std::size_t k, bool manifold) {
  const double alpha = need(p.alpha, "alpha");
  const double c_alpha = need(p.c_alpha, "c_alpha");
  const double r = manifold ? manifold_radius_bound(p, n, k) : radius_bound(p, n, k);
  return c_alpha * std::pow(r, alpha) + variance_term(p, n, k);
}

double levelset_hausdorff_bound(const BoundParams& p, std::size_t n, std::size_t k) {
  check_nk(n, k);
  const double m = need(p.m2, "m2");
  const double c_low = need(p.c_low, "c_low");
  const double beta = need(p.beta, "beta");
  const double delta = need(p.delta, "delta");
  const double D = static_cast<double>(p.dim);
  return 2.0 * std::pow(24.0 * m / c_low, 1.0 / beta) *
         std::pow(D * log_n(n) * std::log(2.0 / delta), 1.0 / (2.0 * beta)) *
         std::pow(static_cast<double>(k), -1.0 / (2.0 * beta));
}

double maxima_distance_bound(const BoundParams& p, std::size_t n, std::size_t k) {
  check_nk(n, k);
  const double sigma = need(p.sigma, "sigma");
  const double delta = need(p.delta, "delta");
  const double c_low = need(p.c_low, "c_low");
  const double c_high = need(p.c_high, "c_high");
  const double D = static_cast<double>(p.dim);
  const double noise = 32.0 * sigma / c_low *
                       std::sqrt((D * log_n(n) + std::log(2.0 / delta)) / static_cast<double>(k));
  const double r = radius_bound(p, n, k);
  const double bias = 32.0 * c_high / c_low * std::pow(r, 2.0);
  return std::sqrt(std::max(noise, bias));
}

std::string to_string(Setting s) {
  switch (s) {
    case Setting::full: return "full";
    case Setting::manifold: return "manifold";
    case Setting::levelset: return "levelset";
    case Setting::maxima: return "maxima";
  }
  return "?";
}

KRangeReport k_range_check(const BoundParams& p, std::size_t n, std::size_t k, Setting setting) {
  check_nk(n, k);
  KRangeReport report;
  report.setting = setting;
  if (k > n) {
    report.diagnostic = "k = " + std::to_string(k) + " exceeds n = " + std::to_string(n);
    report.checks.push_back({"k <= n", static_cast<double>(k), static_cast<double>(n), false});
    return report;
  }
  const double D = static_cast<double>(p.dim);
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  const double ln = log_n(n);
  auto add = [&](std::string name, double lhs, double rhs) {
    report.checks.push_back({std::move(name), lhs, rhs, lhs <= rhs});
  };

  switch (setting) {
    case Setting::full: {
      const double delta = need(p.delta, "delta");
      const double gamma = need(p.gamma, "gamma");
      const double p0 = need(p.p0, "p0");
      const double r0 = need(p.r0, "r0");
      const double l4 = std::log(4.0 / delta);
      add("2^8 D log^2(4/delta) log n <= k", 256.0 * D * l4 * l4 * ln, kd);
      add("k <= gamma p0 v_D r0^D n / 2", kd,
          0.5 * gamma * p0 * unit_ball_volume(p.dim) * std::pow(r0, D) * nd);
      break;
    }
    case Setting::manifold: {
      const double delta = need(p.delta, "delta");
      const double d = need(p.d, "d");
      const double tau = need(p.tau, "tau");
      const double p0 = need(p.p0, "p0");
      const double l4 = std::log(4.0 / delta);
      add("2^8 D log^2(4/delta) log n <= k", 256.0 * D * l4 * l4 * ln, kd);
      const double scale = std::min(tau / (4.0 * d), 1.0 / tau);
      add("k <= min(tau/4d, 1/tau)^d p0 v_d n / 4", kd,
          0.25 * std::pow(scale, d) * p0 * unit_ball_volume(static_cast<std::size_t>(d)) * nd);
      break;
    }
    case Setting::levelset: {
      const double delta = need(p.delta, "delta");
      const double m = need(p.m2, "m2");
      const double r_m = need(p.r_m, "r_m");
      const double r0 = need(p.r0, "r0");
      const double beta = need(p.beta, "beta");
      const double c_low = need(p.c_low, "c_low");
      const double c_high = need(p.c_high, "c_high");
      const double sigma = need(p.sigma, "sigma");
      const double gamma = need(p.gamma, "gamma");
      const double p0 = need(p.p0, "p0");
      const double l4 = std::log(4.0 / delta);
      const double ratio =
          40.0 * m * m / (std::pow(2.0 * std::min(r_m, r0), 2.0 * beta) * c_low * c_low);
      add("8 max(1, 40M^2/((2 min(r_M,r0))^(2beta) C_low^2)) log(4/delta) D log n <= k",
          8.0 * std::max(1.0, ratio) * l4 * D * ln, kd);
      const double e = 2.0 * beta + D;
      const double upper = std::pow(4.0 * sigma * sigma / c_high, 2.0 * D / e) *
                           std::pow(D * ln + l4, beta / e) *
                           std::pow(2.0 * gamma * p0 * unit_ball_volume(p.dim), 2.0 * beta / e) *
                           std::pow(nd, 2.0 * beta / e);
      add("k <= level-set upper window", kd, upper);
      break;
    }
    case Setting::maxima: {
      const double delta = need(p.delta, "delta");
      const double sigma = need(p.sigma, "sigma");
      const double c_low = need(p.c_low, "c_low");
      const double c_high = need(p.c_high, "c_high");
      const double r_m = need(p.r_m, "r_m");
      const double gamma = need(p.gamma, "gamma");
      const double p0 = need(p.p0, "p0");
      const double r0 = need(p.r0, "r0");
      const double l4 = std::log(4.0 / delta);
      // sigma = 0 makes the second entry infinite, so the min is 1.
      const double denom =
          sigma > 0.0 ? std::min(1.0, c_low * c_low * std::pow(r_m, 4.0) / (sigma * sigma)) : 1.0;
      add("2^10 D log^2(4/delta) log n / min(1, C_low^2 r_M^4 / sigma^2) <= k",
          1024.0 * D * l4 * l4 * ln / denom, kd);
      const double shape = std::min(std::pow(r0, D),
                                    std::pow(c_low * r_m * r_m / (32.0 * c_high), D / 2.0));
      add("k <= gamma p0 v_D min(r0^D, (C_low r_M^2 / 32 C_high)^(D/2)) n / 2", kd,
          0.5 * gamma * p0 * unit_ball_volume(p.dim) * shape * nd);
      break;
    }
  }
  report.pass = std::all_of(report.checks.begin(), report.checks.end(),
                            [](const Inequality& q) { return q.pass; });
  return report;
}

std::size_t optimal_k(std::size_t n, double alpha, double dim, KMode mode) {
  if (n < 2) throw ValidationError("optimal_k requires n >= 2");
  double e = 0.0;
  switch (mode) {
    case KMode::regression:
    case KMode::levelset_beta: e = 2.0 * alpha / (2.0 * alpha + dim); break;
    case KMode::maxima: e = 4.0 / (4.0 + dim); break;
  }
  const double k = std::round(std::pow(static_cast<double>(n), e));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

std::uint64_t knn_set_count_bound(std::uint64_t n, std::uint64_t dim) {
  if (n == 0 || dim == 0) throw ValidationError("set-count bound needs n >= 1 and D >= 1");
  std::uint64_t out = dim;
  for (std::uint64_t j = 0; j < dim; ++j)
    if (__builtin_mul_overflow(out, n, &out))
      throw std::overflow_error("D * n^D overflows 64 bits for n = " + std::to_string(n) +
                                ", D = " + std::to_string(dim));
  return out;
}

LevelSetEpsilon level_set_epsilon(const Dataset& data, std::size_t dim, std::size_t k,
                                  double delta) {
  const std::size_t n = data.size();
  if (n == 0) throw ValidationError("level_set_epsilon on an empty dataset");
  if (n < 2) throw ValidationError("level_set_epsilon requires n >= 2");
  if (k < 1) throw ValidationError("level_set_epsilon requires k >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  double s = 0.0;
  for (double y : data.y) s += y * y;
  LevelSetEpsilon out;
  out.sigma_hat = std::sqrt(2.0 / static_cast<double>(n) * s);
  out.epsilon = 4.0 * out.sigma_hat *
                std::sqrt((static_cast<double>(dim) * log_n(n) + std::log(2.0 / delta)) /
                          static_cast<double>(k));
  return out;
}

ValueBand knn_value_band(const ScalarField& field, std::span<const double> x,
                         const BoundParams& p, std::size_t n, std::size_t k) {
  const double eps_k = radius_bound(p, n, k);
  const double eps_var = variance_term(p, n, k);
  const double f = field.evaluate(x);
  return {f - field.drop(x, eps_k) - eps_var, f + field.rise(x, eps_k) + eps_var};
}

}  // namespace knnrate
