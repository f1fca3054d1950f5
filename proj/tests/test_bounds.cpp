#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "knnrate/bounds.hpp"
#include "knnrate/errors.hpp"

using namespace knnrate;

namespace {

BoundParams full1d() {
  BoundParams p;
  p.dim = 1;
  p.gamma = 1.0;
  p.p0 = 1.0;
  p.r0 = 0.5;
  p.sigma = 1.0;
  p.delta = 0.1;
  p.alpha = 1.0;
  p.c_alpha = 1.0;
  return p;
}

// Ulp distance between two finite doubles of the same sign.
std::int64_t ulps(double a, double b) {
  std::int64_t ia, ib;
  std::memcpy(&ia, &a, 8);
  std::memcpy(&ib, &b, 8);
  return ia > ib ? ia - ib : ib - ia;
}

}  // namespace

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi).epsilon(1e-14));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * std::numbers::pi / 3.0).epsilon(1e-14));
  // v_D = 2 pi / D * v_{D-2}, an independent recurrence.
  double even = std::numbers::pi, odd = 2.0;
  for (std::size_t d = 3; d <= 30; ++d) {
    double& v = d % 2 ? odd : even;
    v *= 2.0 * std::numbers::pi / static_cast<double>(d);
    CHECK(unit_ball_volume(d) == doctest::Approx(v).epsilon(1e-12));
  }
  CHECK_THROWS_AS(unit_ball_volume(0), ValidationError);
}

TEST_CASE("variance term") {
  BoundParams p = full1d();
  const double expect = 2.0 * std::sqrt((std::log(10.0L) + std::log(20.0L)) / 4.0L);
  CHECK(variance_term(p, 10, 4) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(variance_term(p, 10, 4) == doctest::Approx(2.30180).epsilon(1e-5));
  CHECK(variance_term(p, 10, 8) == doctest::Approx(variance_term(p, 10, 4) / std::sqrt(2.0)).epsilon(1e-15));
  for (std::size_t k = 1; k < 200; k += 13)
    CHECK(variance_term(p, 1000, k) * std::sqrt(double(k)) ==
          doctest::Approx(variance_term(p, 1000, 1)).epsilon(1e-14));
  p.sigma = 0.0;
  CHECK(variance_term(p, 1000, 3) == 0.0);
  p.sigma.reset();
  CHECK_THROWS_AS(variance_term(p, 10, 4), MissingParameter);
  try {
    variance_term(p, 10, 4);
  } catch (const MissingParameter& e) {
    CHECK(e.name() == "sigma");
  }
}

TEST_CASE("radius bounds") {
  BoundParams p = full1d();
  CHECK(radius_bound(p, 1000, 100) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(radius_bound(p, 2000, 200) == doctest::Approx(radius_bound(p, 1000, 100)).epsilon(1e-15));
  BoundParams disk = p;
  disk.dim = 2;
  disk.p0 = 1.0 / std::numbers::pi;
  CHECK(radius_bound(disk, 1000, 100) == doctest::Approx(std::sqrt(0.2)).epsilon(1e-14));
  // r^D * (gamma p0 v_D n) recovers 2k.
  for (std::size_t dim : {1, 2, 3, 5, 8}) {
    BoundParams q = p;
    q.dim = dim;
    q.gamma = std::ldexp(1.0, -static_cast<int>(dim));
    q.p0 = 0.7;
    const double r = radius_bound(q, 5000, 37);
    const double back = std::pow(r, double(dim)) * (*q.gamma * *q.p0 * unit_ball_volume(dim) * 5000.0);
    CHECK(ulps(back, 74.0) <= 8);
  }
  BoundParams m;
  m.dim = 10;
  m.d = 1.0;
  m.p0 = 1.0;
  CHECK(manifold_radius_bound(m, 1000, 50) == doctest::Approx(0.1).epsilon(1e-15));
  BoundParams m2 = m;
  m2.dim = 3;
  CHECK(manifold_radius_bound(m2, 1000, 50) == manifold_radius_bound(m, 1000, 50));
  m.d = 2.0;
  CHECK(manifold_radius_bound(m, 4000, 50) ==
        doctest::Approx(manifold_radius_bound(m, 1000, 50) / 2.0).epsilon(1e-15));
  BoundParams missing;
  CHECK_THROWS_AS(radius_bound(missing, 10, 2), MissingParameter);
  CHECK_THROWS_AS(manifold_radius_bound(missing, 10, 2), MissingParameter);
}

TEST_CASE("holder bound") {
  BoundParams p = full1d();
  CHECK(holder_bound(p, 1000, 100, false) ==
        doctest::Approx(0.1 + variance_term(p, 1000, 100)).epsilon(1e-15));
  BoundParams z = p;
  z.sigma = 0.0;
  z.c_alpha = 0.0;
  CHECK(holder_bound(z, 1000, 100, false) == 0.0);
  // Each term is monotone in k.
  BoundParams bias = p, var = p;
  bias.sigma = 0.0;
  var.c_alpha = 0.0;
  for (std::size_t k = 1; k < 500; k += 7) {
    CHECK(holder_bound(bias, 1000, k + 1, false) > holder_bound(bias, 1000, k, false));
    CHECK(holder_bound(var, 1000, k + 1, false) < holder_bound(var, 1000, k, false));
  }
  BoundParams none = p;
  none.alpha.reset();
  CHECK_THROWS_AS(holder_bound(none, 1000, 10, false), MissingParameter);
}

TEST_CASE("k range check") {
  BoundParams p = full1d();
  p.delta = 0.25;
  const auto r = k_range_check(p, 1000, 50, Setting::full);
  CHECK_FALSE(r.pass);
  REQUIRE(r.checks.size() == 2);
  const double l4 = std::log(16.0);
  CHECK(r.checks[0].lhs == doctest::Approx(256.0 * l4 * l4 * std::log(1000.0)).epsilon(1e-14));
  CHECK(r.checks[0].lhs == doctest::Approx(13594).epsilon(1e-3));
  CHECK_FALSE(r.checks[0].pass);
  // Recomputing reproduces every side bit for bit.
  const auto again = k_range_check(p, 1000, 50, Setting::full);
  for (std::size_t i = 0; i < r.checks.size(); ++i) {
    CHECK(r.checks[i].lhs == again.checks[i].lhs);
    CHECK(r.checks[i].rhs == again.checks[i].rhs);
  }
  // Large enough n opens the window.
  const auto big = k_range_check(p, 100000000, 1000000, Setting::full);
  CHECK(big.pass);

  const auto over = k_range_check(p, 10, 11, Setting::full);
  CHECK_FALSE(over.pass);
  CHECK_FALSE(over.diagnostic.empty());

  BoundParams mx = p;
  mx.sigma = 0.0;
  mx.c_low = 1.0;
  mx.c_high = 1.0;
  mx.r_m = 0.5;
  const auto zero_noise = k_range_check(mx, 1000, 50, Setting::maxima);
  CHECK(zero_noise.checks[0].lhs == doctest::Approx(1024.0 * l4 * l4 * std::log(1000.0)).epsilon(1e-14));

  BoundParams bare;
  bare.delta = 0.1;
  try {
    k_range_check(bare, 100, 5, Setting::manifold);
    FAIL("expected MissingParameter");
  } catch (const MissingParameter& e) {
    CHECK(e.name() == "d");
  }
}

TEST_CASE("optimal k") {
  CHECK(optimal_k(10000, 1.0, 2.0, KMode::regression) == 100);
  CHECK(optimal_k(100000, 1.0, 1.0, KMode::maxima) == 10000);
  CHECK(optimal_k(2, 1.0, 1.0, KMode::regression) >= 1);
  CHECK(optimal_k(1 << 12, 1.0, 1.0, KMode::levelset_beta) ==
        static_cast<std::size_t>(std::round(std::pow(4096.0, 2.0 / 3.0))));
  CHECK_THROWS_AS(optimal_k(1, 1.0, 1.0, KMode::regression), ValidationError);
}

TEST_CASE("set count bound") {
  CHECK(knn_set_count_bound(10, 2) == 200);
  CHECK(knn_set_count_bound(1, 7) == 7);
  CHECK(knn_set_count_bound(12, 2) == 288);
  CHECK(knn_set_count_bound(1000000, 3) == 3000000000000000000ULL);
  CHECK_THROWS_AS(knn_set_count_bound(10000000, 3), std::overflow_error);
}

TEST_CASE("level-set epsilon") {
  const Dataset d(PointSet(1, {0, 1, 2, 3}), {1, -1, 1, -1});
  const auto e = level_set_epsilon(d, 1, 4, 0.5);
  CHECK(e.sigma_hat == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(e.epsilon == doctest::Approx(4.0 * std::sqrt(2.0) * std::sqrt(std::log(4.0) * 2.0 / 4.0)).epsilon(1e-14));
  CHECK(e.epsilon == doctest::Approx(4.70964).epsilon(1e-5));
  const Dataset zero(PointSet(1, {0, 1}), {0, 0});
  CHECK(level_set_epsilon(zero, 1, 1, 0.1).epsilon == 0.0);
  const Dataset scaled(PointSet(1, {0, 1, 2, 3}), {3, -3, 3, -3});
  const auto s = level_set_epsilon(scaled, 1, 4, 0.5);
  CHECK(s.sigma_hat == doctest::Approx(3.0 * e.sigma_hat).epsilon(1e-15));
  CHECK(s.epsilon == doctest::Approx(3.0 * e.epsilon).epsilon(1e-15));
  CHECK_THROWS_AS(level_set_epsilon(Dataset(), 1, 1, 0.1), ValidationError);
}

TEST_CASE("level-set and maxima bounds") {
  BoundParams p = full1d();
  p.m2 = 0.5;
  p.c_low = 2.0;
  p.c_high = 2.0;
  p.beta = 1.0;
  const double expect = 2.0 * (24.0 * 0.5 / 2.0) * std::sqrt(std::log(4096.0) * std::log(20.0)) / std::sqrt(64.0);
  CHECK(levelset_hausdorff_bound(p, 4096, 64) == doctest::Approx(expect).epsilon(1e-14));
  // Max term: both branches.
  p.sigma = 0.0;
  const double r = radius_bound(p, 4096, 64);
  CHECK(maxima_distance_bound(p, 4096, 64) == doctest::Approx(std::sqrt(32.0 * r * r)).epsilon(1e-14));
}

TEST_CASE("parameter validation") {
  BoundParams p;
  p.gamma = 1.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.gamma = 1.0;
  p.delta = 1.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.delta = 0.1;
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.alpha = 1.0;
  CHECK_NOTHROW(p.validate());
  CHECK_THROWS_AS(variance_term(full1d(), 1, 1), ValidationError);
}
