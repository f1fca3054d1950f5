#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "knnrate/errors.hpp"
#include "knnrate/regression.hpp"
#include "knnrate/rng.hpp"

using namespace knnrate;

namespace {

Dataset random_dataset(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<double> c(n * dim), y(n);
  for (auto& v : c) v = rng.uniform();
  for (auto& v : y) v = rng.normal();
  return Dataset(PointSet(dim, std::move(c)), std::move(y));
}

ScalarField abs_field() {
  return ScalarField(1, [](std::span<const double> x) { return std::abs(x[0]); });
}

}  // namespace

TEST_CASE("constant observations predict the constant") {
  Rng rng(1);
  Dataset d = random_dataset(100, 2, rng);
  std::fill(d.y.begin(), d.y.end(), 3.25);
  for (std::size_t k : {1, 7, 100}) {
    const Regressor reg(d, k);
    const std::vector<double> q{rng.uniform(), rng.uniform()};
    CHECK(predict(reg, q) == 3.25);
  }
}

TEST_CASE("hand-computed prediction and radius") {
  const Regressor reg(Dataset(PointSet(1, {0, 1, 2}), {0, 10, 20}), 2);
  const std::vector<double> q{0.9};
  CHECK(predict(reg, q) == 5.0);
  CHECK(knn_radius(reg, q) == 0.9);
  const Regressor one(Dataset(PointSet(1, {0, 1, 2}), {0, 10, 20}), 1);
  const std::vector<double> s{1.0};
  CHECK(knn_radius(one, s) == 0.0);
}

TEST_CASE("k = n averages everything") {
  Rng rng(2);
  const Dataset d = random_dataset(57, 3, rng);
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / 57.0;
  const Regressor reg(d, 57);
  const std::vector<double> q{0.1, 0.9, 0.4};
  CHECK(predict(reg, q) == doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("radius agrees with the neighbor index") {
  Rng rng(3);
  const Regressor reg(random_dataset(400, 3, rng), 9);
  const auto idx = build_index(reg.data().x);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> q{rng.uniform(), rng.uniform(), rng.uniform()};
    REQUIRE(knn_radius(reg, q) == knn_query(idx, q, 9).radius);
  }
}

TEST_CASE("batch kernels agree with the serial reference") {
  Rng rng(4);
  const Dataset d = random_dataset(800, 2, rng);
  const Regressor reg(d, 13);
  std::vector<double> c(2 * 300);
  for (auto& v : c) v = rng.uniform();
  const PointSet probes(2, std::move(c));
  CHECK(predict_batch(reg, probes) == predict_batch_reference(d, 13, probes));
  const auto radii = knn_radius_batch(reg, probes);
  for (std::size_t i = 0; i < probes.size(); ++i) CHECK(radii[i] == knn_radius(reg, probes[i]));
}

TEST_CASE("sup error") {
  SUBCASE("zero noise on a constant field") {
    const ScalarField c(1, [](std::span<const double>) { return 2.0; });
    const Regressor reg(Dataset(PointSet(1, {0.1, 0.4, 0.8}), {2, 2, 2}), 2);
    const auto se = sup_error(reg, c, PointSet(1, {0.0, 0.5, 1.0}));
    CHECK(se.sup == 0.0);
  }
  SUBCASE("k = 1 interpolates at distinct samples") {
    Rng rng(5);
    const ScalarField f(2, [](std::span<const double> x) { return std::sin(4 * x[0]) + x[1]; });
    std::vector<double> c(2 * 200), y(200);
    for (auto& v : c) v = rng.uniform();
    PointSet pts(2, c);
    for (std::size_t i = 0; i < 200; ++i) y[i] = f.evaluate(pts[i]);
    const Regressor reg(Dataset(pts, y), 1);
    CHECK(sup_error(reg, f, pts).sup == 0.0);
  }
  SUBCASE("refining the probe set cannot lower the sup") {
    Rng rng(6);
    const Regressor reg(random_dataset(300, 1, rng), 5);
    const ScalarField zero(1, [](std::span<const double>) { return 0.0; });
    std::vector<double> coarse, fine;
    for (int i = 0; i <= 64; ++i) coarse.push_back(i / 64.0);
    for (int i = 0; i <= 256; ++i) fine.push_back(i / 256.0);
    const auto a = sup_error(reg, zero, PointSet(1, coarse));
    const auto b = sup_error(reg, zero, PointSet(1, fine));
    CHECK(a.sup <= b.sup);
    CHECK(a.per_probe.size() == 65);
    CHECK(a.per_probe[a.argmax_probe] == a.sup);
  }
  SUBCASE("empty probes") {
    const Regressor reg(Dataset(PointSet(1, {0.0}), {1.0}), 1);
    CHECK_THROWS_AS(sup_error(reg, abs_field(), PointSet()), ValidationError);
  }
}

TEST_CASE("predict properties") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + trial * 3, k = 1 + trial % 9;
    const Dataset d = random_dataset(n, 2, rng);
    const Regressor reg(d, k);
    // Permuted copy.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + trial % n, perm.end());
    std::vector<double> c, y;
    for (auto i : perm) {
      c.insert(c.end(), d.x[i].begin(), d.x[i].end());
      y.push_back(d.y[i]);
    }
    const Regressor permuted(Dataset(PointSet(2, c), y), k);
    // Affine image with a power-of-two scale: every step is exact.
    std::vector<double> ya(d.y);
    for (auto& v : ya) v = 4.0 * v;
    const Regressor scaled(Dataset(d.x, ya), k);
    for (int q = 0; q < 20; ++q) {
      const std::vector<double> p{rng.uniform(), rng.uniform()};
      const double f = predict(reg, p);
      CHECK(predict(permuted, p) == doctest::Approx(f).epsilon(1e-13));
      CHECK(predict(scaled, p) == 4.0 * f);
      const auto ns = reg.neighbors(p);
      double lo = HUGE_VAL, hi = -HUGE_VAL;
      for (auto m : ns.members) {
        lo = std::min(lo, d.y[m]);
        hi = std::max(hi, d.y[m]);
      }
      CHECK(f >= lo);
      CHECK(f <= hi);
    }
  }
}

TEST_CASE("zero-noise Lipschitz bias is at most C * r_k") {
  Rng rng(8);
  const ScalarField f(1, [](std::span<const double> x) { return 2.0 * std::abs(x[0] - 0.3); });
  std::vector<double> c(500), y(500);
  for (auto& v : c) v = rng.uniform();
  PointSet pts(1, c);
  for (std::size_t i = 0; i < 500; ++i) y[i] = f.evaluate(pts[i]);
  const Regressor reg(Dataset(pts, y), 12);
  for (int i = 0; i <= 200; ++i) {
    const std::vector<double> q{i / 200.0};
    CHECK(std::abs(predict(reg, q) - f.evaluate(q)) <= 2.0 * knn_radius(reg, q) + 1e-15);
  }
}

TEST_CASE("empirical modulus") {
  const std::vector<double> x0{0.0};
  SUBCASE("sampled |x| at 0 reaches r") {
    const auto m = empirical_modulus(abs_field(), x0, 0.5, 257);
    CHECK(m.approximate);
    CHECK(m.value == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("closed form wins") {
    const ScalarField lin(
        1, [](std::span<const double> x) { return x[0]; }, {},
        [](std::span<const double>, double r) { return r; },
        [](std::span<const double>, double r) { return r; });
    const std::vector<double> x{0.7};
    const auto m = empirical_modulus(lin, x, 0.25, 16);
    CHECK_FALSE(m.approximate);
    CHECK(m.value == 0.25);
  }
  SUBCASE("constant field") {
    const ScalarField c(1, [](std::span<const double>) { return 1.0; });
    CHECK(empirical_modulus(c, x0, 3.0, 64).value == 0.0);
  }
  CHECK_THROWS_AS(empirical_modulus(abs_field(), std::vector<double>{0.0, 0.0}, 1.0, 8),
                  ValidationError);
}

TEST_CASE("dataset file round trip") {
  const Dataset d(PointSet(2, {0.1, 0.25, -3.0, 1e-7}), {1.5, -0.3333333333333333});
  std::stringstream s;
  write_dataset(s, d);
  const std::string text = s.str();
  CHECK(text.rfind("2 2\n", 0) == 0);
  const Dataset back = read_dataset(s);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  std::stringstream again;
  write_dataset(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset(PointSet(1, {0.0, 1.0}), {1.0}), ValidationError);
  CHECK_THROWS_AS(Dataset(PointSet(1, {0.0}), {std::nan("")}), ValidationError);
  std::stringstream bad("1 2\n0.5 1\n");
  CHECK_THROWS_AS(read_dataset(bad), ValidationError);
  CHECK_THROWS_AS(Regressor(Dataset(PointSet(1, {0.0}), {1.0}), 2), ValidationError);
  CHECK_THROWS_AS(Regressor(Dataset(PointSet(1, {0.0}), {1.0}), 0), ValidationError);
}
