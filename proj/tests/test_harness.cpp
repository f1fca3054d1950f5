#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "knnrate/config.hpp"
#include "knnrate/errors.hpp"
#include "knnrate/harness.hpp"
#include "knnrate/structures.hpp"

using namespace knnrate;

namespace {

ExperimentConfig parse(const std::string& text, ExperimentKind kind) {
  return parse_experiment_config(Config::parse_text(text), kind);
}

std::vector<ExperimentRecord> power_law(double c, double e) {
  std::vector<ExperimentRecord> out;
  for (std::size_t n : {256, 512, 1024, 2048, 4096, 8192})
    for (std::uint64_t s = 0; s < 3; ++s)
      out.push_back({"regress", n, 1, s, "sup_error", c * std::pow(double(n), e), 0.0, false, 0.0});
  return out;
}

std::string csv(const std::vector<ExperimentRecord>& r) {
  std::ostringstream s;
  write_records_csv(s, r);
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse_text(
      "# comment\n"
      "a = 1\n"
      "  b.c = x y  # trailing\n"
      "list = 1, 2,3\n"
      "pts = 0.1,0.2; 0.3,0.4\n"
      "flag = true\n");
  CHECK(c.get_u64("a", 0) == 1);
  CHECK(c.get_string("b.c", "") == "x y");
  CHECK(c.get_u64s("list") == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.get_points("pts") == std::vector<std::vector<double>>{{0.1, 0.2}, {0.3, 0.4}});
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_double("missing", 2.5) == 2.5);
  CHECK_NOTHROW(c.reject_unused());
  CHECK_THROWS_AS(Config::parse_text("a = 1\na = 2\n"), ValidationError);
  CHECK_THROWS_AS(Config::parse_text("no equals sign\n"), ValidationError);
  CHECK_THROWS_AS(Config::parse_text("a = x\n").get_double("a"), ValidationError);
  CHECK_THROWS_AS(Config::parse_text("a = -1\n").get_u64("a"), ValidationError);
  const Config unused = Config::parse_text("a = 1\nb = 2\n");
  unused.get_u64("a", 0);
  try {
    unused.reject_unused();
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  try {
    Config::load("/nonexistent/cfg.txt");
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/cfg.txt") != std::string::npos);
  }
}

TEST_CASE("experiment config validation") {
  CHECK_THROWS_AS(parse("n.ladder = 512, 256\n", ExperimentKind::regress), ValidationError);
  CHECK_THROWS_AS(parse("n.ladder = 512\ntrials.seeds = 0\n", ExperimentKind::regress), ValidationError);
  CHECK_THROWS_AS(parse("trials.seeds = 2\n", ExperimentKind::regress), ValidationError);
  CHECK_THROWS_AS(parse("n.ladder = 512\nfield.colour = red\n", ExperimentKind::regress), ValidationError);
  CHECK_THROWS_AS(parse("experiment = maxima\nn.ladder = 512\n", ExperimentKind::regress), ValidationError);
  CHECK_THROWS_AS(parse("n.ladder = 512\nk.rule = power\n", ExperimentKind::regress), MissingParameter);
  CHECK_THROWS_AS(parse("n.ladder = 512\n", ExperimentKind::levelset), MissingParameter);
  const auto cfg = parse("n.ladder = 512, 1024\nnoise.kind = gaussian\nnoise.scale = 0.1\n",
                         ExperimentKind::regress);
  CHECK(cfg.ladder == std::vector<std::size_t>{512, 1024});
  CHECK(cfg.noise.sigma() == 0.1);
}

TEST_CASE("k rules") {
  KRule r;
  r.kind = KRule::Kind::power;
  r.exponent = 2.0 / 3.0;
  CHECK(r.resolve(512, 1, 1).front() == 64);
  CHECK(r.resolve(1000, 1, 1).front() == 100);
  CHECK(r.resolve(1 << 15, 1, 1).front() == 1024);
  CHECK(r.resolve(3000, 1, 1).front() == static_cast<std::size_t>(std::ceil(std::pow(3000.0, 2.0 / 3.0))));
  r.factor = 1e6;
  CHECK(r.resolve(50, 1, 1).front() == 50);
  KRule o;
  CHECK(o.resolve(10000, 1.0, 2.0).front() == 100);
  o.mode = KMode::maxima;
  CHECK(o.resolve(100000, 1.0, 1.0).front() == 10000);
  KRule f;
  f.kind = KRule::Kind::fixed;
  f.values = {1, 3, 5};
  CHECK(f.resolve(12, 1, 1) == std::vector<std::size_t>{1, 3, 5});
}

TEST_CASE("rate fit") {
  SUBCASE("exact power laws") {
    const auto a = fit_rate(power_law(1.0, -0.5), "sup_error");
    CHECK(std::abs(a.slope + 0.5) <= 1e-10);
    CHECK(a.residual_rms <= 1e-12);
    CHECK(a.rungs == 6);
    const auto b = fit_rate(power_law(3.0, -1.0 / 3.0), "sup_error");
    CHECK(std::abs(b.slope + 1.0 / 3.0) <= 1e-10);
    CHECK(std::abs(b.intercept - std::log(3.0)) <= 1e-10);
  }
  SUBCASE("median per rung") {
    auto r = power_law(1.0, -0.5);
    r[0].value = 1e9;  // one outlier at the first rung leaves the median alone
    CHECK(std::abs(fit_rate(r, "sup_error").slope + 0.5) <= 1e-10);
  }
  SUBCASE("noisy records refit identically") {
    auto r = power_law(2.0, -0.4);
    for (std::size_t i = 0; i < r.size(); ++i) r[i].value *= 1.0 + 0.1 * std::sin(double(i) * 1.7);
    const auto a = fit_rate(r, "sup_error"), b = fit_rate(r, "sup_error");
    CHECK(a.slope == b.slope);
    CHECK(a.slope_stderr > 0.0);
    CHECK(std::abs(a.slope + 0.4) <= 3.0 * a.slope_stderr);
  }
  SUBCASE("degenerate inputs") {
    auto r = power_law(1.0, -0.5);
    for (auto& x : r) x.value = 0.0;
    CHECK_THROWS_AS(fit_rate(r, "sup_error"), DegenerateFit);
    auto few = power_law(1.0, -0.5);
    few.resize(9);
    CHECK_THROWS_AS(fit_rate(few, "sup_error"), DegenerateFit);
    CHECK_THROWS_AS(fit_rate(power_law(1.0, -0.5), "hausdorff"), DegenerateFit);
  }
}

TEST_CASE("CSV round trip") {
  std::vector<ExperimentRecord> r = power_law(1.0 / 3.0, -0.37);
  r[1].bound = std::nan("");
  r[2].valid_k = true;
  r[3].ms = 12.25;
  const std::string text = csv(r);
  CHECK(text.rfind("experiment,n,k,seed,quantity,value,bound,valid_k,ms\n", 0) == 0);
  std::istringstream in(text);
  const auto back = read_records_csv(in);
  REQUIRE(back.size() == r.size());
  CHECK(std::isnan(back[1].bound));
  CHECK(back[0] == r[0]);
  CHECK(back[3].ms == 12.25);
  CHECK(csv(back) == text);
  std::istringstream bad("wrong,header\n");
  CHECK_THROWS_AS(read_records_csv(bad), ValidationError);
  CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("noiseless constant field: zero sup errors, fit declined") {
  const auto cfg = parse(
      "field.kind = constant\nfield.value = 2\nn.ladder = 64, 128, 256, 512\ntrials.seeds = 2\n",
      ExperimentKind::regress);
  const auto r = run_regression_rate(cfg);
  CHECK(r.size() == 8);
  for (const auto& x : r) CHECK(x.value == 0.0);
  CHECK_THROWS_AS(fit_rate(r, "sup_error"), DegenerateFit);
}

TEST_CASE("bound column is recomputable") {
  const auto cfg = parse(
      "noise.kind = gaussian\nnoise.scale = 0.1\nn.ladder = 128, 256\ntrials.seeds = 2\n"
      "k.rule = power\nk.exponent = 0.6666666666666666\n",
      ExperimentKind::regress);
  for (const auto& x : run_regression_rate(cfg)) {
    CHECK(x.bound == holder_bound(declared_params(cfg), x.n, x.k, false));
    CHECK(x.bound == record_bound(cfg, x.quantity, x.n, x.k));
  }
}

TEST_CASE("level-set experiment edge cases") {
  SUBCASE("lambda below min f: whole sample set against whole grid") {
    const auto cfg = parse(
        "levelset.lambda = -5\nlevelset.epsilon = 0\nlevelset.grid = 1025\nk.rule = fixed\n"
        "n.ladder = 200\nbounds.m2 = 1\n",
        ExperimentKind::levelset);
    const auto r = run_levelset(cfg);
    REQUIRE(r.size() == 1);
    CHECK(r[0].quantity == "hausdorff");
    // Largest gap between samples (or to the ends) bounds the distance.
    auto data = make_dataset(cfg, 200, 0);
    std::vector<double> xs(data.x.coords());
    xs.push_back(0.0);
    xs.push_back(1.0);
    std::sort(xs.begin(), xs.end());
    double mesh = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) mesh = std::max(mesh, xs[i] - xs[i - 1]);
    CHECK(r[0].value <= std::max(1.0 / 1024, mesh));
  }
  SUBCASE("lambda above max f: failure rows") {
    const auto cfg = parse("levelset.lambda = 5\nn.ladder = 200\nbounds.m2 = 1\nfield.kind = quadratic-peak\n",
                           ExperimentKind::levelset);
    const auto r = run_levelset(cfg);
    CHECK(r[0].quantity == "hausdorff_failure");
    CHECK(std::isnan(r[0].value));
  }
  SUBCASE("noise-free epsilon-zero run beats the noisy median") {
    const std::string base =
        "field.height = 0.5\nfield.slope = 2\nlevelset.lambda = 0\nbounds.m2 = 0.31\n"
        "n.ladder = 4096\ntrials.seeds = 9\n";
    const auto clean = run_levelset(parse(base + "levelset.epsilon = 0\n", ExperimentKind::levelset));
    const auto noisy = run_levelset(parse(base + "noise.kind = gaussian\nnoise.scale = 0.1\n",
                                          ExperimentKind::levelset));
    std::vector<double> v;
    for (const auto& x : noisy) v.push_back(x.value);
    for (const auto& x : clean) CHECK(x.value <= median(v));
  }
}

TEST_CASE("maxima with k = 1 and no noise is the nearest sample to the peak") {
  const auto cfg = parse("field.kind = quadratic-peak\nk.rule = fixed\nn.ladder = 300\ntrials.seeds = 3\n",
                         ExperimentKind::maxima);
  const auto r = run_maxima(cfg);
  for (const auto& x : r) {
    const auto data = make_dataset(cfg, x.n, x.seed);
    double best = HUGE_VAL;
    for (double c : data.x.coords()) best = std::min(best, std::abs(c - 0.5));
    CHECK(x.value == best);
  }
}

TEST_CASE("set-count experiment") {
  const auto cfg = parse("density.dim = 2\nn.ladder = 1, 3, 12\nk.values = 1, 3, 5\nprobes.resolution = 200\n",
                         ExperimentKind::setcount);
  const auto r = run_setcount(cfg);
  for (const auto& x : r) {
    CHECK(x.value <= x.bound);
    CHECK(x.k <= x.n);
    if (x.n == 1) CHECK(x.value == 1.0);
  }
  CHECK(r.size() == 1 + 2 + 3);
  const auto one_d = parse("n.ladder = 3\nprobes.resolution = 1000\n", ExperimentKind::setcount);
  const auto r1 = run_setcount(one_d);
  CHECK(r1[0].value <= 3.0);
  CHECK(r1[0].bound == 3.0);
}

TEST_CASE("coverage with no noise") {
  const auto cfg = parse("n.ladder = 4096\ntrials.seeds = 20\nk.rule = power\nk.exponent = 0.6666666666666666\n",
                         ExperimentKind::coverage);
  const auto res = run_coverage(cfg);
  REQUIRE(res.rungs.size() == 1);
  CHECK(res.rungs[0].trials == 20);
  CHECK(res.rungs[0].coverage >= 0.9);
  CHECK(res.records.size() == 40);
}

TEST_CASE("determinism and seed discipline") {
  const std::string text =
      "noise.kind = rademacher\nnoise.scale = 0.2\nn.ladder = 100, 200\ntrials.seeds = 3\n";
  const auto a = run_regression_rate(parse(text, ExperimentKind::regress));
  const auto b = run_regression_rate(parse(text, ExperimentKind::regress));
  CHECK(csv(a) == csv(b));
  const auto c = run_regression_rate(parse(text + "master_seed = 2\n", ExperimentKind::regress));
  CHECK(csv(a) != csv(c));
  // Records sorted by (n, seed).
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK(std::pair(a[i - 1].n, a[i - 1].seed) < std::pair(a[i].n, a[i].seed));
  CHECK(trial_seed(1, 100, 0, "points") != trial_seed(1, 100, 0, "noise"));
  CHECK(trial_seed(1, 100, 0, "points") != trial_seed(1, 200, 0, "points"));
}

TEST_CASE("manifold experiment produces records with a manifold bound") {
  const auto cfg = parse("manifold.ambient_dim = 10\nn.ladder = 256, 512\ntrials.seeds = 2\n",
                         ExperimentKind::manifold);
  const auto r = run_manifold(cfg);
  CHECK(r.size() == 4);
  for (const auto& x : r) CHECK(x.bound == holder_bound(declared_params(cfg), x.n, x.k, true));
}
