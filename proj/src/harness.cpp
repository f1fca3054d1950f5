#include "knnrate/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <sstream>

#include "knnrate/rng.hpp"
#include "knnrate/sequences.hpp"
#include "knnrate/structures.hpp"

namespace knnrate {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t to_size(std::uint64_t v) { return static_cast<std::size_t>(v); }

std::size_t ambient_dim(const ExperimentConfig& cfg) {
  return cfg.manifold ? cfg.manifold->ambient_dim : cfg.density.dim;
}

ScalarField experiment_field(const ExperimentConfig& cfg) {
  if (cfg.manifold) return Manifold(*cfg.manifold).field();
  return make_field(cfg.field_kind, cfg.field);
}

Setting setting_for(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::manifold: return Setting::manifold;
    case ExperimentKind::levelset: return Setting::levelset;
    case ExperimentKind::maxima: return Setting::maxima;
    default: return Setting::full;
  }
}

// Grid with `res` points per axis over [lo, hi]^dim (dim <= 2) or `res`
// Halton points of the box; `keep` filters to the support.
template <class Keep>
PointSet box_points(std::size_t dim, double lo, double hi, std::size_t res, Keep keep) {
  PointSet out;
  std::vector<double> p(dim);
  if (dim <= 2) {
    if (res < 2) throw ValidationError("probe grid needs at least 2 points per axis");
    const double h = (hi - lo) / static_cast<double>(res - 1);
    auto coord = [&](std::size_t i) { return i + 1 == res ? hi : lo + h * static_cast<double>(i); };
    if (dim == 1) {
      for (std::size_t i = 0; i < res; ++i) {
        p[0] = coord(i);
        if (keep(p)) out.push_back(p);
      }
    } else {
      for (std::size_t i = 0; i < res; ++i)
        for (std::size_t j = 0; j < res; ++j) {
          p[0] = coord(i);
          p[1] = coord(j);
          if (keep(p)) out.push_back(p);
        }
    }
    return out;
  }
  if (dim > kMaxHaltonDim) throw ValidationError("Halton probes support at most 32 dimensions");
  for (std::uint64_t idx = 1; out.size() < res && idx < 1000 * static_cast<std::uint64_t>(res); ++idx) {
    for (std::size_t j = 0; j < dim; ++j) p[j] = lo + (hi - lo) * radical_inverse(idx, kHaltonPrimes[j]);
    if (keep(p)) out.push_back(p);
  }
  return out;
}

PointSet support_points(const DensitySpec& d, std::size_t res) {
  auto keep = [&](const std::vector<double>& p) { return d.contains(p); };
  if (d.kind == DensityKind::uniform_ball) {
    // Bounding box of the ball; all axes share the same extent only when the
    // center is symmetric, so shift per axis.
    PointSet unit = box_points(d.dim, -d.radius, d.radius, res, [&](const std::vector<double>& p) {
      std::vector<double> q(p);
      for (std::size_t j = 0; j < q.size(); ++j) q[j] += d.center.empty() ? 0.0 : d.center[j];
      return d.contains(q);
    });
    std::vector<double> coords = unit.coords();
    for (std::size_t i = 0; i < coords.size(); ++i)
      coords[i] += d.center.empty() ? 0.0 : d.center[i % d.dim];
    return PointSet(d.dim, std::move(coords));
  }
  return box_points(d.dim, d.low, d.high, res, keep);
}

double grid_spacing(const DensitySpec& d, std::size_t res) {
  const double side = d.kind == DensityKind::uniform_ball ? 2.0 * d.radius : d.high - d.low;
  return side / static_cast<double>(res - 1);
}

// Runs trial(n, seed) over the ladder x seeds; output ordered by (n, seed)
// whatever the completion order.
template <class Trial>
std::vector<ExperimentRecord> run_trials(const ExperimentConfig& cfg, Trial trial) {
  std::vector<std::pair<std::size_t, std::uint64_t>> jobs;
  for (std::size_t n : cfg.ladder)
    for (std::uint64_t s = 0; s < cfg.seeds; ++s) jobs.emplace_back(n, s);
  std::vector<std::vector<ExperimentRecord>> slots(jobs.size());
  std::exception_ptr failure;
  const auto m = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      slots[i] = trial(jobs[i].first, jobs[i].second);
      if (cfg.timing) {
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        for (auto& r : slots[i]) r.ms = ms;
      }
    } catch (...) {
#pragma omp critical(knnrate_trial_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ExperimentRecord> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

struct RungPlan {
  std::size_t k = 0;
  bool valid = false;
};

std::map<std::size_t, RungPlan> plan_rungs(const ExperimentConfig& cfg) {
  const BoundParams params = declared_params(cfg);
  const FieldMetadata meta = experiment_field(cfg).metadata();
  double smooth = 1.0;
  if (cfg.kind == ExperimentKind::levelset)
    smooth = meta.beta.value_or(1.0);
  else
    smooth = meta.alpha.value_or(1.0);
  const double dim = cfg.manifold ? 1.0 : static_cast<double>(ambient_dim(cfg));
  std::map<std::size_t, RungPlan> plan;
  for (std::size_t n : cfg.ladder) {
    RungPlan r;
    r.k = cfg.k.resolve(n, smooth, dim).front();
    if (r.k > n)
      throw ValidationError("k = " + std::to_string(r.k) + " exceeds n = " + std::to_string(n));
    r.valid = n >= 2 && k_range_check(params, n, r.k, setting_for(cfg.kind)).pass;
    plan[n] = r;
  }
  return plan;
}

ExperimentRecord make_record(const ExperimentConfig& cfg, std::size_t n, std::size_t k,
                             std::uint64_t seed, std::string quantity, double value, double bound,
                             bool valid) {
  return {to_string(cfg.kind), n, k, seed, std::move(quantity), value, bound, valid, 0.0};
}

void require_kind(const ExperimentConfig& cfg, ExperimentKind kind) {
  if (cfg.kind != kind)
    throw ValidationError("config is for experiment '" + to_string(cfg.kind) + "', not '" +
                          to_string(kind) + "'");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::regress: return "regress";
    case ExperimentKind::manifold: return "manifold";
    case ExperimentKind::levelset: return "levelset";
    case ExperimentKind::maxima: return "maxima";
    case ExperimentKind::coverage: return "coverage";
    case ExperimentKind::setcount: return "setcount";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::regress, ExperimentKind::manifold, ExperimentKind::levelset,
                 ExperimentKind::maxima, ExperimentKind::coverage, ExperimentKind::setcount})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown experiment kind: " + s);
}

std::string primary_quantity(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::regress:
    case ExperimentKind::manifold:
    case ExperimentKind::coverage: return "sup_error";
    case ExperimentKind::levelset: return "hausdorff";
    case ExperimentKind::maxima: return "argmax_error";
    case ExperimentKind::setcount: return "set_count";
  }
  return "?";
}

std::vector<std::size_t> KRule::resolve(std::size_t n, double smoothness_default,
                                        double dim_default) const {
  std::vector<std::size_t> out;
  switch (kind) {
    case Kind::fixed:
      if (values.empty()) return {value};
      return values;
    case Kind::optimal: {
      const double s = smoothness.value_or(smoothness_default);
      const double d = dim.value_or(dim_default);
      std::size_t k = 0;
      if (factor == 1.0) {
        k = optimal_k(n, s, d, mode);
      } else {
        const double e = mode == KMode::maxima ? 4.0 / (4.0 + d) : 2.0 * s / (2.0 * s + d);
        k = static_cast<std::size_t>(
            std::max(1.0, std::round(factor * std::pow(static_cast<double>(n), e))));
      }
      return {std::clamp<std::size_t>(k, 1, n)};
    }
    case Kind::power: {
      // ceil, except that values within 1e-9 relative of an integer snap to
      // it, so ceil(512^(2/3)) is 64 and not 65.
      const double x = factor * std::pow(static_cast<double>(n), exponent);
      const double r = std::round(x);
      const double k = std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : std::ceil(x);
      return {std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1.0, k)), 1, n)};
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (ladder.empty()) throw ValidationError("n.ladder must list at least one sample size");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1) throw ValidationError("n.ladder entries must be positive");
    if (kind != ExperimentKind::setcount && ladder[i] < 2)
      throw ValidationError("n.ladder entries must be >= 2 for this experiment");
    if (i > 0 && ladder[i] <= ladder[i - 1])
      throw ValidationError("n.ladder must be strictly increasing");
  }
  if (seeds < 1) throw ValidationError("trials.seeds must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  noise.validate();
  if (kind == ExperimentKind::manifold) {
    if (!manifold) throw ValidationError("manifold experiment needs a manifold spec");
    manifold->validate();
  } else {
    density.validate();
  }
  if (k.kind == KRule::Kind::fixed) {
    for (std::size_t v : k.values.empty() ? std::vector<std::size_t>{k.value} : k.values)
      if (v < 1) throw ValidationError("k values must be >= 1");
  }
  if (!(k.factor > 0.0)) throw ValidationError("k.factor must be positive");
  bound_overrides.validate();
}

ExperimentConfig parse_experiment_config(const Config& c, ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  if (auto e = c.get_string("experiment"); e && parse_experiment_kind(*e) != kind)
    throw ValidationError("config declares experiment '" + *e + "' but '" + to_string(kind) +
                          "' was requested");
  cfg.master_seed = c.get_u64("master_seed", 1);
  cfg.delta = c.get_double("delta", 0.1);

  if (kind == ExperimentKind::manifold) {
    ManifoldSpec m;
    m.kind = parse_manifold_kind(c.get_string("manifold.kind", "circle"));
    m.ambient_dim = to_size(c.get_u64("manifold.ambient_dim", 10));
    m.radius = c.get_double("manifold.radius", m.radius);
    m.major = c.get_double("manifold.major", m.major);
    m.minor = c.get_double("manifold.minor", m.minor);
    m.winds_major = static_cast<int>(c.get_u64("manifold.winds_major", 2));
    m.winds_minor = static_cast<int>(c.get_u64("manifold.winds_minor", 3));
    m.spiral_start = c.get_double("manifold.spiral_start", m.spiral_start);
    m.spiral_end = c.get_double("manifold.spiral_end", m.spiral_end);
    m.spiral_scale = c.get_double("manifold.spiral_scale", m.spiral_scale);
    m.rotate = c.get_bool("manifold.rotate", true);
    m.rotation_seed = c.get_u64("manifold.rotation_seed", derive_seed(cfg.master_seed, 0, "rotation"));
    m.field_height = c.get_double("manifold.field_height", m.field_height);
    m.field_slope = c.get_double("manifold.field_slope", m.field_slope);
    m.field_center = c.get_double("manifold.field_center", m.field_center);
    cfg.manifold = m;
  } else {
    DensitySpec& d = cfg.density;
    d.kind = parse_density_kind(c.get_string("density.kind", "uniform-box"));
    d.dim = to_size(c.get_u64("density.dim", 1));
    d.low = c.get_double("density.low", d.low);
    d.high = c.get_double("density.high", d.high);
    d.center = c.get_doubles("density.center");
    d.radius = c.get_double("density.radius", d.radius);
    d.floor_weight = c.get_double("density.floor_weight", d.floor_weight);
    d.components = c.get_points("density.components");
    d.component_std = c.get_double("density.component_std", d.component_std);

    if (kind != ExperimentKind::setcount) {
      cfg.field_kind = parse_field_kind(c.get_string("field.kind", "tent"));
      FieldParams& f = cfg.field;
      f.dim = d.dim;
      f.height = c.get_double("field.height", f.height);
      f.slope = c.get_double("field.slope", f.slope);
      f.alpha = c.get_double("field.alpha", f.alpha);
      f.center = c.get_doubles("field.center");
      f.level = c.get_double("field.level");
      f.curvature = c.get_double("field.curvature", f.curvature);
      f.r_m = c.get_double("field.r_m", f.r_m);
      f.value = c.get_double("field.value", f.value);
      f.coef = c.get_doubles("field.coef");
      f.offset = c.get_double("field.offset", f.offset);
    }
  }

  if (kind != ExperimentKind::setcount) {
    cfg.noise.kind = parse_noise_kind(c.get_string("noise.kind", "none"));
    cfg.noise.scale = c.get_double("noise.scale", 0.0);
  }

  for (auto v : c.get_u64s("n.ladder")) cfg.ladder.push_back(to_size(v));

  const std::string rule = c.get_string("k.rule", kind == ExperimentKind::setcount ? "fixed" : "optimal");
  if (rule == "fixed") {
    cfg.k.kind = KRule::Kind::fixed;
    cfg.k.value = to_size(c.get_u64("k.value", 1));
    for (auto v : c.get_u64s("k.values")) cfg.k.values.push_back(to_size(v));
  } else if (rule == "optimal") {
    cfg.k.kind = KRule::Kind::optimal;
  } else if (rule == "power") {
    cfg.k.kind = KRule::Kind::power;
    auto e = c.get_double("k.exponent");
    if (!e) throw MissingParameter("k.exponent");
    cfg.k.exponent = *e;
  } else {
    throw ValidationError("unknown k.rule: " + rule);
  }
  const std::string default_mode = kind == ExperimentKind::levelset ? "levelset"
                                   : kind == ExperimentKind::maxima ? "maxima"
                                                                    : "regression";
  const std::string mode = c.get_string("k.mode", default_mode);
  if (mode == "regression")
    cfg.k.mode = KMode::regression;
  else if (mode == "levelset")
    cfg.k.mode = KMode::levelset_beta;
  else if (mode == "maxima")
    cfg.k.mode = KMode::maxima;
  else
    throw ValidationError("unknown k.mode: " + mode);
  cfg.k.factor = c.get_double("k.factor", 1.0);
  cfg.k.smoothness = c.get_double("k.smoothness");
  cfg.k.dim = c.get_double("k.dim");

  cfg.probe_resolution = to_size(c.get_u64("probes.resolution", 0));
  cfg.seeds = to_size(c.get_u64("trials.seeds", 1));

  if (kind == ExperimentKind::levelset) {
    cfg.lambda = c.get_double("levelset.lambda");
    cfg.epsilon_override = c.get_double("levelset.epsilon");
    cfg.truth_grid = to_size(c.get_u64("levelset.grid", 0));
    if (!cfg.lambda) cfg.lambda = cfg.field.level;
    if (!cfg.lambda) throw MissingParameter("levelset.lambda");
    if (cfg.field.level && *cfg.field.level != *cfg.lambda)
      throw ValidationError("field.level and levelset.lambda disagree");
    if (cfg.field_kind == FieldKind::tent) cfg.field.level = cfg.lambda;
    if (cfg.epsilon_override && !(*cfg.epsilon_override >= 0.0))
      throw ValidationError("levelset.epsilon must be nonnegative");
  }

  BoundParams& b = cfg.bound_overrides;
  b.gamma = c.get_double("bounds.gamma");
  b.p0 = c.get_double("bounds.p0");
  b.r0 = c.get_double("bounds.r0");
  b.sigma = c.get_double("bounds.sigma");
  b.alpha = c.get_double("bounds.alpha");
  b.c_alpha = c.get_double("bounds.c_alpha");
  b.beta = c.get_double("bounds.beta");
  b.c_low = c.get_double("bounds.c_low");
  b.c_high = c.get_double("bounds.c_high");
  b.r_m = c.get_double("bounds.r_m");
  b.d = c.get_double("bounds.d");
  b.tau = c.get_double("bounds.tau");
  b.m2 = c.get_double("bounds.m2");
  b.dim = kind == ExperimentKind::manifold ? cfg.manifold->ambient_dim : cfg.density.dim;

  cfg.output_path = c.get_string("output.path", "");
  cfg.timing = c.get_bool("output.timing", false);

  c.reject_unused();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path, ExperimentKind kind) {
  return parse_experiment_config(Config::load(path), kind);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::uint64_t seed,
                         const char* label) {
  return derive_seed(derive_seed(master, n, "rung"), seed, label);
}

BoundParams declared_params(const ExperimentConfig& cfg) {
  BoundParams p;
  p.dim = ambient_dim(cfg);
  p.delta = cfg.delta;
  p.sigma = cfg.noise.sigma();
  if (cfg.manifold) {
    const Manifold m(*cfg.manifold);
    p.d = 1.0;
    p.p0 = m.p0();
    p.tau = m.tau();
  } else {
    p.gamma = cfg.density.gamma();
    p.p0 = cfg.density.p0();
    p.r0 = cfg.density.r0();
  }
  const FieldMetadata meta = experiment_field(cfg).metadata();
  p.alpha = meta.alpha;
  p.c_alpha = meta.c_alpha;
  p.beta = meta.beta;
  p.c_low = meta.c_low;
  p.c_high = meta.c_high;
  p.r_m = meta.r_m;

  const BoundParams& o = cfg.bound_overrides;
  for (auto [dst, src] : {std::pair{&p.gamma, &o.gamma}, {&p.p0, &o.p0}, {&p.r0, &o.r0},
                          {&p.sigma, &o.sigma}, {&p.alpha, &o.alpha}, {&p.c_alpha, &o.c_alpha},
                          {&p.beta, &o.beta}, {&p.c_low, &o.c_low}, {&p.c_high, &o.c_high},
                          {&p.r_m, &o.r_m}, {&p.d, &o.d}, {&p.tau, &o.tau}, {&p.m2, &o.m2}})
    if (*src) *dst = *src;
  p.validate();
  return p;
}

PointSet make_probes(const ExperimentConfig& cfg) {
  if (cfg.manifold) {
    const std::size_t res = cfg.probe_resolution ? cfg.probe_resolution : 512;
    const Manifold m(*cfg.manifold);
    std::vector<double> ts(res);
    const double denom = m.closed() ? static_cast<double>(res) : static_cast<double>(res - 1);
    for (std::size_t i = 0; i < res; ++i) ts[i] = static_cast<double>(i) / denom;
    return m.embed_all(ts);
  }
  const std::size_t res =
      cfg.probe_resolution ? cfg.probe_resolution : (cfg.density.dim <= 2 ? 513 : 4096);
  PointSet probes = support_points(cfg.density, res);
  if (probes.empty()) throw ValidationError("probe set is empty");
  return probes;
}

Dataset make_dataset(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
  std::vector<double> y =
      cfg.kind == ExperimentKind::setcount
          ? std::vector<double>(n, 0.0)
          : sample_noise(cfg.noise, n, trial_seed(cfg.master_seed, n, seed, "noise"));
  const std::uint64_t point_seed = trial_seed(cfg.master_seed, n, seed, "points");
  if (cfg.manifold) {
    const Manifold m(*cfg.manifold);
    auto sample = embed_manifold(*cfg.manifold, n, point_seed);
    for (std::size_t i = 0; i < n; ++i) y[i] += m.intrinsic_field(sample.intrinsic[i]);
    return Dataset(std::move(sample.points), std::move(y));
  }
  PointSet x = sample_points(cfg.density, n, point_seed);
  if (cfg.kind != ExperimentKind::setcount) {
    const ScalarField f = make_field(cfg.field_kind, cfg.field);
    for (std::size_t i = 0; i < n; ++i) y[i] += f.evaluate(x[i]);
  }
  return Dataset(std::move(x), std::move(y));
}

double record_bound(const ExperimentConfig& cfg, const std::string& quantity, std::size_t n,
                    std::size_t k) {
  if (quantity == "set_count") return static_cast<double>(knn_set_count_bound(n, ambient_dim(cfg)));
  if (quantity == "hausdorff_failure") return kNaN;
  const BoundParams p = declared_params(cfg);
  if (quantity == "sup_error") return holder_bound(p, n, k, cfg.kind == ExperimentKind::manifold);
  if (quantity == "max_radius")
    return cfg.manifold ? manifold_radius_bound(p, n, k) : radius_bound(p, n, k);
  if (quantity == "hausdorff") return levelset_hausdorff_bound(p, n, k);
  if (quantity == "argmax_error") return maxima_distance_bound(p, n, k);
  throw ValidationError("unknown record quantity: " + quantity);
}

std::vector<ExperimentRecord> run_regression_rate(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::regress);
  const auto plan = plan_rungs(cfg);
  const ScalarField field = experiment_field(cfg);
  const PointSet probes = make_probes(cfg);
  std::map<std::size_t, double> bound;
  for (const auto& [n, r] : plan) bound[n] = record_bound(cfg, "sup_error", n, r.k);
  return run_trials(cfg, [&](std::size_t n, std::uint64_t seed) {
    const RungPlan& r = plan.at(n);
    const Regressor reg(make_dataset(cfg, n, seed), r.k);
    const SupError se = sup_error(reg, field, probes);
    return std::vector{make_record(cfg, n, r.k, seed, "sup_error", se.sup, bound.at(n), r.valid)};
  });
}

std::vector<ExperimentRecord> run_manifold(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::manifold);
  const auto plan = plan_rungs(cfg);
  const Manifold m(*cfg.manifold);
  const PointSet probes = make_probes(cfg);
  // Truth at the probes straight from their intrinsic coordinates.
  const std::size_t res = probes.size();
  const double denom = m.closed() ? static_cast<double>(res) : static_cast<double>(res - 1);
  std::vector<double> truth(res);
  for (std::size_t i = 0; i < res; ++i) truth[i] = m.intrinsic_field(static_cast<double>(i) / denom);
  std::map<std::size_t, double> bound;
  for (const auto& [n, r] : plan) bound[n] = record_bound(cfg, "sup_error", n, r.k);
  return run_trials(cfg, [&](std::size_t n, std::uint64_t seed) {
    const RungPlan& r = plan.at(n);
    const Regressor reg(make_dataset(cfg, n, seed), r.k);
    const auto fitted = predict_batch(reg, probes);
    double sup = 0.0;
    for (std::size_t i = 0; i < res; ++i) sup = std::max(sup, std::abs(fitted[i] - truth[i]));
    return std::vector{make_record(cfg, n, r.k, seed, "sup_error", sup, bound.at(n), r.valid)};
  });
}

std::vector<ExperimentRecord> run_levelset(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::levelset);
  const auto plan = plan_rungs(cfg);
  const ScalarField field = experiment_field(cfg);
  const double lambda = *cfg.lambda;
  const std::size_t res = cfg.truth_grid ? cfg.truth_grid
                          : cfg.density.dim == 1 ? 4097
                          : cfg.density.dim == 2 ? 513
                                                 : 65536;
  std::optional<PointCloud> truth;
  try {
    truth = true_level_set_grid(field, lambda, support_points(cfg.density, res),
                                cfg.density.dim <= 2 ? std::optional(grid_spacing(cfg.density, res))
                                                     : std::nullopt);
  } catch (const EmptySetError&) {
    truth.reset();
  }
  std::map<std::size_t, double> bound;
  for (const auto& [n, r] : plan) bound[n] = record_bound(cfg, "hausdorff", n, r.k);
  return run_trials(cfg, [&](std::size_t n, std::uint64_t seed) {
    const RungPlan& r = plan.at(n);
    const Regressor reg(make_dataset(cfg, n, seed), r.k);
    const double eps = cfg.epsilon_override
                           ? *cfg.epsilon_override
                           : level_set_epsilon(reg.data(), cfg.density.dim, r.k, cfg.delta).epsilon;
    const auto fitted = fit_samples(reg);
    const LevelSetEstimate est = estimate_level_set(reg, fitted, lambda, eps);
    if (!truth || est.member_indices.empty())
      return std::vector{make_record(cfg, n, r.k, seed, "hausdorff_failure", kNaN, kNaN, r.valid)};
    const double dh = hausdorff_distance(truth->points, est.member_points);
    return std::vector{make_record(cfg, n, r.k, seed, "hausdorff", dh, bound.at(n), r.valid)};
  });
}

std::vector<ExperimentRecord> run_maxima(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::maxima);
  const auto plan = plan_rungs(cfg);
  const ScalarField field = experiment_field(cfg);
  if (!field.metadata().peak) throw ValidationError("maxima experiment needs a field with a peak");
  const std::vector<double> x0 = *field.metadata().peak;
  std::map<std::size_t, double> bound;
  for (const auto& [n, r] : plan) bound[n] = record_bound(cfg, "argmax_error", n, r.k);
  return run_trials(cfg, [&](std::size_t n, std::uint64_t seed) {
    const RungPlan& r = plan.at(n);
    const Regressor reg(make_dataset(cfg, n, seed), r.k);
    const MaximaEstimate est = estimate_maxima(reg);
    const double err = distance(est.location, x0);
    return std::vector{make_record(cfg, n, r.k, seed, "argmax_error", err, bound.at(n), r.valid)};
  });
}

std::vector<ExperimentRecord> run_setcount(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::setcount);
  const PointSet probes = make_probes(cfg);
  return run_trials(cfg, [&](std::size_t n, std::uint64_t seed) {
    const Dataset data = make_dataset(cfg, n, seed);
    const double bound = record_bound(cfg, "set_count", n, 1);
    std::vector<ExperimentRecord> out;
    for (std::size_t k : cfg.k.resolve(n, 1.0, static_cast<double>(cfg.density.dim))) {
      if (k > n) continue;
      const auto count = static_cast<double>(count_distinct_knn_sets(data, k, probes));
      out.push_back(make_record(cfg, n, k, seed, "set_count", count, bound, true));
    }
    return out;
  });
}

CoverageResult run_coverage(const ExperimentConfig& cfg) {
  require_kind(cfg, ExperimentKind::coverage);
  const auto plan = plan_rungs(cfg);
  const ScalarField field = experiment_field(cfg);
  const PointSet probes = make_probes(cfg);
  std::vector<double> truth(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) truth[i] = field.evaluate(probes[i]);
  std::map<std::size_t, std::pair<double, double>> bound;
  for (const auto& [n, r] : plan)
    bound[n] = {record_bound(cfg, "sup_error", n, r.k), record_bound(cfg, "max_radius", n, r.k)};
  auto records = run_trials(cfg, [&](std::size_t n, std::uint64_t seed) {
    const RungPlan& r = plan.at(n);
    const Regressor reg(make_dataset(cfg, n, seed), r.k);
    const auto& y = reg.data().y;
    double sup = 0.0, radius = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const NeighborSet ns = reg.neighbors(probes[i]);
      double s = 0.0;
      for (auto j : ns.members) s += y[j];
      sup = std::max(sup, std::abs(s / static_cast<double>(ns.count()) - truth[i]));
      radius = std::max(radius, ns.radius);
    }
    return std::vector{
        make_record(cfg, n, r.k, seed, "sup_error", sup, bound.at(n).first, r.valid),
        make_record(cfg, n, r.k, seed, "max_radius", radius, bound.at(n).second, r.valid)};
  });
  CoverageResult out = summarize_coverage(records);
  out.records = std::move(records);
  return out;
}

CoverageResult summarize_coverage(const std::vector<ExperimentRecord>& records) {
  CoverageResult out;
  std::map<std::size_t, CoverageRung> rungs;
  std::map<std::size_t, std::size_t> hits, radius_hits, radius_trials;
  for (const auto& r : records) {
    CoverageRung& rung = rungs[r.n];
    rung.n = r.n;
    const bool ok = r.value <= r.bound;
    if (r.quantity == "sup_error") {
      ++rung.trials;
      if (ok)
        ++hits[r.n];
      else
        rung.violating_seeds.push_back(r.seed);
    } else if (r.quantity == "max_radius") {
      ++radius_trials[r.n];
      if (ok)
        ++radius_hits[r.n];
      else
        rung.radius_violating_seeds.push_back(r.seed);
    }
  }
  for (auto& [n, rung] : rungs) {
    if (rung.trials) rung.coverage = static_cast<double>(hits[n]) / static_cast<double>(rung.trials);
    if (radius_trials[n])
      rung.radius_coverage =
          static_cast<double>(radius_hits[n]) / static_cast<double>(radius_trials[n]);
    out.rungs.push_back(rung);
  }
  return out;
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::regress: return run_regression_rate(cfg);
    case ExperimentKind::manifold: return run_manifold(cfg);
    case ExperimentKind::levelset: return run_levelset(cfg);
    case ExperimentKind::maxima: return run_maxima(cfg);
    case ExperimentKind::coverage: return run_coverage(cfg).records;
    case ExperimentKind::setcount: return run_setcount(cfg);
  }
  throw ValidationError("unknown experiment kind");
}

double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

RateFit fit_rate(const std::vector<ExperimentRecord>& records, const std::string& quantity) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : records)
    if (r.quantity == quantity && !std::isnan(r.value)) by_n[r.n].push_back(r.value);
  if (by_n.size() < 4)
    throw DegenerateFit("rate fit for '" + quantity + "' needs >= 4 rungs, found " +
                        std::to_string(by_n.size()));
  RateFit fit;
  fit.quantity = quantity;
  std::vector<double> xs, ys;
  for (auto& [n, values] : by_n) {
    const double med = median(values);
    if (!(med > 0.0))
      throw DegenerateFit("median " + quantity + " at n = " + std::to_string(n) +
                          " is not positive; log-log fit undefined");
    fit.medians.emplace_back(n, med);
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(med));
  }
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += e * e;
  }
  fit.rungs = xs.size();
  fit.residual_rms = std::sqrt(ssr / m);
  fit.slope_stderr = std::sqrt(ssr / (m - 2.0) / sxx);
  return fit;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.n << ',' << r.k << ',' << r.seed << ',' << r.quantity << ','
        << format_number(r.value) << ',' << format_number(r.bound) << ',' << (r.valid_k ? 1 : 0)
        << ',' << format_number(r.ms) << '\n';
  }
}

std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw ValidationError(std::string("records CSV must start with the header '") + kCsvHeader +
                          "'");
  std::vector<ExperimentRecord> out;
  std::size_t lineno = 1;
  auto number = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0')
      throw ValidationError("records CSV line " + std::to_string(lineno) + ": bad number '" + s + "'");
    return v;
  };
  auto integer = [&](const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != s.size())
      throw ValidationError("records CSV line " + std::to_string(lineno) + ": bad integer '" + s + "'");
    return static_cast<std::uint64_t>(v);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 9)
      throw ValidationError("records CSV line " + std::to_string(lineno) + " has " +
                            std::to_string(f.size()) + " fields, expected 9");
    ExperimentRecord r;
    r.experiment = f[0];
    r.n = to_size(integer(f[1]));
    r.k = to_size(integer(f[2]));
    r.seed = integer(f[3]);
    r.quantity = f[4];
    r.value = number(f[5]);
    r.bound = number(f[6]);
    r.valid_k = integer(f[7]) != 0;
    r.ms = number(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string fit_csv_row(const RateFit& fit) {
  return fit.quantity + ',' + format_number(fit.slope) + ',' + format_number(fit.intercept) + ',' +
         format_number(fit.slope_stderr) + ',' + format_number(fit.residual_rms) + ',' +
         std::to_string(fit.rungs);
}

}  // namespace knnrate
