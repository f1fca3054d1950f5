#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "knnrate/bounds.hpp"
#include "knnrate/config.hpp"
#include "knnrate/synth.hpp"

namespace knnrate {

enum class ExperimentKind { regress, manifold, levelset, maxima, coverage, setcount };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& s);

struct KRule {
  enum class Kind { fixed, optimal, power };
  Kind kind = Kind::optimal;
  std::size_t value = 1;               // fixed
  std::vector<std::size_t> values;     // fixed, setcount: one run per value
  KMode mode = KMode::regression;      // optimal
  double factor = 1.0;                 // optimal, power
  double exponent = 0.5;               // power: ceil(factor * n^exponent)
  std::optional<double> smoothness;    // alpha or beta passed to optimal_k
  std::optional<double> dim;           // dimension passed to optimal_k

  // k values for rung n, each clamped to [1, n].
  std::vector<std::size_t> resolve(std::size_t n, double smoothness_default,
                                   double dim_default) const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::regress;
  std::uint64_t master_seed = 1;
  double delta = 0.1;
  DensitySpec density;
  NoiseSpec noise;
  FieldKind field_kind = FieldKind::tent;
  FieldParams field;
  std::optional<ManifoldSpec> manifold;
  std::vector<std::size_t> ladder;
  KRule k;
  std::size_t probe_resolution = 0;  // 0: per-experiment default
  std::size_t seeds = 1;
  std::optional<double> lambda;           // level-set threshold
  std::optional<double> epsilon_override;
  std::size_t truth_grid = 0;             // 0: default
  BoundParams bound_overrides;            // dim ignored; present fields win
  std::string output_path;
  bool timing = false;

  void validate() const;
};

// Reads every recognised key; unknown keys are a ValidationError.
ExperimentConfig parse_experiment_config(const Config& cfg, ExperimentKind kind);
ExperimentConfig load_experiment_config(const std::string& path, ExperimentKind kind);

struct ExperimentRecord {
  std::string experiment;
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string quantity;
  double value = 0.0;
  double bound = 0.0;
  bool valid_k = false;
  double ms = 0.0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

// Seed for stream `label` of trial (n, seed index).
std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::uint64_t seed,
                         const char* label);

// Constants the experiment's generators declare, overlaid with config overrides.
BoundParams declared_params(const ExperimentConfig& cfg);

// Probe set over the support (grid for D <= 2, Halton points otherwise) or
// along the manifold.
PointSet make_probes(const ExperimentConfig& cfg);

// Dataset of trial (n, seed); for the manifold experiment, points on the curve.
Dataset make_dataset(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed);

// The theoretical bound column for a record, recomputed from the config.
double record_bound(const ExperimentConfig& cfg, const std::string& quantity, std::size_t n,
                    std::size_t k);

std::vector<ExperimentRecord> run_regression_rate(const ExperimentConfig& cfg);
std::vector<ExperimentRecord> run_manifold(const ExperimentConfig& cfg);
std::vector<ExperimentRecord> run_levelset(const ExperimentConfig& cfg);
std::vector<ExperimentRecord> run_maxima(const ExperimentConfig& cfg);
std::vector<ExperimentRecord> run_setcount(const ExperimentConfig& cfg);

struct CoverageRung {
  std::size_t n = 0;
  std::size_t trials = 0;
  double coverage = 0.0;         // fraction with sup_error <= holder bound
  double radius_coverage = 0.0;  // fraction with max probe r_k <= radius bound
  std::vector<std::uint64_t> violating_seeds;
  std::vector<std::uint64_t> radius_violating_seeds;
};

struct CoverageResult {
  std::vector<CoverageRung> rungs;
  std::vector<ExperimentRecord> records;
};

CoverageResult run_coverage(const ExperimentConfig& cfg);
CoverageResult summarize_coverage(const std::vector<ExperimentRecord>& records);

// Dispatch on cfg.kind.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg);

struct RateFit {
  std::string quantity;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
  std::size_t rungs = 0;
  std::vector<std::pair<std::size_t, double>> medians;  // (n, median)
};

// OLS of log(median per rung) on log n. Needs >= 4 rungs with positive medians.
RateFit fit_rate(const std::vector<ExperimentRecord>& records, const std::string& quantity);

double median(std::vector<double> values);

// Main measured quantity of an experiment kind (the one rate fits target).
std::string primary_quantity(ExperimentKind kind);

inline constexpr const char* kCsvHeader = "experiment,n,k,seed,quantity,value,bound,valid_k,ms";
inline constexpr const char* kFitHeader = "quantity,slope,intercept,slope_stderr,residual_rms,rungs";

std::string format_number(double v);  // %.17g, "nan"/"inf"/"-inf" spelled out
void write_records_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_records_csv(std::istream& in);
std::string fit_csv_row(const RateFit& fit);

}  // namespace knnrate
