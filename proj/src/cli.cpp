#include "knnrate/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "knnrate/errors.hpp"
#include "knnrate/harness.hpp"

namespace knnrate {

namespace {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  bool quiet = false;
};

void add_run_flags(CLI::App* sub, RunOptions& o) {
  sub->add_option("--config", o.config, "experiment config file")->required();
  sub->add_option("--seed", o.seed, "master seed (overrides the config)");
  sub->add_option("--out", o.out, "output CSV path (default: config output.path, else stdout)");
  sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv"}));
  sub->add_flag("--quiet", o.quiet, "no summary on stderr");
}

ExperimentConfig load_config(const RunOptions& o, ExperimentKind kind) {
  Config c = Config::load(o.config);
  if (o.seed) c.set("master_seed", std::to_string(*o.seed));
  return parse_experiment_config(c, kind);
}

void emit_records(const std::vector<ExperimentRecord>& records, const std::string& path,
                  std::ostream& out) {
  if (path.empty()) {
    write_records_csv(out, records);
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  write_records_csv(f, records);
  if (!f) throw std::runtime_error("failed writing output file: " + path);
}

void summarize(const ExperimentConfig& cfg, const std::vector<ExperimentRecord>& records,
               const CoverageResult* coverage, std::ostream& err) {
  err << to_string(cfg.kind) << ": " << records.size() << " records\n";
  if (coverage) {
    for (const auto& r : coverage->rungs) {
      err << "  n=" << r.n << " coverage=" << format_number(r.coverage)
          << " radius_coverage=" << format_number(r.radius_coverage) << " (" << r.trials
          << " trials)";
      if (!r.violating_seeds.empty()) {
        err << " violating seeds:";
        for (auto s : r.violating_seeds) err << ' ' << s;
      }
      err << '\n';
    }
    return;
  }
  if (cfg.kind == ExperimentKind::setcount) return;
  try {
    const RateFit fit = fit_rate(records, primary_quantity(cfg.kind));
    err << "  slope=" << format_number(fit.slope) << " +/- " << format_number(fit.slope_stderr)
        << " over " << fit.rungs << " rungs\n";
  } catch (const DegenerateFit& e) {
    err << "  no rate fit: " << e.what() << '\n';
  }
}

int run_experiment_cmd(const RunOptions& o, ExperimentKind kind, std::ostream& out,
                       std::ostream& err) {
  const ExperimentConfig cfg = load_config(o, kind);
  const std::string path = o.out.empty() ? cfg.output_path : o.out;
  if (kind == ExperimentKind::coverage) {
    const CoverageResult res = run_coverage(cfg);
    emit_records(res.records, path, out);
    if (!o.quiet) summarize(cfg, res.records, &res, err);
  } else {
    const auto records = run_experiment(cfg);
    emit_records(records, path, out);
    if (!o.quiet) summarize(cfg, records, nullptr, err);
  }
  return 0;
}

int run_fit_cmd(const std::string& input, const std::string& out_path,
                const std::string& quantity_opt, bool quiet, std::ostream& out, std::ostream& err) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw ValidationError("cannot open records file: " + input);
  const auto records = read_records_csv(in);
  if (records.empty()) throw ValidationError("records file has no rows: " + input);
  const std::string quantity = quantity_opt.empty() ? records.front().quantity : quantity_opt;
  const RateFit fit = fit_rate(records, quantity);
  const std::string row = fit_csv_row(fit);
  if (out_path.empty()) {
    out << kFitHeader << '\n' << row << '\n';
  } else {
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(out_path, ec) ||
                       std::filesystem::file_size(out_path, ec) == 0;
    std::ofstream f(out_path, std::ios::binary | std::ios::app);
    if (!f) throw std::runtime_error("cannot open output file: " + out_path);
    if (fresh) f << kFitHeader << '\n';
    f << row << '\n';
  }
  if (!quiet)
    err << "fit " << quantity << ": slope=" << format_number(fit.slope) << " +/- "
        << format_number(fit.slope_stderr) << '\n';
  return 0;
}

int run_sample_cmd(const RunOptions& o, const std::string& kind_name, std::size_t n,
                   std::uint64_t seed_index, std::ostream& out) {
  const ExperimentConfig cfg = load_config(o, parse_experiment_kind(kind_name));
  const Dataset data = make_dataset(cfg, n, seed_index);
  if (o.out.empty())
    write_dataset(out, data);
  else
    write_dataset(o.out, data);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"k-NN regression rates: experiments, bounds and rate fits", "knnrate"};
  app.require_subcommand(1);

  struct Sub {
    ExperimentKind kind;
    const char* help;
    CLI::App* app = nullptr;
    RunOptions opts;
  };
  std::vector<Sub> subs = {
      {ExperimentKind::regress, "sup-error rate of the k-NN regressor"},
      {ExperimentKind::manifold, "sup-error rate on a curve embedded in R^D"},
      {ExperimentKind::levelset, "Hausdorff error of the level-set estimator"},
      {ExperimentKind::maxima, "distance of the k-NN argmax to the true mode"},
      {ExperimentKind::coverage, "how often the uniform error bound holds"},
      {ExperimentKind::setcount, "distinct k-NN sets against the counting bound"},
  };
  for (auto& s : subs) {
    s.app = app.add_subcommand(to_string(s.kind), s.help);
    add_run_flags(s.app, s.opts);
  }

  std::string fit_input, fit_out, fit_quantity;
  bool fit_quiet = false;
  CLI::App* fit = app.add_subcommand("fit", "log-log slope of median quantity per rung");
  fit->add_option("records", fit_input, "records CSV")->required();
  fit->add_option("--out", fit_out, "append the fit row here (header written if new)");
  fit->add_option("--quantity", fit_quantity, "quantity to fit (default: first record's)");
  fit->add_flag("--quiet", fit_quiet, "no summary on stderr");

  RunOptions sample_opts;
  std::string sample_kind = "regress";
  std::size_t sample_n = 0;
  std::uint64_t sample_index = 0;
  CLI::App* sample = app.add_subcommand("sample", "write one trial's dataset file");
  add_run_flags(sample, sample_opts);
  sample->add_option("--experiment", sample_kind, "experiment kind the config is for");
  sample->add_option("--n", sample_n, "sample size")->required()->check(CLI::PositiveNumber);
  sample->add_option("--trial", sample_index, "seed index within the rung");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    for (auto& s : subs)
      if (s.app->parsed()) return run_experiment_cmd(s.opts, s.kind, out, err);
    if (fit->parsed()) return run_fit_cmd(fit_input, fit_out, fit_quantity, fit_quiet, out, err);
    if (sample->parsed()) return run_sample_cmd(sample_opts, sample_kind, sample_n, sample_index, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace knnrate
