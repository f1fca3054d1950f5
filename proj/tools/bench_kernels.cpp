// Wall-clock comparison of the indexed/OpenMP kernels against their serial
// brute-force twins.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "knnrate/regression.hpp"
#include "knnrate/rng.hpp"
#include "knnrate/structures.hpp"

using namespace knnrate;

namespace {

PointSet uniform_cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> c(n * dim);
  for (auto& v : c) v = rng.uniform();
  return PointSet(dim, std::move(c));
}

double time_ms(const std::function<void()>& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double fast, double slow, bool agree) {
  std::printf("%-22s %12.3f %12.3f %9.1fx  %s\n", name, fast, slow, slow / fast, agree ? "agree" : "DISAGREE");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark indexed kernels against serial references", "bench_kernels"};
  std::size_t n = 20000, dim = 2, k = 64, probes = 2000;
  int reps = 3, threads = 0;
  bool skip_reference = false;
  app.add_option("--n", n, "sample size");
  app.add_option("--dim", dim, "dimension");
  app.add_option("--k", k, "neighbors");
  app.add_option("--probes", probes, "query points");
  app.add_option("--reps", reps, "repetitions (best time kept)");
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  app.add_flag("--fast-only", skip_reference, "time only the indexed kernels");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  const PointSet x = uniform_cloud(n, dim, 1);
  const PointSet q = uniform_cloud(probes, dim, 2);
  std::vector<double> y(n);
  Rng rng(3);
  for (auto& v : y) v = rng.normal();
  const Dataset data(x, y);
  const Regressor reg(data, k);

  std::printf("n=%zu dim=%zu k=%zu probes=%zu threads=%d\n", n, dim, k, probes, omp_get_max_threads());
  std::printf("%-22s %12s %12s %10s\n", "kernel", "indexed ms", "serial ms", "speedup");

  std::vector<double> fast, slow;
  const double tf = time_ms([&] { fast = predict_batch(reg, q); }, reps);
  const double ts = skip_reference ? 0.0 : time_ms([&] { slow = predict_batch_reference(data, k, q); }, reps);
  row("predict_batch", tf, ts, skip_reference || fast == slow);

  std::vector<double> fitted;
  const double tfit = time_ms([&] { fitted = fit_samples(reg); }, reps);
  std::printf("%-22s %12.3f\n", "fit_samples", tfit);

  double h1 = 0, h2 = 0;
  const double th = time_ms([&] { h1 = hausdorff_distance(x, q); }, reps);
  const double thr = skip_reference ? 0.0 : time_ms([&] { h2 = hausdorff_distance_reference(x, q); }, reps);
  row("hausdorff_distance", th, thr, skip_reference || h1 == h2);

  const auto index = build_index(x);
  NeighborSet a, b;
  bool same = true;
  const double tk = time_ms([&] { for (std::size_t i = 0; i < q.size(); ++i) a = knn_query(index, q[i], k); }, reps);
  const double tb = skip_reference ? 0.0 : time_ms([&] {
    for (std::size_t i = 0; i < q.size(); ++i) {
      b = brute_force_knn(x, q[i], k);
      same = same && b == knn_query(index, q[i], k);
    }
  }, 1);
  row("knn_query (serial)", tk, tb, skip_reference || same);
  return 0;
}
