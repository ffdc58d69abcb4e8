// Kernel benchmark: serial reference vs OpenMP batch implementations.
// Also asserts the two produce bit-identical outputs before reporting.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "gait/batch.hpp"
#include "gait/imu.hpp"

using namespace gait;

namespace {

GaitProfile bench_profile(int which) {
  GaitProfile p;
  p.step_hz = 1.8 + 0.15 * which;
  p.noise_sigma = 0.05;
  p.class_id = which;
  for (int c = 0; c < 6; ++c) {
    const double dc = static_cast<double>(c);
    p.harmonics.push_back({{1, 1.0 + 0.1 * dc + 0.04 * which, 0.2 * dc},
                           {2, 0.3, 0.5 * dc},
                           {3, 0.15, 1.0 + 0.3 * dc}});
  }
  return p;
}

double best_ms(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void print_row(const char* name, size_t items, double ser, double par) {
  std::printf("%-16s %7zu %11.2f %11.2f %9.2fx\n", name, items, ser, par,
              ser / par);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP batch kernel benchmark"};
  size_t n = 1000;
  int repeats = 3;
  uint64_t seed = 1;
  app.add_option("-n,--segments", n, "Number of synthetic segments")
      ->check(CLI::Range(static_cast<size_t>(64), static_cast<size_t>(1000000)));
  app.add_option("-r,--repeats", repeats, "Timing repetitions (best-of)")
      ->check(CLI::Range(1, 100));
  app.add_option("--seed", seed, "Synthesis seed");
  CLI11_PARSE(app, argc, argv);

  std::vector<GaitSegment> segs;
  segs.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const ImuStream s = synthesize_gait(bench_profile(static_cast<int>(i % 8)),
                                        1.28, 100.0, seed + i);
    GaitSegment seg;
    seg.data = s.channels;
    seg.end_t = 1.28;
    segs.push_back(std::move(seg));
  }

  const ModelParams params = build_model(ModelConfig{}, seed);
  const std::vector<FeatureGrid> grids = featurize_all_serial(segs);
  const QuantModel qm = quantize(params, calibrate(params, grids));

  std::vector<FeatureGrid> feat_s, feat_p;
  std::vector<std::vector<double>> fwd_s, fwd_p, q_s, q_p;
  const double t_feat_s =
      best_ms(repeats, [&] { feat_s = featurize_all_serial(segs); });
  const double t_feat_p = best_ms(repeats, [&] { feat_p = featurize_all(segs); });
  const double t_fwd_s =
      best_ms(repeats, [&] { fwd_s = forward_all_serial(params, grids); });
  const double t_fwd_p =
      best_ms(repeats, [&] { fwd_p = forward_all(params, grids); });
  const double t_q_s =
      best_ms(repeats, [&] { q_s = q_forward_all_serial(qm, grids); });
  const double t_q_p = best_ms(repeats, [&] { q_p = q_forward_all(qm, grids); });

  for (size_t i = 0; i < n; ++i) {
    if (feat_s[i].values != feat_p[i].values || fwd_s[i] != fwd_p[i] ||
        q_s[i] != q_p[i]) {
      std::fprintf(stderr, "mismatch between serial and parallel at item %zu\n",
                   i);
      return 1;
    }
  }

  std::printf("%-16s %7s %11s %11s %9s\n", "kernel", "items", "serial ms",
              "openmp ms", "speedup");
  print_row("featurize", n, t_feat_s, t_feat_p);
  print_row("float forward", n, t_fwd_s, t_fwd_p);
  print_row("int8 forward", n, t_q_s, t_q_p);
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("outputs: bit-identical across implementations\n");
  return 0;
}
