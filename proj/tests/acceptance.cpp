// Acceptance harness: end-to-end gates for the identification pipeline.
//
// Each criterion prints exactly one PASS/FAIL line (criterion 5 adds its
// memory breakdown below the line). Runs standalone; exit 0 iff all pass.
// Thresholds are pinned here as regression gates.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gait/batch.hpp"
#include "gait/cnn.hpp"
#include "gait/dataset.hpp"
#include "gait/engine.hpp"
#include "gait/errors.hpp"
#include "gait/imu.hpp"
#include "gait/quant.hpp"
#include "gait/rng.hpp"
#include "gait/segmentation.hpp"
#include "gait/spectral.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string format(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Artifacts shared across criteria: the trained reference model and its
// synthetic benchmark, plus the quantized derivative.
struct Shared {
  std::optional<gait::SyntheticBenchmark> bench;
  std::optional<gait::TrainResult> trained;
  std::optional<gait::QuantModel> quantized;
};

// ---------------------------------------------------------------------------
// criterion 1: radix-2 FFT against a naive O(N^2) DFT

void naive_dft(std::span<const double> x, std::vector<std::complex<double>>& out) {
  const size_t n = x.size();
  out.assign(n / 2 + 1, {});
  for (size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(j) *
                         static_cast<double>(k) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
}

Outcome criterion_fft(Shared&) {
  constexpr double kTol = 1e-9;
  constexpr double kBudgetS = 5.0;
  const auto t0 = clock_type::now();

  gait::Rng rng(0xF17);
  double max_err = 0.0;
  size_t cases = 0;
  std::vector<std::complex<double>> want;
  auto check_one = [&](size_t n) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-4.0, 4.0);
    const gait::Spectrum got = gait::real_fft(x);
    naive_dft(x, want);
    for (size_t k = 0; k <= n / 2; ++k) {
      max_err = std::max(max_err, std::abs(got.bins[k].real() - want[k].real()));
      max_err = std::max(max_err, std::abs(got.bins[k].imag() - want[k].imag()));
      const double p = std::norm(want[k]) / static_cast<double>(n);
      max_err = std::max(max_err, std::abs(got.power[k] - p));
    }
    ++cases;
  };

  for (int i = 0; i < 1000; ++i) check_one(16);
  for (size_t n : {8u, 32u, 64u})
    for (int i = 0; i < 200; ++i) check_one(n);

  const double elapsed = seconds_since(t0);
  const bool pass = max_err < kTol && elapsed < kBudgetS;
  return {pass, format("fft vs naive dft: max |err| %.2e over %zu frames "
                       "(1000 len-16 + 200 each of len 8/32/64), tol %.0e, "
                       "%.1f s (budget %.0f s)",
                       max_err, cases, kTol, elapsed, kBudgetS)};
}

// ---------------------------------------------------------------------------
// criterion 2: analytic gradients against central finite differences
//
// The loss as a function of any single parameter re-uses every activation
// that parameter cannot influence, so each probe re-computes only the
// affected slice of the network; results are identical to a full forward
// pass up to rounding. Probes that flip a ReLU sign or a pool winner sit on
// a kink where the loss is not differentiable; those parameters are excluded
// (counted, capped) since no finite-difference estimate is meaningful there.
struct FdProbe {
  const gait::ModelParams& p;
  const gait::Activations& base;
  int label;

  int R, C, F, K, half, PR, PC;
  std::array<int, 4> nin{}, nout{};
  std::span<const float> w1, w2, w3;

  std::vector<double> pre_f, post_f, pool_f;          // one conv filter
  std::vector<double> z0, a0, da0, z1, a1, z2, a2, z3;

  FdProbe(const gait::ModelParams& params, const gait::Activations& acts,
          int lbl)
      : p(params), base(acts), label(lbl) {
    const gait::ModelConfig& cfg = p.config;
    R = cfg.input_rows;
    C = cfg.input_cols;
    F = cfg.conv_filters;
    K = cfg.conv_kernel;
    half = K / 2;
    PR = cfg.pool_rows();
    PC = cfg.pool_cols();
    for (int l = 0; l < 4; ++l) {
      nin[static_cast<size_t>(l)] = cfg.dense_in(l);
      nout[static_cast<size_t>(l)] = cfg.dense_out(l);
    }
    w1 = p.dense_w(1);
    w2 = p.dense_w(2);
    w3 = p.dense_w(3);
    pre_f.resize(static_cast<size_t>(R * C));
    post_f.resize(static_cast<size_t>(R * C));
    pool_f.resize(static_cast<size_t>(PR * PC));
    z0.resize(static_cast<size_t>(nout[0]));
    a0.resize(static_cast<size_t>(nout[0]));
    da0.resize(static_cast<size_t>(nout[0]));
    z1.resize(static_cast<size_t>(nout[1]));
    a1.resize(static_cast<size_t>(nout[1]));
    z2.resize(static_cast<size_t>(nout[2]));
    a2.resize(static_cast<size_t>(nout[2]));
    z3.resize(static_cast<size_t>(nout[3]));
  }

  static double relu(double v) { return v > 0.0 ? v : 0.0; }
  static bool sign_flip(double a, double b) { return (a > 0.0) != (b > 0.0); }

  double loss_from_logits(std::span<const double> logits) const {
    const double hi = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0, top = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
      const double e = std::exp(logits[i] - hi);
      sum += e;
      if (static_cast<int>(i) == label) top = e;
    }
    return -std::log(std::max(top / sum, 1e-300));
  }

  // Layers 1..3 from a perturbed dense-0 activation vector a0 (da0 holds the
  // sparse-or-dense difference against the base activations).
  double finish_from_a0(bool& kink) {
    for (int i = 0; i < nout[1]; ++i) {
      double acc = base.dense_pre[1][static_cast<size_t>(i)];
      const size_t row = static_cast<size_t>(i) * static_cast<size_t>(nin[1]);
      for (int j = 0; j < nin[1]; ++j) {
        const double d = da0[static_cast<size_t>(j)];
        if (d != 0.0)
          acc += static_cast<double>(w1[row + static_cast<size_t>(j)]) * d;
      }
      z1[static_cast<size_t>(i)] = acc;
      if (sign_flip(base.dense_pre[1][static_cast<size_t>(i)], acc)) kink = true;
      a1[static_cast<size_t>(i)] = relu(acc);
    }
    for (int i = 0; i < nout[2]; ++i) {
      double acc = p.dense_b(2)[static_cast<size_t>(i)];
      const size_t row = static_cast<size_t>(i) * static_cast<size_t>(nin[2]);
      for (int j = 0; j < nin[2]; ++j)
        acc += static_cast<double>(w2[row + static_cast<size_t>(j)]) *
               a1[static_cast<size_t>(j)];
      z2[static_cast<size_t>(i)] = acc;
      if (sign_flip(base.dense_pre[2][static_cast<size_t>(i)], acc)) kink = true;
      a2[static_cast<size_t>(i)] = relu(acc);
    }
    for (int i = 0; i < nout[3]; ++i) {
      double acc = p.dense_b(3)[static_cast<size_t>(i)];
      const size_t row = static_cast<size_t>(i) * static_cast<size_t>(nin[3]);
      for (int j = 0; j < nin[3]; ++j)
        acc += static_cast<double>(w3[row + static_cast<size_t>(j)]) *
               a2[static_cast<size_t>(j)];
      z3[static_cast<size_t>(i)] = acc;
    }
    return loss_from_logits(z3);
  }

  // Loss with parameter `idx` moved by `delta`, flagging kink crossings.
  double eval(size_t idx, double delta, bool& kink) {
    const gait::ModelConfig& cfg = p.config;
    const size_t cb = p.conv_b_off();

    if (idx < cb + static_cast<size_t>(F)) {  // conv weight or bias
      const bool is_bias = idx >= cb;
      const int f = is_bias ? static_cast<int>(idx - cb)
                            : static_cast<int>(idx / static_cast<size_t>(K * K));
      const int tap = is_bias ? 0 : static_cast<int>(idx % static_cast<size_t>(K * K));
      const int dr = tap / K, dc = tap % K;
      const double* bpre = base.conv_pre.data() + static_cast<size_t>(f) * R * C;
      for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
          double d = 0.0;
          if (is_bias) {
            d = delta;
          } else {
            const int rr = r + dr - half, cc = c + dc - half;
            if (rr >= 0 && rr < R && cc >= 0 && cc < C)
              d = delta * base.input[static_cast<size_t>(rr * C + cc)];
          }
          const size_t ci = static_cast<size_t>(r * C + c);
          const double np = bpre[ci] + d;
          pre_f[ci] = np;
          if (d != 0.0 && sign_flip(bpre[ci], np)) kink = true;
          post_f[ci] = relu(np);
        }
      }
      for (int pr = 0; pr < PR; ++pr) {
        for (int pc = 0; pc < PC; ++pc) {
          int best = (pr * 2) * C + pc * 2;
          double hi = post_f[static_cast<size_t>(best)];
          for (int r2 = 0; r2 < cfg.pool; ++r2)
            for (int c2 = 0; c2 < cfg.pool; ++c2) {
              const int ci = (pr * 2 + r2) * C + pc * 2 + c2;
              if (post_f[static_cast<size_t>(ci)] > hi) {
                hi = post_f[static_cast<size_t>(ci)];
                best = ci;
              }
            }
          const size_t pi = static_cast<size_t>((f * PR + pr) * PC + pc);
          const int base_local = base.pool_src[pi] - f * R * C;
          if (best != base_local && (hi > 0.0 || base.pool[pi] > 0.0))
            kink = true;
          pool_f[static_cast<size_t>(pr * PC + pc)] = hi;
        }
      }
      std::copy(base.dense_pre[0].begin(), base.dense_pre[0].end(), z0.begin());
      const auto w0 = p.dense_w(0);
      for (int pr = 0; pr < PR; ++pr)
        for (int pc = 0; pc < PC; ++pc) {
          const size_t pi = static_cast<size_t>((f * PR + pr) * PC + pc);
          const double dp = pool_f[static_cast<size_t>(pr * PC + pc)] - base.pool[pi];
          if (dp == 0.0) continue;
          for (int i = 0; i < nout[0]; ++i)
            z0[static_cast<size_t>(i)] +=
                static_cast<double>(
                    w0[static_cast<size_t>(i) * static_cast<size_t>(nin[0]) + pi]) *
                dp;
        }
      for (int i = 0; i < nout[0]; ++i) {
        const size_t si = static_cast<size_t>(i);
        if (sign_flip(base.dense_pre[0][si], z0[si])) kink = true;
        a0[si] = relu(z0[si]);
        da0[si] = a0[si] - base.dense_post[0][si];
      }
      return finish_from_a0(kink);
    }

    for (int l = 0; l < 4; ++l) {
      const size_t woff = p.dense_w_off(l);
      const size_t boff = p.dense_b_off(l);
      const size_t wcount = static_cast<size_t>(nin[static_cast<size_t>(l)]) *
                            static_cast<size_t>(nout[static_cast<size_t>(l)]);
      int row = -1;
      double input_val = 0.0;
      if (idx >= woff && idx < woff + wcount) {
        row = static_cast<int>((idx - woff) / static_cast<size_t>(nin[static_cast<size_t>(l)]));
        const int col = static_cast<int>((idx - woff) % static_cast<size_t>(nin[static_cast<size_t>(l)]));
        input_val = l == 0 ? base.pool[static_cast<size_t>(col)]
                           : base.dense_post[static_cast<size_t>(l - 1)][static_cast<size_t>(col)];
      } else if (idx >= boff &&
                 idx < boff + static_cast<size_t>(nout[static_cast<size_t>(l)])) {
        row = static_cast<int>(idx - boff);
        input_val = 1.0;
      } else {
        continue;
      }

      const double dz = delta * input_val;
      const double base_z = base.dense_pre[static_cast<size_t>(l)][static_cast<size_t>(row)];
      const double new_z = base_z + dz;

      if (l == 3) {
        std::copy(base.dense_pre[3].begin(), base.dense_pre[3].end(), z3.begin());
        z3[static_cast<size_t>(row)] = new_z;
        return loss_from_logits(z3);
      }

      if (dz != 0.0 && sign_flip(base_z, new_z)) kink = true;
      const double da = relu(new_z) -
                        base.dense_post[static_cast<size_t>(l)][static_cast<size_t>(row)];
      if (da == 0.0) return base.loss_for(label);

      if (l == 0) {
        std::fill(da0.begin(), da0.end(), 0.0);
        da0[static_cast<size_t>(row)] = da;
        return finish_from_a0(kink);
      }
      if (l == 1) {
        for (int i = 0; i < nout[2]; ++i) {
          const size_t si = static_cast<size_t>(i);
          const double acc =
              base.dense_pre[2][si] +
              static_cast<double>(
                  w2[si * static_cast<size_t>(nin[2]) + static_cast<size_t>(row)]) *
                  da;
          z2[si] = acc;
          if (sign_flip(base.dense_pre[2][si], acc)) kink = true;
          a2[si] = relu(acc);
        }
        for (int i = 0; i < nout[3]; ++i) {
          const size_t si = static_cast<size_t>(i);
          double acc = base.dense_pre[3][si];
          const size_t wrow = si * static_cast<size_t>(nin[3]);
          for (int j = 0; j < nin[3]; ++j) {
            const double d = a2[static_cast<size_t>(j)] -
                             base.dense_post[2][static_cast<size_t>(j)];
            if (d != 0.0) acc += static_cast<double>(w3[wrow + static_cast<size_t>(j)]) * d;
          }
          z3[si] = acc;
        }
        return loss_from_logits(z3);
      }
      // l == 2
      for (int i = 0; i < nout[3]; ++i) {
        const size_t si = static_cast<size_t>(i);
        z3[si] = base.dense_pre[3][si] +
                 static_cast<double>(
                     w3[si * static_cast<size_t>(nin[3]) + static_cast<size_t>(row)]) *
                     da;
      }
      return loss_from_logits(z3);
    }
    throw gait::ShapeError("parameter index out of range");
  }
};

Outcome criterion_gradients(Shared&) {
  constexpr double kDelta = 1e-3;
  constexpr double kRelTol = 1e-4;
  constexpr double kGradFloor = 1e-6;   // rel-error floor for near-zero pairs
  constexpr double kKinkCap = 0.02;     // max fraction excluded at kinks
  constexpr double kBudgetS = 120.0;
  const auto t0 = clock_type::now();

  const gait::ModelConfig mc;  // full default geometry
  double max_rel = 0.0;
  size_t checked = 0, excluded = 0, total = 0;

  for (uint64_t seed : {11111u, 22222u, 33333u}) {
    gait::ModelParams params = gait::build_model(mc, seed);
    gait::Rng rng(seed ^ 0x9E3779B97F4A7C15ull);
    // Jitter the zero-initialized biases so the probe point is generic.
    for (int l = 0; l < 4; ++l) {
      const size_t off = params.dense_b_off(l);
      for (int i = 0; i < mc.dense_out(l); ++i)
        params.data[off + static_cast<size_t>(i)] =
            static_cast<float>(rng.uniform(-0.05, 0.05));
    }
    const size_t cb = params.conv_b_off();
    for (int f = 0; f < mc.conv_filters; ++f)
      params.data[cb + static_cast<size_t>(f)] =
          static_cast<float>(rng.uniform(-0.05, 0.05));

    gait::FeatureGrid grid;
    grid.axes = mc.input_cols;
    grid.values.resize(static_cast<size_t>(mc.input_rows * mc.input_cols));
    for (auto& v : grid.values) v = rng.uniform(-3.0, 3.0);
    const int label = static_cast<int>(rng.bounded(static_cast<uint64_t>(mc.n_classes)));

    gait::Activations base;
    gait::forward_full(params, grid, base);

    gait::Dataset one;
    one.X.push_back(grid);
    one.y.push_back(label);
    const std::array<size_t, 1> batch{0};
    const gait::LossGrads lg = gait::loss_and_grads(params, one, batch);
    if (std::abs(lg.loss - base.loss_for(label)) > 1e-12)
      throw gait::ShapeError("loss paths disagree at the probe point");

    FdProbe probe(params, base, label);
    total += params.data.size();
    for (size_t i = 0; i < params.data.size(); ++i) {
      bool kink = false;
      const double lp = probe.eval(i, kDelta, kink);
      const double lm = probe.eval(i, -kDelta, kink);
      if (kink) {
        ++excluded;
        continue;
      }
      const double fd = (lp - lm) / (2.0 * kDelta);
      const double an = lg.grads[i];
      const double rel = std::abs(fd - an) /
                         std::max({std::abs(fd), std::abs(an), kGradFloor});
      max_rel = std::max(max_rel, rel);
      ++checked;
    }
  }

  const double elapsed = seconds_since(t0);
  const double kink_frac = static_cast<double>(excluded) / static_cast<double>(total);
  const bool pass = max_rel < kRelTol && kink_frac <= kKinkCap && elapsed < kBudgetS;
  return {pass,
          format("finite differences (delta %.0e) on 3 random points: "
                 "%zu/%zu gradients checked, max rel err %.2e (tol %.0e), "
                 "%zu kink-adjacent excluded (%.3f%%), %.1f s (budget %.0f s)",
                 kDelta, checked, total, max_rel, kRelTol, excluded,
                 100.0 * kink_frac, elapsed, kBudgetS)};
}

// ---------------------------------------------------------------------------
// criterion 3: 24-identity benchmark accuracy with reference hyperparameters

Outcome criterion_accuracy(Shared& shared) {
  constexpr double kAccFloor = 0.95;
  constexpr double kBudgetS = 900.0;
  const auto t0 = clock_type::now();

  const gait::SyntheticSpec spec;  // 24 identities x (160 train + 40 test)
  shared.bench = gait::build_synthetic_benchmark(spec);

  const gait::TrainConfig tc;  // 20 epochs, lr 5e-4, batch 32, 20% validation
  const gait::ModelConfig mc;  // conv 32x3x3, dense 256/128/32, 24 classes
  shared.trained = gait::train(shared.bench->train, tc, mc);

  const gait::EvalReport report =
      gait::evaluate(shared.trained->params, shared.bench->test);
  const gait::EpochStats& best =
      shared.trained->history[static_cast<size_t>(shared.trained->best_epoch - 1)];

  const double elapsed = seconds_since(t0);
  const bool pass = report.accuracy >= kAccFloor && elapsed <= kBudgetS;
  return {pass,
          format("24-identity benchmark (%zu train / %zu test windows), "
                 "20 epochs lr 5e-4 batch 32 val 20%%: test acc %.4f "
                 "(floor %.2f), best-epoch val acc %.4f, %.0f s (budget %.0f s)",
                 shared.bench->train.size(), shared.bench->test.size(),
                 report.accuracy, kAccFloor, best.val_acc, elapsed, kBudgetS)};
}

// ---------------------------------------------------------------------------
// criterion 4: int8 accuracy drop and argmax agreement

Outcome criterion_quantization(Shared& shared) {
  constexpr double kDropCap = 0.015;       // 1.5 points
  constexpr double kAgreementFloor = 0.95;
  if (!shared.trained || !shared.bench)
    return {false, "int8 delta: prerequisite model unavailable"};

  const gait::ActivationRanges ranges =
      gait::calibrate(shared.trained->params, shared.bench->train.X);
  shared.quantized = gait::quantize(shared.trained->params, ranges);
  const gait::AccuracyDelta delta = gait::accuracy_delta(
      shared.trained->params, *shared.quantized, shared.bench->test);

  const bool pass = delta.delta <= kDropCap && delta.agreement >= kAgreementFloor;
  return {pass,
          format("int8 vs float on the test split: float %.4f, int8 %.4f, "
                 "drop %+.4f (cap %.3f), argmax agreement %.4f (floor %.2f)",
                 delta.float_acc, delta.int8_acc, delta.delta, kDropCap,
                 delta.agreement, kAgreementFloor)};
}

// ---------------------------------------------------------------------------
// criterion 5: flash and arena footprint with per-layer breakdown

Outcome criterion_memory(Shared& shared) {
  constexpr size_t kFlashLo = 150 * 1024;
  constexpr size_t kFlashHi = 260 * 1024;
  constexpr size_t kArenaCap = 8 * 1024;
  if (!shared.quantized)
    return {false, "memory report: prerequisite quantized model unavailable"};

  const gait::QuantModel& qm = *shared.quantized;
  const gait::MemoryReport mem = gait::memory_report(qm);
  const gait::ModelConfig& mc = qm.config;

  std::string breakdown;
  breakdown += format("    layer weights+biases (flash):\n");
  breakdown += format("      conv%dx%d      %7zu B + %4zu B\n", mc.conv_kernel,
                      mc.conv_kernel, mc.conv_weight_count(),
                      static_cast<size_t>(mc.conv_filters) * 4);
  for (int l = 0; l < 4; ++l)
    breakdown += format("      dense%d       %7zu B + %4zu B\n", l,
                        static_cast<size_t>(mc.dense_in(l)) *
                            static_cast<size_t>(mc.dense_out(l)),
                        static_cast<size_t>(mc.dense_out(l)) * 4);
  breakdown += format("      metadata     %7zu B\n", mem.metadata_bytes);
  breakdown += format("    activation schedule (arena):\n");
  for (const gait::MemoryStage& st : mem.schedule)
    breakdown += format("      %-14s in %5zu B  out %5zu B  live %5zu B\n",
                        st.name.c_str(), st.in_bytes, st.out_bytes,
                        st.in_bytes + st.out_bytes);

  const bool pass = mem.weight_bytes >= kFlashLo && mem.weight_bytes <= kFlashHi &&
                    mem.arena_bytes <= kArenaCap;
  Outcome out{pass,
              format("footprint: weight payload %.1f KB (window [%zu, %zu] KB), "
                     "flash total %.1f KB, arena %zu B (cap %zu B)",
                     static_cast<double>(mem.weight_bytes) / 1024.0,
                     kFlashLo / 1024, kFlashHi / 1024,
                     static_cast<double>(mem.flash_bytes) / 1024.0,
                     mem.arena_bytes, kArenaCap)};
  out.detail += "\n" + breakdown;
  return out;
}

// ---------------------------------------------------------------------------
// criterion 6: quantized per-window inference latency

Outcome criterion_latency(Shared& shared) {
  constexpr double kMeanCapMs = 10.0;
  if (!shared.quantized || !shared.bench)
    return {false, "latency: prerequisite quantized model unavailable"};

  const auto& grids = shared.bench->test.X;
  const size_t n = std::min<size_t>(grids.size(), 500);
  // Warm the caches before measuring.
  volatile double sink = gait::q_forward(*shared.quantized, grids[0])[0];
  (void)sink;

  std::vector<double> ms;
  ms.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const auto t0 = clock_type::now();
    const auto probs = gait::q_forward(*shared.quantized, grids[i]);
    const auto t1 = clock_type::now();
    if (probs.empty()) return {false, "latency: empty model output"};
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  double mean = 0.0, worst = 0.0;
  for (double v : ms) {
    mean += v;
    worst = std::max(worst, v);
  }
  mean /= static_cast<double>(ms.size());

  const bool pass = mean < kMeanCapMs;
  return {pass, format("int8 inference over %zu windows: mean %.3f ms "
                       "(cap %.0f ms), max %.3f ms",
                       n, mean, kMeanCapMs, worst)};
}

// ---------------------------------------------------------------------------
// criterion 7: segmentation on an idle-walk-idle recording

// Walking channels distribute most power at the fundamental so window scores
// separate cleanly from idle noise.
void add_walk_signal(std::vector<std::vector<double>>& channels, double rate,
                     double from_s, double to_s, double step_hz, gait::Rng& rng) {
  const size_t n = channels[0].size();
  for (size_t c = 0; c < channels.size(); ++c) {
    const double dc = static_cast<double>(c);
    for (size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / rate;
      if (t < from_s || t >= to_s) continue;
      const double w = 2.0 * std::numbers::pi * step_hz * t;
      channels[c][i] += (1.0 + 0.08 * dc) * std::sin(w + 0.1 * dc) +
                        0.2 * std::sin(2.0 * w + 0.4 + 0.15 * dc) +
                        0.1 * std::sin(3.0 * w + 0.9 * dc);
    }
  }
  (void)rng;
}

double overlap_len(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

Outcome criterion_segmentation(Shared&) {
  constexpr double kPrFloor = 0.9;
  constexpr double kTolS = 0.5;
  const double rate = 100.0;

  gait::ImuStream stream;
  stream.rate_hz = rate;
  stream.axes = 6;
  stream.channels.assign(6, std::vector<double>(2000, 0.0));
  gait::Rng rng(20240817);
  for (auto& ch : stream.channels)
    for (auto& v : ch) v = rng.normal(0.0, 0.03);
  add_walk_signal(stream.channels, rate, 5.0, 15.0, 2.0, rng);

  const auto intervals = gait::extract_walking_intervals(stream, 0.5, 1.0);
  const double truth0 = 5.0, truth1 = 15.0;
  double detected = 0.0, hit_precision = 0.0, hit_recall = 0.0;
  for (const gait::Interval& iv : intervals) {
    detected += iv.end_t - iv.start_t;
    hit_precision += overlap_len(iv.start_t, iv.end_t, truth0 - kTolS, truth1 + kTolS);
    hit_recall += overlap_len(iv.start_t - kTolS, iv.end_t + kTolS, truth0, truth1);
  }
  const double precision = detected > 0.0 ? hit_precision / detected : 0.0;
  const double recall = hit_recall / (truth1 - truth0);

  const gait::SegmentSet set = gait::segment_stream(stream);
  bool all_128 = !set.segments.empty();
  for (const gait::GaitSegment& seg : set.segments)
    for (const auto& ch : seg.data)
      if (ch.size() != gait::kSegmentLength) all_128 = false;

  // A gap of 3x the median step spacing must reject the straddling segments.
  gait::ImuWindow walk_win;
  walk_win.start_t = 0.0;
  walk_win.duration = 5.0;
  walk_win.rate_hz = rate;
  walk_win.data.assign(1, std::vector<double>(500, 0.0));
  for (size_t i = 0; i < 500; ++i)
    walk_win.data[0][i] =
        std::sin(2.0 * std::numbers::pi * 2.0 * static_cast<double>(i) / rate);
  gait::PeakList gap_peaks;
  gap_peaks.indices = {0, 50, 100, 150, 300, 350, 400, 450};
  gap_peaks.prominences.assign(gap_peaks.indices.size(), 1.0);
  const auto gap_segs = gait::split_two_step_segments(walk_win, gap_peaks, 0.2);
  bool gap_rejected = gap_segs.size() == 4;
  for (const gait::GaitSegment& seg : gap_segs)
    if (seg.start_t > 0.51 && seg.start_t < 2.99) gap_rejected = false;

  const bool pass = precision >= kPrFloor && recall >= kPrFloor && all_128 &&
                    gap_rejected;
  return {pass,
          format("idle-walk-idle 20 s: %zu interval(s), precision %.3f / "
                 "recall %.3f at +/-%.1f s (floor %.1f); %zu segments all %d "
                 "samples: %s; 3x-median gap rejected: %s",
                 intervals.size(), precision, recall, kTolS, kPrFloor,
                 set.segments.size(), static_cast<int>(gait::kSegmentLength),
                 all_128 ? "yes" : "NO", gap_rejected ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------
// criterion 8: streaming engine on steady walk, silence, and replay speed

std::vector<gait::PredictionEvent> replay_stream(gait::StreamEngine& engine,
                                                 const gait::ImuStream& stream,
                                                 double wall_speed) {
  std::vector<gait::PredictionEvent> events;
  const auto wall0 = clock_type::now();
  for (size_t i = 0; i < stream.size(); ++i) {
    gait::ImuStream chunk;
    chunk.rate_hz = stream.rate_hz;
    chunk.axes = stream.axes;
    chunk.t0 = stream.time_at(i);
    for (const auto& ch : stream.channels) chunk.channels.push_back({ch[i]});
    engine.push_samples(chunk);
    const double now_t = stream.time_at(i) + 1.0 / stream.rate_hz;
    if (wall_speed > 0.0) {
      const double elapsed = now_t - stream.t0;
      std::this_thread::sleep_until(
          wall0 + std::chrono::duration_cast<clock_type::duration>(
                      std::chrono::duration<double>(elapsed / wall_speed)));
    }
    if (auto ev = engine.step(now_t)) events.push_back(std::move(*ev));
  }
  return events;
}

bool events_equal_modulo_latency(const std::vector<gait::PredictionEvent>& a,
                                 const std::vector<gait::PredictionEvent>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].t != b[i].t || a[i].raw_probs != b[i].raw_probs ||
        a[i].smoothed_label != b[i].smoothed_label ||
        a[i].confidence != b[i].confidence)
      return false;
  }
  return true;
}

Outcome criterion_streaming(Shared& shared) {
  constexpr double kAccFloor = 0.95;
  if (!shared.trained)
    return {false, "streaming: prerequisite model unavailable"};

  const gait::EngineConfig cfg;  // 100 Hz, 3 s window, 4 Hz, tau 0.6, depth 4
  const gait::SyntheticSpec spec;
  const auto bank = gait::make_profile_bank(spec.n_classes, spec.axes, spec.seed);
  const int identity = 5;
  gait::GaitProfile profile = bank[static_cast<size_t>(identity)];
  profile.noise_sigma = spec.noise_sigma;

  // Steady walk: fresh noise realization from the held-out seed block.
  const gait::ImuStream walk = gait::synthesize_gait(
      profile, 30.0, cfg.rate_hz, spec.seed + 9000 + static_cast<uint64_t>(identity));
  gait::StreamEngine engine(cfg, shared.trained->params);
  const auto events = replay_stream(engine, walk, 0.0);
  const double warm = cfg.window_s + cfg.smoothing_depth * cfg.hop_s();
  size_t post = 0, correct = 0;
  for (const auto& ev : events) {
    if (ev.t < warm) continue;
    ++post;
    if (ev.smoothed_label && *ev.smoothed_label == identity) ++correct;
  }
  const double acc = post > 0 ? static_cast<double>(correct) / static_cast<double>(post) : 0.0;

  // All-zero input must never commit to an identity.
  gait::ImuStream silence;
  silence.rate_hz = cfg.rate_hz;
  silence.axes = 6;
  silence.channels.assign(6, std::vector<double>(2000, 0.0));
  gait::StreamEngine quiet(cfg, shared.trained->params);
  const auto quiet_events = replay_stream(quiet, silence, 0.0);
  size_t unknown = 0;
  for (const auto& ev : quiet_events)
    if (!ev.smoothed_label) ++unknown;
  const bool all_unknown =
      !quiet_events.empty() && unknown == quiet_events.size();

  // Identical event sequences when replayed in real time and at full speed.
  const gait::ImuStream short_walk = gait::synthesize_gait(
      profile, 10.0, cfg.rate_hz, spec.seed + 9000 + 11);
  gait::StreamEngine real_time(cfg, shared.trained->params);
  gait::StreamEngine full_speed(cfg, shared.trained->params);
  const auto paced = replay_stream(real_time, short_walk, 1.0);
  const auto fast = replay_stream(full_speed, short_walk, 0.0);
  const bool speed_independent =
      !paced.empty() && events_equal_modulo_latency(paced, fast);

  const bool pass = acc >= kAccFloor && all_unknown && speed_independent;
  return {pass,
          format("steady walk: %zu/%zu post-warm-up events correct (%.4f, "
                 "floor %.2f); silence: %zu/%zu unknown; 1x vs full-speed "
                 "replay identical: %s (%zu events)",
                 correct, post, acc, kAccFloor, unknown, quiet_events.size(),
                 speed_independent ? "yes" : "NO", paced.size())};
}

// ---------------------------------------------------------------------------
// criterion 9: property suites, >= 100 generated cases each

size_t suite_parseval() {
  gait::Rng rng(0x9A57);
  size_t cases = 0;
  for (size_t n : {8u, 16u, 32u, 64u, 128u}) {
    for (int i = 0; i < 30; ++i) {
      std::vector<double> x(n);
      for (auto& v : x) v = rng.uniform(-5.0, 5.0);
      const gait::Spectrum s = gait::real_fft(x);
      double energy = 0.0;
      for (double v : x) energy += v * v;
      double spectral = s.power[0] + s.power[n / 2];
      for (size_t k = 1; k < n / 2; ++k) spectral += 2.0 * s.power[k];
      if (std::abs(energy - spectral) > 1e-9 * std::max(1.0, energy))
        throw gait::InvalidInput(format("parseval violated at n=%zu case %d", n, i));
      ++cases;
    }
  }
  return cases;
}

size_t suite_dc_offset() {
  gait::Rng rng(0xDC0F);
  size_t cases = 0;
  for (int i = 0; i < 120; ++i) {
    const size_t n = 64 + rng.bounded(400);
    std::vector<double> x(n), shifted(n);
    const double offset = rng.uniform(-50.0, 50.0);
    for (size_t j = 0; j < n; ++j) {
      x[j] = rng.uniform(-3.0, 3.0);
      shifted[j] = x[j] + offset;
    }
    const auto fa = gait::axis_features(x, 100.0);
    const auto fb = gait::axis_features(shifted, 100.0);
    for (int k = 0; k < gait::kFeaturesPerAxis; ++k) {
      const double a = fa[static_cast<size_t>(k)], b = fb[static_cast<size_t>(k)];
      if (std::abs(a - b) > 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b))))
        throw gait::InvalidInput(format("dc-offset violated at case %d feature %d", i, k));
    }
    ++cases;
  }
  return cases;
}

size_t suite_round_trip() {
  gait::Rng rng(0x5EED);
  size_t cases = 0;
  auto fail = [](const std::string& what) {
    throw gait::InvalidInput("round-trip violated: " + what);
  };

  for (int i = 0; i < 40; ++i) {  // segment container
    gait::SegmentSet set;
    set.axes = rng.bounded(2) ? 6 : 3;
    set.rate_hz = 50.0 + rng.uniform(0.0, 100.0);
    const size_t count = 1 + rng.bounded(4);
    for (size_t s = 0; s < count; ++s) {
      gait::GaitSegment seg;
      seg.data.assign(static_cast<size_t>(set.axes),
                      std::vector<double>(gait::kSegmentLength));
      for (auto& ch : seg.data)
        for (auto& v : ch) v = rng.uniform(-10.0, 10.0);
      if (rng.bounded(3)) seg.label = static_cast<int>(rng.bounded(1000));
      set.segments.push_back(std::move(seg));
    }
    std::ostringstream first;
    gait::save_segments(set, first);
    std::istringstream in(first.str());
    const gait::SegmentSet loaded = gait::load_segments(in, "mem");
    if (loaded.segments.size() != set.segments.size()) fail("segment count");
    for (size_t s = 0; s < count; ++s) {
      if (loaded.segments[s].label != set.segments[s].label) fail("label");
      for (size_t c = 0; c < set.segments[s].data.size(); ++c)
        for (size_t j = 0; j < gait::kSegmentLength; ++j) {
          const double want = static_cast<double>(
              static_cast<float>(set.segments[s].data[c][j]));
          if (loaded.segments[s].data[c][j] != want) fail("sample payload");
        }
    }
    std::ostringstream second;
    gait::save_segments(loaded, second);
    if (second.str() != first.str()) fail("segment fixpoint");
    ++cases;
  }

  for (int i = 0; i < 30; ++i) {  // float model container
    gait::ModelConfig mc;
    mc.input_cols = rng.bounded(2) ? 6 : 3;
    mc.conv_filters = 4 + static_cast<int>(rng.bounded(5));
    mc.dense_units = {16, 12, 8};
    mc.n_classes = 2 + static_cast<int>(rng.bounded(5));
    gait::ModelParams p = gait::build_model(mc, rng.next_u64());
    for (auto& v : p.feat_mean) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : p.feat_std) v = static_cast<float>(rng.uniform(0.5, 2.0));
    std::ostringstream first;
    gait::save_model(p, first);
    std::istringstream in(first.str());
    const gait::ModelParams loaded = gait::load_model(in, "mem");
    if (loaded.data != p.data || loaded.feat_mean != p.feat_mean ||
        loaded.feat_std != p.feat_std)
      fail("model payload");
    if (loaded.config.n_classes != mc.n_classes ||
        loaded.config.conv_filters != mc.conv_filters)
      fail("model config");
    std::ostringstream second;
    gait::save_model(loaded, second);
    if (second.str() != first.str()) fail("model fixpoint");
    ++cases;
  }

  for (int i = 0; i < 30; ++i) {  // feature csv
    gait::Dataset ds;
    const int axes = rng.bounded(2) ? 6 : 3;
    const size_t rows = 1 + rng.bounded(5);
    for (size_t r = 0; r < rows; ++r) {
      gait::FeatureGrid g;
      g.axes = axes;
      g.values.resize(static_cast<size_t>(gait::kFeaturesPerAxis * axes));
      for (auto& v : g.values) v = rng.uniform(-5.0, 5.0);
      ds.X.push_back(std::move(g));
      ds.y.push_back(static_cast<int>(rng.bounded(24)));
    }
    std::ostringstream first;
    gait::save_feature_csv(ds, first);
    std::istringstream in(first.str());
    const gait::Dataset loaded = gait::load_feature_csv(in, "mem");
    if (loaded.y != ds.y) fail("csv labels");
    for (size_t r = 0; r < rows; ++r)
      for (size_t k = 0; k < ds.X[r].values.size(); ++k) {
        const double a = ds.X[r].values[k], b = loaded.X[r].values[k];
        if (std::abs(a - b) > 1e-9 * (1.0 + std::abs(a))) fail("csv values");
      }
    std::ostringstream second;
    gait::save_feature_csv(loaded, second);
    if (second.str() != first.str()) fail("csv fixpoint");
    ++cases;
  }

  for (int i = 0; i < 20; ++i) {  // quantized model container
    gait::ModelConfig mc;
    mc.conv_filters = 4;
    mc.dense_units = {16, 12, 8};
    mc.n_classes = 3;
    const gait::ModelParams p = gait::build_model(mc, rng.next_u64());
    std::vector<gait::FeatureGrid> calib;
    for (int g = 0; g < 32; ++g) {
      gait::FeatureGrid grid;
      grid.axes = mc.input_cols;
      grid.values.resize(static_cast<size_t>(mc.input_rows * mc.input_cols));
      for (auto& v : grid.values) v = rng.uniform(-3.0, 3.0);
      calib.push_back(std::move(grid));
    }
    const gait::QuantModel qm = gait::quantize(p, gait::calibrate(p, calib));
    std::ostringstream first;
    gait::save_qmodel(qm, first);
    std::istringstream in(first.str());
    const gait::QuantModel loaded = gait::load_qmodel(in, "mem");
    std::ostringstream second;
    gait::save_qmodel(loaded, second);
    if (second.str() != first.str()) fail("quantized fixpoint");
    ++cases;
  }

  return cases;
}

size_t suite_eviction() {
  gait::Rng rng(0xE71C);
  gait::ModelConfig mc;
  mc.conv_filters = 4;
  mc.dense_units = {16, 12, 8};
  mc.n_classes = 3;
  const gait::ModelParams params = gait::build_model(mc, 99);
  const gait::EngineConfig cfg;
  const size_t window = cfg.window_samples();

  size_t cases = 0;
  for (int i = 0; i < 100; ++i) {
    const size_t prefix = window * 2 + rng.bounded(900);
    const size_t total = prefix + window;
    gait::ImuStream full;
    full.rate_hz = cfg.rate_hz;
    full.axes = 6;
    full.channels.assign(6, std::vector<double>(total));
    for (auto& ch : full.channels)
      for (auto& v : ch) v = rng.uniform(-2.0, 2.0);

    gait::ImuStream tail;
    tail.rate_hz = cfg.rate_hz;
    tail.axes = 6;
    tail.t0 = static_cast<double>(prefix) / cfg.rate_hz;
    for (const auto& ch : full.channels)
      tail.channels.emplace_back(ch.end() - static_cast<long>(window), ch.end());

    const double now_t = static_cast<double>(total) / cfg.rate_hz;
    gait::StreamEngine evicting(cfg, params);
    evicting.push_samples(full);
    const auto ea = evicting.step(now_t);
    gait::StreamEngine fresh(cfg, params);
    fresh.push_samples(tail);
    const auto eb = fresh.step(now_t);
    if (!ea || !eb || ea->raw_probs != eb->raw_probs ||
        ea->smoothed_label != eb->smoothed_label ||
        ea->confidence != eb->confidence)
      throw gait::InvalidInput(format("eviction violated at case %d", i));
    ++cases;
  }
  return cases;
}

size_t suite_majority_switch() {
  gait::Rng rng(0x3A11);
  size_t cases = 0;
  for (int i = 0; i < 120; ++i) {
    const int k = 1 + static_cast<int>(rng.bounded(8));
    const int n = 2 + static_cast<int>(rng.bounded(10));
    const int a = static_cast<int>(rng.bounded(static_cast<uint64_t>(n)));
    int b = static_cast<int>(rng.bounded(static_cast<uint64_t>(n)));
    while (b == a) b = static_cast<int>(rng.bounded(static_cast<uint64_t>(n)));

    auto one_hot = [n](int cls) {
      std::vector<double> v(static_cast<size_t>(n), 0.0);
      v[static_cast<size_t>(cls)] = 1.0;
      return v;
    };
    std::vector<std::vector<double>> history;
    auto push = [&](int cls) {
      history.push_back(one_hot(cls));
      if (history.size() > static_cast<size_t>(k)) history.erase(history.begin());
    };

    for (int j = 0; j < k; ++j) push(a);
    if (gait::smooth_probs(history, 0.0).label != a)
      throw gait::InvalidInput(format("majority-switch warmup at case %d", i));

    int switched_at = -1;
    for (int j = 1; j <= k; ++j) {
      push(b);
      const auto sm = gait::smooth_probs(history, 0.0);
      if (!sm.label || (*sm.label != a && *sm.label != b))
        throw gait::InvalidInput(format("majority-switch third class at case %d", i));
      if (switched_at < 0 && *sm.label == b) switched_at = j;
    }
    // The flip needs at least ceil(k/2) new-class windows (ties break toward
    // the lower class index) and at most floor(k/2)+1.
    if (switched_at < (k + 1) / 2 || switched_at > k / 2 + 1)
      throw gait::InvalidInput(
          format("majority-switch at case %d: flipped after %d of depth %d",
                 i, switched_at, k));
    ++cases;
  }
  return cases;
}

Outcome criterion_properties(Shared&) {
  const size_t parseval = suite_parseval();
  const size_t dc = suite_dc_offset();
  const size_t round_trip = suite_round_trip();
  const size_t eviction = suite_eviction();
  const size_t majority = suite_majority_switch();
  const bool pass = parseval >= 100 && dc >= 100 && round_trip >= 100 &&
                    eviction >= 100 && majority >= 100;
  return {pass,
          format("property suites: parseval %zu, dc-offset %zu, round-trip "
                 "%zu, eviction %zu, majority-switch %zu cases (each >= 100)",
                 parseval, dc, round_trip, eviction, majority)};
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Outcome (*run)(Shared&);
  };
  const std::array<Entry, 9> entries{{
      {"fft oracle", criterion_fft},
      {"gradient oracle", criterion_gradients},
      {"benchmark accuracy", criterion_accuracy},
      {"quantization delta", criterion_quantization},
      {"memory footprint", criterion_memory},
      {"inference latency", criterion_latency},
      {"segmentation", criterion_segmentation},
      {"streaming", criterion_streaming},
      {"property suites", criterion_properties},
  }};

  Shared shared;
  int passed = 0;
  for (size_t i = 0; i < entries.size(); ++i) {
    Outcome out;
    try {
      out = entries[i].run(shared);
    } catch (const std::exception& e) {
      out = {false, format("%s raised: %s", entries[i].name, e.what())};
    }
    if (out.pass) ++passed;
    std::printf("[%zu/9] %s  %s\n", i + 1, out.pass ? "PASS" : "FAIL",
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("result: %d/9 criteria passed\n", passed);
  return passed == 9 ? 0 : 1;
}
