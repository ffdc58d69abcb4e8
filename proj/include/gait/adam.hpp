#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace gait {

// Adam with double-precision moments and bias correction; epsilon sits
// outside the square root. Shared by the classifier and the walk detector.
struct Adam {
  double lr, beta1, beta2, eps;
  std::vector<double> m, v;
  long t = 0;

  Adam(double lr_, double beta1_, double beta2_, double eps_, size_t n)
      : lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_), m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<float>& w, const std::vector<double>& g) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(w.size()); ++i) {
      const size_t si = static_cast<size_t>(i);
      m[si] = beta1 * m[si] + (1.0 - beta1) * g[si];
      v[si] = beta2 * v[si] + (1.0 - beta2) * g[si] * g[si];
      const double mhat = m[si] / bc1;
      const double vhat = v[si] / bc2;
      w[si] = static_cast<float>(static_cast<double>(w[si]) -
                                 lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
};

}  // namespace gait
