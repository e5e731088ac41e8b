#pragma once

// Initial-data profiles and a portable seeded generator for them.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "grid.hpp"

namespace kwc {

/// Uniform doubles in [0,1) from mt19937_64, bit-reproducible across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

struct SmoothProfile {
  double offset = 0.0;
  double amplitude = 1.0;
  int modes = 4;
};

/// offset + amplitude·Σ a_k cos(kπx/L) (tensor products in 2D) with random
/// a_k ∈ [−1,1] damped like 1/k², so every sample is smooth and Neumann-compatible.
inline ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, const SmoothProfile& p = {}) {
  Rng rng(seed);
  const int K = std::max(1, p.modes);
  std::vector<double> coef;
  if (g.dim() == 1) {
    for (int k = 1; k <= K; ++k) coef.push_back(rng.uniform(-1.0, 1.0) / (k * k));
  } else {
    for (int l = 0; l <= K; ++l)
      for (int k = 0; k <= K; ++k)
        coef.push_back((k + l == 0) ? 0.0 : rng.uniform(-1.0, 1.0) / ((k + l) * (k + l)));
  }
  const double Lx = g.extent(0), Ly = g.extent(1);
  return ScalarField::sample(g, [&](double x, double y) {
    double s = 0.0;
    if (g.dim() == 1) {
      for (int k = 1; k <= K; ++k) s += coef[k - 1] * std::cos(k * M_PI * x / Lx);
    } else {
      std::size_t c = 0;
      for (int l = 0; l <= K; ++l)
        for (int k = 0; k <= K; ++k) s += coef[c++] * std::cos(k * M_PI * x / Lx) * std::cos(l * M_PI * y / Ly);
    }
    return p.offset + p.amplitude * s;
  });
}

/// cos(πx/L₁)[·cos(πy/L₂)], the lowest nonconstant Neumann eigenfunction.
inline ScalarField cosine_field(const Grid& g, double offset = 0.0, double amplitude = 1.0) {
  return ScalarField::sample(g, [&](double x, double y) {
    double c = std::cos(M_PI * x / g.extent(0));
    if (g.dim() == 2) c *= std::cos(M_PI * y / g.extent(1));
    return offset + amplitude * c;
  });
}

}  // namespace kwc
