#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sobgeo/curve.hpp"
#include "sobgeo/grid.hpp"
#include "sobgeo/types.hpp"

namespace sobgeo {

// Gaussian draws via Box-Muller on top of mt19937_64.  The standard library's
// normal_distribution is implementation-defined, so seeded runs would not be
// byte-reproducible across toolchains; this sampler is pinned everywhere.
template <typename S>
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

  S uniform() {  // [0, 1), 53-bit resolution
    return static_cast<S>((rng_() >> 11) * (1.0 / 9007199254740992.0));
  }

  S normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    S u1 = uniform();
    while (u1 <= S(0)) u1 = uniform();
    const S u2 = uniform();
    const S r = std::sqrt(S(-2) * std::log(u1));
    const S angle = S(2) * static_cast<S>(EIGEN_PI) * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

 private:
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  S spare_ = S(0);
};

// Smooth random field: component-wise random trigonometric polynomial with
// coefficients damped as amplitude / (1 + k)^2.
template <typename S>
TangentField<S> random_tangent_field(const PeriodicGrid<S>& grid, Index d,
                                     std::uint64_t seed, S amplitude = S(1),
                                     int kmax = 3) {
  GaussianSampler<S> g(seed);
  TangentField<S> out = TangentField<S>::Zero(grid.n(), d);
  for (Index c = 0; c < d; ++c) {
    for (int k = 0; k <= kmax; ++k) {
      const S damp = amplitude / ((S(1) + static_cast<S>(k)) * (S(1) + static_cast<S>(k)));
      const S a = g.normal() * damp;
      if (k == 0) {
        out.col(c).array() += a;
        continue;
      }
      const S b = g.normal() * damp;
      out.col(c) += (a * (static_cast<S>(k) * grid.theta()).array().cos() +
                     b * (static_cast<S>(k) * grid.theta()).array().sin())
                        .matrix();
    }
  }
  return out;
}

template <typename S>
ScalarField<S> random_scalar_field(const PeriodicGrid<S>& grid, std::uint64_t seed,
                                   S amplitude = S(1), int kmax = 3) {
  return random_tangent_field(grid, 1, seed, amplitude, kmax).col(0);
}

// Smooth random immersed loop: round circle in the first two ambient
// components plus a low-frequency perturbation small enough to keep the
// immersion property with a wide margin.
template <typename S>
ImmersedLoop<S> random_loop(const PeriodicGrid<S>& grid, Index d, std::uint64_t seed,
                            S amplitude = static_cast<S>(0.15), int kmax = 3) {
  TangentField<S> pts = TangentField<S>::Zero(grid.n(), d);
  pts.col(0) = grid.theta().array().cos();
  pts.col(1) = grid.theta().array().sin();
  GaussianSampler<S> g(seed);
  for (Index c = 0; c < d; ++c) {
    for (int k = 1; k <= kmax; ++k) {
      const S damp = amplitude / (static_cast<S>(k) * static_cast<S>(k));
      const S a = g.normal() * damp;
      const S b = g.normal() * damp;
      pts.col(c) += (a * (static_cast<S>(k) * grid.theta()).array().cos() +
                     b * (static_cast<S>(k) * grid.theta()).array().sin())
                        .matrix();
    }
  }
  return ImmersedLoop<S>(grid, pts);
}

}  // namespace sobgeo
