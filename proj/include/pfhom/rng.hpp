#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "pfhom/common.hpp"

namespace pfhom {

/// Deterministic 64-bit stream (splitmix64). Hand-rolled so that every draw is
/// reproducible from the seed alone, independent of platform and stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [a, b).
  double uniform(double a, double b) { return a + (b - a) * next_unit(); }

  /// Point on the unit circle with argument at least `band` radians away from
  /// both the positive and the negative real axis (the gamma trick: keeps the
  /// homotopy coefficient path clear of real-coefficient degenerations).
  cplx unit_circle_off_real(double band) {
    const double pi = std::numbers::pi;
    for (;;) {
      double theta = uniform(-pi, pi);
      if (std::abs(theta) < band) continue;
      if (pi - std::abs(theta) < band) continue;
      return cplx(std::cos(theta), std::sin(theta));
    }
  }

  /// Rejection sample from the open unit disk: draw from the square
  /// [-1,1] x [-1,1] until the point lands strictly inside the disk.
  cplx unit_disk() {
    for (;;) {
      double re = uniform(-1.0, 1.0);
      double im = uniform(-1.0, 1.0);
      if (re * re + im * im < 1.0) return cplx(re, im);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace pfhom
