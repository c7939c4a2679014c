#pragma once

// Geometric properties of the synthesis kernels, checked on random unit vectors.
// Shared by the unit tests and the acceptance binary.

#include <array>
#include <cstddef>
#include <string>

#include "synco/negative_synthesis.hpp"
#include "test_util.hpp"

namespace synco::testing {

inline constexpr double kPropertySlack = 1e-9;

struct PropertyTally {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // largest violation magnitude

  void record(double margin) {  // margin < -slack is a violation
    ++checked;
    if (margin < -kPropertySlack) {
      ++violations;
      worst = std::max(worst, -margin);
    }
  }
};

struct GeometryReport {
  PropertyTally interpolated, extrapolated, mixup, perturbed, adversarial;
  // type 6 under the literal "n != q" reading, kept for diagnostics only
  PropertyTally adversarial_literal;
};

// Type 6 moves n along v = sign(q). With c = q.n, a = n.v, b = q.v and
// t = b - a c (projection onto q of v's component tangent to the sphere at n),
// q.s > q.n is guaranteed when t > max(0, c) * eta * |v|^2 / 2.
inline bool adversarial_precondition(std::span<const double> q, std::span<const double> n, double eta) {
  Vector v(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) v[i] = sign(q[i]);
  const double c = dot(q, n), a = dot(n, v), b = dot(q, v);
  const double t = b - a * c;
  return t > std::max(0.0, c) * eta * squared_norm(v) / 2.0 + 1e-12;
}

inline GeometryReport check_geometry(std::size_t d, std::size_t samples, std::uint64_t seed) {
  GeometryReport r;
  Rng rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const FeatureVector q = random_unit(d, rng);
    const FeatureVector n = random_unit(d, rng);
    const FeatureVector m = random_unit(d, rng);
    const double c = dot(q, n);
    const bool antipodal = c < -1.0 + 1e-12;
    const bool same = c > 1.0 - 1e-12;

    // type 1: alpha in (0, 0.5], q != -n
    if (!antipodal) {
      const double alpha = 0.5 - rng.uniform(0.0, 0.5);  // (0, 0.5]
      if (alpha > 0.0) r.interpolated.record(dot(q, interpolate(q, n, alpha)) - c);
    }
    // type 2: beta in (1, 1.5], q.n >= 0
    if (c >= 0.0) {
      const double beta = 1.5 - rng.uniform(0.0, 0.5);
      if (beta > 1.0) r.extrapolated.record(c - dot(q, extrapolate(q, n, beta)));
    }
    // type 3: both sources on q's side
    const double cm = dot(q, m);
    if (c >= 0.0 && cm >= 0.0) {
      const double gamma = rng.uniform(0.0, 1.0);
      r.mixup.record(dot(q, mix(n, m, gamma)) - std::min(c, cm));
    }
    // type 5: strict increase whenever n != +-q
    if (!antipodal && !same) {
      const double delta = 1.0 - rng.uniform(0.0, 1.0);  // (0, 1]
      const double gain = dot(q, perturb(q, n, delta)) - c;
      r.perturbed.record(gain > 0.0 ? 0.0 : gain - 2 * kPropertySlack);
    }
    // type 6
    const double eta = 0.01;
    if (!same) {
      const double gain = dot(q, adversarial(q, n, eta)) - c;
      const double margin = gain > 0.0 ? 0.0 : gain - 2 * kPropertySlack;
      r.adversarial_literal.record(margin);
      if (adversarial_precondition(q, n, eta)) r.adversarial.record(margin);
    }
  }
  return r;
}

}  // namespace synco::testing
