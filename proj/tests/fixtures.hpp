#pragma once

// Small hand-built cocycles shared by the unit tests.

#include <cstddef>
#include <random>
#include <vector>

#include "splitdom/domination.hpp"

namespace splitdom::testing {

/// Single orbit with the same step matrix everywhere. Samples are one time unit
/// apart; the flow direction is `flow` (tangent fiber) and frames are its
/// deterministic orthonormal complement.
inline SampledCocycle constant_cocycle(const Matrix& step, Fiber fiber, const Vector& flow, int horizon = 30,
                                       std::size_t margin = 30, std::size_t base_points = 3) {
  SampledCocycle c;
  c.fiber = fiber;
  c.dim = static_cast<int>(step.rows());
  c.system = "fixture";
  c.dt = 1.0;
  c.horizon_steps = horizon;
  SampledOrbit o;
  const std::size_t total = 2 * margin + base_points + static_cast<std::size_t>(horizon);
  const Matrix inverse = step.inverse();
  const Vector unit = flow.normalized();
  for (std::size_t k = 0; k <= total; ++k) {
    o.times.push_back(static_cast<double>(k));
    o.flow.push_back(unit);
    o.frames.push_back(complete_to_orthonormal_basis(unit));
    o.states.push_back(Vector());
    if (k < total) {
      o.steps.push_back(step);
      o.inverse_steps.push_back(inverse);
    }
  }
  o.base_begin = margin;
  o.base_end = margin + base_points;
  c.orbits.push_back(std::move(o));
  return c;
}

/// Splitting with the same bundles at every sample of every orbit.
inline Splitting constant_splitting(const SampledCocycle& c, std::vector<Subspace> bundles) {
  Splitting s;
  s.kind = bundles.size() == 3 ? SplittingKind::three_bundle_with_flow : SplittingKind::two_bundle;
  s.fiber = c.fiber;
  for (const auto& orbit : c.orbits) {
    OrbitBundles ob;
    ob.at.assign(orbit.size(), bundles);
    s.orbits.push_back(std::move(ob));
  }
  return s;
}

inline Matrix cat_matrix() {
  Matrix m(2, 2);
  m << 2.0, 1.0, 1.0, 1.0;
  return m;
}

inline Vector unit_vector(std::mt19937_64& rng, const Subspace& E) {
  std::normal_distribution<double> g;
  Vector c(E.dim());
  for (int i = 0; i < c.size(); ++i) c(i) = g(rng);
  return E.basis() * c.normalized();
}

inline Matrix gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace splitdom::testing
