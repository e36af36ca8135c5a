#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splitdom/linalg.hpp"
#include "splitdom/systems.hpp"

namespace splitdom {

/// Which bundle a cocycle acts on.
enum class Fiber { tangent, normal };

const char* to_string(Fiber fiber);

/// One orbit of the sampled invariant set.
///
/// Samples 0..N carry times, unit flow directions and normal frames (both in
/// tangent coordinates). `steps[k]` maps the fiber at sample k to sample k+1.
/// Samples in [base_begin, base_end) are the points of the invariant set the
/// analysis takes suprema over; the rest are margins for windows and horizons.
struct SampledOrbit {
  std::vector<double> times;
  std::vector<Matrix> steps;
  std::vector<Matrix> inverse_steps;
  std::vector<Vector> flow;
  std::vector<Matrix> frames;
  std::vector<Vector> states;
  std::size_t base_begin = 0;
  std::size_t base_end = 0;

  std::size_t size() const { return times.size(); }
};

/// Cocycle over finitely many sampled orbit segments.
class SampledCocycle {
 public:
  Fiber fiber = Fiber::tangent;
  int dim = 0;
  std::string system;
  double dt = 0.0;
  int horizon_steps = 0;
  std::vector<SampledOrbit> orbits;

  /// Map from the fiber at sample i to the fiber at sample j (i <= j).
  Matrix forward(std::size_t orbit, std::size_t i, std::size_t j) const;
  /// Inverse of forward(orbit, i, j), built from inverse steps.
  Matrix backward(std::size_t orbit, std::size_t i, std::size_t j) const;
  /// Last sample index reached from a base point within the horizon.
  std::size_t analysis_end(std::size_t orbit) const;
  int tangent_dim() const;
  std::size_t base_point_count() const;
};

struct SamplingConfig {
  double dt = 1e-3;
  /// Horizon in time units (roof units for suspensions).
  double horizon = 40.0;
  /// Time between analysis samples on flow orbits.
  double sample_interval = 0.5;
  /// Extra samples before the base range and after the horizon.
  int margin = 64;
  /// Overrides the system's base span for flows.
  std::optional<double> base_span;
  /// Optional seeds overriding the system's.
  std::vector<Vector> seeds;
  std::optional<Matrix> initial_frame_rotation;
};

struct AnalysisSet {
  SampledCocycle tangent;
  SampledCocycle normal;
};

/// Samples every seed orbit of `sys` and builds the tangent cocycle and the
/// linear Poincare flow over the samples.
AnalysisSet sample_system(const DynamicalSystem& sys, const SamplingConfig& config);

/// Linear Poincare flow of a tangent cocycle, with freshly transported frames.
SampledCocycle normal_view(const SampledCocycle& tangent,
                           const std::optional<Matrix>& initial_frame_rotation = std::nullopt);

/// Tangent cocycle in coordinates y = R x, i.e. under the metric |x|_G = |R x|.
SampledCocycle conjugate(const SampledCocycle& tangent, const Matrix& r);

/// Time-reversed cocycle (sample order reversed, steps inverted).
SampledCocycle reversed(const SampledCocycle& cocycle);

}  // namespace splitdom
