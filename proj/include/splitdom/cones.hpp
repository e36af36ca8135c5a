#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "splitdom/linalg.hpp"
#include "splitdom/sampled_cocycle.hpp"

namespace splitdom {

/// Cone {v = v_E + v_F : |v_F| <= aperture |v_E|} for a transverse pair (E, F)
/// with dim E + dim F = n. Aperture 1 is the standard unit cone.
class Cone {
 public:
  Cone(Subspace core, Subspace complement, double aperture);
  /// Cone whose complement is the orthogonal complement of the core.
  static Cone around(const Subspace& core, double aperture);

  const Subspace& core() const { return core_; }
  const Subspace& complement() const { return complement_; }
  double aperture() const { return aperture_; }
  int ambient_dim() const { return core_.ambient_dim(); }

  /// Oblique decomposition v = v_E + v_F along the pair.
  std::pair<Vector, Vector> decompose(const Vector& v) const;
  /// Angle atan(|v_F| / |v_E|) of v relative to the core, in [0, pi/2].
  double slope_angle(const Vector& v) const;
  bool contains(const Vector& v) const;

 private:
  Subspace core_;
  Subspace complement_;
  double aperture_;
  Matrix coordinates_;  // inverse of [B_E B_F]
};

/// One cone per orbit sample, indexed like the samples of a SampledCocycle.
struct ConeField {
  std::vector<std::vector<Cone>> cones;

  bool constant_core_dim() const;
  const Cone& at(std::size_t orbit, std::size_t index) const { return cones.at(orbit).at(index); }
};

/// Inf over nonzero u in C of |L u| / |u|.
double min_expansion(const Cone& cone, const Matrix& forward);
/// Inf over u outside the open cone (closure of the complement) of |L u| / |u|,
/// where L is the backward map at the image point.
double min_coexpansion(const Cone& image_cone, const Matrix& backward);
/// Sup over u in `source` of the aperture of L u relative to `target`
/// (+inf when L u can reach the complement of the target's core).
double image_aperture(const Cone& source, const Matrix& forward, const Cone& target);

struct PointCoefficient {
  std::size_t orbit = 0;
  std::size_t index = 0;
  double m = 0.0;
  double m_prime = 0.0;
  /// target aperture minus the aperture of the image cone.
  double invariance_margin = 0.0;
};

struct DominationCoefficient {
  /// inf_x m_x m'_x.
  double pointwise_inf = 0.0;
  /// (inf_x m_x)(inf_x m'_x).
  double separate_product = 0.0;
  double inf_m = 0.0;
  double inf_m_prime = 0.0;
  double min_margin = 0.0;
  std::vector<PointCoefficient> points;

  bool dominating() const { return pointwise_inf > 1.0; }
  bool strongly_dominating() const { return separate_product > 1.0; }
};

/// Maps and cones at one sample for the coefficient reduction.
struct ConeStep {
  std::size_t orbit = 0;
  std::size_t index = 0;
  const Cone* at_point = nullptr;
  const Cone* at_image = nullptr;
  Matrix forward;
  Matrix backward;
};

DominationCoefficient domination_coefficient(const std::vector<ConeStep>& steps);
/// Coefficient of the t_steps-sample map over the base points of `cocycle`.
/// Throws ConeFieldShapeError when the core dimension is not constant.
DominationCoefficient domination_coefficient(const ConeField& field, const SampledCocycle& cocycle, int t_steps);

struct NewhouseCertificate {
  int t0_steps = 0;
  double t0_time = 0.0;
  DominationCoefficient coefficient;
};

/// Smallest t0 in `t_grid` (sample steps) at which the field is strongly
/// dominated and mapped strictly into itself with aperture margin >= 1e-6.
std::optional<NewhouseCertificate> newhouse_search(const ConeField& field, const SampledCocycle& cocycle,
                                                   const std::vector<int>& t_grid);

enum class TimeDirection { forward, backward };

struct ConeLimit {
  Subspace subspace;
  /// Angle between the iterates started n_iter and n_iter - 1 samples away.
  double last_angle = 0.0;
  int iterations = 0;
};

/// Pushes the cone cores from n_iter samples in the past (forward) or future
/// (backward) to the sample `index`; the span converges to the invariant
/// subspace the cones shrink onto. Iterations are clipped to the orbit.
ConeLimit cone_limit_iterate(const ConeField& field, const SampledCocycle& cocycle, std::size_t orbit,
                             std::size_t index, int n_iter, TimeDirection direction);

/// As cone_limit_iterate, but throws NotConvergedError unless the successive
/// angle is at most `tolerance` and the full n_iter iterations were available.
Subspace cone_limit_subspace(const ConeField& field, const SampledCocycle& cocycle, std::size_t orbit,
                             std::size_t index, int n_iter, TimeDirection direction, double tolerance = 1e-6);

using CoreFunction = std::function<Subspace(std::size_t orbit, std::size_t index)>;
ConeField make_cone_field(const SampledCocycle& cocycle, const CoreFunction& core, double aperture);

/// Cone field whose core at each sample is the top-`core_dim` singular
/// direction of the one-step map into that sample.
ConeField seeded_cone_field(const SampledCocycle& cocycle, int core_dim, double aperture);

/// Core dimension at the largest one-step singular-value gap (median over base points).
int seeded_core_dim(const SampledCocycle& cocycle);

}  // namespace splitdom
