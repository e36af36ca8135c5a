#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "splitdom/linalg.hpp"

namespace splitdom {

/// Smooth vector field with its Jacobian.
struct FlowSystem {
  std::string name;
  int dim = 0;
  std::function<Vector(const Vector&)> field;
  std::function<Matrix(const Vector&)> jacobian;
  /// Seed points on the compact invariant set under study.
  std::vector<Vector> seeds;
  double singularity_floor = 1e-6;
};

/// One periodic symbol orbit of a suspension: fiber matrix and roof time per step.
struct SuspensionOrbit {
  std::vector<Matrix> matrices;
  std::vector<double> roof;
  int period() const { return static_cast<int>(matrices.size()); }
};

/// Locally constant cocycle over periodic orbits, suspended with a neutral
/// flow coordinate. Tangent coordinates are (fiber..., flow); the flow
/// direction is the last axis.
struct SuspensionCocycle {
  std::string name;
  int fiber_dim = 0;
  std::vector<SuspensionOrbit> orbits;

  int tangent_dim() const { return fiber_dim + 1; }
  /// Checks shapes, positive roofs and invertibility; throws on violation.
  void validate() const;
};

/// Sampled trajectory on a fixed-step grid.
struct OrbitSegment {
  std::string system_name;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Vector> points;
  std::vector<Vector> field_values;

  std::size_t size() const { return times.size(); }
};

/// Fundamental matrices D_i ~ DX_{t_i - t_0}(x(t_0)) along an orbit, together
/// with the one-step propagators that produced them (D_{i+1} = step_maps[i] D_i).
struct TangentCocycle {
  std::vector<Matrix> fundamental;
  std::vector<Matrix> step_maps;

  std::size_t size() const { return fundamental.size(); }
};

/// Classical RK4 on a fixed grid. Negative `t_max` integrates the reversed field.
/// The last step is shortened when |t_max| is not a multiple of dt.
OrbitSegment integrate_orbit(const FlowSystem& sys, const Vector& x0, double t_max, double dt);

/// Variational equation dD/dt = DX(x(t)) D solved with the same RK4 stages as `orbit`.
TangentCocycle integrate_tangent(const FlowSystem& sys, const OrbitSegment& orbit);

/// Tangent cocycle of a suspension orbit over `n_steps` symbol steps.
TangentCocycle integrate_tangent(const SuspensionCocycle& cocycle, int orbit_id, int n_steps);

/// Block matrix [fiber product] (+) [1] over `n_steps` roof units starting at
/// `start_step`. Negative `n_steps` runs backwards with inverse matrices.
LinearMap cocycle_matrix(const SuspensionCocycle& cocycle, int orbit_id, int start_step, int n_steps);

/// Bundles Ẽ and F̃ of a declared partially dominated splitting at one sample,
/// in tangent coordinates (the flow direction is the implicit middle bundle).
struct BundlePair {
  Subspace lower;
  Subspace upper;
};

/// Analytic splitting as a function of (orbit id, sample state). For
/// suspensions the state is empty and bundles are constant.
using AnalyticSplitting = std::function<BundlePair(int orbit_id, const Vector& state)>;

enum class SystemKind { flow, suspension };

/// Catalog or file-defined system with the analytic facts it encodes.
struct DynamicalSystem {
  std::string name;
  std::variant<FlowSystem, SuspensionCocycle> dynamics;
  std::string summary;
  std::vector<std::string> facts;
  std::optional<AnalyticSplitting> analytic_splitting;
  /// Time span of each seed orbit sampled as part of the invariant set (flows).
  double base_span = 0.0;
  /// Free parameters (kept for serialization of catalog flows).
  std::vector<std::pair<std::string, double>> parameters;
  /// Splitting as constant fiber subspaces, when the splitting came from a file
  /// or a constant catalog definition (serialized with the system).
  std::optional<std::pair<Matrix, Matrix>> constant_fiber_splitting;

  SystemKind kind() const {
    return std::holds_alternative<FlowSystem>(dynamics) ? SystemKind::flow : SystemKind::suspension;
  }
  int tangent_dim() const;
  const FlowSystem& flow() const { return std::get<FlowSystem>(dynamics); }
  const SuspensionCocycle& suspension() const { return std::get<SuspensionCocycle>(dynamics); }
};

/// Saddle limit cycle in cylindrical form: r' = a(1-r), theta' = 1, z' = b z.
FlowSystem make_saddle_cycle(double a, double b);

/// Radial and vertical bundles of the saddle cycle (invariant for every a, b).
AnalyticSplitting saddle_cycle_splitting();

/// Affine field X(x) = A x + offset.
FlowSystem make_affine_flow(const std::string& name, const Matrix& a, const Vector& offset);

/// Suspension with a constant splitting given by fiber-coordinate bases.
DynamicalSystem make_suspension_system(SuspensionCocycle cocycle, std::string summary,
                                       std::vector<std::string> facts,
                                       std::optional<std::pair<Matrix, Matrix>> splitting);

/// Built-in systems: cat-suspension, saddle-cycle, ph-suspension, mixed-saddles,
/// rotation-suspension.
std::vector<DynamicalSystem> catalog();

/// Looks up a catalog system by name; throws InvalidArgument if unknown.
DynamicalSystem catalog_system(const std::string& name);

/// Jacobian by central differences (used to validate analytic Jacobians).
Matrix finite_difference_jacobian(const FlowSystem& sys, const Vector& x, double step = 1e-6);

}  // namespace splitdom
