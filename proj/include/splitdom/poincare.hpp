#pragma once

#include <optional>
#include <vector>

#include "splitdom/linalg.hpp"
#include "splitdom/systems.hpp"

namespace splitdom {

/// Orthonormal basis of the normal space X(x)^perp at one orbit point.
struct NormalFrame {
  std::size_t point_index = 0;
  Matrix frame;  // dim x (dim - 1)
};

/// Linear Poincare flow P_{t_i} = Pi o DX_{t_i} expressed in transported frames.
struct PoincareCocycle {
  std::vector<NormalFrame> frames;
  std::vector<Matrix> matrices;  // P_i = frame_i^T D_i frame_0

  std::size_t size() const { return matrices.size(); }
};

/// Frames transported along a sequence of flow directions: the first is a
/// deterministic completion of the first direction (optionally rotated by
/// `initial_rotation`), each later one is the previous frame projected onto the
/// new normal space and re-orthonormalized.
std::vector<Matrix> transport_frames(const std::vector<Vector>& flow_directions,
                                     const std::optional<Matrix>& initial_rotation = std::nullopt);

std::vector<NormalFrame> build_normal_frames(const OrbitSegment& orbit,
                                             const std::optional<Matrix>& initial_rotation = std::nullopt);

PoincareCocycle linear_poincare_flow(const OrbitSegment& orbit, const TangentCocycle& tangent,
                                     const std::optional<Matrix>& initial_rotation = std::nullopt);

/// (P over [i, j])^{-1}: the Poincare map from x(t_j) back to x(t_i).
LinearMap poincare_inverse_segment(const PoincareCocycle& pc, std::size_t i, std::size_t j);

/// P over [i, j] = P_j P_i^{-1}, evaluated as frame_j^T D_j D_i^{-1} frame_i.
Matrix poincare_segment(const PoincareCocycle& pc, std::size_t i, std::size_t j);

}  // namespace splitdom
