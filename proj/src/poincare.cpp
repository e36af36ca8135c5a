#include "splitdom/poincare.hpp"

#include "splitdom/errors.hpp"

namespace splitdom {

std::vector<Matrix> transport_frames(const std::vector<Vector>& flow_directions,
                                     const std::optional<Matrix>& initial_rotation) {
  std::vector<Matrix> frames;
  if (flow_directions.empty()) return frames;
  frames.reserve(flow_directions.size());

  Matrix frame = complete_to_orthonormal_basis(flow_directions.front().normalized());
  if (initial_rotation) {
    if (initial_rotation->rows() != frame.cols() || initial_rotation->cols() != frame.cols())
      throw DimensionError("initial frame rotation has the wrong shape");
    frame = frame * *initial_rotation;
  }
  frames.push_back(frame);

  for (std::size_t i = 1; i < flow_directions.size(); ++i) {
    const Vector u = flow_directions[i].normalized();
    Matrix next = frame - u * (u.transpose() * frame);
    // Two passes of modified Gram-Schmidt keep the columns orthonormal to roundoff.
    for (Eigen::Index c = 0; c < next.cols(); ++c) {
      for (int pass = 0; pass < 2; ++pass) {
        next.col(c) -= u.dot(next.col(c)) * u;
        for (Eigen::Index p = 0; p < c; ++p) next.col(c) -= next.col(p).dot(next.col(c)) * next.col(p);
      }
      const double r = next.col(c).norm();
      if (!(r > 1e-12))
        throw InvalidArgument("normal frame collapsed; flow direction turned by pi/2 between samples");
      next.col(c) /= r;
    }
    frames.push_back(next);
    frame = std::move(next);
  }
  return frames;
}

std::vector<NormalFrame> build_normal_frames(const OrbitSegment& orbit,
                                             const std::optional<Matrix>& initial_rotation) {
  std::vector<Vector> directions;
  directions.reserve(orbit.size());
  for (const auto& f : orbit.field_values) {
    const double n = f.norm();
    if (!(n > 0.0)) throw SingularDirectionError("field vanishes on the orbit");
    directions.push_back(f / n);
  }
  auto frames = transport_frames(directions, initial_rotation);
  std::vector<NormalFrame> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) out.push_back({i, std::move(frames[i])});
  return out;
}

PoincareCocycle linear_poincare_flow(const OrbitSegment& orbit, const TangentCocycle& tangent,
                                     const std::optional<Matrix>& initial_rotation) {
  if (tangent.size() != orbit.size()) throw DimensionError("tangent cocycle and orbit differ in length");
  PoincareCocycle pc;
  pc.frames = build_normal_frames(orbit, initial_rotation);
  pc.matrices.reserve(orbit.size());
  const Matrix& f0 = pc.frames.front().frame;
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    // frame_i^T Pi_i = frame_i^T, so the projection is implicit.
    pc.matrices.push_back(pc.frames[i].frame.transpose() * tangent.fundamental[i] * f0);
  }
  return pc;
}

Matrix poincare_segment(const PoincareCocycle& pc, std::size_t i, std::size_t j) {
  if (i > j || j >= pc.size()) throw IndexError("segment indices out of range");
  if (i == j) return Matrix::Identity(pc.matrices[i].rows(), pc.matrices[i].cols());
  return pc.matrices[i].transpose().partialPivLu().solve(pc.matrices[j].transpose()).transpose();
}

LinearMap poincare_inverse_segment(const PoincareCocycle& pc, std::size_t i, std::size_t j) {
  const Matrix seg = poincare_segment(pc, i, j);
  const double cond = condition_number(seg);
  if (!(cond <= 1e12))
    throw IllConditionedError("Poincare segment condition number " + std::to_string(cond) + " exceeds 1e12");
  LinearMap out;
  out.matrix = seg.partialPivLu().inverse();
  out.det_nonzero = true;
  return out;
}

}  // namespace splitdom
