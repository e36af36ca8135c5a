#include "splitdom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splitdom/errors.hpp"

namespace splitdom {

namespace {

constexpr double kRankTolerance = 1e-12;
constexpr double kTransversalityThreshold = 1e-8;

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

void require_same_ambient(const Matrix& L, const Subspace& E) {
  if (L.rows() != L.cols() || L.cols() != E.ambient_dim())
    throw DimensionError("map is " + std::to_string(L.rows()) + "x" + std::to_string(L.cols()) +
                         ", subspace ambient dimension " + std::to_string(E.ambient_dim()));
  if (E.empty()) throw DimensionError("empty subspace");
}

}  // namespace

Subspace Subspace::span(const Matrix& vectors) {
  if (vectors.cols() == 0 || vectors.rows() == 0) throw DimensionError("span of no vectors");
  if (vectors.cols() > vectors.rows())
    throw DimensionError("more vectors than the ambient dimension");
  Matrix q = vectors;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double original = q.col(j).norm();
    if (!(original > 0.0) || !std::isfinite(original))
      throw DimensionError("zero or non-finite spanning vector");
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    }
    const double residual = q.col(j).norm();
    if (residual <= kRankTolerance * original)
      throw DimensionError("spanning vectors are linearly dependent");
    q.col(j) /= residual;
  }
  return Subspace(std::move(q));
}

Subspace Subspace::span(const Vector& v) { return span(Matrix(v)); }

Subspace Subspace::sum(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim()) throw DimensionError("sum of subspaces in different spaces");
  Matrix m(a.ambient_dim(), a.dim() + b.dim());
  m << a.basis(), b.basis();
  return span(m);
}

Subspace Subspace::whole(int ambient_dim) {
  if (ambient_dim <= 0) throw DimensionError("nonpositive ambient dimension");
  return Subspace(Matrix::Identity(ambient_dim, ambient_dim));
}

Subspace Subspace::coordinate(int ambient_dim, const std::vector<int>& axes) {
  Matrix m = Matrix::Zero(ambient_dim, static_cast<Eigen::Index>(axes.size()));
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (axes[k] < 0 || axes[k] >= ambient_dim) throw DimensionError("coordinate axis out of range");
    m(axes[k], static_cast<Eigen::Index>(k)) = 1.0;
  }
  return span(m);
}

Subspace Subspace::orthogonal_complement() const {
  const int n = ambient_dim();
  const int k = dim();
  if (k == n) throw DimensionError("complement of the whole space is trivial");
  Eigen::JacobiSVD<Matrix> svd(basis_, Eigen::ComputeFullU);
  return Subspace(svd.matrixU().rightCols(n - k));
}

double Subspace::orthonormality_defect() const {
  const Matrix gram = basis_.transpose() * basis_;
  return (gram - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

LinearMap::LinearMap(Matrix m) : matrix(std::move(m)) {
  if (matrix.rows() != matrix.cols()) throw DimensionError("linear map must be square");
  const Vector s = singular_values(matrix);
  det_nonzero = s.size() > 0 && s(s.size() - 1) > 1e-12 * s(0);
}

double AdaptedMetric::norm(const Vector& v) const { return std::sqrt(std::max(0.0, inner(v, v))); }

Matrix AdaptedMetric::factor() const { return basis.partialPivLu().inverse(); }

double AdaptedMetric::condition_number() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& ev = eig.eigenvalues();
  return ev(ev.size() - 1) / ev(0);
}

double subspace_norm(const Matrix& L, const Subspace& E) {
  require_same_ambient(L, E);
  return singular_values(L * E.basis())(0);
}

double minimal_norm(const Matrix& L, const Subspace& E) {
  require_same_ambient(L, E);
  const Vector s = singular_values(L * E.basis());
  return s(s.size() - 1);
}

LinearMap flow_projection(const Vector& direction) {
  const double n = direction.norm();
  if (!(n > 0.0)) throw SingularDirectionError("flow direction vanishes (singular point of the field)");
  if (std::abs(n - 1.0) > 1e-10) throw InvalidArgument("flow direction must be a unit vector");
  const auto dim = direction.size();
  LinearMap pi;
  pi.matrix = Matrix::Identity(dim, dim) - direction * direction.transpose();
  pi.det_nonzero = false;
  return pi;
}

std::vector<double> principal_angles(const Subspace& E, const Subspace& F) {
  if (E.ambient_dim() != F.ambient_dim()) throw DimensionError("principal angles across dimensions");
  // Work with the smaller subspace as the "right" one.
  const Subspace& big = E.dim() >= F.dim() ? E : F;
  const Subspace& small = E.dim() >= F.dim() ? F : E;
  const Matrix cross = big.basis().transpose() * small.basis();
  const Vector cosines = singular_values(cross);  // descending
  const Matrix residual = small.basis() - big.basis() * cross;
  Vector sines = singular_values(residual);  // descending
  std::vector<double> sine_sorted(sines.data(), sines.data() + sines.size());
  std::sort(sine_sorted.begin(), sine_sorted.end());

  std::vector<double> angles(static_cast<std::size_t>(small.dim()));
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double c = std::clamp(cosines(static_cast<Eigen::Index>(i)), 0.0, 1.0);
    if (c * c >= 0.5)
      angles[i] = std::asin(std::clamp(sine_sorted[i], 0.0, 1.0));
    else
      angles[i] = std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double subspace_distance(const Subspace& E, const Subspace& F) { return principal_angles(E, F).back(); }

double minimal_angle(const Subspace& E, const Subspace& F) { return principal_angles(E, F).front(); }

AdaptedMetric adapted_inner_product(const Subspace& E, const Vector& x_direction, const Subspace& F,
                                    std::size_t base_point_id) {
  const int n = E.ambient_dim();
  if (F.ambient_dim() != n || x_direction.size() != n)
    throw DimensionError("adapted metric inputs live in different spaces");
  if (E.dim() + 1 + F.dim() != n) throw DimensionError("dim E + 1 + dim F must equal the ambient dimension");
  const Subspace x = Subspace::span(x_direction);

  auto require_transverse = [](double angle) {
    if (angle <= kTransversalityThreshold)
      throw DegenerateSplittingError("bundles are nearly tangent (min angle " + std::to_string(angle) + ")");
  };
  require_transverse(std::min({minimal_angle(E, x), minimal_angle(E, F), minimal_angle(x, F)}));
  // E + F only exists as a subspace once E and F are known to be transverse.
  require_transverse(minimal_angle(x, Subspace::sum(E, F)));

  AdaptedMetric metric;
  metric.base_point_id = base_point_id;
  metric.dim_e = E.dim();
  metric.dim_f = F.dim();
  metric.basis.resize(n, n);
  metric.basis << E.basis(), x_direction, F.basis();
  const Matrix inv = metric.basis.partialPivLu().inverse();
  metric.gram = inv.transpose() * inv;
  metric.gram = 0.5 * (metric.gram + metric.gram.transpose()).eval();
  return metric;
}

Subspace image(const Matrix& L, const Subspace& E) {
  require_same_ambient(L, E);
  return Subspace::span(Matrix(L * E.basis()));
}

Matrix complete_to_orthonormal_basis(const Vector& v) {
  const auto n = v.size();
  const double norm = v.norm();
  if (!(norm > 0.0)) throw SingularDirectionError("cannot complete a zero vector");
  Matrix basis(n, n);
  basis.col(0) = v / norm;
  Eigen::Index filled = 1;
  for (Eigen::Index axis = 0; axis < n && filled < n; ++axis) {
    Vector candidate = Vector::Unit(n, axis);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < filled; ++i) candidate -= basis.col(i).dot(candidate) * basis.col(i);
    const double r = candidate.norm();
    if (r < 1e-8) continue;
    basis.col(filled++) = candidate / r;
  }
  return basis.rightCols(n - 1);
}

double condition_number(const Matrix& m) {
  const Vector s = singular_values(m);
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  const double smallest = s(s.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smallest;
}

}  // namespace splitdom
