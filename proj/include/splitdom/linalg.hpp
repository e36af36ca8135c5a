#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace splitdom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Linear subspace of R^n held as an orthonormal basis (columns).
class Subspace {
 public:
  Subspace() = default;

  /// Orthonormalizes the columns of `vectors` (two-pass modified Gram-Schmidt).
  /// Throws DimensionError when the columns are (numerically) dependent or empty.
  static Subspace span(const Matrix& vectors);
  static Subspace span(const Vector& v);
  /// Span of the columns of `a` followed by the columns of `b`.
  static Subspace sum(const Subspace& a, const Subspace& b);
  static Subspace whole(int ambient_dim);
  /// Coordinate subspace spanned by the listed standard basis vectors.
  static Subspace coordinate(int ambient_dim, const std::vector<int>& axes);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  bool empty() const { return basis_.cols() == 0; }
  const Matrix& basis() const { return basis_; }

  Matrix projector() const { return basis_ * basis_.transpose(); }
  Subspace orthogonal_complement() const;
  /// Largest deviation of the Gram matrix from the identity.
  double orthonormality_defect() const;

 private:
  explicit Subspace(Matrix basis) : basis_(std::move(basis)) {}
  Matrix basis_;
};

/// Square matrix together with the outcome of an invertibility check.
struct LinearMap {
  Matrix matrix;
  bool det_nonzero = false;

  LinearMap() = default;
  explicit LinearMap(Matrix m);
  int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Inner product that makes a chosen splitting E (+) <X> (+) F orthonormal.
struct AdaptedMetric {
  std::size_t base_point_id = 0;
  Matrix gram;
  /// Concatenated basis {e_i, X, f_j} the metric declares orthonormal.
  Matrix basis;
  int dim_e = 0;
  int dim_f = 0;

  double inner(const Vector& u, const Vector& v) const { return u.dot(gram * v); }
  double norm(const Vector& v) const;
  /// R with gram = R^T R, so |v|_gram = |R v|.
  Matrix factor() const;
  double condition_number() const;
};

/// Sup of |L v| over unit v in E (largest singular value of L B_E).
double subspace_norm(const Matrix& L, const Subspace& E);
/// Inf of |L v| over unit v in E (smallest singular value of L B_E).
double minimal_norm(const Matrix& L, const Subspace& E);

/// Orthogonal projection I - v v^T off a unit direction.
LinearMap flow_projection(const Vector& direction);

/// Principal angles in [0, pi/2], ascending, min(dim E, dim F) of them.
/// Small angles are taken from sines so that they resolve below 1e-8.
std::vector<double> principal_angles(const Subspace& E, const Subspace& F);
/// Largest principal angle; for equal dimensions a metric on subspaces.
double subspace_distance(const Subspace& E, const Subspace& F);
/// Smallest principal angle.
double minimal_angle(const Subspace& E, const Subspace& F);

/// Gram matrix of the inner product in which {E basis, X, F basis} is orthonormal.
AdaptedMetric adapted_inner_product(const Subspace& E, const Vector& x_direction,
                                    const Subspace& F, std::size_t base_point_id = 0);

/// Image L(E); throws DimensionError if L collapses E.
Subspace image(const Matrix& L, const Subspace& E);

/// Completes the unit vector `v` to an orthonormal basis, returning the n-1
/// complementary columns. Deterministic: Gram-Schmidt of e_1, e_2, ... against v.
Matrix complete_to_orthonormal_basis(const Vector& v);

/// Condition number (ratio of extreme singular values); +inf for singular input.
double condition_number(const Matrix& m);

}  // namespace splitdom
