#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "splitdom/errors.hpp"
#include "splitdom/systems.hpp"

using namespace splitdom;

namespace {

FlowSystem scalar_decay() {
  Matrix a(1, 1);
  a << -1.0;
  FlowSystem f = make_affine_flow("decay", a, Vector::Zero(1));
  f.singularity_floor = 0.0;
  return f;
}

Vector point(double x, double y, double z) {
  Vector v(3);
  v << x, y, z;
  return v;
}

}  // namespace

TEST(IntegrateOrbit, ScalarDecay) {
  const OrbitSegment seg = integrate_orbit(scalar_decay(), Vector::Ones(1), 1.0, 1e-3);
  EXPECT_NEAR(seg.times.back(), 1.0, 1e-12);
  EXPECT_NEAR(seg.points.back()(0), std::exp(-1.0), 1e-9);
}

TEST(IntegrateOrbit, TimeReversal) {
  const OrbitSegment seg = integrate_orbit(scalar_decay(), Vector::Ones(1), -1.0, 1e-3);
  EXPECT_NEAR(seg.times.back(), -1.0, 1e-12);
  EXPECT_NEAR(seg.points.back()(0), std::exp(1.0), 1e-9);
}

TEST(IntegrateOrbit, ShortensLastStep) {
  const OrbitSegment seg = integrate_orbit(scalar_decay(), Vector::Ones(1), 0.25, 0.1);
  ASSERT_EQ(seg.size(), 4u);
  EXPECT_NEAR(seg.times.back(), 0.25, 1e-15);
  EXPECT_NEAR(seg.points.back()(0), std::exp(-0.25), 1e-6);
}

TEST(IntegrateOrbit, SaddleCycleIsPeriodic) {
  const FlowSystem f = catalog_system("saddle-cycle").flow();
  const Vector x0 = point(1, 0, 0);
  const OrbitSegment seg = integrate_orbit(f, x0, 2.0 * std::numbers::pi, 1e-3);
  EXPECT_LT((seg.points.back() - x0).norm(), 1e-6);
}

TEST(IntegrateOrbit, SingularityReported) {
  Matrix a = Matrix::Zero(2, 2);
  const FlowSystem still = make_affine_flow("still", a, Vector::Zero(2));
  try {
    integrate_orbit(still, Vector::Ones(2), 1.0, 0.1);
    FAIL() << "expected SingularityEncounteredError";
  } catch (const SingularityEncounteredError& e) {
    EXPECT_EQ(e.time(), 0.0);
  }
}

TEST(IntegrateOrbit, RejectsBadStep) {
  EXPECT_THROW(integrate_orbit(scalar_decay(), Vector::Ones(1), 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(integrate_orbit(scalar_decay(), Vector::Ones(2), 1.0, 0.1), DimensionError);
}

// exp(A t) for A = [[-1, 2], [0, -3]] is [[e^-t, e^-t - e^-3t], [0, e^-3t]].
TEST(IntegrateTangent, LinearFlowMatchesMatrixExponential) {
  Matrix a(2, 2);
  a << -1, 2, 0, -3;
  Vector offset(2);
  offset << 1, 1;  // keeps the field away from zero along the orbit
  const FlowSystem f = make_affine_flow("lin", a, offset);
  const OrbitSegment seg = integrate_orbit(f, Vector::Ones(2), 2.0, 1e-3);
  const TangentCocycle d = integrate_tangent(f, seg);
  ASSERT_EQ(d.size(), seg.size());
  for (std::size_t i = 0; i < d.size(); i += 250) {
    const double t = seg.times[i];
    Matrix expected(2, 2);
    expected << std::exp(-t), std::exp(-t) - std::exp(-3 * t), 0, std::exp(-3 * t);
    EXPECT_LT((d.fundamental[i] - expected).norm(), 1e-8 * expected.norm()) << "t = " << t;
  }
}

TEST(IntegrateTangent, SaddleFloquetMultipliers) {
  const FlowSystem f = catalog_system("saddle-cycle").flow();
  const OrbitSegment seg = integrate_orbit(f, point(1, 0, 0), 2.0 * std::numbers::pi, 1e-3);
  const Matrix m = integrate_tangent(f, seg).fundamental.back();
  const Eigen::EigenSolver<Matrix> eig(m);
  std::vector<double> mult;
  for (const auto& ev : eig.eigenvalues()) mult.push_back(ev.real());
  std::sort(mult.begin(), mult.end());
  EXPECT_NEAR(mult[0], std::exp(-std::numbers::pi), 1e-4);
  EXPECT_NEAR(mult[1], 1.0, 1e-4);
  EXPECT_NEAR(mult[2], std::exp(0.6 * std::numbers::pi), 1e-4);
}

TEST(IntegrateTangent, SaddleJacobianMatchesFiniteDifferences) {
  const FlowSystem f = catalog_system("saddle-cycle").flow();
  for (const Vector& x : {point(1, 0, 0), point(0.3, -1.4, 0.2), point(-2, 0.5, -1)})
    EXPECT_LT((f.jacobian(x) - finite_difference_jacobian(f, x)).norm(), 1e-7);
}

TEST(CocycleMatrix, CatExamples) {
  const SuspensionCocycle cat = catalog_system("cat-suspension").suspension();
  EXPECT_LT((cocycle_matrix(cat, 0, 0, 0).matrix - Matrix::Identity(3, 3)).norm(), 1e-15);
  Matrix two(3, 3), back(3, 3);
  two << 5, 3, 0, 3, 2, 0, 0, 0, 1;
  back << 1, -1, 0, -1, 2, 0, 0, 0, 1;
  EXPECT_LT((cocycle_matrix(cat, 0, 0, 2).matrix - two).norm(), 1e-12);
  const LinearMap inv = cocycle_matrix(cat, 0, 0, -1);
  EXPECT_LT((inv.matrix - back).norm(), 1e-12);
  EXPECT_TRUE(inv.det_nonzero);
}

TEST(CocycleMatrix, MixedSaddlesOrbitA) {
  const SuspensionCocycle mixed = catalog_system("mixed-saddles").suspension();
  Matrix expected = Matrix::Zero(3, 3);
  expected.diagonal() << 0.25, 0.5, 1.0;
  EXPECT_LT((cocycle_matrix(mixed, 0, 0, 1).matrix - expected).norm(), 1e-15);
  expected.diagonal() << 2.0, 4.0, 1.0;
  EXPECT_LT((cocycle_matrix(mixed, 1, 0, 1).matrix - expected).norm(), 1e-15);
}

TEST(IntegrateTangent, SuspensionSteps) {
  const SuspensionCocycle cat = catalog_system("cat-suspension").suspension();
  const TangentCocycle d = integrate_tangent(cat, 0, 3);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_LT((d.fundamental[3] - cocycle_matrix(cat, 0, 0, 3).matrix).norm(), 1e-12);
}

TEST(SuspensionCocycle, ValidationFailures) {
  SuspensionCocycle c;
  c.name = "bad";
  c.fiber_dim = 2;
  c.orbits.push_back({{Matrix::Zero(2, 2)}, {1.0}});
  EXPECT_THROW(c.validate(), InvertibilityError);
  c.orbits[0] = {{Matrix::Identity(2, 2)}, {0.0}};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.orbits[0] = {{Matrix::Identity(3, 3)}, {1.0}};
  EXPECT_THROW(c.validate(), DimensionError);
}

TEST(Catalog, ContainsTheDocumentedSystems) {
  std::vector<std::string> names;
  for (const auto& s : catalog()) names.push_back(s.name);
  EXPECT_EQ(names, (std::vector<std::string>{"cat-suspension", "saddle-cycle", "ph-suspension", "mixed-saddles",
                                             "rotation-suspension"}));
  EXPECT_THROW(catalog_system("no-such-system"), InvalidArgument);
  EXPECT_EQ(catalog_system("ph-suspension").tangent_dim(), 4);
  EXPECT_FALSE(catalog_system("rotation-suspension").analytic_splitting.has_value());
}

TEST(Catalog, SaddleSplittingIsInvariant) {
  const DynamicalSystem sys = catalog_system("saddle-cycle");
  const FlowSystem& f = sys.flow();
  const Vector x0 = point(1, 0, 0);
  const OrbitSegment seg = integrate_orbit(f, x0, 1.0, 1e-3);
  const Matrix d = integrate_tangent(f, seg).fundamental.back();
  const BundlePair at0 = (*sys.analytic_splitting)(0, x0);
  const BundlePair at1 = (*sys.analytic_splitting)(0, seg.points.back());
  const Vector pushed = d * at0.lower.basis().col(0);
  EXPECT_NEAR(std::abs(pushed.normalized().dot(at1.lower.basis().col(0))), 1.0, 1e-10);
  EXPECT_NEAR(pushed.norm(), std::exp(-0.5), 1e-9);
}
