#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "splitdom/errors.hpp"
#include "splitdom/poincare.hpp"
#include "splitdom/domination.hpp"
#include "splitdom/sampled_cocycle.hpp"

using namespace splitdom;

TEST(NormalFrames, ConstantFieldKeepsFixedFrame) {
  Matrix a = Matrix::Zero(3, 3);
  const FlowSystem f = make_affine_flow("drift", a, Vector::Unit(3, 0));
  const OrbitSegment seg = integrate_orbit(f, Vector::Zero(3), 1.0, 0.1);
  const auto frames = build_normal_frames(seg);
  ASSERT_EQ(frames.size(), seg.size());
  Matrix expected(3, 2);
  expected << 0, 0, 1, 0, 0, 1;
  for (const auto& fr : frames) EXPECT_LT((fr.frame - expected).norm(), 1e-14) << fr.point_index;
}

TEST(NormalFrames, OrthonormalAndNormalToFlow) {
  const FlowSystem f = catalog_system("saddle-cycle").flow();
  Vector x0(3);
  x0 << 1.3, 0.2, 0.1;
  const OrbitSegment seg = integrate_orbit(f, x0, 3.0, 1e-2);
  const auto frames = build_normal_frames(seg);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Matrix& fr = frames[i].frame;
    EXPECT_LT((fr.transpose() * fr - Matrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LT((fr.transpose() * seg.field_values[i].normalized()).norm(), 1e-12);
  }
}

TEST(PoincareSegment, IdentityAndComposition) {
  const FlowSystem f = catalog_system("saddle-cycle").flow();
  Vector x0(3);
  x0 << 1.0, 0.0, 0.0;
  const OrbitSegment seg = integrate_orbit(f, x0, 2.0, 1e-2);
  const PoincareCocycle pc = linear_poincare_flow(seg, integrate_tangent(f, seg));
  EXPECT_LT((poincare_segment(pc, 40, 40) - Matrix::Identity(2, 2)).norm(), 1e-12);
  const Matrix whole = poincare_segment(pc, 10, 150);
  const Matrix split = poincare_segment(pc, 60, 150) * poincare_segment(pc, 10, 60);
  EXPECT_LT((whole - split).norm(), 1e-10 * whole.norm());
  const LinearMap back = poincare_inverse_segment(pc, 10, 150);
  EXPECT_TRUE(back.det_nonzero);
  EXPECT_LT((back.matrix * whole - Matrix::Identity(2, 2)).norm(), 1e-10);
}

// On the cycle the radial and vertical directions are normal to X, so the
// Poincare map over one period has the Floquet multipliers as eigenvalues.
TEST(PoincareSegment, SaddleReturnMap) {
  const FlowSystem f = catalog_system("saddle-cycle").flow();
  Vector x0(3);
  x0 << 1.0, 0.0, 0.0;
  const OrbitSegment seg = integrate_orbit(f, x0, 2.0 * std::numbers::pi, 1e-3);
  const PoincareCocycle pc = linear_poincare_flow(seg, integrate_tangent(f, seg));
  const Eigen::EigenSolver<Matrix> eig(poincare_segment(pc, 0, pc.size() - 1));
  std::vector<double> ev{eig.eigenvalues()(0).real(), eig.eigenvalues()(1).real()};
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0], std::exp(-std::numbers::pi), 1e-4);
  EXPECT_NEAR(ev[1], std::exp(0.6 * std::numbers::pi), 1e-4);
}

TEST(SampledCocycle, CatNormalStepIsFiberMatrix) {
  const AnalysisSet set = sample_system(catalog_system("cat-suspension"), {});
  ASSERT_EQ(set.normal.fiber, Fiber::normal);
  ASSERT_EQ(set.normal.dim, 2);
  const auto& orbit = set.normal.orbits.at(0);
  const Matrix step = set.normal.forward(0, orbit.base_begin, orbit.base_begin + 1);
  // Frames for a suspension are the fiber axes up to orientation.
  EXPECT_LT((step.cwiseAbs() - splitdom::testing::cat_matrix()).norm(), 1e-12);
  Matrix inverse(2, 2);
  inverse << 1, -1, -1, 2;
  const Matrix back = set.normal.backward(0, orbit.base_begin, orbit.base_begin + 1);
  EXPECT_LT((back.cwiseAbs() - inverse.cwiseAbs()).norm(), 1e-12);
  EXPECT_LT((back * step - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(SampledCocycle, HorizonAndMarginsCovered) {
  const AnalysisSet set = sample_system(catalog_system("saddle-cycle"), {});
  for (std::size_t o = 0; o < set.tangent.orbits.size(); ++o) {
    const auto& orbit = set.tangent.orbits[o];
    EXPECT_GE(orbit.base_begin, 64u);
    EXPECT_LT(set.tangent.analysis_end(o), orbit.size());
    EXPECT_GT(set.tangent.base_point_count(), 0u);
  }
  EXPECT_NEAR(set.tangent.orbits[0].times[1] - set.tangent.orbits[0].times[0], 0.5, 1e-12);
}

TEST(SampledCocycle, ConjugationAndReversal) {
  const AnalysisSet set = sample_system(catalog_system("cat-suspension"), {});
  Matrix r = Matrix::Identity(3, 3);
  r(0, 1) = 0.5;
  const SampledCocycle moved = conjugate(set.tangent, r);
  const auto& orbit = set.tangent.orbits[0];
  const Matrix a = set.tangent.forward(0, orbit.base_begin, orbit.base_begin + 3);
  const Matrix b = moved.forward(0, orbit.base_begin, orbit.base_begin + 3);
  EXPECT_LT((b - r * a * r.inverse()).norm(), 1e-10);

  const SampledCocycle rev = reversed(set.tangent);
  const std::size_t n = orbit.size() - 1;
  const Matrix back = rev.forward(0, n - 5, n - 2);
  EXPECT_LT((back - set.tangent.backward(0, 2, 5)).norm(), 1e-10);
}

TEST(LinearPoincareFlow, DecoupledLinearComplement) {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 0, -1, 2;
  const FlowSystem f = make_affine_flow("drift", a, Vector::Unit(3, 0));
  const OrbitSegment seg = integrate_orbit(f, Vector::Zero(3), 1.5, 1e-3);
  const PoincareCocycle pc = linear_poincare_flow(seg, integrate_tangent(f, seg));
  for (std::size_t i = 0; i < pc.size(); i += 300) {
    const double t = seg.times[i];
    Matrix expected = Matrix::Zero(2, 2);
    expected.diagonal() << std::exp(-t), std::exp(2 * t);
    EXPECT_LT((pc.matrices[i] - expected).norm(), 1e-8 * expected.norm()) << "t = " << t;
  }
}

TEST(LinearPoincareFlow, ProjectionIsImplicitAndContracts) {
  const FlowSystem f = catalog_system("saddle-cycle").flow();
  Vector x0(3);
  x0 << 1.4, -0.3, 0.2;
  const OrbitSegment seg = integrate_orbit(f, x0, 3.0, 1e-3);
  const TangentCocycle d = integrate_tangent(f, seg);
  const PoincareCocycle pc = linear_poincare_flow(seg, d);
  std::mt19937_64 rng(41);
  for (std::size_t i = 0; i < pc.size(); i += 500) {
    const Matrix& fi = pc.frames[i].frame;
    const Matrix& f0 = pc.frames[0].frame;
    const Matrix pi = flow_projection(seg.field_values[i].normalized()).matrix;
    EXPECT_LT((fi.transpose() * d.fundamental[i] * f0 - fi.transpose() * pi * d.fundamental[i] * f0).norm(), 1e-12);
    EXPECT_LT((pc.matrices[i] - fi.transpose() * d.fundamental[i] * f0).norm(), 1e-12);
    for (int k = 0; k < 20; ++k) {
      const Vector c = splitdom::testing::gaussian(rng, 2, 1).col(0);
      EXPECT_LE((pc.matrices[i] * c).norm(), (d.fundamental[i] * f0 * c).norm() * (1 + 1e-12));
    }
  }
}

// Over one period the transported frame comes back rotated (holonomy); in
// matched frames the return map carries the Floquet multipliers.
TEST(NormalFrames, SaddleHolonomy) {
  const FlowSystem f = catalog_system("saddle-cycle").flow();
  Vector x0(3);
  x0 << 1.0, 0.0, 0.0;
  const OrbitSegment seg = integrate_orbit(f, x0, 2.0 * std::numbers::pi, 1e-3);
  const PoincareCocycle pc = linear_poincare_flow(seg, integrate_tangent(f, seg));
  const Matrix& f0 = pc.frames.front().frame;
  const Matrix& fn = pc.frames.back().frame;
  const Matrix q = f0.transpose() * fn;
  EXPECT_LT((q.transpose() * q - Matrix::Identity(2, 2)).norm(), 1e-5);
  EXPECT_LT((f0 * q - fn).norm(), 1e-5);
  const Matrix matched = q * pc.matrices.back();
  const Eigen::EigenSolver<Matrix> eig(matched);
  std::vector<double> ev{eig.eigenvalues()(0).real(), eig.eigenvalues()(1).real()};
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0] / std::exp(-std::numbers::pi), 1.0, 1e-3);
  EXPECT_NEAR(ev[1] / std::exp(0.6 * std::numbers::pi), 1.0, 1e-3);
}

TEST(PoincareInverseSegment, IllConditionedSegmentRejected) {
  PoincareCocycle pc;
  pc.frames = {{0, Matrix::Identity(2, 2)}, {1, Matrix::Identity(2, 2)}};
  Matrix squash = Matrix::Identity(2, 2);
  squash(1, 1) = 1e-14;
  pc.matrices = {Matrix::Identity(2, 2), squash};
  EXPECT_THROW(poincare_inverse_segment(pc, 0, 1), IllConditionedError);
  EXPECT_LT((poincare_inverse_segment(pc, 1, 1).matrix - Matrix::Identity(2, 2)).norm(), 1e-15);
}

// Quotients live on the quotient bundle, not on a particular frame.
TEST(SampledCocycle, QuotientsIndependentOfInitialFrame) {
  const DynamicalSystem sys = catalog_system("saddle-cycle");
  SamplingConfig rotated;
  Matrix r(2, 2);
  r << std::cos(0.7), -std::sin(0.7), std::sin(0.7), std::cos(0.7);
  rotated.initial_frame_rotation = r;
  const AnalysisSet a = sample_system(sys, {});
  const AnalysisSet b = sample_system(sys, rotated);
  const Splitting declared = *analytic_splitting(sys, a.tangent);
  const DominationReport ra = test_dominated(project_to_normal(declared, a.normal), a.normal);
  const DominationReport rb = test_dominated(project_to_normal(declared, b.normal), b.normal);
  ASSERT_EQ(ra.quotients.size(), rb.quotients.size());
  for (std::size_t n = 0; n < ra.quotients.size(); ++n)
    EXPECT_NEAR(rb.quotients[n].second / ra.quotients[n].second, 1.0, 1e-6) << "n = " << n;
}
