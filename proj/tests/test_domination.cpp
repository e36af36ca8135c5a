#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "splitdom/domination.hpp"
#include "splitdom/errors.hpp"

using namespace splitdom;
using splitdom::testing::cat_matrix;
using splitdom::testing::constant_cocycle;
using splitdom::testing::constant_splitting;

namespace {

const double kCatRate = 2.0 * std::log((3.0 + std::sqrt(5.0)) / 2.0);

Vector vec(std::initializer_list<double> x) {
  Vector v(static_cast<int>(x.size()));
  int i = 0;
  for (double d : x) v(i++) = d;
  return v;
}

Matrix diag(std::initializer_list<double> x) { return vec(x).asDiagonal(); }

struct Sampled {
  DynamicalSystem sys;
  AnalysisSet set;
  Splitting declared;
};

const Sampled& sampled(const std::string& name) {
  static std::map<std::string, Sampled> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    Sampled s{catalog_system(name), {}, {}};
    s.set = sample_system(s.sys, {});
    if (auto d = analytic_splitting(s.sys, s.set.tangent)) s.declared = *d;
    it = cache.emplace(name, std::move(s)).first;
  }
  return it->second;
}

}  // namespace

TEST(DominationQuotient, DiagonalRates) {
  EXPECT_NEAR(domination_quotient(diag({0.5, 2.0}), Subspace::coordinate(2, {0}), Subspace::coordinate(2, {1})),
              0.25, 1e-15);
  EXPECT_THROW(domination_quotient(diag({1.0, 1e-13}), Subspace::coordinate(2, {0}), Subspace::coordinate(2, {1})),
               IllConditionedError);
}

TEST(DominationQuotient, CatPowers) {
  const SampledCocycle c = constant_cocycle(cat_matrix(), Fiber::normal, Vector::Unit(2, 0));
  const Splitting s = constant_splitting(
      c, {Subspace::span(vec({1.0, -(1.0 + std::sqrt(5.0)) / 2.0})), Subspace::span(vec({1.0, (std::sqrt(5.0) - 1.0) / 2.0}))});
  for (int n : {1, 5, 12}) {
    const double q = domination_quotient(c, s, 0, 1, 0, c.orbits[0].base_begin, n);
    EXPECT_NEAR(q, std::exp(-kCatRate * n), 1e-6 * std::exp(-kCatRate * n)) << "n = " << n;
  }
}

TEST(DominationQuotient, IdentityIsFlat) {
  const SampledCocycle c = constant_cocycle(Matrix::Identity(2, 2), Fiber::normal, Vector::Unit(2, 0));
  const Splitting s = constant_splitting(c, {Subspace::coordinate(2, {0}), Subspace::coordinate(2, {1})});
  for (int n : {0, 3, 30}) EXPECT_DOUBLE_EQ(domination_quotient(c, s, 0, 1, 0, c.orbits[0].base_begin, n), 1.0);
  const DominationReport r = test_dominated(s, c);
  EXPECT_NEAR(r.lambda, 0.0, 1e-12);
  EXPECT_EQ(r.verdict, Verdict::not_dominated);
}

TEST(FitRate, ExactExponential) {
  std::vector<std::pair<double, double>> series;
  for (int t = 1; t <= 10; ++t) series.emplace_back(t, std::exp(-2.0 * t));
  const RateFit f = fit_rate(series);
  EXPECT_NEAR(f.lambda, 2.0, 1e-10);
  EXPECT_NEAR(f.K, 1.0, 1e-10);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(FitRate, ConstantAndInvalidSeries) {
  std::vector<std::pair<double, double>> flat;
  for (int t = 0; t < 10; ++t) flat.emplace_back(t, 1.0);
  EXPECT_NEAR(fit_rate(flat).lambda, 0.0, 1e-15);
  flat[4].second = 0.0;
  EXPECT_THROW(fit_rate(flat), InvalidSeriesError);
  flat.resize(5);
  EXPECT_THROW(fit_rate(flat), InvalidSeriesError);
}

TEST(TestDominated, CatNormalSplitting) {
  const auto& s = sampled("cat-suspension");
  const DominationReport r = test_dominated(project_to_normal(s.declared, s.set.normal), s.set.normal);
  EXPECT_EQ(r.verdict, Verdict::dominated);
  EXPECT_NEAR(r.lambda, kCatRate, 0.01 * kCatRate);
  EXPECT_GT(r.r_squared, 0.999);
  EXPECT_EQ(r.fiber, Fiber::normal);
  EXPECT_EQ(r.diagnostics.count("invariance_defect"), 1u);
}

TEST(TestDominated, MixedSaddlesCoarseningsFail) {
  const auto& s = sampled("mixed-saddles");
  for (bool with_lower : {true, false}) {
    const DominationReport r = test_dominated(coarsen(s.declared, with_lower), s.set.tangent);
    EXPECT_EQ(r.verdict, Verdict::not_dominated);
    // q(n) = 2^n on the orbit where the flow direction is the weak side.
    EXPECT_NEAR(r.lambda, -std::log(2.0), 0.01 * std::log(2.0));
  }
}

TEST(TestDominated, NonInvariantSplittingIsInconclusive) {
  const SampledCocycle c = constant_cocycle(cat_matrix(), Fiber::normal, Vector::Unit(2, 0));
  const Splitting s = constant_splitting(c, {Subspace::coordinate(2, {1}), Subspace::coordinate(2, {0})});
  const DominationReport r = test_dominated(s, c);
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  EXPECT_GT(r.diagnostics.at("invariance_defect"), 1e-4);
}

TEST(TestPartiallyDominated, MixedSaddlesAndPh) {
  const auto& mixed = sampled("mixed-saddles");
  const DominationReport m = test_partially_dominated(mixed.declared, mixed.set.tangent);
  EXPECT_EQ(m.verdict, Verdict::dominated);
  EXPECT_NEAR(m.lambda, std::log(2.0), 0.01 * std::log(2.0));
  const auto& ph = sampled("ph-suspension");
  const DominationReport p = test_partially_dominated(ph.declared, ph.set.tangent);
  EXPECT_EQ(p.verdict, Verdict::dominated);
  EXPECT_NEAR(p.lambda, std::log(3.0), 0.01 * std::log(3.0));
}

TEST(TestPartiallyDominated, MiddleBundleMustBeFlow) {
  const SampledCocycle c = constant_cocycle(diag({0.5, 1.0, 2.0}), Fiber::tangent, Vector::Unit(3, 1));
  const Splitting wrong = constant_splitting(
      c, {Subspace::coordinate(3, {0}), Subspace::coordinate(3, {2}), Subspace::coordinate(3, {1})});
  EXPECT_THROW(test_partially_dominated(wrong, c), NotFlowCenteredError);
  const Splitting right = constant_splitting(
      c, {Subspace::coordinate(3, {0}), Subspace::coordinate(3, {1}), Subspace::coordinate(3, {2})});
  EXPECT_EQ(test_partially_dominated(right, c).verdict, Verdict::dominated);
}

TEST(UniformContraction, Examples) {
  const auto& ph = sampled("ph-suspension");
  const ContractionReport e = test_uniform_contraction(ph.declared, 0, ph.set.tangent);
  EXPECT_EQ(e.verdict, ContractionVerdict::contracting);
  EXPECT_NEAR(e.forward.lambda, std::log(3.0), 0.01 * std::log(3.0));
  const ContractionReport f = test_uniform_contraction(ph.declared, 2, ph.set.tangent);
  EXPECT_EQ(f.verdict, ContractionVerdict::neutral);
  EXPECT_NEAR(f.forward.lambda, 0.0, 0.01);

  const auto& saddle = sampled("saddle-cycle");
  const ContractionReport u = test_uniform_contraction(saddle.declared, 2, saddle.set.tangent);
  EXPECT_EQ(u.verdict, ContractionVerdict::expanding);
  EXPECT_NEAR(u.multiplier(2.0 * std::numbers::pi), std::exp(0.6 * std::numbers::pi), 1e-3);
}

TEST(TestHyperbolic, CatalogVerdicts) {
  const auto& cat = sampled("cat-suspension");
  const HyperbolicityReport c = test_hyperbolic(cat.declared, cat.set.tangent);
  EXPECT_TRUE(c.hyperbolic);
  EXPECT_TRUE(c.partially_hyperbolic);

  const auto& ph = sampled("ph-suspension");
  const HyperbolicityReport p = test_hyperbolic(ph.declared, ph.set.tangent);
  EXPECT_FALSE(p.hyperbolic);
  EXPECT_TRUE(p.partially_hyperbolic);

  const auto& mixed = sampled("mixed-saddles");
  const HyperbolicityReport m = test_hyperbolic(mixed.declared, mixed.set.tangent);
  EXPECT_TRUE(m.domination.dominated());
  EXPECT_FALSE(m.partially_hyperbolic);
  EXPECT_FALSE(m.hyperbolic);
}

TEST(Extraction, CatEigendirections) {
  const auto& cat = sampled("cat-suspension");
  const Splitting lpf = extract_poincare_splitting(cat.set.normal);
  const Splitting declared = project_to_normal(cat.declared, cat.set.normal);
  const auto& orbit = cat.set.normal.orbits[0];
  for (std::size_t i = orbit.base_begin; i < orbit.base_end; ++i)
    for (std::size_t b = 0; b < 2; ++b)
      EXPECT_LE(subspace_distance(lpf.bundle(0, i, b), declared.bundle(0, i, b)), 1e-8);
  EXPECT_EQ(lpf.dims(), (std::vector<int>{1, 1}));
}

TEST(Extraction, RotationHasNoGap) {
  EXPECT_THROW(extract_poincare_splitting(sampled("rotation-suspension").set.normal), NoGapError);
}

TEST(Extraction, MixedSaddlesCoordinateSplitting) {
  const auto& mixed = sampled("mixed-saddles");
  const Splitting lpf = extract_poincare_splitting(mixed.set.normal);
  const Splitting declared = project_to_normal(mixed.declared, mixed.set.normal);
  for (std::size_t o = 0; o < mixed.set.normal.orbits.size(); ++o) {
    const auto& orbit = mixed.set.normal.orbits[o];
    for (std::size_t i = orbit.base_begin; i < orbit.base_end; ++i)
      for (std::size_t b = 0; b < 2; ++b)
        EXPECT_LE(subspace_distance(lpf.bundle(o, i, b), declared.bundle(o, i, b)), 1e-12);
  }
}

TEST(Reconstruction, RecoversDeclaredFlowSplitting) {
  const std::vector<std::pair<std::string, double>> cases{
      {"cat-suspension", 1e-6}, {"ph-suspension", 1e-6}, {"mixed-saddles", 1e-6}, {"saddle-cycle", 1e-3}};
  for (const auto& [name, tol] : cases) {
    const auto& s = sampled(name);
    const Splitting lpf = extract_poincare_splitting(s.set.normal);
    const Reconstruction rec = reconstruct_flow_splitting(lpf, s.set);
    EXPECT_TRUE(rec.report.dominated()) << name;
    const auto& orbit = s.set.tangent.orbits[0];
    for (std::size_t b : {0u, 2u})
      EXPECT_LE(subspace_distance(rec.splitting.bundle(0, orbit.base_begin, b),
                                  s.declared.bundle(0, orbit.base_begin, b)),
                tol)
          << name << " bundle " << b;
  }
}

TEST(Splittings, LiftProjectRoundTrip) {
  const auto& s = sampled("saddle-cycle");
  const Splitting normal = project_to_normal(s.declared, s.set.normal);
  const Splitting lifted = lift_to_tangent(normal, s.set.normal);
  const Splitting again = project_to_normal(
      [&] {
        Splitting three = lifted;
        three.kind = SplittingKind::three_bundle_with_flow;
        for (std::size_t o = 0; o < three.orbits.size(); ++o)
          for (std::size_t k = 0; k < three.orbits[o].at.size(); ++k)
            three.orbits[o].at[k].insert(three.orbits[o].at[k].begin() + 1,
                                         Subspace::span(Vector(s.set.tangent.orbits[o].flow[k])));
        return three;
      }(),
      s.set.normal);
  const auto& orbit = s.set.normal.orbits[0];
  for (std::size_t b = 0; b < 2; ++b)
    EXPECT_LE(subspace_distance(again.bundle(0, orbit.base_begin, b), normal.bundle(0, orbit.base_begin, b)), 1e-12);
  EXPECT_THROW(lift_to_tangent(s.declared, s.set.normal), InvalidArgument);
  EXPECT_THROW(coarsen(normal, true), InvalidArgument);
}

TEST(Splittings, ValidateDimensions) {
  const auto& s = sampled("ph-suspension");
  EXPECT_NO_THROW(s.declared.validate(4));
  EXPECT_THROW(s.declared.validate(3), DimensionError);
  EXPECT_EQ(s.declared.dims(), (std::vector<int>{1, 1, 2}));
  EXPECT_THROW(s.declared.bundle(0, s.set.tangent.orbits[0].size() + 5, 0), IndexError);
}

TEST(FlowLocation, FlowInNonContractingBundle) {
  for (const char* name : {"ph-suspension", "saddle-cycle"}) {
    const auto& s = sampled(name);
    const FlowLocationReport r = check_flow_location(coarsen(s.declared, false), s.set.tangent);
    EXPECT_EQ(r.flow_bundle, 1u) << name;
    EXPECT_EQ(r.contracting_bundle, std::optional<std::size_t>(0)) << name;
  }
}

TEST(FlowLocation, FlowInContractingBundleIsAViolation) {
  const SampledCocycle c = constant_cocycle(diag({1.0 / 3.0, 2.0}), Fiber::tangent, Vector::Unit(2, 0));
  const Splitting s = constant_splitting(c, {Subspace::coordinate(2, {0}), Subspace::coordinate(2, {1})});
  EXPECT_EQ(flow_direction_location(s, c), 0u);
  EXPECT_THROW(check_flow_location(s, c), TheoremViolationError);
}

TEST(FlowLocation, UnresolvedWhenFlowInNeitherBundle) {
  const SampledCocycle c = constant_cocycle(diag({0.5, 2.0}), Fiber::tangent, vec({1.0, 1.0}));
  const Splitting s = constant_splitting(c, {Subspace::coordinate(2, {0}), Subspace::coordinate(2, {1})});
  EXPECT_THROW(flow_direction_location(s, c), FlowNotResolvedError);
}

TEST(ContractionImpliesDomination, Examples) {
  const auto& ph = sampled("ph-suspension");
  const auto pr = verify_contraction_implies_domination(ph.declared, ph.set.tangent);
  ASSERT_EQ(pr.size(), 1u);
  EXPECT_EQ(pr[0].hypothesis, "lower-contracting");
  EXPECT_TRUE(pr[0].report.dominated());
  EXPECT_NEAR(pr[0].report.lambda, std::log(3.0), 0.01 * std::log(3.0));

  const auto& saddle = sampled("saddle-cycle");
  bool upper = false;
  for (const auto& r : verify_contraction_implies_domination(saddle.declared, saddle.set.tangent))
    if (r.hypothesis == "upper-expanding") {
      upper = true;
      EXPECT_TRUE(r.report.dominated());
    }
  EXPECT_TRUE(upper);

  const auto& mixed = sampled("mixed-saddles");
  EXPECT_TRUE(verify_contraction_implies_domination(mixed.declared, mixed.set.tangent).empty());
}

TEST(Equivalence, CatalogOutcomes) {
  const EquivalenceReport cat = verify_equivalence(catalog_system("cat-suspension"));
  EXPECT_TRUE(cat.lpf_dominated);
  EXPECT_TRUE(cat.flow_partially_dominated);
  EXPECT_TRUE(cat.agree);

  const EquivalenceReport mixed = verify_equivalence(catalog_system("mixed-saddles"));
  EXPECT_TRUE(mixed.lpf_dominated);
  EXPECT_TRUE(mixed.flow_partially_dominated);
  ASSERT_TRUE(mixed.coarsened_flow_with_lower && mixed.coarsened_flow_with_upper);
  EXPECT_FALSE(mixed.coarsened_flow_with_lower->dominated());
  EXPECT_FALSE(mixed.coarsened_flow_with_upper->dominated());
  EXPECT_TRUE(mixed.agree);

  const EquivalenceReport rot = verify_equivalence(catalog_system("rotation-suspension"));
  EXPECT_FALSE(rot.lpf_dominated);
  EXPECT_FALSE(rot.flow_partially_dominated);
  EXPECT_TRUE(rot.agree);
  ASSERT_FALSE(rot.errors.empty());
  EXPECT_EQ(rot.errors[0].stage, "extract");
}

TEST(Equivalence, ThresholdsCanForceDisagreement) {
  EquivalenceConfig cfg;
  cfg.domination.gap_min = 1e30;
  const EquivalenceReport r = verify_equivalence(catalog_system("cat-suspension"), cfg);
  EXPECT_FALSE(r.lpf_dominated);
  EXPECT_TRUE(r.flow_partially_dominated);
  EXPECT_FALSE(r.agree);
}

TEST(ConeRoute, CatalogOutcomes) {
  const std::vector<int> grid{1, 2, 3, 4, 5, 6, 7, 8};
  const ConeRoute cat = cone_route(sampled("cat-suspension").set.normal, 1.0, grid);
  ASSERT_TRUE(cat.certificate);
  EXPECT_EQ(cat.certificate->t0_steps, 1);
  ASSERT_TRUE(cat.extraction_angle);
  EXPECT_LE(*cat.extraction_angle, 1e-8);

  const auto& ph = sampled("ph-suspension");
  const ConeRoute p = cone_route(ph.set.normal, 1.0, grid);
  ASSERT_TRUE(p.certificate);
  ASSERT_TRUE(p.limit);
  const Splitting declared = project_to_normal(ph.declared, ph.set.normal);
  const std::size_t at = ph.set.normal.orbits[0].base_begin;
  for (std::size_t b = 0; b < 2; ++b)
    EXPECT_LE(subspace_distance(p.limit->bundle(0, at, b), declared.bundle(0, at, b)), 1e-6);

  const ConeRoute mixed = cone_route(sampled("mixed-saddles").set.normal, 1.0, grid);
  EXPECT_FALSE(mixed.certificate);
  ASSERT_TRUE(mixed.pointwise);
  EXPECT_NEAR(mixed.pointwise->coefficient.pointwise_inf, 1.25, 1e-9);
  EXPECT_NEAR(mixed.pointwise->coefficient.separate_product, 0.15625, 1e-9);

  const ConeRoute rot = cone_route(sampled("rotation-suspension").set.normal, 1.0, grid);
  EXPECT_FALSE(rot.certificate);
  EXPECT_FALSE(rot.limit);
}

TEST(MetricChange, TransformMapsBundles) {
  const auto& s = sampled("cat-suspension");
  Matrix r = Matrix::Identity(3, 3);
  r(1, 0) = 0.7;
  const Splitting moved = transform(s.declared, r);
  for (std::size_t b = 0; b < 3; ++b) {
    const Subspace& before = s.declared.bundle(0, 3, b);
    EXPECT_LE(subspace_distance(moved.bundle(0, 3, b), Subspace::span(Matrix(r * before.basis()))), 1e-12);
  }
}

TEST(Diagnostics, InterOrbitAngleReported) {
  const auto& mixed = sampled("mixed-saddles");
  const DominationReport r = test_partially_dominated(mixed.declared, mixed.set.tangent);
  EXPECT_NEAR(r.diagnostics.at("inter_orbit_angle_max"), 0.0, 1e-15);
  const auto& cat = sampled("cat-suspension");
  EXPECT_EQ(test_partially_dominated(cat.declared, cat.set.tangent).diagnostics.at("inter_orbit_angle_max"), 0.0);
}
