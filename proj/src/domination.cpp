#include "splitdom/domination.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace splitdom {

// ---------------------------------------------------------------------------
// Splitting plumbing

const std::vector<Subspace>& OrbitBundles::operator[](std::size_t index) const {
  if (!covers(index)) throw IndexError("splitting has no bundles at sample " + std::to_string(index));
  return at[index - first];
}

const Subspace& Splitting::bundle(std::size_t orbit, std::size_t index, std::size_t which) const {
  return orbits.at(orbit)[index].at(which);
}

std::vector<int> Splitting::dims() const {
  std::vector<int> out;
  if (orbits.empty() || orbits.front().at.empty()) return out;
  for (const auto& b : orbits.front().at.front()) out.push_back(b.dim());
  return out;
}

void Splitting::validate(int fiber_dim) const {
  const auto expected = dims();
  if (expected.size() != bundle_count()) throw DimensionError("wrong number of bundles for the splitting kind");
  if (std::accumulate(expected.begin(), expected.end(), 0) != fiber_dim)
    throw DimensionError("bundle dimensions do not sum to the fiber dimension");
  for (const auto& o : orbits)
    for (const auto& sample : o.at) {
      if (sample.size() != expected.size()) throw DimensionError("bundle count varies along an orbit");
      for (std::size_t b = 0; b < sample.size(); ++b)
        if (sample[b].dim() != expected[b]) throw DimensionError("bundle dimension varies along an orbit");
    }
}

const char* to_string(SplittingKind kind) {
  return kind == SplittingKind::two_bundle ? "two_bundle" : "three_bundle_with_flow";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::dominated:
      return "dominated";
    case Verdict::not_dominated:
      return "not_dominated";
    default:
      return "inconclusive";
  }
}

const char* to_string(ContractionVerdict v) {
  switch (v) {
    case ContractionVerdict::contracting:
      return "contracting";
    case ContractionVerdict::expanding:
      return "expanding";
    default:
      return "neutral";
  }
}

// ---------------------------------------------------------------------------
// Rates

RateFit fit_rate(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 8) throw InvalidSeriesError("rate fit needs at least 8 samples");
  const double n = static_cast<double>(series.size());
  double st = 0.0, sy = 0.0;
  std::vector<double> y;
  y.reserve(series.size());
  for (const auto& [t, q] : series) {
    if (!(q > 0.0) || !std::isfinite(q)) throw InvalidSeriesError("quotient series must be positive and finite");
    y.push_back(std::log(q));
    st += t;
    sy += y.back();
  }
  const double tm = st / n, ym = sy / n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double dt = series[k].first - tm, dy = y[k] - ym;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (!(stt > 0.0)) throw InvalidSeriesError("rate fit needs distinct times");
  const double slope = sty / stt;
  RateFit fit;
  fit.lambda = -slope;
  fit.K = std::exp(ym - slope * tm);
  // A flat series is fitted exactly by the constant model.
  double ss_res = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double r = y[k] - (ym + slope * (series[k].first - tm));
    ss_res += r * r;
  }
  fit.r_squared = syy > 1e-20 * n ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

double ContractionReport::multiplier(double span) const {
  if (verdict == ContractionVerdict::expanding) return std::exp(backward.lambda * span);
  return std::exp(-forward.lambda * span);
}

// ---------------------------------------------------------------------------
// Restricted cocycles

namespace {

double top_singular_value(const Matrix& m) {
  if (m.size() == 1) return std::abs(m(0, 0));
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

/// Growth of one bundle from base sample i: norm[n] = |D_n|E_i| and
/// back[n] = |D_{-n}|E_{i+n}| = 1 / m(D_n|E_i), for n = 0..steps. Products are
/// taken over the cocycle restricted to the bundle (B_{k+1}^T S_k B_k), so the
/// result never mixes in growth from outside the bundle.
struct Growth {
  std::vector<double> norm;
  std::vector<double> back;
};

Growth bundle_growth(const SampledCocycle& cocycle, const Splitting& split, std::size_t which, std::size_t orbit,
                     std::size_t i, int steps) {
  const auto& o = cocycle.orbits.at(orbit);
  Growth g;
  g.norm.assign(1, 1.0);
  g.back.assign(1, 1.0);
  const int k = split.bundle(orbit, i, which).dim();
  Matrix fwd = Matrix::Identity(k, k);
  Matrix bwd = Matrix::Identity(k, k);
  double log_fwd = 0.0, log_bwd = 0.0;
  for (int n = 0; n < steps; ++n) {
    const std::size_t s = i + static_cast<std::size_t>(n);
    const Matrix& b0 = split.bundle(orbit, s, which).basis();
    const Matrix& b1 = split.bundle(orbit, s + 1, which).basis();
    fwd = (b1.transpose() * o.steps[s] * b0) * fwd;
    bwd = bwd * (b0.transpose() * o.inverse_steps[s] * b1);
    // Rescale to keep long products inside the floating-point range.
    const double sf = fwd.norm(), sb = bwd.norm();
    if (!(sf > 0.0) || !(sb > 0.0)) throw IllConditionedError("bundle collapsed under the cocycle");
    fwd /= sf;
    bwd /= sb;
    log_fwd += std::log(sf);
    log_bwd += std::log(sb);
    g.norm.push_back(std::exp(log_fwd) * top_singular_value(fwd));
    g.back.push_back(std::exp(log_bwd) * top_singular_value(bwd));
  }
  return g;
}

void require_window(const SampledCocycle& cocycle, const Splitting& split) {
  if (split.fiber != cocycle.fiber) throw InvalidArgument("splitting and cocycle live in different fibers");
  if (split.orbits.size() != cocycle.orbits.size()) throw DimensionError("splitting and cocycle orbits differ");
  split.validate(cocycle.dim);
  for (std::size_t o = 0; o < cocycle.orbits.size(); ++o) {
    const auto& ob = split.orbits[o];
    if (!ob.covers(cocycle.orbits[o].base_begin) || !ob.covers(cocycle.analysis_end(o)))
      throw IndexError("splitting does not cover the analysis window");
  }
}

struct Series {
  std::vector<std::pair<double, double>> points;
  std::size_t base_points = 0;
};

/// Per-step sup over base points of value(o, i)[n], against the mean elapsed time.
template <typename F>
Series sup_series(const SampledCocycle& cocycle, F&& per_point) {
  const int h = cocycle.horizon_steps;
  std::vector<double> sup(static_cast<std::size_t>(h) + 1, 0.0);
  std::vector<double> time(static_cast<std::size_t>(h) + 1, 0.0);
  Series s;
  for (std::size_t o = 0; o < cocycle.orbits.size(); ++o) {
    const auto& orbit = cocycle.orbits[o];
    for (std::size_t i = orbit.base_begin; i < orbit.base_end; ++i) {
      const std::vector<double> v = per_point(o, i, h);
      for (std::size_t n = 0; n < sup.size(); ++n) {
        sup[n] = std::max(sup[n], v[n]);
        time[n] += orbit.times[i + n] - orbit.times[i];
      }
      ++s.base_points;
    }
  }
  if (s.base_points == 0) throw InvalidArgument("cocycle has no base points");
  for (std::size_t n = 0; n < sup.size(); ++n)
    s.points.emplace_back(time[n] / static_cast<double>(s.base_points), sup[n]);
  return s;
}

/// Largest angle between corresponding bundles at the first base point of
/// orbit 0 and of every other orbit, in tangent coordinates. Finitely many
/// orbits cannot show continuity; this is only reported.
double inter_orbit_angle(const SampledCocycle& cocycle, const Splitting& split) {
  auto tangent_bundle = [&](std::size_t o, std::size_t b) {
    const auto& orbit = cocycle.orbits[o];
    const Subspace& s = split.bundle(o, orbit.base_begin, b);
    if (cocycle.fiber == Fiber::tangent) return s;
    return Subspace::span(Matrix(orbit.frames.at(orbit.base_begin) * s.basis()));
  };
  double worst = 0.0;
  for (std::size_t o = 1; o < cocycle.orbits.size(); ++o)
    for (std::size_t b = 0; b < split.bundle_count(); ++b)
      worst = std::max(worst, subspace_distance(tangent_bundle(0, b), tangent_bundle(o, b)));
  return worst;
}

DominationReport judge(const SampledCocycle& cocycle, const Splitting& split, const Series& series,
                       double defect, const DominationConfig& config, std::string test) {
  DominationReport r;
  r.system = cocycle.system;
  r.test = std::move(test);
  r.fiber = cocycle.fiber;
  r.splitting_kind = split.kind;
  r.horizon = series.points.back().first;
  r.dt = cocycle.dt;
  r.quotients = series.points;

  const RateFit fit = fit_rate(r.quotients);
  r.K = fit.K;
  r.lambda = fit.lambda;
  r.r_squared = fit.r_squared;

  const double q0 = r.quotients.front().second;
  const double q_end = r.quotients.back().second;
  double tail_sup = 0.0;
  for (std::size_t n = r.quotients.size() / 2; n < r.quotients.size(); ++n)
    tail_sup = std::max(tail_sup, r.quotients[n].second);

  if (fit.lambda >= config.lambda_min && fit.r_squared >= config.r2_min && q_end < q0)
    r.verdict = Verdict::dominated;
  else if (tail_sup >= config.tail_fraction * q0 || fit.lambda < 0.0)
    r.verdict = Verdict::not_dominated;
  else
    r.verdict = Verdict::inconclusive;
  // Bundles that are not invariant make every quotient meaningless.
  if (defect > config.invariance_tolerance) r.verdict = Verdict::inconclusive;

  r.diagnostics["base_points"] = static_cast<double>(series.base_points);
  r.diagnostics["horizon_steps"] = static_cast<double>(cocycle.horizon_steps);
  r.diagnostics["inter_orbit_angle_max"] = inter_orbit_angle(cocycle, split);
  r.diagnostics["invariance_defect"] = defect;
  r.diagnostics["invariance_tolerance"] = config.invariance_tolerance;
  r.diagnostics["lambda_min"] = config.lambda_min;
  r.diagnostics["r2_min"] = config.r2_min;
  r.diagnostics["tail_fraction"] = config.tail_fraction;
  r.diagnostics["tail_sup_over_q0"] = tail_sup / q0;
  r.diagnostics["final_q_over_q0"] = q_end / q0;
  return r;
}

DominationReport quotient_report(const Splitting& split, std::size_t lower, std::size_t upper,
                                 const SampledCocycle& cocycle, const DominationConfig& config, std::string test) {
  const Series series = sup_series(cocycle, [&](std::size_t o, std::size_t i, int h) {
    const Growth e = bundle_growth(cocycle, split, lower, o, i, h);
    const Growth f = bundle_growth(cocycle, split, upper, o, i, h);
    std::vector<double> q(e.norm.size());
    for (std::size_t n = 0; n < q.size(); ++n) q[n] = e.norm[n] * f.back[n];
    return q;
  });
  const auto defects = invariance_defects(cocycle, split);
  const double defect = *std::max_element(defects.begin(), defects.end());
  return judge(cocycle, split, series, defect, config, std::move(test));
}

/// Sine of the angle between a unit vector and a subspace.
double sine_to(const Vector& v, const Subspace& s) { return (v - s.basis() * (s.basis().transpose() * v)).norm(); }

}  // namespace

double domination_quotient(const Matrix& d, const Subspace& E, const Subspace& F) {
  if (d.rows() != d.cols() || d.rows() != E.ambient_dim() || d.rows() != F.ambient_dim())
    throw DimensionError("quotient operands have mismatched dimensions");
  const double cond = condition_number(d);
  if (!(cond <= 1e12)) throw IllConditionedError("segment condition number " + std::to_string(cond));
  const Matrix inv = d.partialPivLu().inverse();
  return subspace_norm(d, E) * subspace_norm(inv, image(d, F));
}

double domination_quotient(const SampledCocycle& cocycle, const Splitting& split, std::size_t lower,
                           std::size_t upper, std::size_t orbit, std::size_t index, int steps) {
  if (steps < 0) throw InvalidArgument("steps must be nonnegative");
  const Growth e = bundle_growth(cocycle, split, lower, orbit, index, steps);
  const Growth f = bundle_growth(cocycle, split, upper, orbit, index, steps);
  return e.norm.back() * f.back.back();
}

std::vector<double> invariance_defects(const SampledCocycle& cocycle, const Splitting& split) {
  std::vector<double> out(split.bundle_count(), 0.0);
  for (std::size_t o = 0; o < cocycle.orbits.size(); ++o) {
    const auto& orbit = cocycle.orbits[o];
    for (std::size_t i = orbit.base_begin; i < cocycle.analysis_end(o); ++i) {
      for (std::size_t b = 0; b < out.size(); ++b) {
        const Subspace pushed = image(orbit.steps[i], split.bundle(o, i, b));
        out[b] = std::max(out[b], std::sin(subspace_distance(pushed, split.bundle(o, i + 1, b))));
      }
    }
  }
  return out;
}

DominationReport test_dominated(const Splitting& split, const SampledCocycle& cocycle,
                                const DominationConfig& config) {
  if (split.kind != SplittingKind::two_bundle) throw InvalidArgument("test_dominated needs a two-bundle splitting");
  require_window(cocycle, split);
  return quotient_report(split, 0, 1, cocycle, config, "dominated");
}

DominationReport test_partially_dominated(const Splitting& split, const SampledCocycle& cocycle,
                                          const DominationConfig& config) {
  if (split.kind != SplittingKind::three_bundle_with_flow)
    throw InvalidArgument("test_partially_dominated needs a three-bundle splitting");
  if (cocycle.fiber != Fiber::tangent) throw InvalidArgument("partial domination lives in the tangent fiber");
  require_window(cocycle, split);
  double worst = 0.0;
  for (std::size_t o = 0; o < cocycle.orbits.size(); ++o) {
    const auto& orbit = cocycle.orbits[o];
    for (std::size_t i = orbit.base_begin; i <= cocycle.analysis_end(o); ++i) {
      const Subspace& middle = split.bundle(o, i, 1);
      if (middle.dim() != 1) throw NotFlowCenteredError("middle bundle is not one-dimensional");
      worst = std::max(worst, sine_to(orbit.flow[i], middle));
    }
  }
  if (worst > config.flow_angle_tolerance)
    throw NotFlowCenteredError("middle bundle deviates from the flow direction by " + std::to_string(worst));
  DominationReport r = quotient_report(split, 0, 2, cocycle, config, "partially_dominated");
  r.diagnostics["flow_angle_max"] = worst;
  return r;
}

ContractionReport test_uniform_contraction(const Splitting& split, std::size_t which, const SampledCocycle& cocycle,
                                           const DominationConfig& config) {
  require_window(cocycle, split);
  if (which >= split.bundle_count()) throw IndexError("bundle index out of range");
  ContractionReport r;
  r.system = cocycle.system;
  std::vector<std::vector<double>> backs;
  const Series fwd = sup_series(cocycle, [&](std::size_t o, std::size_t i, int h) {
    Growth g = bundle_growth(cocycle, split, which, o, i, h);
    backs.push_back(std::move(g.back));
    return g.norm;
  });
  std::size_t k = 0;
  const Series bwd = sup_series(cocycle, [&](std::size_t, std::size_t, int) { return backs[k++]; });
  r.forward_series = fwd.points;
  r.backward_series = bwd.points;
  r.forward = fit_rate(r.forward_series);
  r.backward = fit_rate(r.backward_series);
  r.invariance_defect = invariance_defects(cocycle, split)[which];
  if (r.forward.lambda >= config.lambda_min && r.forward.r_squared >= config.r2_min)
    r.verdict = ContractionVerdict::contracting;
  else if (r.backward.lambda >= config.lambda_min && r.backward.r_squared >= config.r2_min)
    r.verdict = ContractionVerdict::expanding;
  else
    r.verdict = ContractionVerdict::neutral;
  return r;
}

HyperbolicityReport test_hyperbolic(const Splitting& split, const SampledCocycle& cocycle,
                                    const DominationConfig& config) {
  HyperbolicityReport r;
  if (split.kind == SplittingKind::three_bundle_with_flow) {
    r.domination = test_partially_dominated(split, cocycle, config);
    r.lower = test_uniform_contraction(split, 0, cocycle, config);
    r.upper = test_uniform_contraction(split, 2, cocycle, config);
    r.coarse = test_dominated(coarsen(split, false), cocycle, config);
    r.partially_hyperbolic = r.coarse->dominated() && r.lower.verdict == ContractionVerdict::contracting;
  } else {
    r.domination = test_dominated(split, cocycle, config);
    r.lower = test_uniform_contraction(split, 0, cocycle, config);
    r.upper = test_uniform_contraction(split, 1, cocycle, config);
    r.partially_hyperbolic = r.domination.dominated() && r.lower.verdict == ContractionVerdict::contracting;
  }
  r.hyperbolic = r.domination.dominated() && r.lower.verdict == ContractionVerdict::contracting &&
                 r.upper.verdict == ContractionVerdict::expanding;
  return r;
}

// ---------------------------------------------------------------------------
// Extraction

Splitting extract_poincare_splitting(const SampledCocycle& normal, const DominationConfig& config) {
  const int d = normal.dim;
  const auto n = static_cast<std::size_t>(config.n_window);
  if (config.n_window < 1) throw InvalidArgument("window must be at least one sample");
  if (d < 2) throw NoGapError("a one-dimensional fiber has no splitting");

  // Smallest gap ratio at each candidate dimension of N^+, over the base points.
  std::vector<double> gaps(static_cast<std::size_t>(d - 1), std::numeric_limits<double>::infinity());
  for (std::size_t o = 0; o < normal.orbits.size(); ++o) {
    const auto& orbit = normal.orbits[o];
    if (orbit.base_begin < n || orbit.base_end + n > orbit.size())
      throw IndexError("orbit margins are shorter than the extraction window");
    for (std::size_t i = orbit.base_begin; i < orbit.base_end; ++i) {
      const Vector s = Eigen::JacobiSVD<Matrix>(normal.forward(o, i, i + n)).singularValues();
      for (int k = 1; k < d; ++k)
        gaps[static_cast<std::size_t>(k - 1)] =
            std::min(gaps[static_cast<std::size_t>(k - 1)], s(k - 1) / s(k));
    }
  }
  int k_plus = 0;
  double best = 0.0;
  for (int k = 1; k < d; ++k) {
    const double g = gaps[static_cast<std::size_t>(k - 1)];
    if (!(g >= config.gap_min)) continue;
    if (config.dim_hint && d - k == *config.dim_hint) {
      k_plus = k;
      break;
    }
    if (g > best) {
      best = g;
      k_plus = k;
    }
  }
  if (k_plus == 0) {
    double largest = 0.0;
    for (double g : gaps) largest = std::max(largest, g);
    std::ostringstream msg;
    msg << "largest singular-value gap over the window is " << std::setprecision(6) << largest << ", below "
        << config.gap_min;
    throw NoGapError(msg.str());
  }

  Splitting split;
  split.kind = SplittingKind::two_bundle;
  split.fiber = normal.fiber;
  for (std::size_t o = 0; o < normal.orbits.size(); ++o) {
    const auto& orbit = normal.orbits[o];
    OrbitBundles ob;
    // Every sample where both windows fit.
    ob.first = n;
    for (std::size_t i = n; i + n < orbit.size(); ++i) {
      Eigen::JacobiSVD<Matrix> fwd(normal.forward(o, i, i + n), Eigen::ComputeFullV);
      Eigen::JacobiSVD<Matrix> bwd(normal.backward(o, i - n, i), Eigen::ComputeFullV);
      // Most contracted forward -> N^-, most contracted backward -> N^+.
      ob.at.push_back({Subspace::span(Matrix(fwd.matrixV().rightCols(d - k_plus))),
                       Subspace::span(Matrix(bwd.matrixV().rightCols(k_plus)))});
    }
    split.orbits.push_back(std::move(ob));
  }
  return split;
}

// ---------------------------------------------------------------------------
// Lifting, projection and coarsening

Splitting lift_to_tangent(const Splitting& normal_split, const SampledCocycle& normal) {
  if (normal_split.fiber != Fiber::normal) throw InvalidArgument("lift needs a normal-fiber splitting");
  Splitting out;
  out.kind = normal_split.kind;
  out.fiber = Fiber::tangent;
  for (std::size_t o = 0; o < normal_split.orbits.size(); ++o) {
    const auto& src = normal_split.orbits[o];
    OrbitBundles ob;
    ob.first = src.first;
    for (std::size_t k = 0; k < src.at.size(); ++k) {
      const Matrix& frame = normal.orbits.at(o).frames.at(src.first + k);
      std::vector<Subspace> bundles;
      for (const auto& b : src.at[k]) bundles.push_back(Subspace::span(Matrix(frame * b.basis())));
      ob.at.push_back(std::move(bundles));
    }
    out.orbits.push_back(std::move(ob));
  }
  return out;
}

Splitting project_to_normal(const Splitting& flow_split, const SampledCocycle& normal) {
  if (flow_split.kind != SplittingKind::three_bundle_with_flow || flow_split.fiber != Fiber::tangent)
    throw InvalidArgument("projection needs a tangent three-bundle splitting");
  Splitting out;
  out.kind = SplittingKind::two_bundle;
  out.fiber = Fiber::normal;
  for (std::size_t o = 0; o < flow_split.orbits.size(); ++o) {
    const auto& src = flow_split.orbits[o];
    OrbitBundles ob;
    ob.first = src.first;
    for (std::size_t k = 0; k < src.at.size(); ++k) {
      const Matrix& frame = normal.orbits.at(o).frames.at(src.first + k);
      ob.at.push_back({Subspace::span(Matrix(frame.transpose() * src.at[k][0].basis())),
                       Subspace::span(Matrix(frame.transpose() * src.at[k][2].basis()))});
    }
    out.orbits.push_back(std::move(ob));
  }
  return out;
}

Splitting coarsen(const Splitting& three_bundle, bool flow_with_lower) {
  if (three_bundle.kind != SplittingKind::three_bundle_with_flow)
    throw InvalidArgument("coarsening needs a three-bundle splitting");
  Splitting out;
  out.kind = SplittingKind::two_bundle;
  out.fiber = three_bundle.fiber;
  for (const auto& src : three_bundle.orbits) {
    OrbitBundles ob;
    ob.first = src.first;
    for (const auto& b : src.at) {
      if (flow_with_lower)
        ob.at.push_back({Subspace::sum(b[0], b[1]), b[2]});
      else
        ob.at.push_back({b[0], Subspace::sum(b[1], b[2])});
    }
    out.orbits.push_back(std::move(ob));
  }
  return out;
}

Splitting reversed_splitting(const Splitting& split, const SampledCocycle& original) {
  Splitting out;
  out.kind = split.kind;
  out.fiber = split.fiber;
  for (std::size_t o = 0; o < split.orbits.size(); ++o) {
    const auto& src = split.orbits[o];
    const std::size_t last = original.orbits.at(o).size() - 1;
    OrbitBundles ob;
    ob.first = last - (src.first + src.at.size() - 1);
    for (std::size_t k = src.at.size(); k-- > 0;) {
      std::vector<Subspace> b(src.at[k].rbegin(), src.at[k].rend());
      ob.at.push_back(std::move(b));
    }
    out.orbits.push_back(std::move(ob));
  }
  return out;
}

Splitting transform(const Splitting& split, const Matrix& r) {
  Splitting out = split;
  for (auto& o : out.orbits)
    for (auto& sample : o.at)
      for (auto& b : sample) b = Subspace::span(Matrix(r * b.basis()));
  return out;
}

std::optional<Splitting> analytic_splitting(const DynamicalSystem& sys, const SampledCocycle& tangent) {
  if (!sys.analytic_splitting) return std::nullopt;
  if (tangent.fiber != Fiber::tangent) throw InvalidArgument("analytic splittings live in the tangent fiber");
  Splitting out;
  out.kind = SplittingKind::three_bundle_with_flow;
  out.fiber = Fiber::tangent;
  for (std::size_t o = 0; o < tangent.orbits.size(); ++o) {
    const auto& orbit = tangent.orbits[o];
    OrbitBundles ob;
    ob.first = 0;
    for (std::size_t i = 0; i < orbit.size(); ++i) {
      const BundlePair pair = (*sys.analytic_splitting)(static_cast<int>(o), orbit.states[i]);
      ob.at.push_back({pair.lower, Subspace::span(orbit.flow[i]), pair.upper});
    }
    out.orbits.push_back(std::move(ob));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction

namespace {

/// Cocycle restricted to a bundle of `split` over the samples it covers, in the
/// orthonormal coordinates of the bundle bases.
SampledCocycle restricted_cocycle(const SampledCocycle& tangent, const std::vector<std::vector<Matrix>>& bases,
                                  const std::vector<std::size_t>& first) {
  SampledCocycle out;
  out.fiber = tangent.fiber;
  out.dim = static_cast<int>(bases.front().front().cols());
  out.system = tangent.system;
  out.dt = tangent.dt;
  out.horizon_steps = tangent.horizon_steps;
  for (std::size_t o = 0; o < bases.size(); ++o) {
    const auto& src = tangent.orbits[o];
    SampledOrbit orbit;
    for (std::size_t k = 0; k < bases[o].size(); ++k) {
      const std::size_t s = first[o] + k;
      orbit.times.push_back(src.times[s]);
      if (k + 1 < bases[o].size()) {
        orbit.steps.push_back(bases[o][k + 1].transpose() * src.steps[s] * bases[o][k]);
        orbit.inverse_steps.push_back(bases[o][k].transpose() * src.inverse_steps[s] * bases[o][k + 1]);
      }
    }
    orbit.base_begin = src.base_begin - first[o];
    orbit.base_end = src.base_end - first[o];
    out.orbits.push_back(std::move(orbit));
  }
  return out;
}

struct FlowComplement {
  std::vector<std::vector<Subspace>> bundles;  // per orbit, per covered sample
  double defect = 0.0;                         // invariance defect of the enclosing bundle
};

/// Invariant complement of <X> inside <X> + lifted bundle `which`, by cone
/// iteration of the lifted bundle in `preferred` time direction, falling back
/// to the other direction when the iterates collapse onto X or do not settle.
FlowComplement flow_complement(const Splitting& lifted, std::size_t which, const SampledCocycle& tangent,
                               TimeDirection preferred, const DominationConfig& config) {
  FlowComplement out;
  std::vector<std::vector<Matrix>> bases;
  std::vector<std::size_t> first;
  for (std::size_t o = 0; o < lifted.orbits.size(); ++o) {
    const auto& ob = lifted.orbits[o];
    std::vector<Matrix> b;
    for (std::size_t k = 0; k < ob.at.size(); ++k) {
      Matrix cols(tangent.dim, ob.at[k][which].dim() + 1);
      cols << ob.at[k][which].basis(), tangent.orbits[o].flow[ob.first + k];
      b.push_back(Subspace::span(cols).basis());
    }
    bases.push_back(std::move(b));
    first.push_back(ob.first);
  }
  // Invariance of the enclosing bundle over the analysis window.
  for (std::size_t o = 0; o < bases.size(); ++o) {
    for (std::size_t i = tangent.orbits[o].base_begin; i < tangent.analysis_end(o); ++i) {
      const Subspace pushed = image(tangent.orbits[o].steps[i], Subspace::span(bases[o][i - first[o]]));
      out.defect = std::max(out.defect, std::sin(subspace_distance(pushed, Subspace::span(bases[o][i + 1 - first[o]]))));
    }
  }

  const SampledCocycle restricted = restricted_cocycle(tangent, bases, first);
  const ConeField field = make_cone_field(
      restricted,
      [&](std::size_t o, std::size_t k) {
        return Subspace::span(Matrix(bases[o][k].transpose() * lifted.orbits[o].at[k][which].basis()));
      },
      1.0);

  for (std::size_t o = 0; o < bases.size(); ++o) {
    std::vector<Subspace> result;
    for (std::size_t k = 0; k < bases[o].size(); ++k) {
      const std::size_t s = first[o] + k;
      const bool in_window = s >= tangent.orbits[o].base_begin && s <= tangent.analysis_end(o);
      std::optional<Subspace> chosen;
      double last_angle = 0.0;
      for (TimeDirection dir : {preferred, preferred == TimeDirection::forward ? TimeDirection::backward
                                                                              : TimeDirection::forward}) {
        const ConeLimit lim = cone_limit_iterate(field, restricted, o, k, config.cone_iterations, dir);
        const Subspace sub = Subspace::span(Matrix(bases[o][k] * lim.subspace.basis()));
        const double to_flow = std::asin(std::min(1.0, sine_to(tangent.orbits[o].flow[s], sub)));
        last_angle = lim.last_angle;
        if (lim.last_angle <= config.cone_tolerance && to_flow > config.flow_collapse_angle) {
          chosen = sub;
          break;
        }
      }
      if (!chosen) {
        // Samples outside the analysis window only pad the splitting; keep the lift there.
        if (in_window)
          throw NotConvergedError("flow complement did not settle at sample " + std::to_string(s), last_angle);
        chosen = lifted.orbits[o].at[k][which];
      }
      result.push_back(*chosen);
    }
    out.bundles.push_back(std::move(result));
  }
  return out;
}

}  // namespace

Reconstruction reconstruct_flow_splitting(const Splitting& poincare, const AnalysisSet& set,
                                          const DominationConfig& config) {
  if (poincare.kind != SplittingKind::two_bundle || poincare.fiber != Fiber::normal)
    throw InvalidArgument("reconstruction needs a two-bundle splitting of the normal fiber");
  const Splitting lifted = lift_to_tangent(poincare, set.normal);
  // N^- + <X>: the complement of X is the bundle X does not dominate, found by
  // iterating backwards; <X> + N^+ is resolved forwards.
  const FlowComplement lower = flow_complement(lifted, 0, set.tangent, TimeDirection::backward, config);
  const FlowComplement upper = flow_complement(lifted, 1, set.tangent, TimeDirection::forward, config);

  Reconstruction rec;
  rec.a_defect = lower.defect;
  rec.b_defect = upper.defect;
  rec.splitting.kind = SplittingKind::three_bundle_with_flow;
  rec.splitting.fiber = Fiber::tangent;
  for (std::size_t o = 0; o < lifted.orbits.size(); ++o) {
    OrbitBundles ob;
    ob.first = lifted.orbits[o].first;
    for (std::size_t k = 0; k < lower.bundles[o].size(); ++k)
      ob.at.push_back({lower.bundles[o][k], Subspace::span(set.tangent.orbits[o].flow[ob.first + k]),
                       upper.bundles[o][k]});
    rec.splitting.orbits.push_back(std::move(ob));
  }
  rec.report = test_partially_dominated(rec.splitting, set.tangent, config);
  rec.report.diagnostics["a_invariance_defect"] = rec.a_defect;
  rec.report.diagnostics["b_invariance_defect"] = rec.b_defect;
  if (std::max(rec.a_defect, rec.b_defect) > config.invariance_tolerance) {
    rec.report.verdict = Verdict::inconclusive;
    throw ReconstructionFailedError("N^- + <X> or <X> + N^+ is not invariant", rec.report);
  }
  if (!rec.report.dominated())
    throw ReconstructionFailedError(std::string("reconstructed splitting is ") + to_string(rec.report.verdict),
                                    rec.report);
  return rec;
}

// ---------------------------------------------------------------------------
// Flow location

std::size_t flow_direction_location(const Splitting& split, const SampledCocycle& tangent,
                                    const DominationConfig& config) {
  if (split.kind != SplittingKind::two_bundle || tangent.fiber != Fiber::tangent)
    throw InvalidArgument("flow location needs a tangent two-bundle splitting");
  require_window(tangent, split);
  std::vector<double> worst(2, 0.0);
  for (std::size_t o = 0; o < tangent.orbits.size(); ++o) {
    const auto& orbit = tangent.orbits[o];
    for (std::size_t i = orbit.base_begin; i <= tangent.analysis_end(o); ++i)
      for (std::size_t b = 0; b < 2; ++b) worst[b] = std::max(worst[b], sine_to(orbit.flow[i], split.bundle(o, i, b)));
  }
  for (std::size_t b = 0; b < 2; ++b)
    if (worst[b] <= config.location_tolerance) return b;
  throw FlowNotResolvedError("flow direction lies in neither bundle (angles " + std::to_string(worst[0]) + ", " +
                             std::to_string(worst[1]) + ")");
}

FlowLocationReport check_flow_location(const Splitting& split, const SampledCocycle& tangent,
                                       const DominationConfig& config) {
  FlowLocationReport r;
  r.flow_bundle = flow_direction_location(split, tangent, config);
  for (std::size_t o = 0; o < tangent.orbits.size(); ++o) {
    const auto& orbit = tangent.orbits[o];
    for (std::size_t i = orbit.base_begin; i <= tangent.analysis_end(o); ++i)
      r.max_angle = std::max(r.max_angle, sine_to(orbit.flow[i], split.bundle(o, i, r.flow_bundle)));
  }
  for (std::size_t b = 0; b < 2; ++b) {
    if (test_uniform_contraction(split, b, tangent, config).verdict == ContractionVerdict::contracting) {
      r.contracting_bundle = b;
      break;
    }
  }
  if (r.contracting_bundle && *r.contracting_bundle == r.flow_bundle)
    throw TheoremViolationError("flow direction lies in the uniformly contracting bundle " +
                                std::to_string(r.flow_bundle));
  return r;
}

std::vector<ContractionDominationResult> verify_contraction_implies_domination(const Splitting& three_bundle,
                                                                               const SampledCocycle& tangent,
                                                                               const DominationConfig& config) {
  std::vector<ContractionDominationResult> out;
  if (test_uniform_contraction(three_bundle, 0, tangent, config).verdict == ContractionVerdict::contracting)
    out.push_back({"lower-contracting", test_dominated(coarsen(three_bundle, false), tangent, config)});
  if (test_uniform_contraction(three_bundle, 2, tangent, config).verdict == ContractionVerdict::expanding)
    out.push_back({"upper-expanding", test_dominated(coarsen(three_bundle, true), tangent, config)});
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end

AnalysisSet analysis_set(const DynamicalSystem& sys, const EquivalenceConfig& config) {
  AnalysisSet set = sample_system(sys, config.sampling);
  if (config.metric_factor) {
    set.tangent = conjugate(set.tangent, *config.metric_factor);
    set.normal = normal_view(set.tangent);
  }
  return set;
}

EquivalenceReport verify_equivalence(const DynamicalSystem& sys, const EquivalenceConfig& config) {
  EquivalenceReport rep;
  rep.system = sys.name;
  rep.kind = sys.kind() == SystemKind::flow ? "flow" : "suspension";

  AnalysisSet raw = sample_system(sys, config.sampling);
  AnalysisSet set = raw;
  if (config.metric_factor) {
    set.tangent = conjugate(raw.tangent, *config.metric_factor);
    set.normal = normal_view(set.tangent);
  }
  const DominationConfig& dc = config.domination;
  auto record = [&](const std::string& stage, const std::exception& e) { rep.errors.push_back({stage, e.what()}); };

  // Backward direction: LPF splitting -> flow splitting.
  std::optional<Splitting> lpf_split;
  try {
    lpf_split = extract_poincare_splitting(set.normal, dc);
  } catch (const Error& e) {
    record("extract", e);
  }
  if (lpf_split) {
    rep.lpf_dims = lpf_split->dims();
    try {
      const HyperbolicityReport h = test_hyperbolic(*lpf_split, set.normal, dc);
      rep.lpf = h.domination;
      rep.lpf_hyperbolic = h.hyperbolic;
      rep.lpf_partially_hyperbolic = h.partially_hyperbolic;
    } catch (const Error& e) {
      record("lpf_test", e);
    }
  } else {
    rep.lpf_hyperbolic = false;
    rep.lpf_partially_hyperbolic = false;
  }
  rep.lpf_dominated = rep.lpf && rep.lpf->dominated();

  std::optional<Splitting> flow_split;
  if (rep.lpf_dominated) {
    try {
      Reconstruction rec = reconstruct_flow_splitting(*lpf_split, set, dc);
      rep.reconstructed = rec.report;
      flow_split = std::move(rec.splitting);
    } catch (const ReconstructionFailedError& e) {
      rep.reconstructed = e.report();
      record("reconstruct", e);
    } catch (const Error& e) {
      record("reconstruct", e);
    }
  }

  // Forward direction: declared flow splitting -> LPF splitting.
  std::optional<Splitting> analytic;
  try {
    analytic = analytic_splitting(sys, raw.tangent);
    if (analytic && config.metric_factor) analytic = transform(*analytic, *config.metric_factor);
  } catch (const Error& e) {
    record("analytic", e);
  }
  if (analytic) {
    try {
      rep.analytic_partial = test_partially_dominated(*analytic, set.tangent, dc);
      rep.projected = test_dominated(project_to_normal(*analytic, set.normal), set.normal, dc);
    } catch (const Error& e) {
      record("analytic_test", e);
    }
    // A declared splitting that fails the test does not describe the flow; keep
    // the reconstruction for the flow-side flags in that case.
    if ((rep.analytic_partial && rep.analytic_partial->dominated()) || !flow_split) flow_split = analytic;
  }

  if (flow_split) {
    try {
      const HyperbolicityReport h = test_hyperbolic(*flow_split, set.tangent, dc);
      rep.flow_hyperbolic = h.hyperbolic;
      rep.flow_partially_hyperbolic = h.partially_hyperbolic;
      rep.coarsened_flow_with_upper = h.coarse;
      rep.coarsened_flow_with_lower = test_dominated(coarsen(*flow_split, true), set.tangent, dc);
    } catch (const Error& e) {
      record("flow_test", e);
    }
  } else {
    rep.flow_hyperbolic = false;
    rep.flow_partially_hyperbolic = false;
  }

  const bool reconstructed_pd = rep.reconstructed && rep.reconstructed->dominated();
  const bool analytic_pd = rep.analytic_partial && rep.analytic_partial->dominated();
  rep.flow_partially_dominated = reconstructed_pd || analytic_pd;
  rep.backward_holds = !rep.lpf_dominated || reconstructed_pd;
  rep.forward_holds = !analytic_pd || (rep.projected && rep.projected->dominated());
  rep.agree = rep.backward_holds && rep.forward_holds && rep.lpf_dominated == rep.flow_partially_dominated;
  return rep;
}

}  // namespace splitdom

namespace splitdom {

ConeRoute cone_route(const SampledCocycle& normal, double aperture, const std::vector<int>& t_grid,
                     const DominationConfig& config) {
  ConeRoute route;
  route.aperture = aperture;
  route.core_dim = seeded_core_dim(normal);
  const ConeField plus = seeded_cone_field(normal, route.core_dim, aperture);
  route.certificate = newhouse_search(plus, normal, t_grid);
  if (!route.certificate) {
    std::vector<int> grid = t_grid;
    std::sort(grid.begin(), grid.end());
    for (int t : grid) {
      DominationCoefficient c = domination_coefficient(plus, normal, t);
      if (c.dominating() && c.min_margin >= 1e-6) {
        const auto& o = normal.orbits.front();
        route.pointwise = NewhouseCertificate{t, o.times[o.base_begin + static_cast<std::size_t>(t)] -
                                                     o.times[o.base_begin], std::move(c)};
        break;
      }
    }
    if (!route.pointwise) return route;
  }

  // Cones around the complement shrink onto N^- under backward iteration.
  ConeField minus;
  for (const auto& orbit : plus.cones) {
    std::vector<Cone> cones;
    for (const auto& c : orbit) cones.push_back(Cone::around(c.complement(), aperture));
    minus.cones.push_back(std::move(cones));
  }

  Splitting limit;
  limit.kind = SplittingKind::two_bundle;
  limit.fiber = normal.fiber;
  for (std::size_t o = 0; o < normal.orbits.size(); ++o) {
    const auto& orbit = normal.orbits[o];
    OrbitBundles ob;
    ob.first = orbit.base_begin;
    for (std::size_t i = orbit.base_begin; i < orbit.base_end; ++i) {
      const ConeLimit lo = cone_limit_iterate(minus, normal, o, i, config.cone_iterations, TimeDirection::backward);
      const ConeLimit hi = cone_limit_iterate(plus, normal, o, i, config.cone_iterations, TimeDirection::forward);
      route.limit_last_angle = std::max({route.limit_last_angle, lo.last_angle, hi.last_angle});
      ob.at.push_back({lo.subspace, hi.subspace});
    }
    limit.orbits.push_back(std::move(ob));
  }
  route.limit = std::move(limit);

  try {
    const Splitting extracted = extract_poincare_splitting(normal, config);
    double worst = 0.0;
    for (std::size_t o = 0; o < normal.orbits.size(); ++o) {
      const auto& orbit = normal.orbits[o];
      for (std::size_t i = orbit.base_begin; i < orbit.base_end; ++i)
        for (std::size_t b = 0; b < 2; ++b) {
          const Subspace& x = extracted.bundle(o, i, b);
          const Subspace& y = route.limit->bundle(o, i, b);
          worst = std::max(worst, x.dim() == y.dim() ? subspace_distance(x, y) : std::numbers::pi / 2);
        }
    }
    route.extraction_angle = worst;
  } catch (const Error& e) {
    route.extraction_error = e.what();
  }
  return route;
}

}  // namespace splitdom
