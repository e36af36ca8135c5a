#include "splitdom/sampled_cocycle.hpp"

#include <algorithm>
#include <cmath>

#include "splitdom/errors.hpp"
#include "splitdom/poincare.hpp"

namespace splitdom {

namespace {

Matrix checked_inverse(const Matrix& m) {
  const double cond = condition_number(m);
  if (!(cond <= 1e12)) throw IllConditionedError("step map condition number " + std::to_string(cond));
  return m.partialPivLu().inverse();
}

void finish_orbit(SampledOrbit& orbit) {
  orbit.inverse_steps.clear();
  orbit.inverse_steps.reserve(orbit.steps.size());
  for (const auto& s : orbit.steps) orbit.inverse_steps.push_back(checked_inverse(s));
}

SampledCocycle sample_suspension(const DynamicalSystem& sys, const SamplingConfig& config) {
  const SuspensionCocycle& cocycle = sys.suspension();
  cocycle.validate();
  const int n = cocycle.tangent_dim();
  const int d = cocycle.fiber_dim;

  SampledCocycle out;
  out.fiber = Fiber::tangent;
  out.dim = n;
  out.system = sys.name;

  double mean_roof = 0.0;
  std::size_t roof_count = 0;
  for (const auto& o : cocycle.orbits)
    for (double r : o.roof) {
      mean_roof += r;
      ++roof_count;
    }
  mean_roof /= static_cast<double>(roof_count);
  out.horizon_steps = std::max(1, static_cast<int>(std::lround(config.horizon / mean_roof)));

  Vector flow = Vector::Unit(n, n - 1);
  Matrix frame = Matrix::Identity(n, d);
  for (std::size_t o = 0; o < cocycle.orbits.size(); ++o) {
    const auto& src = cocycle.orbits[o];
    const int p = src.period();
    const std::size_t total =
        static_cast<std::size_t>(2 * config.margin + p + out.horizon_steps);
    SampledOrbit orbit;
    orbit.base_begin = static_cast<std::size_t>(config.margin);
    orbit.base_end = orbit.base_begin + static_cast<std::size_t>(p);
    orbit.times.push_back(0.0);
    for (std::size_t k = 0; k < total; ++k) {
      // Symbol phase 0 sits at the first base sample.
      const int phase = static_cast<int>((static_cast<long>(k) - config.margin) % p + p) % p;
      orbit.steps.push_back(cocycle_matrix(cocycle, static_cast<int>(o), phase, 1).matrix);
      orbit.times.push_back(orbit.times.back() + src.roof[static_cast<std::size_t>(phase)]);
    }
    orbit.flow.assign(total + 1, flow);
    orbit.frames.assign(total + 1, frame);
    orbit.states.assign(total + 1, Vector());
    finish_orbit(orbit);
    out.orbits.push_back(std::move(orbit));
  }
  return out;
}

SampledCocycle sample_flow(const DynamicalSystem& sys, const SamplingConfig& config) {
  const FlowSystem& flow = sys.flow();
  if (!(config.dt > 0.0) || !(config.sample_interval >= config.dt))
    throw InvalidArgument("sampling interval must be at least dt > 0");
  const auto stride = static_cast<std::size_t>(std::max(1L, std::lround(config.sample_interval / config.dt)));
  const double interval = static_cast<double>(stride) * config.dt;
  const double base_span = config.base_span.value_or(sys.base_span > 0.0 ? sys.base_span : 10.0);
  const auto base_count = static_cast<std::size_t>(std::max(1L, std::lround(std::ceil(base_span / interval - 1e-9))));

  SampledCocycle out;
  out.fiber = Fiber::tangent;
  out.dim = flow.dim;
  out.system = sys.name;
  out.dt = config.dt;
  out.horizon_steps = std::max(1, static_cast<int>(std::lround(config.horizon / interval)));

  const std::vector<Vector>& seeds = config.seeds.empty() ? flow.seeds : config.seeds;
  if (seeds.empty()) throw InvalidArgument("flow system '" + sys.name + "' has no seed points");

  const std::size_t samples = 2 * static_cast<std::size_t>(config.margin) + base_count +
                              static_cast<std::size_t>(out.horizon_steps);
  const double t_total = static_cast<double>(samples * stride) * config.dt;
  for (const auto& seed : seeds) {
    const OrbitSegment seg = integrate_orbit(flow, seed, t_total, config.dt);
    const TangentCocycle tangent = integrate_tangent(flow, seg);
    const auto frames = build_normal_frames(seg, config.initial_frame_rotation);

    SampledOrbit orbit;
    orbit.base_begin = static_cast<std::size_t>(config.margin);
    orbit.base_end = orbit.base_begin + base_count;
    for (std::size_t k = 0; k <= samples; ++k) {
      const std::size_t g = k * stride;
      orbit.times.push_back(seg.times[g]);
      orbit.flow.push_back(seg.field_values[g].normalized());
      orbit.frames.push_back(frames[g].frame);
      orbit.states.push_back(seg.points[g]);
      if (k < samples) {
        Matrix step = Matrix::Identity(flow.dim, flow.dim);
        for (std::size_t s = 0; s < stride; ++s) step = tangent.step_maps[g + s] * step;
        orbit.steps.push_back(std::move(step));
      }
    }
    finish_orbit(orbit);
    out.orbits.push_back(std::move(orbit));
  }
  return out;
}

}  // namespace

const char* to_string(Fiber fiber) { return fiber == Fiber::tangent ? "tangent" : "normal"; }

Matrix SampledCocycle::forward(std::size_t orbit, std::size_t i, std::size_t j) const {
  const auto& o = orbits.at(orbit);
  if (i > j || j >= o.size()) throw IndexError("forward segment out of range");
  Matrix m = Matrix::Identity(dim, dim);
  for (std::size_t k = i; k < j; ++k) m = o.steps[k] * m;
  return m;
}

Matrix SampledCocycle::backward(std::size_t orbit, std::size_t i, std::size_t j) const {
  const auto& o = orbits.at(orbit);
  if (i > j || j >= o.size()) throw IndexError("backward segment out of range");
  Matrix m = Matrix::Identity(dim, dim);
  for (std::size_t k = i; k < j; ++k) m = m * o.inverse_steps[k];
  return m;
}

std::size_t SampledCocycle::analysis_end(std::size_t orbit) const {
  const auto& o = orbits.at(orbit);
  return std::min(o.size() - 1, o.base_end - 1 + static_cast<std::size_t>(horizon_steps));
}

int SampledCocycle::tangent_dim() const {
  if (orbits.empty() || orbits.front().flow.empty()) return dim;
  return static_cast<int>(orbits.front().flow.front().size());
}

std::size_t SampledCocycle::base_point_count() const {
  std::size_t n = 0;
  for (const auto& o : orbits) n += o.base_end - o.base_begin;
  return n;
}

AnalysisSet sample_system(const DynamicalSystem& sys, const SamplingConfig& config) {
  if (!(config.horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  if (config.margin < 1) throw InvalidArgument("margin must be at least one sample");
  AnalysisSet set;
  set.tangent = sys.kind() == SystemKind::flow ? sample_flow(sys, config) : sample_suspension(sys, config);
  // Flow frames were transported on the integration grid with the rotation applied.
  set.normal = normal_view(set.tangent, sys.kind() == SystemKind::suspension ? config.initial_frame_rotation
                                                                             : std::nullopt);
  return set;
}

SampledCocycle normal_view(const SampledCocycle& tangent, const std::optional<Matrix>& initial_frame_rotation) {
  if (tangent.fiber != Fiber::tangent) throw InvalidArgument("normal view requires a tangent cocycle");
  SampledCocycle out;
  out.fiber = Fiber::normal;
  out.dim = tangent.dim - 1;
  out.system = tangent.system;
  out.dt = tangent.dt;
  out.horizon_steps = tangent.horizon_steps;
  for (const auto& src : tangent.orbits) {
    SampledOrbit orbit;
    orbit.times = src.times;
    orbit.flow = src.flow;
    orbit.states = src.states;
    orbit.base_begin = src.base_begin;
    orbit.base_end = src.base_end;
    orbit.frames = initial_frame_rotation ? transport_frames(src.flow, initial_frame_rotation) : src.frames;
    orbit.steps.reserve(src.steps.size());
    for (std::size_t k = 0; k < src.steps.size(); ++k)
      orbit.steps.push_back(orbit.frames[k + 1].transpose() * src.steps[k] * orbit.frames[k]);
    finish_orbit(orbit);
    out.orbits.push_back(std::move(orbit));
  }
  return out;
}

SampledCocycle conjugate(const SampledCocycle& tangent, const Matrix& r) {
  if (tangent.fiber != Fiber::tangent) throw InvalidArgument("conjugation acts on tangent cocycles");
  if (r.rows() != tangent.dim || r.cols() != tangent.dim) throw DimensionError("metric factor shape");
  const Matrix r_inv = checked_inverse(r);
  SampledCocycle out = tangent;
  for (auto& orbit : out.orbits) {
    for (auto& s : orbit.steps) s = r * s * r_inv;
    for (auto& s : orbit.inverse_steps) s = r * s * r_inv;
    for (auto& f : orbit.flow) f = (r * f).normalized();
    orbit.frames = transport_frames(orbit.flow);
  }
  return out;
}

SampledCocycle reversed(const SampledCocycle& cocycle) {
  SampledCocycle out;
  out.fiber = cocycle.fiber;
  out.dim = cocycle.dim;
  out.system = cocycle.system;
  out.dt = cocycle.dt;
  out.horizon_steps = cocycle.horizon_steps;
  for (std::size_t o = 0; o < cocycle.orbits.size(); ++o) {
    const auto& src = cocycle.orbits[o];
    const std::size_t last = src.size() - 1;
    SampledOrbit orbit;
    for (std::size_t k = 0; k <= last; ++k) {
      const std::size_t s = last - k;
      orbit.times.push_back(-src.times[s]);
      orbit.flow.push_back(-src.flow[s]);
      orbit.frames.push_back(src.frames[s]);
      orbit.states.push_back(src.states[s]);
      if (k < last) {
        orbit.steps.push_back(src.inverse_steps[s - 1]);
        orbit.inverse_steps.push_back(src.steps[s - 1]);
      }
    }
    // Keep the same window of samples under analysis.
    const std::size_t window_end = cocycle.analysis_end(o);
    const std::size_t base_len = src.base_end - src.base_begin;
    orbit.base_begin = last - window_end;
    orbit.base_end = orbit.base_begin + base_len;
    out.orbits.push_back(std::move(orbit));
  }
  return out;
}

}  // namespace splitdom
