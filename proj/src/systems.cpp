#include "splitdom/systems.hpp"

#include <cmath>
#include <numbers>

#include "splitdom/errors.hpp"

namespace splitdom {

namespace {

int wrap(int index, int period) {
  const int r = index % period;
  return r < 0 ? r + period : r;
}

Matrix embed_fiber(const Matrix& fiber) {
  const auto d = fiber.rows();
  Matrix m = Matrix::Zero(d + 1, d + 1);
  m.topLeftCorner(d, d) = fiber;
  m(d, d) = 1.0;
  return m;
}

Matrix embed_fiber_vectors(const Matrix& vectors) {
  Matrix m = Matrix::Zero(vectors.rows() + 1, vectors.cols());
  m.topRows(vectors.rows()) = vectors;
  return m;
}

Matrix rotation(double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

void check_state(const FlowSystem& sys, const Vector& x, const Vector& fx, double t) {
  if (!x.allFinite() || !fx.allFinite())
    throw DivergenceError("non-finite state at t = " + std::to_string(t));
  if (fx.norm() < sys.singularity_floor)
    throw SingularityEncounteredError("|X(x)| fell below the singularity floor at t = " + std::to_string(t) +
                                          "; the analyzed set must avoid zeros of the field",
                                      t);
}

}  // namespace

void SuspensionCocycle::validate() const {
  if (fiber_dim <= 0) throw InvalidArgument("suspension fiber dimension must be positive");
  if (orbits.empty()) throw InvalidArgument("suspension has no orbits");
  for (std::size_t o = 0; o < orbits.size(); ++o) {
    const auto& orbit = orbits[o];
    if (orbit.matrices.empty()) throw InvalidArgument("orbit " + std::to_string(o) + " has period 0");
    if (orbit.roof.size() != orbit.matrices.size())
      throw InvalidArgument("orbit " + std::to_string(o) + ": roof list length differs from period");
    for (std::size_t k = 0; k < orbit.matrices.size(); ++k) {
      const Matrix& m = orbit.matrices[k];
      if (m.rows() != fiber_dim || m.cols() != fiber_dim)
        throw DimensionError("orbit " + std::to_string(o) + " step " + std::to_string(k) +
                             ": fiber matrix has wrong shape");
      if (!(orbit.roof[k] > 0.0)) throw InvalidArgument("roof times must be positive");
      Eigen::JacobiSVD<Matrix> svd(m);
      const Vector& s = svd.singularValues();
      if (!(s(0) > 0.0) || !(s(s.size() - 1) > 1e-12 * s(0)) || !m.allFinite())
        throw InvertibilityError("orbit " + std::to_string(o) + " step " + std::to_string(k) +
                                 ": fiber matrix is not invertible");
    }
  }
}

int DynamicalSystem::tangent_dim() const {
  return kind() == SystemKind::flow ? flow().dim : suspension().tangent_dim();
}

OrbitSegment integrate_orbit(const FlowSystem& sys, const Vector& x0, double t_max, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (t_max == 0.0 || !std::isfinite(t_max)) throw InvalidArgument("t_max must be finite and nonzero");
  if (x0.size() != sys.dim) throw DimensionError("initial point has the wrong dimension");
  if (!x0.allFinite()) throw DivergenceError("initial point is not finite");

  const double sign = t_max > 0.0 ? 1.0 : -1.0;
  const double span = std::abs(t_max);
  const double ratio = span / dt;
  auto full_steps = static_cast<std::size_t>(std::floor(ratio));
  bool partial = true;
  if (std::abs(ratio - std::round(ratio)) < 1e-9) {
    full_steps = static_cast<std::size_t>(std::round(ratio));
    partial = false;
  }

  OrbitSegment seg;
  seg.system_name = sys.name;
  seg.dt = dt;
  const std::size_t n_steps = full_steps + (partial ? 1 : 0);
  seg.times.reserve(n_steps + 1);
  seg.points.reserve(n_steps + 1);
  seg.field_values.reserve(n_steps + 1);

  Vector x = x0;
  Vector fx = sys.field(x);
  check_state(sys, x, fx, 0.0);
  seg.times.push_back(0.0);
  seg.points.push_back(x);
  seg.field_values.push_back(fx);

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t_next = (k + 1 == n_steps) ? t_max : sign * static_cast<double>(k + 1) * dt;
    const double h = t_next - seg.times.back();
    const Vector k1 = fx;
    const Vector k2 = sys.field(x + 0.5 * h * k1);
    const Vector k3 = sys.field(x + 0.5 * h * k2);
    const Vector k4 = sys.field(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    fx = sys.field(x);
    check_state(sys, x, fx, t_next);
    seg.times.push_back(t_next);
    seg.points.push_back(x);
    seg.field_values.push_back(fx);
  }
  return seg;
}

TangentCocycle integrate_tangent(const FlowSystem& sys, const OrbitSegment& orbit) {
  if (orbit.size() == 0) throw InvalidArgument("empty orbit");
  const int n = sys.dim;
  const Matrix id = Matrix::Identity(n, n);
  TangentCocycle tc;
  tc.fundamental.reserve(orbit.size());
  tc.step_maps.reserve(orbit.size() - 1);
  tc.fundamental.push_back(id);
  for (std::size_t k = 0; k + 1 < orbit.size(); ++k) {
    const double h = orbit.times[k + 1] - orbit.times[k];
    const Vector& x = orbit.points[k];
    // Same stage points as the base RK4 step, so the propagator is exactly
    // the linearization of the discrete step.
    const Vector& k1 = orbit.field_values[k];
    const Vector y2 = x + 0.5 * h * k1;
    const Vector k2 = sys.field(y2);
    const Vector y3 = x + 0.5 * h * k2;
    const Vector k3 = sys.field(y3);
    const Vector y4 = x + h * k3;

    const Matrix j1 = sys.jacobian(x);
    const Matrix j2 = sys.jacobian(y2);
    const Matrix j3 = sys.jacobian(y3);
    const Matrix j4 = sys.jacobian(y4);
    const Matrix s1 = j1;
    const Matrix s2 = j2 * (id + 0.5 * h * s1);
    const Matrix s3 = j3 * (id + 0.5 * h * s2);
    const Matrix s4 = j4 * (id + h * s3);
    Matrix step = id + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
    if (!step.allFinite()) throw DivergenceError("non-finite tangent propagator at t = " + std::to_string(orbit.times[k]));
    tc.fundamental.push_back(step * tc.fundamental.back());
    tc.step_maps.push_back(std::move(step));
  }
  return tc;
}

LinearMap cocycle_matrix(const SuspensionCocycle& cocycle, int orbit_id, int start_step, int n_steps) {
  if (orbit_id < 0 || orbit_id >= static_cast<int>(cocycle.orbits.size()))
    throw IndexError("orbit id " + std::to_string(orbit_id) + " out of range");
  const auto& orbit = cocycle.orbits[static_cast<std::size_t>(orbit_id)];
  const int p = orbit.period();
  const int d = cocycle.fiber_dim;
  Matrix fiber = Matrix::Identity(d, d);
  if (n_steps >= 0) {
    for (int k = 0; k < n_steps; ++k)
      fiber = orbit.matrices[static_cast<std::size_t>(wrap(start_step + k, p))] * fiber;
  } else {
    for (int k = 1; k <= -n_steps; ++k) {
      const Matrix& m = orbit.matrices[static_cast<std::size_t>(wrap(start_step - k, p))];
      fiber = m.partialPivLu().solve(fiber);
    }
  }
  LinearMap out;
  out.matrix = embed_fiber(fiber);
  out.det_nonzero = true;
  return out;
}

TangentCocycle integrate_tangent(const SuspensionCocycle& cocycle, int orbit_id, int n_steps) {
  if (n_steps < 0) throw InvalidArgument("n_steps must be nonnegative");
  if (orbit_id < 0 || orbit_id >= static_cast<int>(cocycle.orbits.size()))
    throw IndexError("orbit id " + std::to_string(orbit_id) + " out of range");
  const auto& orbit = cocycle.orbits[static_cast<std::size_t>(orbit_id)];
  const int n = cocycle.tangent_dim();
  TangentCocycle tc;
  tc.fundamental.push_back(Matrix::Identity(n, n));
  for (int k = 0; k < n_steps; ++k) {
    Matrix step = embed_fiber(orbit.matrices[static_cast<std::size_t>(wrap(k, orbit.period()))]);
    tc.fundamental.push_back(step * tc.fundamental.back());
    tc.step_maps.push_back(std::move(step));
  }
  return tc;
}

FlowSystem make_saddle_cycle(double a, double b) {
  FlowSystem sys;
  sys.name = "saddle-cycle";
  sys.dim = 3;
  sys.field = [a, b](const Vector& p) {
    const double r = std::hypot(p(0), p(1));
    const double g = a * (1.0 - r) / r;
    Vector out(3);
    out << g * p(0) - p(1), g * p(1) + p(0), b * p(2);
    return out;
  };
  sys.jacobian = [a, b](const Vector& p) {
    const double x = p(0);
    const double y = p(1);
    const double r = std::hypot(x, y);
    const double r3 = r * r * r;
    const double g = a * (1.0 - r) / r;
    Matrix j = Matrix::Zero(3, 3);
    j(0, 0) = g - a * x * x / r3;
    j(0, 1) = -a * x * y / r3 - 1.0;
    j(1, 0) = -a * x * y / r3 + 1.0;
    j(1, 1) = g - a * y * y / r3;
    j(2, 2) = b;
    return j;
  };
  Vector seed(3);
  seed << 1.0, 0.0, 0.0;
  sys.seeds.push_back(seed);
  return sys;
}

AnalyticSplitting saddle_cycle_splitting() {
  return [](int, const Vector& x) {
    Vector radial = Vector::Zero(3);
    const double r = std::hypot(x(0), x(1));
    radial(0) = x(0) / r;
    radial(1) = x(1) / r;
    return BundlePair{Subspace::span(radial), Subspace::coordinate(3, {2})};
  };
}

FlowSystem make_affine_flow(const std::string& name, const Matrix& a, const Vector& offset) {
  if (a.rows() != a.cols() || a.rows() != offset.size()) throw DimensionError("affine field shape mismatch");
  FlowSystem sys;
  sys.name = name;
  sys.dim = static_cast<int>(a.rows());
  sys.field = [a, offset](const Vector& x) -> Vector { return a * x + offset; };
  sys.jacobian = [a](const Vector&) -> Matrix { return a; };
  return sys;
}

DynamicalSystem make_suspension_system(SuspensionCocycle cocycle, std::string summary,
                                       std::vector<std::string> facts,
                                       std::optional<std::pair<Matrix, Matrix>> splitting) {
  cocycle.validate();
  DynamicalSystem sys;
  sys.name = cocycle.name;
  sys.summary = std::move(summary);
  sys.facts = std::move(facts);
  if (splitting) {
    if (splitting->first.rows() != cocycle.fiber_dim || splitting->second.rows() != cocycle.fiber_dim ||
        splitting->first.cols() + splitting->second.cols() != cocycle.fiber_dim)
      throw DimensionError("declared splitting does not fit the fiber");
    const Subspace lower = Subspace::span(embed_fiber_vectors(splitting->first));
    const Subspace upper = Subspace::span(embed_fiber_vectors(splitting->second));
    sys.analytic_splitting = [lower, upper](int, const Vector&) { return BundlePair{lower, upper}; };
    sys.constant_fiber_splitting = std::move(splitting);
  }
  sys.dynamics = std::move(cocycle);
  return sys;
}

std::vector<DynamicalSystem> catalog() {
  std::vector<DynamicalSystem> out;
  const double sqrt5 = std::sqrt(5.0);

  {
    SuspensionCocycle cat;
    cat.name = "cat-suspension";
    cat.fiber_dim = 2;
    Matrix m(2, 2);
    m << 2, 1, 1, 1;
    cat.orbits.push_back({{m}, {1.0}});
    Matrix stable(2, 1), unstable(2, 1);
    stable << 1.0, -(1.0 + sqrt5) / 2.0;
    unstable << 1.0, (sqrt5 - 1.0) / 2.0;
    out.push_back(make_suspension_system(
        std::move(cat), "suspended fixed point of the cat map [[2,1],[1,1]]; hyperbolic",
        {"fiber eigenvalues (3+sqrt5)/2 = 2.618034 and (3-sqrt5)/2 = 0.381966",
         "hyperbolic: stable (+) <X> (+) unstable", "LPF domination rate 2 log((3+sqrt5)/2) = 1.924847"},
        std::make_pair(stable, unstable)));
  }

  {
    DynamicalSystem saddle;
    saddle.name = "saddle-cycle";
    FlowSystem f = make_saddle_cycle(0.5, 0.3);
    saddle.dynamics = std::move(f);
    saddle.summary = "hyperbolic periodic orbit r = 1, z = 0 of r' = a(1-r), theta' = 1, z' = b z";
    saddle.facts = {"a = 0.5, b = 0.3, period 2 pi",
                    "Floquet multipliers exp(-2 pi a) = 0.043214, exp(2 pi b) = 6.586065, 1 (flow)"};
    saddle.base_span = 2.0 * std::numbers::pi;
    saddle.parameters = {{"a", 0.5}, {"b", 0.3}};
    saddle.analytic_splitting = saddle_cycle_splitting();
    out.push_back(std::move(saddle));
  }

  {
    SuspensionCocycle ph;
    ph.name = "ph-suspension";
    ph.fiber_dim = 3;
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 1.0 / 3.0;
    m.bottomRightCorner(2, 2) = rotation(1.0);
    ph.orbits.push_back({{m}, {1.0}});
    Matrix lower = Matrix::Zero(3, 1);
    lower(0, 0) = 1.0;
    Matrix upper = Matrix::Zero(3, 2);
    upper(1, 0) = 1.0;
    upper(2, 1) = 1.0;
    out.push_back(make_suspension_system(
        std::move(ph), "fiber diag(1/3) (+) rotation(1 rad); partially hyperbolic, not hyperbolic",
        {"E contracted at rate 1/3 per unit time", "F isometric (rotation by 1 rad)",
         "partially hyperbolic, not hyperbolic"},
        std::make_pair(lower, upper)));
  }

  {
    SuspensionCocycle mixed;
    mixed.name = "mixed-saddles";
    mixed.fiber_dim = 2;
    Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
    a.diagonal() << 0.25, 0.5;
    b.diagonal() << 2.0, 4.0;
    mixed.orbits.push_back({{a}, {1.0}});
    mixed.orbits.push_back({{b}, {1.0}});
    out.push_back(make_suspension_system(
        std::move(mixed), "two saddles diag(1/4,1/2) and diag(2,4) suspended together",
        {"LPF-dominated, flow not dominated", "uniform LPF ratio 1/2 per step",
         "flow direction dominated by neither bundle"},
        std::make_pair(Matrix(Matrix::Identity(2, 2).col(0)), Matrix(Matrix::Identity(2, 2).col(1)))));
  }

  {
    SuspensionCocycle rot;
    rot.name = "rotation-suspension";
    rot.fiber_dim = 2;
    rot.orbits.push_back({{rotation(1.0)}, {1.0}});
    out.push_back(make_suspension_system(std::move(rot), "isometric fiber rotation by 1 rad",
                                         {"no dominated splitting anywhere", "all singular values 1"},
                                         std::nullopt));
  }
  return out;
}

DynamicalSystem catalog_system(const std::string& name) {
  for (auto& sys : catalog())
    if (sys.name == name) return sys;
  throw InvalidArgument("unknown catalog system '" + name + "'");
}

Matrix finite_difference_jacobian(const FlowSystem& sys, const Vector& x, double step) {
  Matrix j(sys.dim, sys.dim);
  for (int c = 0; c < sys.dim; ++c) {
    Vector plus = x, minus = x;
    plus(c) += step;
    minus(c) -= step;
    j.col(c) = (sys.field(plus) - sys.field(minus)) / (2.0 * step);
  }
  return j;
}

}  // namespace splitdom
