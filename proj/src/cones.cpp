#include "splitdom/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "splitdom/errors.hpp"

namespace splitdom {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kGridPerDim = 64;
constexpr double kGridBudget = 262144.0;  // 2^18 evaluations
constexpr int kRefineCandidates = 4;
constexpr double kInvarianceMargin = 1e-6;

/// Point on the unit sphere of R^k from k-1 hyperspherical angles.
Vector sphere_point(int k, const double* angles) {
  Vector v(k);
  double s = 1.0;
  for (int i = 0; i + 1 < k; ++i) {
    v(i) = s * std::cos(angles[i]);
    s *= std::sin(angles[i]);
  }
  v(k - 1) = s;
  return v;
}

struct Coordinate {
  double lo, hi;
  bool periodic;
};

/// Minimizes f over a box of angle coordinates: a uniform grid followed by
/// cyclic coordinate golden-section refinement of the best grid points.
template <typename F>
double minimize_on_box(const std::vector<Coordinate>& coords, F&& f) {
  const int d = static_cast<int>(coords.size());
  int per_dim = kGridPerDim;
  if (d > 3) per_dim = std::max(5, static_cast<int>(std::floor(std::pow(kGridBudget, 1.0 / d))));

  std::vector<double> step(d);
  for (int i = 0; i < d; ++i) {
    const auto& c = coords[i];
    step[i] = c.periodic ? (c.hi - c.lo) / per_dim : (c.hi - c.lo) / std::max(1, per_dim - 1);
  }

  // Evaluate the grid, keeping the best few points.
  std::vector<std::pair<double, std::vector<double>>> best;
  std::vector<int> idx(d, 0);
  std::vector<double> p(d);
  for (;;) {
    for (int i = 0; i < d; ++i) p[i] = coords[i].lo + idx[i] * step[i];
    const double v = f(p.data());
    if (static_cast<int>(best.size()) < kRefineCandidates || v < best.back().first) {
      best.emplace_back(v, p);
      std::stable_sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      if (static_cast<int>(best.size()) > kRefineCandidates) best.pop_back();
    }
    int i = 0;
    while (i < d && ++idx[i] == per_dim) idx[i++] = 0;
    if (i == d) break;
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double result = best.front().first;
  for (auto& [value, q] : best) {
    double current = value;
    for (int sweep = 0; sweep < 40; ++sweep) {
      const double before = current;
      for (int i = 0; i < d; ++i) {
        double a = q[i] - step[i];
        double b = q[i] + step[i];
        if (!coords[i].periodic) {
          a = std::max(a, coords[i].lo);
          b = std::min(b, coords[i].hi);
        }
        const double saved = q[i];
        auto eval = [&](double x) {
          q[i] = x;
          return f(q.data());
        };
        double c = b - inv_phi * (b - a);
        double e = a + inv_phi * (b - a);
        double fc = eval(c), fe = eval(e);
        for (int it = 0; it < 60 && b - a > 1e-13; ++it) {
          if (fc < fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
          } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = eval(e);
          }
        }
        // Endpoints matter: the extremum often sits on the cone boundary.
        double cand_x = fc < fe ? c : e;
        double cand_v = std::min(fc, fe);
        for (double x : {a, b}) {
          const double fx = eval(x);
          if (fx < cand_v) {
            cand_v = fx;
            cand_x = x;
          }
        }
        if (cand_v < current) {
          current = cand_v;
          q[i] = cand_x;
        } else {
          q[i] = saved;
        }
      }
      if (before - current <= 1e-15 * std::max(1.0, std::abs(current))) break;
    }
    result = std::min(result, current);
  }
  return result;
}

/// Minimizes g(u) over unit vectors u = cos(t) e + sin(t) f, e in S(E),
/// f in S(F), t in [t_lo, t_hi].
template <typename G>
double minimize_over_cone_sphere(const Cone& cone, double t_lo, double t_hi, G&& g) {
  const Matrix& be = cone.core().basis();
  const Matrix& bf = cone.complement().basis();
  const int ke = static_cast<int>(be.cols());
  const int kf = static_cast<int>(bf.cols());

  std::vector<Coordinate> coords;
  coords.push_back({t_lo, t_hi, false});
  auto add_sphere = [&](int k) {
    for (int i = 0; i + 2 < k; ++i) coords.push_back({0.0, kPi, false});
    if (k >= 2) coords.push_back({0.0, 2.0 * kPi, true});
  };
  add_sphere(ke);
  add_sphere(kf);
  const int e_off = 1;
  const int f_off = 1 + std::max(0, ke - 1);

  double best = std::numeric_limits<double>::infinity();
  // One-dimensional spheres are {+1, -1}; the sign of e can be absorbed into u -> -u.
  const int f_signs = kf == 1 ? 2 : 1;
  for (int sf = 0; sf < f_signs; ++sf) {
    const double fsign = sf == 0 ? 1.0 : -1.0;
    auto objective = [&](const double* p) {
      const Vector e = ke == 1 ? Vector::Ones(1) : sphere_point(ke, p + e_off);
      Vector f = kf == 1 ? Vector::Constant(1, fsign) : sphere_point(kf, p + f_off);
      const Vector u = std::cos(p[0]) * (be * e) + std::sin(p[0]) * (bf * f);
      return g(u);
    };
    best = std::min(best, minimize_on_box(coords, objective));
  }
  return best;
}

double ratio(const Matrix& L, const Vector& u) { return (L * u).norm() / u.norm(); }

void check_map(const Cone& cone, const Matrix& L) {
  if (L.rows() != cone.ambient_dim() || L.cols() != cone.ambient_dim())
    throw DimensionError("map and cone dimensions differ");
}

}  // namespace

Cone::Cone(Subspace core, Subspace complement, double aperture)
    : core_(std::move(core)), complement_(std::move(complement)), aperture_(aperture) {
  if (core_.ambient_dim() != complement_.ambient_dim() || core_.dim() + complement_.dim() != core_.ambient_dim())
    throw DimensionError("cone core and complement must split the ambient space");
  if (core_.empty() || complement_.empty()) throw DimensionError("cone core and complement must be nonzero");
  if (!(aperture > 0.0) || !std::isfinite(aperture)) throw InvalidArgument("cone aperture must be positive");
  if (!(minimal_angle(core_, complement_) > 1e-8))
    throw DegenerateSplittingError("cone core and complement are not transverse");
  Matrix joined(core_.ambient_dim(), core_.ambient_dim());
  joined << core_.basis(), complement_.basis();
  coordinates_ = joined.partialPivLu().inverse();
}

Cone Cone::around(const Subspace& core, double aperture) {
  return Cone(core, core.orthogonal_complement(), aperture);
}

std::pair<Vector, Vector> Cone::decompose(const Vector& v) const {
  if (v.size() != ambient_dim()) throw DimensionError("vector and cone dimensions differ");
  const Vector c = coordinates_ * v;
  const int k = core_.dim();
  return {core_.basis() * c.head(k), complement_.basis() * c.tail(ambient_dim() - k)};
}

double Cone::slope_angle(const Vector& v) const {
  if (v.size() != ambient_dim()) throw DimensionError("vector and cone dimensions differ");
  // Orthonormal bases make the coordinate norms equal to the component norms.
  const Vector c = coordinates_ * v;
  const int k = core_.dim();
  return std::atan2(c.tail(ambient_dim() - k).norm(), c.head(k).norm());
}

bool Cone::contains(const Vector& v) const {
  const auto [ve, vf] = decompose(v);
  return vf.norm() <= aperture_ * ve.norm();
}

bool ConeField::constant_core_dim() const {
  for (const auto& orbit : cones) {
    for (const auto& c : orbit)
      if (c.core().dim() != orbit.front().core().dim()) return false;
  }
  return true;
}

double min_expansion(const Cone& cone, const Matrix& forward) {
  check_map(cone, forward);
  return minimize_over_cone_sphere(cone, 0.0, std::atan(cone.aperture()),
                                   [&](const Vector& u) { return ratio(forward, u); });
}

double min_coexpansion(const Cone& image_cone, const Matrix& backward) {
  check_map(image_cone, backward);
  return minimize_over_cone_sphere(image_cone, std::atan(image_cone.aperture()), kPi / 2.0,
                                   [&](const Vector& u) { return ratio(backward, u); });
}

double image_aperture(const Cone& source, const Matrix& forward, const Cone& target) {
  check_map(source, forward);
  if (target.ambient_dim() != source.ambient_dim()) throw DimensionError("source and target cones differ");
  const double neg_max = minimize_over_cone_sphere(
      source, 0.0, std::atan(source.aperture()),
      [&](const Vector& u) { return -target.slope_angle(forward * u); });
  const double angle = -neg_max;
  if (angle >= kPi / 2.0 - 1e-15) return std::numeric_limits<double>::infinity();
  return std::tan(angle);
}

DominationCoefficient domination_coefficient(const std::vector<ConeStep>& steps) {
  DominationCoefficient out;
  if (steps.empty()) throw InvalidArgument("no points for the domination coefficient");
  const int core = steps.front().at_point->core().dim();
  out.pointwise_inf = std::numeric_limits<double>::infinity();
  out.inf_m = out.inf_m_prime = out.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& s : steps) {
    if (s.at_point->core().dim() != core || s.at_image->core().dim() != core)
      throw ConeFieldShapeError("cone core dimension varies along the orbit");
    PointCoefficient p;
    p.orbit = s.orbit;
    p.index = s.index;
    p.m = min_expansion(*s.at_point, s.forward);
    p.m_prime = min_coexpansion(*s.at_image, s.backward);
    p.invariance_margin = s.at_image->aperture() - image_aperture(*s.at_point, s.forward, *s.at_image);
    out.pointwise_inf = std::min(out.pointwise_inf, p.m * p.m_prime);
    out.inf_m = std::min(out.inf_m, p.m);
    out.inf_m_prime = std::min(out.inf_m_prime, p.m_prime);
    out.min_margin = std::min(out.min_margin, p.invariance_margin);
    out.points.push_back(p);
  }
  out.separate_product = out.inf_m * out.inf_m_prime;
  return out;
}

DominationCoefficient domination_coefficient(const ConeField& field, const SampledCocycle& cocycle, int t_steps) {
  if (!field.constant_core_dim()) throw ConeFieldShapeError("cone core dimension varies along an orbit");
  if (t_steps < 1) throw InvalidArgument("time step must be at least one sample");
  if (field.cones.size() != cocycle.orbits.size()) throw DimensionError("cone field and cocycle orbits differ");
  std::vector<ConeStep> steps;
  for (std::size_t o = 0; o < cocycle.orbits.size(); ++o) {
    const auto& orbit = cocycle.orbits[o];
    for (std::size_t i = orbit.base_begin; i < orbit.base_end; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(t_steps);
      if (j >= orbit.size()) throw IndexError("time step reaches past the sampled orbit");
      steps.push_back({o, i, &field.at(o, i), &field.at(o, j), cocycle.forward(o, i, j), cocycle.backward(o, i, j)});
    }
  }
  return domination_coefficient(steps);
}

std::optional<NewhouseCertificate> newhouse_search(const ConeField& field, const SampledCocycle& cocycle,
                                                   const std::vector<int>& t_grid) {
  if (t_grid.empty()) throw InvalidArgument("empty time grid");
  std::vector<int> grid = t_grid;
  std::sort(grid.begin(), grid.end());
  if (grid.front() < 1) throw InvalidArgument("time grid entries must be positive");
  for (int t : grid) {
    DominationCoefficient c = domination_coefficient(field, cocycle, t);
    if (c.strongly_dominating() && c.min_margin >= kInvarianceMargin) {
      const auto& o = cocycle.orbits.front();
      NewhouseCertificate cert;
      cert.t0_steps = t;
      cert.t0_time = o.times[o.base_begin + static_cast<std::size_t>(t)] - o.times[o.base_begin];
      cert.coefficient = std::move(c);
      return cert;
    }
  }
  return std::nullopt;
}

namespace {

Subspace iterate(const ConeField& field, const SampledCocycle& cocycle, std::size_t orbit, std::size_t from,
                 std::size_t to) {
  const auto& o = cocycle.orbits.at(orbit);
  Matrix b = field.at(orbit, from).core().basis();
  auto orth = [](const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    return Matrix(qr.householderQ() * Matrix::Identity(m.rows(), m.cols()));
  };
  if (from <= to) {
    for (std::size_t k = from; k < to; ++k) b = orth(o.steps[k] * b);
  } else {
    for (std::size_t k = from; k > to; --k) b = orth(o.inverse_steps[k - 1] * b);
  }
  return Subspace::span(b);
}

}  // namespace

ConeLimit cone_limit_iterate(const ConeField& field, const SampledCocycle& cocycle, std::size_t orbit,
                             std::size_t index, int n_iter, TimeDirection direction) {
  if (n_iter < 1) throw InvalidArgument("n_iter must be at least 1");
  const auto& o = cocycle.orbits.at(orbit);
  if (index >= o.size()) throw IndexError("sample index out of range");
  const auto n = static_cast<std::size_t>(n_iter);
  std::size_t from = 0;
  std::size_t available = 0;
  if (direction == TimeDirection::forward) {
    available = std::min(n, index);
    from = index - available;
  } else {
    available = std::min(n, o.size() - 1 - index);
    from = index + available;
  }
  ConeLimit out;
  out.iterations = static_cast<int>(available);
  out.subspace = iterate(field, cocycle, orbit, from, index);
  if (available >= 2) {
    const std::size_t from_prev = direction == TimeDirection::forward ? from + 1 : from - 1;
    out.last_angle = subspace_distance(out.subspace, iterate(field, cocycle, orbit, from_prev, index));
  } else {
    out.last_angle = available == 0 ? std::numbers::pi / 2 : subspace_distance(out.subspace, field.at(orbit, index).core());
  }
  return out;
}

Subspace cone_limit_subspace(const ConeField& field, const SampledCocycle& cocycle, std::size_t orbit,
                             std::size_t index, int n_iter, TimeDirection direction, double tolerance) {
  ConeLimit lim = cone_limit_iterate(field, cocycle, orbit, index, n_iter, direction);
  if (lim.iterations < n_iter || !(lim.last_angle <= tolerance))
    throw NotConvergedError("cone iteration did not settle after " + std::to_string(lim.iterations) +
                                " steps (last angle " + std::to_string(lim.last_angle) + ")",
                            lim.last_angle);
  return lim.subspace;
}

ConeField make_cone_field(const SampledCocycle& cocycle, const CoreFunction& core, double aperture) {
  ConeField field;
  for (std::size_t o = 0; o < cocycle.orbits.size(); ++o) {
    std::vector<Cone> cones;
    cones.reserve(cocycle.orbits[o].size());
    for (std::size_t i = 0; i < cocycle.orbits[o].size(); ++i) cones.push_back(Cone::around(core(o, i), aperture));
    field.cones.push_back(std::move(cones));
  }
  return field;
}

ConeField seeded_cone_field(const SampledCocycle& cocycle, int core_dim, double aperture) {
  if (core_dim < 1 || core_dim >= cocycle.dim) throw InvalidArgument("core dimension must be in [1, dim)");
  const auto k = static_cast<Eigen::Index>(core_dim);
  return make_cone_field(
      cocycle,
      [&](std::size_t o, std::size_t i) {
        const auto& orbit = cocycle.orbits[o];
        // The step into sample i stretches the dominant directions onto its left singular vectors.
        if (i == 0) {
          Eigen::JacobiSVD<Matrix> svd(orbit.steps.front(), Eigen::ComputeFullV);
          return Subspace::span(Matrix(svd.matrixV().leftCols(k)));
        }
        Eigen::JacobiSVD<Matrix> svd(orbit.steps[i - 1], Eigen::ComputeFullU);
        return Subspace::span(Matrix(svd.matrixU().leftCols(k)));
      },
      aperture);
}

int seeded_core_dim(const SampledCocycle& cocycle) {
  const int n = cocycle.dim;
  if (n < 2) throw InvalidArgument("cones need a fiber of dimension at least 2");
  std::vector<std::vector<double>> gaps(static_cast<std::size_t>(n - 1));
  for (const auto& o : cocycle.orbits) {
    for (std::size_t i = o.base_begin; i < o.base_end; ++i) {
      const Vector s = Eigen::JacobiSVD<Matrix>(o.steps[i]).singularValues();
      for (int j = 0; j + 1 < n; ++j) gaps[static_cast<std::size_t>(j)].push_back(s(j) / s(j + 1));
    }
  }
  int best = 1;
  double best_gap = -1.0;
  for (int j = 0; j + 1 < n; ++j) {
    auto& g = gaps[static_cast<std::size_t>(j)];
    std::nth_element(g.begin(), g.begin() + static_cast<long>(g.size() / 2), g.end());
    const double median = g[g.size() / 2];
    if (median > best_gap * (1.0 + 1e-9)) {
      best_gap = median;
      best = j + 1;
    }
  }
  return best;
}

}  // namespace splitdom
