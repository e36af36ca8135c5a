#include "splitdom/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "splitdom/errors.hpp"

namespace splitdom {

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Columns of m as a list of vectors.
json columns_to_json(const Matrix& m) { return matrix_to_json(m.transpose()); }

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ParseError(what + " must be a number");
  return j.get<double>();
}

Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + " must be a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  return v;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + " must be a nonempty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw ParseError(what + " rows must be nonempty arrays");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ParseError(what + " is not rectangular");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], what);
  }
  return m;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::vector<std::string> strings(const json& j) {
  std::vector<std::string> out;
  if (!j.is_array()) throw ParseError("facts must be an array of strings");
  for (const auto& s : j) {
    if (!s.is_string()) throw ParseError("facts must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

json series_to_json(const std::vector<std::pair<double, double>>& series) {
  json out = json::array();
  for (const auto& [t, q] : series) out.push_back(json::array({t, q}));
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json to_json(const DominationReport& r) {
  json j;
  j["system"] = r.system;
  j["test"] = r.test;
  j["fiber"] = to_string(r.fiber);
  j["splitting_kind"] = to_string(r.splitting_kind);
  j["horizon"] = r.horizon;
  j["dt"] = r.dt;
  j["quotients"] = series_to_json(r.quotients);
  j["K"] = r.K;
  j["lambda"] = r.lambda;
  j["r2"] = r.r_squared;
  j["verdict"] = to_string(r.verdict);
  json d = json::object();
  for (const auto& [k, v] : r.diagnostics) d[k] = v;
  j["diagnostics"] = std::move(d);
  return j;
}

json to_json(const ContractionReport& r) {
  json j;
  j["system"] = r.system;
  j["verdict"] = to_string(r.verdict);
  j["forward_lambda"] = r.forward.lambda;
  j["forward_r2"] = r.forward.r_squared;
  j["backward_lambda"] = r.backward.lambda;
  j["backward_r2"] = r.backward.r_squared;
  j["invariance_defect"] = r.invariance_defect;
  j["forward_series"] = series_to_json(r.forward_series);
  j["backward_series"] = series_to_json(r.backward_series);
  return j;
}

json to_json(const EquivalenceReport& r) {
  auto opt_report = [](const std::optional<DominationReport>& rep) -> json {
    return rep ? to_json(*rep) : json(nullptr);
  };
  auto opt_bool = [](const std::optional<bool>& b) -> json { return b ? json(*b) : json(nullptr); };
  json j;
  j["system"] = r.system;
  j["kind"] = r.kind;
  j["agree"] = r.agree;
  j["lpf_dominated"] = r.lpf_dominated;
  j["flow_partially_dominated"] = r.flow_partially_dominated;
  j["backward_direction_holds"] = r.backward_holds;
  j["forward_direction_holds"] = r.forward_holds;
  j["lpf_dims"] = r.lpf_dims;
  j["lpf_hyperbolic"] = opt_bool(r.lpf_hyperbolic);
  j["flow_hyperbolic"] = opt_bool(r.flow_hyperbolic);
  j["lpf_partially_hyperbolic"] = opt_bool(r.lpf_partially_hyperbolic);
  j["flow_partially_hyperbolic"] = opt_bool(r.flow_partially_hyperbolic);
  json reports;
  reports["lpf"] = opt_report(r.lpf);
  reports["reconstructed"] = opt_report(r.reconstructed);
  reports["analytic_partial"] = opt_report(r.analytic_partial);
  reports["projected"] = opt_report(r.projected);
  reports["coarsened_flow_with_lower"] = opt_report(r.coarsened_flow_with_lower);
  reports["coarsened_flow_with_upper"] = opt_report(r.coarsened_flow_with_upper);
  j["reports"] = std::move(reports);
  json errors = json::array();
  for (const auto& e : r.errors) errors.push_back({{"stage", e.stage}, {"message", e.message}});
  j["errors"] = std::move(errors);
  return j;
}

DominationReport domination_report_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ParseError("report must be a JSON object");
    DominationReport r;
    r.system = field(j, "system").get<std::string>();
    if (j.contains("test")) r.test = j.at("test").get<std::string>();
    const auto fiber = field(j, "fiber").get<std::string>();
    r.fiber = fiber == "normal" ? Fiber::normal : Fiber::tangent;
    r.splitting_kind = field(j, "splitting_kind").get<std::string>() == "two_bundle"
                           ? SplittingKind::two_bundle
                           : SplittingKind::three_bundle_with_flow;
    r.horizon = number(field(j, "horizon"), "horizon");
    r.dt = number(field(j, "dt"), "dt");
    const json& q = field(j, "quotients");
    if (!q.is_array()) throw ParseError("quotients must be an array of [t, q] pairs");
    for (const auto& p : q) {
      if (!p.is_array() || p.size() != 2) throw ParseError("quotients must be an array of [t, q] pairs");
      r.quotients.emplace_back(number(p[0], "t"), number(p[1], "q"));
    }
    r.K = number(field(j, "K"), "K");
    r.lambda = number(field(j, "lambda"), "lambda");
    r.r_squared = number(field(j, "r2"), "r2");
    const auto verdict = field(j, "verdict").get<std::string>();
    r.verdict = verdict == "dominated"       ? Verdict::dominated
                : verdict == "not_dominated" ? Verdict::not_dominated
                                             : Verdict::inconclusive;
    if (j.contains("diagnostics"))
      for (const auto& [k, v] : j.at("diagnostics").items())
        if (v.is_number()) r.diagnostics[k] = v.get<double>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

DynamicalSystem system_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ParseError("system description must be a JSON object");
    const std::string name = field(j, "name").get<std::string>();
    const std::string kind = field(j, "kind").get<std::string>();
    const std::string summary = j.value("summary", std::string());
    const std::vector<std::string> facts = j.contains("facts") ? strings(j.at("facts")) : std::vector<std::string>{};

    if (kind == "suspension") {
      SuspensionCocycle c;
      c.name = name;
      const json& orbits = field(j, "orbits");
      if (!orbits.is_array() || orbits.empty()) throw ParseError("orbits must be a nonempty array");
      for (const auto& o : orbits) {
        SuspensionOrbit orbit;
        for (const auto& m : field(o, "matrices")) orbit.matrices.push_back(matrix_from_json(m, "matrix"));
        if (o.contains("roof")) {
          const Vector roof = vector_from_json(o.at("roof"), "roof");
          orbit.roof.assign(roof.data(), roof.data() + roof.size());
        } else {
          orbit.roof.assign(orbit.matrices.size(), 1.0);
        }
        c.orbits.push_back(std::move(orbit));
      }
      if (c.orbits.front().matrices.empty()) throw ParseError("orbit has no matrices");
      c.fiber_dim = static_cast<int>(c.orbits.front().matrices.front().rows());
      std::optional<std::pair<Matrix, Matrix>> splitting;
      if (j.contains("splitting")) {
        const json& s = j.at("splitting");
        splitting = std::make_pair(Matrix(matrix_from_json(field(s, "lower"), "lower").transpose()),
                                   Matrix(matrix_from_json(field(s, "upper"), "upper").transpose()));
      }
      return make_suspension_system(std::move(c), summary, facts, std::move(splitting));
    }

    if (kind == "flow") {
      DynamicalSystem sys;
      sys.name = name;
      sys.summary = summary;
      sys.facts = facts;
      FlowSystem f;
      if (j.contains("field")) {
        const std::string which = j.at("field").get<std::string>();
        if (which != "saddle-cycle") throw ParseError("unknown field '" + which + "'");
        double a = 0.5, b = 0.3;
        if (j.contains("parameters")) {
          const json& p = j.at("parameters");
          a = p.contains("a") ? number(p.at("a"), "a") : a;
          b = p.contains("b") ? number(p.at("b"), "b") : b;
        }
        f = make_saddle_cycle(a, b);
        sys.parameters = {{"a", a}, {"b", b}};
        sys.analytic_splitting = saddle_cycle_splitting();
      } else {
        const Matrix a = matrix_from_json(field(j, "matrix"), "matrix");
        const Vector offset = j.contains("offset") ? vector_from_json(j.at("offset"), "offset")
                                                   : Vector(Vector::Zero(a.rows()));
        f = make_affine_flow(name, a, offset);
      }
      f.name = name;
      if (j.contains("seeds")) {
        f.seeds.clear();
        for (const auto& s : j.at("seeds")) {
          Vector v = vector_from_json(s, "seed");
          if (v.size() != f.dim) throw DimensionError("seed dimension differs from the field");
          f.seeds.push_back(std::move(v));
        }
      }
      if (f.seeds.empty()) throw ParseError("flow system needs at least one seed");
      sys.base_span = j.contains("base_span") ? number(j.at("base_span"), "base_span") : 10.0;
      sys.dynamics = std::move(f);
      return sys;
    }
    throw ParseError("kind must be 'suspension' or 'flow'");
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

json system_to_json(const DynamicalSystem& sys) {
  json j;
  j["name"] = sys.name;
  j["summary"] = sys.summary;
  j["facts"] = sys.facts;
  if (sys.kind() == SystemKind::suspension) {
    j["kind"] = "suspension";
    json orbits = json::array();
    for (const auto& o : sys.suspension().orbits) {
      json mats = json::array();
      for (const auto& m : o.matrices) mats.push_back(matrix_to_json(m));
      orbits.push_back({{"matrices", mats}, {"roof", o.roof}});
    }
    j["orbits"] = std::move(orbits);
    if (sys.constant_fiber_splitting)
      j["splitting"] = {{"lower", columns_to_json(sys.constant_fiber_splitting->first)},
                        {"upper", columns_to_json(sys.constant_fiber_splitting->second)}};
  } else {
    j["kind"] = "flow";
    if (!sys.parameters.empty()) {
      j["field"] = sys.name;
      json p;
      for (const auto& [k, v] : sys.parameters) p[k] = v;
      j["parameters"] = std::move(p);
    }
    json seeds = json::array();
    for (const auto& s : sys.flow().seeds) seeds.push_back(std::vector<double>(s.data(), s.data() + s.size()));
    j["seeds"] = std::move(seeds);
    j["base_span"] = sys.base_span;
  }
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

DynamicalSystem load_system_file(const std::filesystem::path& path) { return system_from_json(read_json_file(path)); }

DynamicalSystem resolve_system(const std::string& name_or_path) {
  for (auto& sys : catalog())
    if (sys.name == name_or_path) return sys;
  if (std::filesystem::exists(name_or_path)) return load_system_file(name_or_path);
  throw InvalidArgument("'" + name_or_path + "' is neither a catalog system nor a readable file");
}

std::string plot_data(const DominationReport& report) {
  std::ostringstream out;
  out << "# t q\n";
  for (const auto& [t, q] : report.quotients) out << format_number(t) << ' ' << format_number(q) << '\n';
  return out.str();
}

std::string fitted_plot_data(const DominationReport& report) {
  std::ostringstream out;
  out << "# t K*exp(-lambda*t)  K=" << format_number(report.K) << " lambda=" << format_number(report.lambda) << '\n';
  for (const auto& [t, q] : report.quotients)
    out << format_number(t) << ' ' << format_number(report.K * std::exp(-report.lambda * t)) << '\n';
  return out.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace splitdom
