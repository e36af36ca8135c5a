#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "splitdom/cones.hpp"
#include "splitdom/domination.hpp"
#include "splitdom/errors.hpp"
#include "splitdom/io.hpp"

namespace splitdom::cli {

namespace fs = std::filesystem;

namespace {

std::string safe_name(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? "system" : out;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write '" + path.string() + "'");
  f << text;
}

EquivalenceConfig equivalence_config(const RunConfig& c) {
  EquivalenceConfig e;
  e.sampling.dt = c.dt;
  e.sampling.horizon = c.horizon;
  e.domination.lambda_min = c.lambda_min;
  e.domination.r2_min = c.r2_min;
  e.domination.gap_min = c.gap_min;
  return e;
}

json config_json(const RunConfig& c) {
  json j;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["lambda_min"] = c.lambda_min;
  j["r2_min"] = c.r2_min;
  j["gap_min"] = c.gap_min;
  j["aperture"] = c.aperture;
  return j;
}

std::string csv(const DominationReport& r) {
  std::ostringstream out;
  out << "t,q\n" << std::setprecision(17);
  for (const auto& [t, q] : r.quotients) out << t << ',' << q << '\n';
  return out.str();
}

void write_report(const fs::path& dir, const std::string& stem, const DominationReport& r, const std::string& format) {
  if (format == "json") {
    write_file(dir / (stem + ".json"), dump(to_json(r)));
  } else if (format == "csv") {
    write_file(dir / (stem + ".csv"), csv(r));
  } else {
    write_file(dir / (stem + ".dat"), plot_data(r));
    write_file(dir / (stem + ".fit.dat"), fitted_plot_data(r));
  }
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::string opt_flag(const std::optional<bool>& b) { return b ? yes_no(*b) : "n/a"; }

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const SingularityEncounteredError& e) {
    err << "error: " << e.what() << " (t = " << e.time()
        << "); the analysis assumes an invariant set without singularities of the field\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace

RunConfig finalize(RunConfig c) {
  if (const char* env = std::getenv("SPLITDOM_OUT"); env && *env) c.output_dir = env;
  if (c.system.empty()) throw InvalidArgument("--system is required");
  if (!(c.dt > 0.0) || !(c.horizon > 0.0)) throw InvalidArgument("dt and horizon must be positive");
  if (!(c.lambda_min > 0.0) || !(c.gap_min > 0.0) || !(c.aperture > 0.0))
    throw InvalidArgument("thresholds must be positive");
  if (!(c.r2_min > 0.0 && c.r2_min <= 1.0)) throw InvalidArgument("r2_min must lie in (0, 1]");
  if (c.t_max < 1) throw InvalidArgument("t_max must be at least 1");
  if (c.format != "json" && c.format != "csv" && c.format != "plotdata")
    throw InvalidArgument("format must be json, csv or plotdata");
  return c;
}

int cmd_systems_list(const std::vector<std::string>& paths, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<DynamicalSystem> systems = catalog();
    for (const auto& p : paths) systems.push_back(load_system_file(p));
    for (const auto& sys : systems) {
      out << sys.name << "  [" << (sys.kind() == SystemKind::flow ? "flow" : "suspension")
          << ", dim " << sys.tangent_dim() << "]\n";
      if (!sys.summary.empty()) out << "    " << sys.summary << '\n';
      for (const auto& f : sys.facts) out << "    - " << f << '\n';
    }
    return 0;
  });
}

int cmd_analyze(const RunConfig& raw, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = finalize(raw);
    const DynamicalSystem sys = resolve_system(c.system);
    const EquivalenceReport rep = verify_equivalence(sys, equivalence_config(c));

    const fs::path dir = c.output_dir / safe_name(sys.name);
    json summary = to_json(rep);
    summary["config"] = config_json(c);
    write_file(dir / "equivalence.json", dump(summary));
    auto emit = [&](const char* stem, const std::optional<DominationReport>& r) {
      if (r) write_report(dir, stem, *r, c.format);
    };
    emit("lpf", rep.lpf);
    emit("reconstructed", rep.reconstructed);
    emit("analytic_partial", rep.analytic_partial);
    emit("projected", rep.projected);
    emit("coarsened_flow_with_lower", rep.coarsened_flow_with_lower);
    emit("coarsened_flow_with_upper", rep.coarsened_flow_with_upper);

    out << "system: " << sys.name << '\n';
    auto line = [&](const char* label, const std::optional<DominationReport>& r) {
      if (!r) return;
      out << "  " << std::left << std::setw(28) << label << std::setw(14) << to_string(r->verdict)
          << "lambda = " << std::setprecision(6) << r->lambda << "  r2 = " << r->r_squared << '\n';
    };
    line("LPF (extracted)", rep.lpf);
    line("flow (reconstructed)", rep.reconstructed);
    line("flow (declared)", rep.analytic_partial);
    line("LPF (declared, projected)", rep.projected);
    line("(E + <X>, F)", rep.coarsened_flow_with_lower);
    line("(E, <X> + F)", rep.coarsened_flow_with_upper);
    out << "  LPF dominated: " << yes_no(rep.lpf_dominated)
        << "; flow partially dominated: " << yes_no(rep.flow_partially_dominated) << '\n';
    out << "  hyperbolic: flow " << opt_flag(rep.flow_hyperbolic) << ", LPF " << opt_flag(rep.lpf_hyperbolic)
        << "; partially hyperbolic: flow " << opt_flag(rep.flow_partially_hyperbolic) << ", LPF "
        << opt_flag(rep.lpf_partially_hyperbolic) << '\n';
    for (const auto& e : rep.errors) out << "  note [" << e.stage << "]: " << e.message << '\n';
    out << "  directions agree: " << yes_no(rep.agree) << '\n';
    out << "  reports: " << dir.string() << '\n';
    if (!rep.agree) {
      err << "the LPF and flow verdicts disagree\n";
      return 2;
    }
    return 0;
  });
}

int cmd_cones(const RunConfig& raw, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = finalize(raw);
    const DynamicalSystem sys = resolve_system(c.system);
    const EquivalenceConfig ec = equivalence_config(c);
    const AnalysisSet set = sample_system(sys, ec.sampling);
    std::vector<int> grid;
    for (int t = 1; t <= c.t_max; ++t) grid.push_back(t);
    const ConeRoute route = cone_route(set.normal, c.aperture, grid, ec.domination);

    json j;
    j["system"] = sys.name;
    j["aperture"] = c.aperture;
    j["core_dim"] = route.core_dim;
    out << "system: " << sys.name << "  (normal fiber, core dim " << route.core_dim << ", aperture " << c.aperture
        << ")\n";

    const auto& shown = route.certificate ? route.certificate : route.pointwise;
    const DominationCoefficient coef =
        shown ? shown->coefficient
              : domination_coefficient(seeded_cone_field(set.normal, route.core_dim, c.aperture), set.normal, 1);
    const int t_shown = shown ? shown->t0_steps : 1;
    out << "  per-point coefficients at t = " << t_shown << " sample(s):\n";
    json points = json::array();
    out << std::setprecision(6);
    for (const auto& p : coef.points) {
      out << "    orbit " << p.orbit << " sample " << std::setw(4) << p.index << "  m = " << std::setw(10) << p.m
          << "  m' = " << std::setw(10) << p.m_prime << "  m m' = " << std::setw(10) << p.m * p.m_prime
          << "  margin = " << p.invariance_margin << '\n';
      points.push_back({{"orbit", p.orbit}, {"index", p.index}, {"m", p.m}, {"m_prime", p.m_prime},
                        {"margin", p.invariance_margin}});
    }
    out << "  m_d = " << coef.pointwise_inf << "  (inf m)(inf m') = " << coef.separate_product << '\n';
    j["t"] = t_shown;
    j["points"] = std::move(points);
    j["m_d"] = coef.pointwise_inf;
    j["separate_product"] = coef.separate_product;

    if (route.certificate) {
      out << "  certificate: t0 = " << route.certificate->t0_steps << " sample(s) = " << route.certificate->t0_time
          << " time units\n";
      j["certificate"] = {{"t0_steps", route.certificate->t0_steps}, {"t0_time", route.certificate->t0_time}};
    } else {
      out << "  certificate: none\n";
      j["certificate"] = nullptr;
      if (route.pointwise)
        out << "  (pointwise dominating and invariant at t = " << route.pointwise->t0_steps
            << ", but not strongly dominating)\n";
    }
    if (route.limit) {
      out << "  cone limits: last successive angle " << route.limit_last_angle << '\n';
      j["limit_last_angle"] = route.limit_last_angle;
      if (route.extraction_angle) {
        out << "  angle to extracted splitting: " << *route.extraction_angle << '\n';
        j["extraction_angle"] = *route.extraction_angle;
      }
      if (const auto analytic = analytic_splitting(sys, set.tangent)) {
        const Splitting declared = project_to_normal(*analytic, set.normal);
        double worst = 0.0;
        for (std::size_t o = 0; o < set.normal.orbits.size(); ++o) {
          const auto& orbit = set.normal.orbits[o];
          for (std::size_t i = orbit.base_begin; i < orbit.base_end; ++i)
            for (std::size_t b = 0; b < 2; ++b)
              worst = std::max(worst, subspace_distance(route.limit->bundle(o, i, b), declared.bundle(o, i, b)));
        }
        out << "  angle to declared splitting: " << worst << '\n';
        j["declared_angle"] = worst;
      }
    }
    if (route.extraction_error) {
      out << "  extraction: " << *route.extraction_error << '\n';
      j["extraction_error"] = *route.extraction_error;
    }
    write_file(c.output_dir / safe_name(sys.name) / "cones.json", dump(j));
    return 0;
  });
}

int cmd_plotdata(const fs::path& report, const std::optional<fs::path>& out_dir, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    const DominationReport r = domination_report_from_json(read_json_file(report));
    if (r.quotients.empty()) throw InvalidSeriesError("report has an empty quotient series");
    const fs::path dir = out_dir ? *out_dir : report.parent_path();
    const std::string stem = report.stem().string();
    write_file(dir / (stem + ".dat"), plot_data(r));
    write_file(dir / (stem + ".fit.dat"), fitted_plot_data(r));
    out << (dir / (stem + ".dat")).string() << '\n' << (dir / (stem + ".fit.dat")).string() << '\n';
    return 0;
  });
}

}  // namespace splitdom::cli
