#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace splitdom::cli {

struct RunConfig {
  std::string system;
  double dt = 1e-3;
  double horizon = 40.0;
  double lambda_min = 0.05;
  double r2_min = 0.95;
  double gap_min = 1.5;
  double aperture = 1.0;
  /// Largest t0 (in samples) tried by the cone search.
  int t_max = 8;
  std::filesystem::path output_dir = "splitdom-out";
  std::string format = "json";
};

/// Applies SPLITDOM_OUT and checks thresholds; throws InvalidArgument.
RunConfig finalize(RunConfig config);

int cmd_systems_list(const std::vector<std::string>& paths, std::ostream& out, std::ostream& err);
/// 0 when both directions agree, 2 when they disagree, 1 on operational errors.
int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_cones(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_plotdata(const std::filesystem::path& report, const std::optional<std::filesystem::path>& out_dir,
                 std::ostream& out, std::ostream& err);

}  // namespace splitdom::cli
