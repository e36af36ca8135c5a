#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "splitdom/domination.hpp"
#include "splitdom/systems.hpp"

namespace splitdom {

using json = nlohmann::ordered_json;

json to_json(const DominationReport& report);
json to_json(const ContractionReport& report);
json to_json(const EquivalenceReport& report);

/// Reads back a report written by to_json(DominationReport); throws ParseError.
DominationReport domination_report_from_json(const json& j);

/// System description (suspension or flow); throws ParseError on malformed input
/// and the usual validation errors (e.g. InvertibilityError) on bad matrices.
DynamicalSystem system_from_json(const json& j);
json system_to_json(const DynamicalSystem& sys);

DynamicalSystem load_system_file(const std::filesystem::path& path);
/// Catalog name, or a path to a JSON system description.
DynamicalSystem resolve_system(const std::string& name_or_path);

json read_json_file(const std::filesystem::path& path);

/// Quotient series as two whitespace-separated columns "t q".
std::string plot_data(const DominationReport& report);
/// Fitted model K exp(-lambda t) at the series times, same layout.
std::string fitted_plot_data(const DominationReport& report);

/// Deterministic rendering used for every report file.
std::string dump(const json& j);

}  // namespace splitdom
