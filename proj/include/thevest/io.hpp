#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "thevest/change_detect.hpp"
#include "thevest/circuit_sim.hpp"
#include "thevest/multi_source.hpp"
#include "thevest/report.hpp"

namespace thevest::io {

/// Shortest decimal string that round-trips the value.
std::string format_double(double v);

// --- measurement CSV ---------------------------------------------------
// Header: sample_id,time_s,source_id,v_mag,v_angle_rad,i_mag,i_angle_rad
// One row per (sample, source); rows of one sample are contiguous and share
// identical voltage fields.

std::string measurements_to_csv(std::span<const MeasurementSet> sets);
std::vector<MeasurementSet> parse_measurements_csv(std::istream& in);
std::vector<MeasurementSet> read_measurements_csv(const std::filesystem::path& path);
void write_measurements_csv(const std::filesystem::path& path,
                            std::span<const MeasurementSet> sets);

// --- scenario JSON ------------------------------------------------------

struct Scenario {
    std::vector<SourceSpec> sources;
    LoadSchedule schedule;
    NoiseSpec noise;
    double sample_period_s = 0.0;
    double horizon_s = 0.0;
};

Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

// --- reports ------------------------------------------------------------

/// Single-source report. `degrees` additionally emits theta_deg; all
/// radian fields stay as they are.
nlohmann::ordered_json report_to_json(const EstimateReport& report, bool degrees = false);
nlohmann::ordered_json multi_report_to_json(const MultiSourceReport& report,
                                            bool degrees = false);

/// Events as a JSON array, suitable for an empty [] when nothing changed.
nlohmann::ordered_json events_to_json(std::span<const ChangeEvent> events);

/// Trace CSV: time_s,v_th,theta_rad,r_th,x_th,residual_norm,converged
std::string trace_to_csv(const EstimateTrace& trace);

/// Truth file: either a bare params object {v_th, theta, r_th, x_th} (key "")
/// or a map of source_id to params objects.
std::map<std::string, TheveninParams> parse_truth(const nlohmann::json& j);
std::map<std::string, TheveninParams> load_truth(const std::filesystem::path& path);

// --- run manifest -------------------------------------------------------

struct RunManifest {
    std::string command;
    std::vector<std::string> input_paths;
    std::vector<std::string> output_paths;
    std::string config_digest;
    std::string tool_version;
};

nlohmann::ordered_json manifest_to_json(const RunManifest& m);

/// Stable FNV-1a digest of the effective configuration dump.
std::string config_digest(const nlohmann::ordered_json& effective_config);

/// Writes content to a temporary sibling and renames it into place, so a
/// failure never leaves a truncated file behind.
void atomic_write(const std::filesystem::path& path, std::string_view content);

}  // namespace thevest::io
