#include "thevest/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "thevest/errors.hpp"

namespace thevest::io {

namespace {

constexpr std::string_view kMeasurementHeader =
    "sample_id,time_s,source_id,v_mag,v_angle_rad,i_mag,i_angle_rad";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_double(const std::string& s, int line_no, const char* what) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw InvalidInputError("CSV line " + std::to_string(line_no) + ": bad " + what + " '" +
                                s + "'");
    }
    return v;
}

long long parse_int(const std::string& s, int line_no, const char* what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InvalidInputError("CSV line " + std::to_string(line_no) + ": bad " + what + " '" +
                                s + "'");
    }
    return v;
}

double require_number(const nlohmann::json& j, const std::string& key,
                      const std::string& context) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw InvalidInputError(context + " needs numeric field '" + key + "'");
    }
    return j.at(key).get<double>();
}

TheveninParams params_from_json(const nlohmann::json& j, const std::string& context) {
    TheveninParams p;
    p.v_th = require_number(j, "v_th", context);
    p.theta = require_number(j, "theta", context);
    p.r_th = require_number(j, "r_th", context);
    p.x_th = require_number(j, "x_th", context);
    if (p.v_th < 0.0) {
        throw InvalidInputError(context + ": v_th must be >= 0");
    }
    return p;
}

nlohmann::ordered_json params_to_json(const TheveninParams& p, bool degrees) {
    nlohmann::ordered_json j;
    j["v_th"] = p.v_th;
    j["theta_rad"] = p.theta;
    if (degrees) {
        j["theta_deg"] = p.theta * 180.0 / std::numbers::pi;
    }
    j["r_th"] = p.r_th;
    j["x_th"] = p.x_th;
    return j;
}

}  // namespace

std::string format_double(double v) {
    // nlohmann emits the shortest representation that round-trips.
    return nlohmann::json(v).dump();
}

std::string measurements_to_csv(std::span<const MeasurementSet> sets) {
    std::string out{kMeasurementHeader};
    out += '\n';
    for (const auto& set : sets) {
        for (const auto& b : set.branches) {
            if (b.source_id.find_first_of(",\r\n") != std::string::npos) {
                throw InvalidInputError("source_id '" + b.source_id +
                                        "' cannot be written to CSV");
            }
            out += std::to_string(set.sample_id);
            out += ',';
            out += format_double(set.time_s);
            out += ',';
            out += b.source_id;
            out += ',';
            out += format_double(set.v_pcc.magnitude);
            out += ',';
            out += format_double(set.v_pcc.angle);
            out += ',';
            out += format_double(b.current.magnitude);
            out += ',';
            out += format_double(b.current.angle);
            out += '\n';
        }
    }
    return out;
}

std::vector<MeasurementSet> parse_measurements_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidInputError("measurement CSV is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kMeasurementHeader) {
        throw InvalidInputError("measurement CSV header mismatch; expected '" +
                                std::string(kMeasurementHeader) + "'");
    }

    std::vector<MeasurementSet> sets;
    std::vector<long long> seen_ids;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 7) {
            throw InvalidInputError("CSV line " + std::to_string(line_no) +
                                    ": expected 7 fields, got " + std::to_string(fields.size()));
        }
        const long long sample_id = parse_int(fields[0], line_no, "sample_id");
        const double time_s = parse_double(fields[1], line_no, "time_s");
        const std::string& source_id = fields[2];
        const double v_mag = parse_double(fields[3], line_no, "v_mag");
        const double v_ang = parse_double(fields[4], line_no, "v_angle_rad");
        const double i_mag = parse_double(fields[5], line_no, "i_mag");
        const double i_ang = parse_double(fields[6], line_no, "i_angle_rad");
        if (v_mag < 0.0 || i_mag < 0.0) {
            throw InvalidInputError("CSV line " + std::to_string(line_no) +
                                    ": magnitudes must be >= 0");
        }
        if (source_id.empty()) {
            throw InvalidInputError("CSV line " + std::to_string(line_no) + ": empty source_id");
        }

        if (sets.empty() || sets.back().sample_id != sample_id) {
            for (const long long prev : seen_ids) {
                if (prev == sample_id) {
                    throw InvalidInputError("CSV line " + std::to_string(line_no) +
                                            ": rows of sample " + std::to_string(sample_id) +
                                            " must be contiguous");
                }
            }
            seen_ids.push_back(sample_id);
            MeasurementSet set;
            set.sample_id = sample_id;
            set.time_s = time_s;
            set.v_pcc = Phasor{v_mag, v_ang};
            sets.push_back(std::move(set));
        } else {
            const auto& set = sets.back();
            if (set.time_s != time_s || set.v_pcc.magnitude != v_mag ||
                set.v_pcc.angle != normalize_angle(v_ang)) {
                throw InvalidInputError("CSV line " + std::to_string(line_no) +
                                        ": rows of one sample must share time and voltage");
            }
        }
        sets.back().branches.push_back({source_id, Phasor{i_mag, i_ang}});
    }
    if (sets.empty()) {
        throw InvalidInputError("measurement CSV has no data rows");
    }
    validate_batch(sets);
    return sets;
}

std::vector<MeasurementSet> read_measurements_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInputError("cannot open '" + path.string() + "'");
    }
    return parse_measurements_csv(in);
}

void write_measurements_csv(const std::filesystem::path& path,
                            std::span<const MeasurementSet> sets) {
    atomic_write(path, measurements_to_csv(sets));
}

Scenario parse_scenario(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw InvalidInputError("scenario: top level must be an object");
    }
    Scenario sc;
    if (!j.contains("sources") || !j.at("sources").is_array() || j.at("sources").empty()) {
        throw InvalidInputError("scenario: 'sources' must be a non-empty array");
    }
    for (const auto& js : j.at("sources")) {
        SourceSpec spec;
        if (!js.contains("id") || !js.at("id").is_string() ||
            js.at("id").get<std::string>().empty()) {
            throw InvalidInputError("scenario: every source needs a non-empty string 'id'");
        }
        spec.source_id = js.at("id").get<std::string>();
        if (spec.source_id.find_first_of(",\r\n") != std::string::npos) {
            throw InvalidInputError("scenario: source id '" + spec.source_id +
                                    "' may not contain commas or line breaks");
        }
        spec.params = params_from_json(js, "source '" + spec.source_id + "'");
        if (js.contains("step")) {
            const auto& jstep = js.at("step");
            StepEvent step;
            step.time_s = require_number(jstep, "time_s", "step of '" + spec.source_id + "'");
            step.new_r = require_number(jstep, "r", "step of '" + spec.source_id + "'");
            step.new_x = require_number(jstep, "x", "step of '" + spec.source_id + "'");
            spec.step = step;
        }
        sc.sources.push_back(std::move(spec));
    }

    if (!j.contains("schedule") || !j.at("schedule").is_array() || j.at("schedule").empty()) {
        throw InvalidInputError("scenario: 'schedule' must be a non-empty array");
    }
    for (const auto& je : j.at("schedule")) {
        LoadSchedule::Entry entry;
        entry.time_s = require_number(je, "time_s", "schedule entry");
        entry.z_load.resistance = require_number(je, "r_load", "schedule entry");
        entry.z_load.reactance = require_number(je, "x_load", "schedule entry");
        sc.schedule.entries.push_back(entry);
    }

    if (j.contains("noise")) {
        const auto& jn = j.at("noise");
        sc.noise.mag_rel_sigma = require_number(jn, "mag_rel_sigma", "noise");
        sc.noise.angle_sigma = require_number(jn, "angle_sigma", "noise");
        if (!jn.contains("seed") || !jn.at("seed").is_number_unsigned()) {
            throw InvalidInputError("scenario: noise needs a non-negative integer 'seed'");
        }
        sc.noise.seed = jn.at("seed").get<std::uint64_t>();
    }

    sc.sample_period_s = require_number(j, "sample_period_s", "scenario");
    sc.horizon_s = require_number(j, "horizon_s", "scenario");
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInputError("cannot open '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError("scenario '" + path.string() + "': " + e.what());
    }
    return parse_scenario(j);
}

nlohmann::ordered_json report_to_json(const EstimateReport& report, bool degrees) {
    nlohmann::ordered_json j = params_to_json(report.params, degrees);
    j["residual_norm"] = report.residual_norm;
    j["iterations"] = report.iterations;
    j["function_evals"] = report.function_evals;
    j["converged"] = report.converged;
    j["condition_estimate"] = report.condition_estimate;
    if (report.x_hat) {
        j["x_hat"] = *report.x_hat;
        j["condition_number"] = report.condition_estimate;
    }
    if (report.conditioning_warning) {
        j["conditioning_warning"] = true;
    }
    if (report.negative_impedance) {
        j["negative_impedance"] = true;
    }
    if (report.error_vs_truth) {
        nlohmann::ordered_json je;
        je["v_th_pct"] = report.error_vs_truth->v_th_pct;
        je["theta_err_rad"] = report.error_vs_truth->theta_err_rad;
        je["r_th_pct"] = report.error_vs_truth->r_th_pct;
        je["x_th_pct"] = report.error_vs_truth->x_th_pct;
        j["error_vs_truth"] = je;
    }
    return j;
}

nlohmann::ordered_json multi_report_to_json(const MultiSourceReport& report, bool degrees) {
    nlohmann::ordered_json j;
    j["n_sources"] = report.n_sources;
    j["n_sets_used"] = report.n_sets_used;
    nlohmann::ordered_json sources = nlohmann::ordered_json::object();
    for (const auto& outcome : report.per_source) {
        nlohmann::ordered_json js;
        js["ok"] = outcome.ok;
        if (outcome.ok) {
            js.update(report_to_json(outcome.report, degrees));
        } else {
            js["error"] = outcome.error;
        }
        sources[outcome.source_id] = std::move(js);
    }
    j["sources"] = std::move(sources);
    return j;
}

nlohmann::ordered_json events_to_json(std::span<const ChangeEvent> events) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : events) {
        nlohmann::ordered_json je;
        je["parameter"] = std::string(to_string(e.parameter));
        je["detected_time_s"] = e.detected_time_s;
        je["before"] = e.before;
        je["after"] = e.after;
        je["relative_jump"] = e.relative_jump;
        arr.push_back(std::move(je));
    }
    return arr;
}

std::string trace_to_csv(const EstimateTrace& trace) {
    std::string out = "time_s,v_th,theta_rad,r_th,x_th,residual_norm,converged\n";
    for (const auto& p : trace.points) {
        const auto& params = p.report.params;
        out += format_double(p.time_s);
        out += ',';
        out += format_double(params.v_th);
        out += ',';
        out += format_double(params.theta);
        out += ',';
        out += format_double(params.r_th);
        out += ',';
        out += format_double(params.x_th);
        out += ',';
        out += format_double(p.report.residual_norm);
        out += ',';
        out += p.report.converged ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::map<std::string, TheveninParams> parse_truth(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw InvalidInputError("truth: top level must be an object");
    }
    std::map<std::string, TheveninParams> out;
    if (j.contains("v_th")) {
        out.emplace("", params_from_json(j, "truth"));
        return out;
    }
    for (const auto& [key, value] : j.items()) {
        out.emplace(key, params_from_json(value, "truth for '" + key + "'"));
    }
    if (out.empty()) {
        throw InvalidInputError("truth: no parameter sets found");
    }
    return out;
}

std::map<std::string, TheveninParams> load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInputError("cannot open '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInputError("truth '" + path.string() + "': " + e.what());
    }
    return parse_truth(j);
}

nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["input_paths"] = m.input_paths;
    j["output_paths"] = m.output_paths;
    j["config_digest"] = m.config_digest;
    j["tool_version"] = m.tool_version;
    return j;
}

std::string config_digest(const nlohmann::ordered_json& effective_config) {
    const std::string dump = effective_config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InvalidInputError("cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw InvalidInputError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw InvalidInputError("cannot rename '" + tmp.string() + "' to '" + path.string() +
                                "': " + ec.message());
    }
}

}  // namespace thevest::io
