#include "thevest/multi_source.hpp"

#include <algorithm>

#include "thevest/errors.hpp"
#include "thevest/estimator_linear.hpp"

namespace thevest {

const SourceOutcome* MultiSourceReport::find(std::string_view source_id) const {
    const auto it = std::find_if(per_source.begin(), per_source.end(),
                                 [&](const SourceOutcome& o) { return o.source_id == source_id; });
    return it == per_source.end() ? nullptr : &*it;
}

bool MultiSourceReport::all_ok() const {
    return std::all_of(per_source.begin(), per_source.end(),
                       [](const SourceOutcome& o) { return o.ok; });
}

std::vector<std::pair<std::string, std::vector<MeasurementSet>>> split_by_source(
    std::span<const MeasurementSet> measurements) {
    validate_batch(measurements);

    const auto& branches = measurements.front().branches;
    std::vector<std::pair<std::string, std::vector<MeasurementSet>>> out;
    out.reserve(branches.size());
    for (std::size_t s = 0; s < branches.size(); ++s) {
        std::vector<MeasurementSet> sets;
        sets.reserve(measurements.size());
        for (const auto& m : measurements) {
            MeasurementSet single;
            single.sample_id = m.sample_id;
            single.time_s = m.time_s;
            single.v_pcc = m.v_pcc;
            single.branches.push_back(m.branches[s]);
            sets.push_back(std::move(single));
        }
        out.emplace_back(branches[s].source_id, std::move(sets));
    }
    return out;
}

MultiSourceReport estimate_all(std::span<const MeasurementSet> measurements, Method method,
                               const NlsConfig& cfg,
                               const std::map<std::string, TheveninParams>& truth, Exec exec) {
    if (measurements.size() < 2) {
        throw InvalidInputError("at least two measurement sets are required");
    }
    const auto split = split_by_source(measurements);

    MultiSourceReport report;
    report.n_sources = static_cast<int>(split.size());
    report.n_sets_used = static_cast<int>(measurements.size());
    report.per_source.resize(split.size());

    const auto estimate_one = [&](std::size_t s) {
        SourceOutcome& outcome = report.per_source[s];
        outcome.source_id = split[s].first;
        std::optional<TheveninParams> source_truth;
        if (const auto it = truth.find(outcome.source_id); it != truth.end()) {
            source_truth = it->second;
        }
        try {
            outcome.report = method == Method::nonlinear
                                 ? estimate_nonlinear(split[s].second, cfg, source_truth)
                                 : estimate_linear(split[s].second, source_truth);
            outcome.ok = true;
        } catch (const std::exception& e) {
            outcome.ok = false;
            outcome.error = e.what();
        }
    };

    const auto n = static_cast<std::int64_t>(split.size());
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t s = 0; s < n; ++s) {
            estimate_one(static_cast<std::size_t>(s));
        }
    } else {
        for (std::int64_t s = 0; s < n; ++s) {
            estimate_one(static_cast<std::size_t>(s));
        }
    }
    return report;
}

}  // namespace thevest
