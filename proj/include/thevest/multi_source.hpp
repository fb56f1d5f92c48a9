#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thevest/estimator_nonlinear.hpp"
#include "thevest/exec.hpp"

namespace thevest {

/// Result for one source branch. A failed source never aborts its siblings;
/// the failure is carried here instead.
struct SourceOutcome {
    std::string source_id;
    bool ok = false;
    EstimateReport report;  // meaningful only when ok
    std::string error;      // set when !ok
};

struct MultiSourceReport {
    std::vector<SourceOutcome> per_source;  // in batch order
    int n_sources = 0;
    int n_sets_used = 0;

    const SourceOutcome* find(std::string_view source_id) const;
    bool all_ok() const;
};

/// Splits a multi-branch batch into per-source single-branch batches, each
/// pairing the shared PCC voltage with that source's own branch current.
/// Batch order and source order are preserved.
std::vector<std::pair<std::string, std::vector<MeasurementSet>>> split_by_source(
    std::span<const MeasurementSet> measurements);

/// Runs the chosen estimator independently per source branch: each branch
/// obeys the same single-source voltage-loop equation, so the single-source
/// machinery applies unchanged. `truth` entries are matched by source_id.
MultiSourceReport estimate_all(std::span<const MeasurementSet> measurements, Method method,
                               const NlsConfig& cfg = {},
                               const std::map<std::string, TheveninParams>& truth = {},
                               Exec exec = Exec::parallel);

}  // namespace thevest
