#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bilayer/series.hpp"
#include "bilayer/sse.hpp"

namespace bilayer {

struct RunPlan {
    std::int64_t n_equil = 1000;
    std::int64_t n_bins = 20;
    std::int64_t bin_size = 100;

    friend bool operator==(const RunPlan&, const RunPlan&) = default;
};

/// Writes one value per label into `out` for the current configuration.
using Measure = std::function<void(const Chain&, std::span<double> out)>;

/// Where a run stands; only ever captured at bin boundaries.
struct RunProgress {
    std::int64_t equil_done = 0;
    ObservableSeries series;

    friend bool operator==(const RunProgress&, const RunProgress&) = default;
};

/// Continues a run until `bins_target` bins exist (capped by the plan).
/// Equilibration (with cutoff adjustment) is finished first; the cutoff is
/// frozen during measurement.
void advance(Chain& chain, RunProgress& progress, const RunPlan& plan, const Measure& measure,
             std::int64_t bins_target);

ObservableSeries run(Chain& chain, const RunPlan& plan, std::vector<std::string> labels, const Measure& measure);

}  // namespace bilayer
