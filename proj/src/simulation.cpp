#include "bilayer/simulation.hpp"

#include <algorithm>
#include <stdexcept>

namespace bilayer {

void advance(Chain& chain, RunProgress& progress, const RunPlan& plan, const Measure& measure,
             std::int64_t bins_target)
{
    if (plan.bin_size < 1 || plan.n_bins < 0 || plan.n_equil < 0) throw std::invalid_argument("invalid run plan");
    for (; progress.equil_done < plan.n_equil; ++progress.equil_done) chain.sweep(true);

    const std::size_t k = progress.series.n_observables();
    std::vector<double> sample(k), sums(k);
    const std::int64_t target = std::min(bins_target, plan.n_bins);
    while (progress.series.n_bins() < target) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::int64_t i = 0; i < plan.bin_size; ++i) {
            chain.sweep(false);
            measure(chain, sample);
            for (std::size_t j = 0; j < k; ++j) sums[j] += sample[j];
        }
        for (auto& s : sums) s /= static_cast<double>(plan.bin_size);
        progress.series.add_bin(sums);
    }
}

ObservableSeries run(Chain& chain, const RunPlan& plan, std::vector<std::string> labels, const Measure& measure)
{
    RunProgress progress;
    progress.series = ObservableSeries(std::move(labels));
    auto& meta = progress.series.meta();
    meta.L = chain.lattice().linear_size();
    meta.g = chain.couplings().g();
    meta.beta = chain.beta();
    meta.n_equil = plan.n_equil;
    meta.bin_size = plan.bin_size;
    advance(chain, progress, plan, measure, plan.n_bins);
    return std::move(progress.series);
}

}  // namespace bilayer
