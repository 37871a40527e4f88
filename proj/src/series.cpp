#include "bilayer/series.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bilayer {

ObservableSeries::ObservableSeries(std::vector<std::string> labels, SeriesMeta meta)
    : labels_(std::move(labels)), bins_(labels_.size()), meta_(meta)
{
}

void ObservableSeries::add_bin(std::span<const double> means)
{
    if (means.size() != labels_.size()) throw std::invalid_argument("bin size does not match label count");
    for (std::size_t i = 0; i < means.size(); ++i) bins_[i].push_back(means[i]);
}

void ObservableSeries::append(const ObservableSeries& other)
{
    if (other.labels_ != labels_) throw std::invalid_argument("cannot merge series with different labels");
    for (std::size_t i = 0; i < bins_.size(); ++i)
        bins_[i].insert(bins_[i].end(), other.bins_[i].begin(), other.bins_[i].end());
}

std::size_t ObservableSeries::index_of(std::string_view label) const
{
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) return i;
    throw std::out_of_range("unknown observable '" + std::string(label) + "'");
}

bool ObservableSeries::contains(std::string_view label) const
{
    for (const auto& l : labels_)
        if (l == label) return true;
    return false;
}

Estimate ObservableSeries::bin_estimate(std::span<const double> bins)
{
    Estimate e;
    const auto n = static_cast<std::int64_t>(bins.size());
    if (n == 0) {
        e.mean = std::numeric_limits<double>::quiet_NaN();
        return e;
    }
    // shifted by the first bin: exact for constant series
    double shift = 0.0;
    for (double b : bins) shift += b - bins[0];
    e.mean = bins[0] + shift / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double b : bins) ss += (b - e.mean) * (b - e.mean);
        e.error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    e.reliable = n >= min_reliable_bins;
    return e;
}

Estimate jackknife(const ObservableSeries& series, std::span<const std::string> inputs,
                   const std::function<double(std::span<const double>)>& f)
{
    const std::int64_t n = series.n_bins();
    const std::size_t k = inputs.size();
    Estimate e;
    if (n == 0) {
        e.mean = std::numeric_limits<double>::quiet_NaN();
        return e;
    }
    std::vector<std::span<const double>> cols;
    std::vector<double> sums(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        cols.push_back(series.bins(inputs[j]));
        for (double b : cols.back()) sums[j] += b;
    }
    std::vector<double> x(k);
    for (std::size_t j = 0; j < k; ++j) x[j] = sums[j] / static_cast<double>(n);
    e.mean = f(x);
    if (n < 2) return e;

    std::vector<double> loo(static_cast<std::size_t>(n));
    double loo_mean = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j)
            x[j] = (sums[j] - cols[j][static_cast<std::size_t>(i)]) / static_cast<double>(n - 1);
        loo[static_cast<std::size_t>(i)] = f(x);
        loo_mean += loo[static_cast<std::size_t>(i)];
    }
    loo_mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
    e.error = std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
    e.reliable = n >= min_reliable_bins && std::isfinite(e.mean) && std::isfinite(e.error);
    return e;
}

ObservableSeries bin_series(std::span<const double> raw, std::int64_t bin_size, std::string label)
{
    if (bin_size < 1) throw std::invalid_argument("bin size must be positive");
    ObservableSeries out({std::move(label)});
    const auto n_bins = static_cast<std::int64_t>(raw.size()) / bin_size;
    for (std::int64_t b = 0; b < n_bins; ++b) {
        double sum = 0.0;
        for (std::int64_t i = 0; i < bin_size; ++i) sum += raw[static_cast<std::size_t>(b * bin_size + i)];
        const double mean = sum / static_cast<double>(bin_size);
        out.add_bin(std::span<const double>(&mean, 1));
    }
    out.meta().bin_size = bin_size;
    return out;
}

}  // namespace bilayer
