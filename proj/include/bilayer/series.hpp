#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bilayer {

struct Estimate {
    double mean = 0.0;
    double error = 0.0;
    /// False when fewer than 10 bins entered the error estimate or the value
    /// is undefined.
    bool reliable = false;
};

constexpr std::int64_t min_reliable_bins = 10;

struct SeriesMeta {
    int L = 0;
    double g = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::int64_t n_equil = 0;
    std::int64_t bin_size = 0;

    friend bool operator==(const SeriesMeta&, const SeriesMeta&) = default;
};

/// Bin means of a set of labelled observables.
class ObservableSeries {
public:
    ObservableSeries() = default;
    explicit ObservableSeries(std::vector<std::string> labels, SeriesMeta meta = {});

    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t n_observables() const { return labels_.size(); }
    std::int64_t n_bins() const { return bins_.empty() ? 0 : static_cast<std::int64_t>(bins_.front().size()); }
    const SeriesMeta& meta() const { return meta_; }
    SeriesMeta& meta() { return meta_; }

    void add_bin(std::span<const double> means);
    /// Concatenates the bins of another series with identical labels.
    void append(const ObservableSeries& other);

    std::size_t index_of(std::string_view label) const;
    bool contains(std::string_view label) const;
    std::span<const double> bins(std::size_t index) const { return bins_[index]; }
    std::span<const double> bins(std::string_view label) const { return bins_[index_of(label)]; }

    /// Mean and standard error from the bin-to-bin variance.
    Estimate estimate(std::string_view label) const { return bin_estimate(bins(label)); }
    static Estimate bin_estimate(std::span<const double> bins);

    friend bool operator==(const ObservableSeries&, const ObservableSeries&) = default;

private:
    std::vector<std::string> labels_;
    std::vector<std::vector<double>> bins_;
    SeriesMeta meta_;
};

/// Jackknife over bins for f(<x_1>, ..., <x_k>); `inputs` are labels.
Estimate jackknife(const ObservableSeries& series, std::span<const std::string> inputs,
                   const std::function<double(std::span<const double>)>& f);

/// Groups a raw per-sweep series into bins of `bin_size` (a trailing partial
/// bin is dropped).
ObservableSeries bin_series(std::span<const double> raw, std::int64_t bin_size, std::string label);

}  // namespace bilayer
