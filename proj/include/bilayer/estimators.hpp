#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilayer/lattice.hpp"
#include "bilayer/series.hpp"
#include "bilayer/simulation.hpp"
#include "bilayer/sse.hpp"

namespace bilayer {

/// Per-site order parameter mbar = sum_i (S^z_{A,i} - S^z_{B,i}) / N with
/// N = 2 L^2, and its moments.
struct MagnetizationSample {
    double m = 0.0;
    double abs = 0.0;
    double m2 = 0.0;
    double m4 = 0.0;
};

double order_parameter(std::span<const std::int8_t> spins, const Lattice& lattice);

/// At slice 0, or averaged over the n propagated states when
/// `slice_average` is set.
MagnetizationSample measure_m(const SseConfig& cfg, const Lattice& lattice, bool slice_average = false);

/// U_2 = (3/2)(1 - R_2/3), R_2 = <m^4>/<m^2>^2. Empty if <m^2> = 0.
std::optional<double> binder(double m2, double m4);

/// chi = beta N (<mbar^2> - <|mbar|>^2).
double susceptibility(double m2, double m_abs, double beta, int n_spins);

/// Layer-A equal-time correlation G(dx, dy) = (1/L^2) sum_r <S^z_r S^z_{r+d}>,
/// indexed dy * L + dx with periodic displacement arithmetic.
std::vector<double> correlation_G(std::span<const std::int8_t> spins, const Lattice& lattice);

/// E = -<n>/beta + (2 N_I J + N_H J') / 4.
double energy(double mean_n, double beta, const Lattice& lattice, const Couplings& c);

struct ScalarSet {
    double m_abs = 0.0;
    double m2 = 0.0;
    double m4 = 0.0;
    double U2 = 0.0;
    double chi = 0.0;
    double E = 0.0;
};

struct MeasureOptions {
    bool correlations = false;
    bool slice_average = false;

    friend bool operator==(const MeasureOptions&, const MeasureOptions&) = default;
};

/// Raw per-sweep quantities: n, m, m_abs, m2, m4 and optionally G_dx_dy.
std::vector<std::string> standard_labels(const Lattice& lattice, const MeasureOptions& options);
Measure standard_measure(const MeasureOptions& options);

std::string correlation_label(int dx, int dy);

/// Named estimate of a derived or measured observable.
struct NamedEstimate {
    std::string observable;
    Estimate value;
};

/// E, m_abs, m2, m4, U2, chi, m, n_ops and G_dx_dy (when measured). U2 and
/// chi carry jackknife errors.
std::vector<NamedEstimate> summarize(const ObservableSeries& series, const Lattice& lattice, const Couplings& c,
                                     double beta);

/// One row of the estimator CSV schema.
struct ResultRow {
    int L = 0;
    double g = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::string observable;
    double mean = 0.0;
    double error = 0.0;
    std::int64_t n_bins = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

std::vector<ResultRow> to_rows(const SeriesMeta& meta, std::int64_t n_bins, std::span<const NamedEstimate> values);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

inline constexpr const char* result_csv_header = "L,g,beta,seed,observable,mean,error,n_bins";
void write_result_csv(std::ostream& os, std::span<const ResultRow> rows);
std::vector<ResultRow> read_result_csv(std::istream& is);
nlohmann::json result_json(std::span<const ResultRow> rows);

}  // namespace bilayer
