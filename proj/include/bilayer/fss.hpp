#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bilayer/estimators.hpp"
#include "bilayer/series.hpp"

namespace bilayer::fss {

/// One measured curve y(x) +- sigma, x strictly increasing.
struct Curve {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;

    std::size_t size() const { return x.size(); }
};

struct SweepPoint {
    double g = 0.0;
    Estimate U2;
    Estimate chi;
    Estimate m_abs;
};

struct SizeSeries {
    int L = 0;
    double beta = 0.0;
    /// Sorted by g.
    std::vector<SweepPoint> points;
};

struct SweepDataset {
    /// Sorted by L.
    std::vector<SizeSeries> sizes;
    std::string beta_policy;
};

enum class Observable { U2, chi, m_abs };

/// Groups estimator rows by (L, g); rows of other observables are ignored.
SweepDataset dataset_from_rows(std::span<const ResultRow> rows);
Curve curve_of(const SizeSeries& size, Observable obs);

/// Local cubic (four nearest grid points) interpolation.
double interpolate(const Curve& c, double x);

struct Crossing {
    bool found = false;
    int L1 = 0;
    int L2 = 0;
    double g = 0.0;
    double error = 0.0;
    /// More than one sign change in the overlap window.
    bool ambiguous = false;
};

/// Root of the difference of local cubic interpolants inside the common g
/// window. With several sign changes the steepest one is taken. The error is
/// the spread over `resamples` parametric bootstrap draws of the points.
Crossing find_crossing(const Curve& a, const Curve& b, int resamples = 200, std::uint64_t seed = 1);

/// Crossings of consecutive sizes, or of all pairs when consecutive pairs
/// give fewer than three points.
std::vector<Crossing> binder_crossings(const SweepDataset& data, int resamples = 200);

/// Size assigned to the crossing of (L1, L2) in the drift fit.
double crossing_size(const Crossing& c);

struct Extrapolation {
    double g_c = 0.0;
    double error = 0.0;
    double omega = 0.0;
    double amplitude = 0.0;
    double chi2 = 0.0;
    /// omega could not be identified and was fixed to fallback_omega.
    bool fallback = false;
    bool degenerate = false;
};

inline constexpr double fallback_omega = 2.0;

/// Weighted fit g*(L) = g_c + a L^-omega with omega free.
Extrapolation extrapolate_gc(std::span<const double> sizes, std::span<const double> crossings,
                             std::span<const double> errors);

struct CollapseParams {
    double g_c = 3.045;
    double nu = 0.63;
    double gamma = 1.24;
    double eta = 0.036;
};

struct CollapsedPoint {
    int L = 0;
    double g = 0.0;
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;
};

/// x = t L^{1/nu} with t = (g - g_c)/g_c, y = O L^{kappa}; kappa = 0 for U2
/// and -gamma/nu for chi.
std::vector<CollapsedPoint> collapse_points(const SweepDataset& data, const CollapseParams& p, Observable obs);

struct CollapseResult {
    /// Weighted residual sum of squares per effective degree of freedom of a
    /// cubic smoothing spline through the pooled points; +inf when flagged.
    double cost = 0.0;
    double lambda = 0.0;
    double effective_dof = 0.0;
    int n_points = 0;
    bool overlap_ok = true;
};

/// Scores the collapse on the x window shared by all sizes.
CollapseResult collapse_cost(const SweepDataset& data, const CollapseParams& p, Observable obs);

/// Grid refinement of (g_c, nu) minimizing collapse_cost; gamma stays fixed.
CollapseParams optimize_collapse(const SweepDataset& data, CollapseParams start, Observable obs);

struct SplineFit {
    std::vector<double> fitted;
    double lambda = 0.0;
    double trace = 0.0;
    double rss = 0.0;
    double gcv = 0.0;
};

/// Weighted cubic smoothing spline with lambda chosen by generalized
/// cross-validation. x must be sorted; near-duplicate abscissae are pooled.
SplineFit smoothing_spline(std::span<const double> x, std::span<const double> y, std::span<const double> sigma);

struct PowerLawFit {
    bool ok = false;
    /// Magnitude of the log-log slope, i.e. 1 + eta for G(r).
    double exponent = 0.0;
    double error = 0.0;
    int n_points = 0;
};

/// Weighted regression of log G on log r over r in [r_min, r_max];
/// nonpositive G is skipped, fewer than four points is flagged.
PowerLawFit powerlaw_fit(std::span<const double> r, std::span<const double> G, std::span<const double> sigma,
                         double r_min, double r_max);

/// Layer-A correlation along the lattice axes for r = 1 .. L/2: per bin the
/// mean of G(r,0), G(0,r), G(L-r,0), G(0,L-r), then binned statistics.
/// Needs the G_dx_dy columns of a periodic run.
Curve axis_correlation(const ObservableSeries& series, int L);

/// Chord distance (L/pi) sin(pi r / L) on a ring of length L.
double chord_distance(double r, int L);

nlohmann::json analysis_report(const SweepDataset& data, int resamples = 200);

/// Collapse costs of `obs` at `base` with nu replaced by each entry of `nus`.
nlohmann::json collapse_scan(const SweepDataset& data, Observable obs, const CollapseParams& base,
                             std::span<const double> nus);

Observable parse_observable(std::string_view s);
std::string to_string(Observable obs);

inline constexpr const char* collapsed_csv_header = "L,g,x,y,sigma";
void write_collapsed_csv(std::ostream& os, std::span<const CollapsedPoint> points);

}  // namespace bilayer::fss
