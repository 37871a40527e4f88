#include "bilayer/fss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <ostream>
#include <tuple>

#include <Eigen/Dense>

#include "bilayer/rng.hpp"

namespace bilayer::fss {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Inverse-variance pooling of repeated estimates (several chains or files).
void pool(Estimate& into, const Estimate& e, bool first) {
    if (first) {
        into = e;
        return;
    }
    if (into.error > 0.0 && e.error > 0.0) {
        double w1 = 1.0 / (into.error * into.error), w2 = 1.0 / (e.error * e.error);
        into.mean = (w1 * into.mean + w2 * e.mean) / (w1 + w2);
        into.error = 1.0 / std::sqrt(w1 + w2);
    } else {
        into.mean = 0.5 * (into.mean + e.mean);
        into.error = 0.0;
    }
    into.reliable = into.reliable && e.reliable;
}

}  // namespace

SweepDataset dataset_from_rows(std::span<const ResultRow> rows) {
    struct Acc {
        double beta = 0.0;
        SweepPoint p;
        bool seen[3] = {false, false, false};
    };
    std::map<std::pair<int, double>, Acc> acc;
    for (const auto& r : rows) {
        int which = r.observable == "U2" ? 0 : r.observable == "chi" ? 1 : r.observable == "m_abs" ? 2 : -1;
        if (which < 0) continue;
        auto& a = acc[{r.L, r.g}];
        a.beta = r.beta;
        a.p.g = r.g;
        Estimate e{r.mean, r.error, r.n_bins >= min_reliable_bins};
        Estimate& slot = which == 0 ? a.p.U2 : which == 1 ? a.p.chi : a.p.m_abs;
        pool(slot, e, !a.seen[which]);
        a.seen[which] = true;
    }
    SweepDataset out;
    for (auto& [key, a] : acc) {
        if (out.sizes.empty() || out.sizes.back().L != key.first) {
            out.sizes.push_back({});
            out.sizes.back().L = key.first;
            out.sizes.back().beta = a.beta;
        }
        out.sizes.back().points.push_back(a.p);
    }
    // beta policy label: proportional to L when beta/L is common to all sizes
    bool proportional = !out.sizes.empty();
    bool fixed = !out.sizes.empty();
    for (const auto& s : out.sizes) {
        proportional = proportional && std::abs(s.beta / s.L - out.sizes[0].beta / out.sizes[0].L) < 1e-12;
        fixed = fixed && s.beta == out.sizes[0].beta;
    }
    if (out.sizes.size() > 1 && proportional)
        out.beta_policy = "beta=" + format_double(out.sizes[0].beta / out.sizes[0].L) + "L";
    else if (fixed)
        out.beta_policy = "beta=" + format_double(out.sizes[0].beta);
    else
        out.beta_policy = "mixed";
    return out;
}

Curve curve_of(const SizeSeries& size, Observable obs) {
    Curve c;
    for (const auto& p : size.points) {
        const Estimate& e = obs == Observable::U2 ? p.U2 : obs == Observable::chi ? p.chi : p.m_abs;
        c.x.push_back(p.g);
        c.y.push_back(e.mean);
        c.sigma.push_back(e.error);
    }
    return c;
}

double interpolate(const Curve& c, double x) {
    const std::size_t n = c.size();
    if (n == 0) throw std::invalid_argument("interpolate: empty curve");
    if (n == 1) return c.y[0];
    std::size_t i = std::upper_bound(c.x.begin(), c.x.end(), x) - c.x.begin();
    i = std::clamp<std::size_t>(i, 1, n - 1) - 1;  // x in [x_i, x_{i+1}]
    std::size_t width = std::min<std::size_t>(4, n);
    std::size_t lo = i >= 1 ? i - 1 : 0;
    lo = std::min(lo, n - width);
    double sum = 0.0;
    for (std::size_t j = lo; j < lo + width; ++j) {
        double w = 1.0;
        for (std::size_t k = lo; k < lo + width; ++k)
            if (k != j) w *= (x - c.x[k]) / (c.x[j] - c.x[k]);
        sum += w * c.y[j];
    }
    return sum;
}

namespace {

struct Root {
    bool found = false;
    double x = 0.0;
    bool ambiguous = false;
};

Root crossing_root(const Curve& a, const Curve& b) {
    if (a.size() < 2 || b.size() < 2) return {};
    double lo = std::max(a.x.front(), b.x.front());
    double hi = std::min(a.x.back(), b.x.back());
    if (!(lo < hi)) return {};
    std::vector<double> grid;
    for (const Curve* c : {&a, &b})
        for (double x : c->x)
            if (x >= lo && x <= hi) grid.push_back(x);
    grid.push_back(lo);
    grid.push_back(hi);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    auto diff = [&](double x) { return interpolate(a, x) - interpolate(b, x); };
    std::vector<double> d(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) d[i] = diff(grid[i]);

    // candidate brackets; an exact zero at a node is its own bracket
    int best = -1;
    double best_slope = -1.0;
    int n_changes = 0;
    bool exact = false;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        bool change = (d[i] < 0.0 && d[i + 1] > 0.0) || (d[i] > 0.0 && d[i + 1] < 0.0);
        bool zero = d[i] == 0.0;
        if (!change && !zero) continue;
        ++n_changes;
        double slope = std::abs(d[i + 1] - d[i]) / (grid[i + 1] - grid[i]);
        if (slope > best_slope) {
            best_slope = slope;
            best = static_cast<int>(i);
            exact = zero;
        }
    }
    if (d.back() == 0.0 && best < 0) {
        return {true, grid.back(), false};
    }
    if (best < 0) return {};
    Root r{true, 0.0, n_changes > 1};
    if (exact) {
        r.x = grid[best];
        return r;
    }
    double xl = grid[best], xh = grid[best + 1], dl = d[best];
    for (int it = 0; it < 100 && xh - xl > 1e-14 * std::max(1.0, std::abs(xl)); ++it) {
        double mid = 0.5 * (xl + xh);
        double dm = diff(mid);
        if (dm == 0.0) {
            xl = xh = mid;
            break;
        }
        if ((dm < 0.0) == (dl < 0.0)) {
            xl = mid;
            dl = dm;
        } else {
            xh = mid;
        }
    }
    r.x = 0.5 * (xl + xh);
    return r;
}

}  // namespace

Crossing find_crossing(const Curve& a, const Curve& b, int resamples, std::uint64_t seed) {
    Crossing out;
    Root r = crossing_root(a, b);
    if (!r.found) return out;
    out.found = true;
    out.g = r.x;
    out.ambiguous = r.ambiguous;
    if (resamples < 2) return out;
    Rng rng(seed);
    Curve ra = a, rb = b;
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (int s = 0; s < resamples; ++s) {
        for (std::size_t i = 0; i < a.size(); ++i) ra.y[i] = a.y[i] + a.sigma[i] * rng.normal();
        for (std::size_t i = 0; i < b.size(); ++i) rb.y[i] = b.y[i] + b.sigma[i] * rng.normal();
        Root rr = crossing_root(ra, rb);
        if (!rr.found) continue;
        sum += rr.x;
        sum2 += rr.x * rr.x;
        ++n;
    }
    if (n >= 2) {
        double mean = sum / n;
        out.error = std::sqrt(std::max(0.0, (sum2 - n * mean * mean) / (n - 1)));
    } else {
        out.error = inf;
    }
    return out;
}

std::vector<Crossing> binder_crossings(const SweepDataset& data, int resamples) {
    const auto& s = data.sizes;
    auto cross = [&](std::size_t i, std::size_t j) {
        Crossing c = find_crossing(curve_of(s[i], Observable::U2), curve_of(s[j], Observable::U2), resamples,
                                   mix_seed({static_cast<std::uint64_t>(s[i].L), static_cast<std::uint64_t>(s[j].L)}));
        c.L1 = s[i].L;
        c.L2 = s[j].L;
        return c;
    };
    std::vector<Crossing> out;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) out.push_back(cross(i, i + 1));
    if (out.size() < 3 && s.size() >= 3) {
        out.clear();
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j) out.push_back(cross(i, j));
    }
    return out;
}

double crossing_size(const Crossing& c) { return 0.5 * (c.L1 + c.L2); }

namespace {

struct LinearFit {
    double c0 = 0.0, c1 = 0.0, var0 = 0.0, chi2 = 0.0;
    bool ok = false;
};

// Weighted least squares y = c0 + c1 u.
LinearFit weighted_line(std::span<const double> u, std::span<const double> y, std::span<const double> w) {
    double S = 0, Su = 0, Suu = 0, Sy = 0, Suy = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        S += w[i];
        Su += w[i] * u[i];
        Suu += w[i] * u[i] * u[i];
        Sy += w[i] * y[i];
        Suy += w[i] * u[i] * y[i];
    }
    LinearFit f;
    double det = S * Suu - Su * Su;
    if (!(std::abs(det) > 1e-14 * S * std::max(Suu, 1e-300))) return f;
    f.c1 = (S * Suy - Su * Sy) / det;
    f.c0 = (Suu * Sy - Su * Suy) / det;
    f.var0 = Suu / det;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double r = y[i] - f.c0 - f.c1 * u[i];
        f.chi2 += w[i] * r * r;
    }
    f.ok = true;
    return f;
}

std::vector<double> weights_of(std::span<const double> err) {
    bool all_pos = std::all_of(err.begin(), err.end(), [](double e) { return e > 0.0 && std::isfinite(e); });
    std::vector<double> w(err.size(), 1.0);
    if (all_pos)
        for (std::size_t i = 0; i < err.size(); ++i) w[i] = 1.0 / (err[i] * err[i]);
    return w;
}

}  // namespace

Extrapolation extrapolate_gc(std::span<const double> sizes, std::span<const double> crossings,
                             std::span<const double> errors) {
    if (sizes.size() != crossings.size() || sizes.size() != errors.size())
        throw std::invalid_argument("extrapolate_gc: size mismatch");
    if (sizes.empty()) throw std::invalid_argument("extrapolate_gc: no crossings");
    const std::size_t n = sizes.size();
    std::vector<double> w = weights_of(errors);
    std::vector<double> u(n);
    auto fit_at = [&](double omega) {
        for (std::size_t i = 0; i < n; ++i) u[i] = std::pow(sizes[i], -omega);
        return weighted_line(u, crossings, w);
    };

    Extrapolation out;
    double spread = *std::max_element(crossings.begin(), crossings.end()) -
                    *std::min_element(crossings.begin(), crossings.end());
    double scale = std::max(1.0, std::abs(crossings[0]));
    bool drift = spread > 1e-12 * scale;

    constexpr double omega_lo = 0.25, omega_hi = 8.0, step = 0.01;
    double best_omega = 0.0, best_chi2 = inf, worst_chi2 = 0.0;
    if (n >= 3 && drift) {
        for (double om = omega_lo; om <= omega_hi + 1e-9; om += step) {
            LinearFit f = fit_at(om);
            if (!f.ok) continue;
            if (f.chi2 < best_chi2) {
                best_chi2 = f.chi2;
                best_omega = om;
            }
            worst_chi2 = std::max(worst_chi2, f.chi2);
        }
        if (std::isfinite(best_chi2)) {
            // golden-section polish inside the bracketing grid cell
            double a = std::max(omega_lo, best_omega - step), b = std::min(omega_hi, best_omega + step);
            const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
            for (int it = 0; it < 60; ++it) {
                double c = b - phi * (b - a), d = a + phi * (b - a);
                if (fit_at(c).chi2 < fit_at(d).chi2)
                    b = d;
                else
                    a = c;
            }
            double om = 0.5 * (a + b);
            if (fit_at(om).chi2 <= best_chi2) best_omega = om;
            best_chi2 = fit_at(best_omega).chi2;
        }
    }
    // omega is not identifiable when the scan is flat or runs into its ends
    bool at_edge = best_omega <= omega_lo + step || best_omega >= omega_hi - step;
    bool flat = !(worst_chi2 - best_chi2 > 1e-12 * std::max(1.0, worst_chi2));
    out.degenerate = n < 3 || !drift || !std::isfinite(best_chi2) || at_edge || flat;
    double omega = out.degenerate ? fallback_omega : best_omega;
    out.fallback = out.degenerate;
    LinearFit f = fit_at(omega);
    if (!f.ok) {
        // a single size: nothing to extrapolate
        double sw = 0, swy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += w[i];
            swy += w[i] * crossings[i];
        }
        out.g_c = swy / sw;
        out.error = 1.0 / std::sqrt(sw);
        out.omega = omega;
        return out;
    }
    out.g_c = f.c0;
    out.amplitude = f.c1;
    out.omega = omega;
    out.chi2 = f.chi2;
    out.error = std::sqrt(f.var0);
    if (!std::all_of(errors.begin(), errors.end(), [](double e) { return e > 0.0 && std::isfinite(e); })) {
        // unit weights: scale by the residual variance
        double dof = static_cast<double>(n) - 2.0;
        out.error = dof > 0 ? std::sqrt(f.var0 * f.chi2 / dof) : 0.0;
    }
    return out;
}

std::vector<CollapsedPoint> collapse_points(const SweepDataset& data, const CollapseParams& p, Observable obs) {
    if (!(p.nu > 0.0) || !(p.g_c > 0.0)) throw std::invalid_argument("collapse: need nu > 0 and g_c > 0");
    double kappa = obs == Observable::chi ? -p.gamma / p.nu : 0.0;
    if (obs == Observable::m_abs) kappa = (1.0 + p.eta) / (2.0 * p.nu);  // beta/nu from hyperscaling, d = 2+1
    std::vector<CollapsedPoint> out;
    for (const auto& s : data.sizes) {
        double sx = std::pow(static_cast<double>(s.L), 1.0 / p.nu);
        double sy = std::pow(static_cast<double>(s.L), kappa);
        Curve c = curve_of(s, obs);
        for (std::size_t i = 0; i < c.size(); ++i)
            out.push_back({s.L, c.x[i], (c.x[i] - p.g_c) / p.g_c * sx, c.y[i] * sy, c.sigma[i] * sy});
    }
    return out;
}

SplineFit smoothing_spline(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
    const std::size_t n0 = x.size();
    if (y.size() != n0 || sigma.size() != n0) throw std::invalid_argument("smoothing_spline: size mismatch");
    if (!std::is_sorted(x.begin(), x.end())) throw std::invalid_argument("smoothing_spline: x must be sorted");
    std::vector<double> w0 = weights_of(sigma);
    double range = n0 ? x.back() - x.front() : 0.0;

    // pool near-duplicate abscissae into one knot with summed weight
    std::vector<double> kx, ky, kw;
    std::vector<std::size_t> knot_of(n0);
    for (std::size_t i = 0; i < n0; ++i) {
        if (kx.empty() || x[i] - kx.back() > 1e-10 * std::max(range, 1e-300)) {
            kx.push_back(x[i]);
            ky.push_back(w0[i] * y[i]);
            kw.push_back(w0[i]);
        } else {
            ky.back() += w0[i] * y[i];
            kw.back() += w0[i];
        }
        knot_of[i] = kx.size() - 1;
    }
    const std::size_t n = kx.size();
    for (std::size_t k = 0; k < n; ++k) ky[k] /= kw[k];

    SplineFit out;
    out.fitted.assign(n0, 0.0);
    auto finish = [&](const Eigen::VectorXd& f, double trace, double lambda) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n0; ++i) {
            out.fitted[i] = f[static_cast<Eigen::Index>(knot_of[i])];
            double r = y[i] - out.fitted[i];
            rss += w0[i] * r * r;
        }
        out.rss = rss;
        out.trace = trace;
        out.lambda = lambda;
        double denom = static_cast<double>(n0) - trace;
        out.gcv = denom > 0 ? n0 * rss / (denom * denom) : inf;
    };
    if (n < 3) {
        // a straight line is the whole null space
        Eigen::VectorXd f(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k) f[static_cast<Eigen::Index>(k)] = ky[k];
        finish(f, static_cast<double>(n), 0.0);
        return out;
    }

    // work on x scaled to [0, 1] and weights scaled to unit mean, so that the
    // lambda grid does not depend on units
    const double xs = kx.back() - kx.front();
    double wmean = 0.0;
    for (double v : kw) wmean += v;
    wmean /= static_cast<double>(n);
    using Eigen::Index;
    const Index N = static_cast<Index>(n);
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = (kx[i + 1] - kx[i]) / xs;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N - 2);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(N - 2, N - 2);
    for (Index j = 0; j < N - 2; ++j) {
        Q(j, j) = 1.0 / h[j];
        Q(j + 1, j) = -1.0 / h[j] - 1.0 / h[j + 1];
        Q(j + 2, j) = 1.0 / h[j + 1];
        R(j, j) = (h[j] + h[j + 1]) / 3.0;
        if (j + 1 < N - 2) R(j, j + 1) = R(j + 1, j) = h[j + 1] / 6.0;
    }
    Eigen::MatrixXd K = Q * R.ldlt().solve(Q.transpose());
    Eigen::VectorXd W(N), Y(N);
    for (Index k = 0; k < N; ++k) {
        W[k] = kw[static_cast<std::size_t>(k)] / wmean;
        Y[k] = ky[static_cast<std::size_t>(k)];
    }
    // W^-1/2 K W^-1/2 = U D U^T once; then every lambda is a diagonal filter.
    // Pooled points contribute sum_i w_i / W_k = 1 per knot to the trace.
    Eigen::VectorXd rw = W.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd Kt = rw.asDiagonal() * K * rw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Kt + Kt.transpose()));
    const Eigen::VectorXd& D = eig.eigenvalues();
    const Eigen::MatrixXd& U = eig.eigenvectors();
    Eigen::VectorXd proj = U.transpose() * W.cwiseSqrt().cwiseProduct(Y);

    double best_gcv = inf;
    Eigen::VectorXd best_f;
    double best_trace = 0, best_lambda = 0;
    for (double lg = -10.0; lg <= 4.0 + 1e-9; lg += 0.125) {
        double lambda = std::pow(10.0, lg);
        Eigen::VectorXd filt(N);
        double trace = 0.0;
        for (Index k = 0; k < N; ++k) {
            filt[k] = 1.0 / (1.0 + lambda * std::max(0.0, D[k]));
            trace += filt[k];
        }
        // keep at least half the points' worth of residual degrees of freedom;
        // near-interpolating fits would absorb misalignment between sizes
        if (trace > 0.5 * static_cast<double>(n0)) continue;
        Eigen::VectorXd f = rw.cwiseProduct(U * filt.cwiseProduct(proj));
        finish(f, trace, lambda);
        if (out.gcv < best_gcv) {
            best_gcv = out.gcv;
            best_f = f;
            best_trace = trace;
            best_lambda = lambda;
        }
    }
    if (!std::isfinite(best_gcv)) throw std::runtime_error("smoothing_spline: no admissible smoothing parameter");
    finish(best_f, best_trace, best_lambda);
    return out;
}

CollapseResult collapse_cost(const SweepDataset& data, const CollapseParams& p, Observable obs) {
    auto pts = collapse_points(data, p, obs);
    CollapseResult out;
    // common x window of all sizes
    double lo = -inf, hi = inf;
    for (const auto& s : data.sizes) {
        double smin = inf, smax = -inf;
        for (const auto& q : pts)
            if (q.L == s.L) {
                smin = std::min(smin, q.x);
                smax = std::max(smax, q.x);
            }
        lo = std::max(lo, smin);
        hi = std::min(hi, smax);
    }
    std::vector<CollapsedPoint> in;
    for (const auto& q : pts)
        if (q.x >= lo && q.x <= hi) in.push_back(q);
    // order independent of how sizes are listed
    std::sort(in.begin(), in.end(), [](const CollapsedPoint& a, const CollapsedPoint& b) {
        return std::tie(a.x, a.L, a.y, a.sigma) < std::tie(b.x, b.L, b.y, b.sigma);
    });
    out.n_points = static_cast<int>(in.size());
    int sizes_in = 0;
    for (const auto& s : data.sizes)
        sizes_in += std::any_of(in.begin(), in.end(), [&](const CollapsedPoint& q) { return q.L == s.L; });
    if (data.sizes.size() < 2 || !(lo < hi) || in.size() < 4 || sizes_in < static_cast<int>(data.sizes.size())) {
        out.overlap_ok = false;
        out.cost = inf;
        return out;
    }
    std::vector<double> x, y, sig;
    for (const auto& q : in) {
        x.push_back(q.x);
        y.push_back(q.y);
        sig.push_back(q.sigma);
    }
    SplineFit fit = smoothing_spline(x, y, sig);
    out.lambda = fit.lambda;
    out.effective_dof = static_cast<double>(in.size()) - fit.trace;
    out.cost = out.effective_dof > 0 ? fit.rss / out.effective_dof : inf;
    return out;
}

CollapseParams optimize_collapse(const SweepDataset& data, CollapseParams start, Observable obs) {
    double gmin = inf, gmax = -inf;
    for (const auto& s : data.sizes)
        for (const auto& q : s.points) {
            gmin = std::min(gmin, q.g);
            gmax = std::max(gmax, q.g);
        }
    if (!(gmin < gmax)) return start;
    CollapseParams best = start;
    double best_cost = collapse_cost(data, best, obs).cost;
    auto consider = [&](double g_c, double nu) {
        CollapseParams q = start;
        q.g_c = g_c;
        q.nu = nu;
        double c = collapse_cost(data, q, obs).cost;
        if (c < best_cost) {
            best_cost = c;
            best = q;
        }
    };
    // the minimum is narrow for precise data: scan densely, then refine
    constexpr int n_scan = 40;
    constexpr double nu_lo = 0.3, nu_hi = 1.5;
    for (int i = 0; i <= n_scan; ++i)
        for (int j = 0; j <= n_scan; ++j)
            consider(gmin + (gmax - gmin) * i / n_scan, nu_lo + (nu_hi - nu_lo) * j / n_scan);
    double dg = (gmax - gmin) / n_scan, dnu = (nu_hi - nu_lo) / n_scan;
    for (int level = 0; level < 8; ++level) {
        CollapseParams centre = best;
        for (int i = -2; i <= 2; ++i)
            for (int j = -2; j <= 2; ++j)
                consider(std::clamp(centre.g_c + i * dg / 2.0, gmin, gmax), std::max(0.05, centre.nu + j * dnu / 2.0));
        dg /= 2.0;
        dnu /= 2.0;
    }
    return best;
}

PowerLawFit powerlaw_fit(std::span<const double> r, std::span<const double> G, std::span<const double> sigma,
                         double r_min, double r_max) {
    if (r.size() != G.size() || r.size() != sigma.size()) throw std::invalid_argument("powerlaw_fit: size mismatch");
    std::vector<double> lx, ly, le;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] < r_min || r[i] > r_max || !(G[i] > 0.0) || !(r[i] > 0.0)) continue;
        lx.push_back(std::log(r[i]));
        ly.push_back(std::log(G[i]));
        le.push_back(sigma[i] / G[i]);
    }
    PowerLawFit out;
    out.n_points = static_cast<int>(lx.size());
    if (lx.size() < 4) return out;
    std::vector<double> w = weights_of(le);
    LinearFit f = weighted_line(lx, ly, w);
    if (!f.ok) return out;
    out.ok = true;
    out.exponent = f.c1 == 0.0 ? 0.0 : -f.c1;
    double S = 0, Su = 0, Suu = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        S += w[i];
        Su += w[i] * lx[i];
        Suu += w[i] * lx[i] * lx[i];
    }
    double var1 = S / (S * Suu - Su * Su);
    if (std::all_of(le.begin(), le.end(), [](double e) { return e > 0.0 && std::isfinite(e); }))
        out.error = std::sqrt(var1);
    else
        out.error = std::sqrt(var1 * f.chi2 / std::max(1.0, static_cast<double>(lx.size()) - 2.0));
    return out;
}

Curve axis_correlation(const ObservableSeries& series, int L) {
    Curve c;
    const std::int64_t n_bins = series.n_bins();
    for (int r = 1; r <= L / 2; ++r) {
        const std::string labels[] = {correlation_label(r, 0), correlation_label(0, r), correlation_label((L - r) % L, 0),
                                      correlation_label(0, (L - r) % L)};
        std::vector<double> avg(static_cast<std::size_t>(n_bins), 0.0);
        for (const auto& label : labels) {
            auto bins = series.bins(label);
            for (std::int64_t b = 0; b < n_bins; ++b) avg[static_cast<std::size_t>(b)] += 0.25 * bins[static_cast<std::size_t>(b)];
        }
        Estimate e = ObservableSeries::bin_estimate(avg);
        c.x.push_back(r);
        c.y.push_back(e.mean);
        c.sigma.push_back(e.error);
    }
    return c;
}

double chord_distance(double r, int L) {
    return L / std::numbers::pi * std::sin(std::numbers::pi * r / L);
}

nlohmann::json analysis_report(const SweepDataset& data, int resamples) {
    nlohmann::json j;
    j["beta_policy"] = data.beta_policy;
    j["sizes"] = nlohmann::json::array();
    for (const auto& s : data.sizes) j["sizes"].push_back(s.L);
    j["unreliable_points"] = nlohmann::json::array();
    for (const auto& s : data.sizes)
        for (const auto& p : s.points)
            if (!p.U2.reliable || !p.chi.reliable || !p.m_abs.reliable)
                j["unreliable_points"].push_back({{"L", s.L}, {"g", p.g}});
    auto crossings = binder_crossings(data, resamples);
    j["crossings"] = nlohmann::json::array();
    std::vector<double> L, g, e;
    for (const auto& c : crossings) {
        nlohmann::json cj{{"L1", c.L1}, {"L2", c.L2}, {"found", c.found}, {"ambiguous", c.ambiguous}};
        if (c.found) {
            cj["g"] = c.g;
            cj["error"] = std::isfinite(c.error) ? nlohmann::json(c.error) : nlohmann::json(nullptr);
            L.push_back(crossing_size(c));
            g.push_back(c.g);
            e.push_back(c.error);
        }
        j["crossings"].push_back(cj);
    }
    if (!g.empty()) {
        Extrapolation x = extrapolate_gc(L, g, e);
        j["g_c"] = {{"value", x.g_c},     {"error", x.error},       {"omega", x.omega},
                    {"amplitude", x.amplitude}, {"chi2", x.chi2}, {"fallback", x.fallback}};
    } else {
        j["g_c"] = nullptr;
    }
    return j;
}

nlohmann::json collapse_scan(const SweepDataset& data, Observable obs, const CollapseParams& base,
                             std::span<const double> nus) {
    auto out = nlohmann::json::array();
    for (double nu : nus) {
        CollapseParams p = base;
        p.nu = nu;
        CollapseResult r = collapse_cost(data, p, obs);
        out.push_back({{"observable", to_string(obs)},
                       {"g_c", p.g_c},
                       {"nu", nu},
                       {"gamma", p.gamma},
                       {"cost", std::isfinite(r.cost) ? nlohmann::json(r.cost) : nlohmann::json(nullptr)},
                       {"overlap_ok", r.overlap_ok},
                       {"n_points", r.n_points},
                       {"effective_dof", r.effective_dof}});
    }
    return out;
}

Observable parse_observable(std::string_view s) {
    if (s == "U2") return Observable::U2;
    if (s == "chi") return Observable::chi;
    if (s == "m_abs") return Observable::m_abs;
    throw std::invalid_argument("unknown observable '" + std::string(s) + "' (expected U2, chi or m_abs)");
}

std::string to_string(Observable obs) {
    switch (obs) {
    case Observable::U2: return "U2";
    case Observable::chi: return "chi";
    case Observable::m_abs: return "m_abs";
    }
    return "?";
}

void write_collapsed_csv(std::ostream& os, std::span<const CollapsedPoint> points) {
    os << collapsed_csv_header << '\n';
    for (const auto& p : points)
        os << p.L << ',' << format_double(p.g) << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
           << format_double(p.sigma) << '\n';
}

}  // namespace bilayer::fss
