#include "bilayer/estimators.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bilayer {

double order_parameter(std::span<const std::int8_t> spins, const Lattice& lattice)
{
    const int half = lattice.sites_per_layer();
    int sum = 0;
    for (int i = 0; i < half; ++i) sum += spins[static_cast<std::size_t>(i)] - spins[static_cast<std::size_t>(i + half)];
    // sigma = 2 S^z
    return 0.5 * sum / lattice.n_spins();
}

MagnetizationSample measure_m(const SseConfig& cfg, const Lattice& lattice, bool slice_average)
{
    MagnetizationSample out;
    auto add = [&out](double m, double w) {
        const double m2 = m * m;
        out.m += w * m;
        out.abs += w * std::abs(m);
        out.m2 += w * m2;
        out.m4 += w * m2 * m2;
    };
    const double m0 = order_parameter(cfg.spins, lattice);
    if (!slice_average || cfg.n_ops == 0) {
        add(m0, 1.0);
        return out;
    }
    // Only off-diagonal operators change m; each flips one A and one B spin.
    const int half = lattice.sites_per_layer();
    const double unit = 1.0 / lattice.n_spins();
    SpinState s = cfg.spins;
    double m = m0;
    const double w = 1.0 / static_cast<double>(cfg.n_ops);
    for (const auto op : cfg.ops) {
        if (op.is_null()) continue;
        if (op.is_offdiagonal()) {
            const int a = lattice.bond(op.bond()).site1;
            // sigma_A - sigma_B goes from 2 sigma_A to -2 sigma_A
            m -= 2.0 * s[static_cast<std::size_t>(a)] * unit;
            s[static_cast<std::size_t>(a)] = static_cast<std::int8_t>(-s[static_cast<std::size_t>(a)]);
            s[static_cast<std::size_t>(a + half)] = static_cast<std::int8_t>(-s[static_cast<std::size_t>(a + half)]);
        }
        add(m, w);
    }
    return out;
}

std::optional<double> binder(double m2, double m4)
{
    if (!(m2 > 0.0)) return std::nullopt;
    const double r2 = m4 / (m2 * m2);
    return 1.5 * (1.0 - r2 / 3.0);
}

double susceptibility(double m2, double m_abs, double beta, int n_spins)
{
    return beta * n_spins * (m2 - m_abs * m_abs);
}

std::vector<double> correlation_G(std::span<const std::int8_t> spins, const Lattice& lattice)
{
    const int L = lattice.linear_size();
    const int A = L * L;
    std::vector<double> g(static_cast<std::size_t>(A), 0.0);
    for (int dy = 0; dy < L; ++dy)
        for (int dx = 0; dx < L; ++dx) {
            int sum = 0;
            for (int y = 0; y < L; ++y) {
                const int yy = (y + dy) % L;
                for (int x = 0; x < L; ++x)
                    sum += spins[static_cast<std::size_t>(y * L + x)] * spins[static_cast<std::size_t>(yy * L + (x + dx) % L)];
            }
            g[static_cast<std::size_t>(dy * L + dx)] = 0.25 * sum / A;
        }
    return g;
}

double energy(double mean_n, double beta, const Lattice& lattice, const Couplings& c)
{
    return -mean_n / beta + energy_shift(lattice, c);
}

std::string correlation_label(int dx, int dy)
{
    return "G_" + std::to_string(dx) + "_" + std::to_string(dy);
}

std::vector<std::string> standard_labels(const Lattice& lattice, const MeasureOptions& options)
{
    std::vector<std::string> labels{"n", "m", "m_abs", "m2", "m4"};
    if (options.correlations) {
        const int L = lattice.linear_size();
        for (int dy = 0; dy < L; ++dy)
            for (int dx = 0; dx < L; ++dx) labels.push_back(correlation_label(dx, dy));
    }
    return labels;
}

Measure standard_measure(const MeasureOptions& options)
{
    return [options](const Chain& chain, std::span<double> out) {
        const auto& cfg = chain.config();
        const auto ms = measure_m(cfg, chain.lattice(), options.slice_average);
        out[0] = static_cast<double>(cfg.n_ops);
        out[1] = ms.m;
        out[2] = ms.abs;
        out[3] = ms.m2;
        out[4] = ms.m4;
        if (options.correlations) {
            const auto g = correlation_G(cfg.spins, chain.lattice());
            std::copy(g.begin(), g.end(), out.begin() + 5);
        }
    };
}

std::vector<NamedEstimate> summarize(const ObservableSeries& series, const Lattice& lattice, const Couplings& c,
                                     double beta)
{
    std::vector<NamedEstimate> out;
    const auto n_est = series.estimate("n");
    Estimate e = n_est;
    e.mean = energy(n_est.mean, beta, lattice, c);
    e.error = n_est.error / beta;
    out.push_back({"E", e});
    out.push_back({"m_abs", series.estimate("m_abs")});
    out.push_back({"m2", series.estimate("m2")});
    out.push_back({"m4", series.estimate("m4")});

    const std::string u_in[] = {"m2", "m4"};
    out.push_back({"U2", jackknife(series, u_in, [](std::span<const double> x) {
                       return binder(x[0], x[1]).value_or(std::numeric_limits<double>::quiet_NaN());
                   })});
    const std::string chi_in[] = {"m2", "m_abs"};
    const int N = lattice.n_spins();
    out.push_back({"chi", jackknife(series, chi_in, [beta, N](std::span<const double> x) {
                       return susceptibility(x[0], x[1], beta, N);
                   })});
    out.push_back({"m", series.estimate("m")});
    out.push_back({"n_ops", n_est});

    const int L = lattice.linear_size();
    if (series.contains(correlation_label(0, 0)))
        for (int dy = 0; dy < L; ++dy)
            for (int dx = 0; dx < L; ++dx) {
                const auto label = correlation_label(dx, dy);
                out.push_back({label, series.estimate(label)});
            }
    return out;
}

std::vector<ResultRow> to_rows(const SeriesMeta& meta, std::int64_t n_bins, std::span<const NamedEstimate> values)
{
    std::vector<ResultRow> rows;
    rows.reserve(values.size());
    for (const auto& v : values)
        rows.push_back({meta.L, meta.g, meta.beta, meta.seed, v.observable, v.value.mean, v.value.error, n_bins});
    return rows;
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s)
{
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("malformed number '" + s + "' in result CSV");
    return v;
}

template <class Int>
Int parse_int(const std::string& s)
{
    Int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("malformed integer '" + s + "' in result CSV");
    return v;
}

}  // namespace

void write_result_csv(std::ostream& os, std::span<const ResultRow> rows)
{
    os << result_csv_header << '\n';
    for (const auto& r : rows)
        os << r.L << ',' << format_double(r.g) << ',' << format_double(r.beta) << ',' << r.seed << ','
           << r.observable << ',' << format_double(r.mean) << ',' << format_double(r.error) << ',' << r.n_bins
           << '\n';
}

std::vector<ResultRow> read_result_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != result_csv_header)
        throw std::runtime_error("result CSV is missing the expected header");
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw std::runtime_error("result CSV row has " + std::to_string(f.size()) + " fields");
        rows.push_back({parse_int<int>(f[0]), parse_double(f[1]), parse_double(f[2]),
                        parse_int<std::uint64_t>(f[3]), f[4], parse_double(f[5]), parse_double(f[6]),
                        parse_int<std::int64_t>(f[7])});
    }
    return rows;
}

nlohmann::json result_json(std::span<const ResultRow> rows)
{
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) {
        auto num = [](double v) -> nlohmann::json {
            if (std::isfinite(v)) return v;
            return nullptr;
        };
        arr.push_back({{"L", r.L},
                       {"g", r.g},
                       {"beta", r.beta},
                       {"seed", r.seed},
                       {"observable", r.observable},
                       {"mean", num(r.mean)},
                       {"error", num(r.error)},
                       {"n_bins", r.n_bins}});
    }
    return arr;
}

}  // namespace bilayer
