#include "bilayer/ed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bilayer::ed {

namespace {

void check_size(const Lattice& lattice)
{
    if (lattice.n_spins() > max_spins)
        throw std::invalid_argument("exact diagonalization is limited to " + std::to_string(max_spins) + " spins");
}

int sigma(std::size_t state, int site)
{
    return ((state >> site) & 1u) ? 1 : -1;
}

}  // namespace

Matrix build_hamiltonian(const Lattice& lattice, const Couplings& c, const Extras& extras)
{
    check_size(lattice);
    const std::size_t dim = std::size_t{1} << lattice.n_spins();
    Matrix h = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    const int half = lattice.sites_per_layer();
    for (std::size_t a = 0; a < dim; ++a) {
        const auto col = static_cast<Eigen::Index>(a);
        double diag = 0.0;
        for (const auto& b : lattice.bonds()) {
            const int ss = sigma(a, b.site1) * sigma(a, b.site2);
            if (b.kind == BondKind::inter) {
                diag += 0.25 * c.Jp * ss;
                if (ss < 0) {
                    const std::size_t flipped = a ^ (std::size_t{1} << b.site1) ^ (std::size_t{1} << b.site2);
                    h(static_cast<Eigen::Index>(flipped), col) += 0.5 * c.Jp;
                }
            } else {
                diag -= 0.25 * c.J * ss;
            }
        }
        h(col, col) += diag;
        if (extras.h != 0.0)
            for (int i = 0; i < half; ++i)
                h(static_cast<Eigen::Index>(a ^ (std::size_t{1} << i)), col) -= 0.5 * extras.h;
    }
    return h;
}

Spectrum diagonalize(const Matrix& h)
{
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix thermal_rho(const Spectrum& spectrum, double beta)
{
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and non-negative");
    const double e0 = spectrum.energies.minCoeff();
    Eigen::VectorXd w = (-(spectrum.energies.array() - e0) * beta).exp();
    w /= w.sum();
    return spectrum.vectors * w.asDiagonal() * spectrum.vectors.transpose();
}

Matrix thermal_rho(const Matrix& h, double beta)
{
    return thermal_rho(diagonalize(h), beta);
}

Matrix reduce_to_A(const Matrix& rho, const Lattice& lattice)
{
    check_size(lattice);
    const std::size_t dim_a = std::size_t{1} << lattice.sites_per_layer();
    const std::size_t dim_b = std::size_t{1} << (lattice.n_spins() - lattice.sites_per_layer());
    if (static_cast<std::size_t>(rho.rows()) != dim_a * dim_b)
        throw std::invalid_argument("density matrix does not match the lattice");
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dim_a), static_cast<Eigen::Index>(dim_a));
    for (std::size_t b = 0; b < dim_b; ++b) {
        const auto off = static_cast<Eigen::Index>(b * dim_a);
        out += rho.block(off, off, static_cast<Eigen::Index>(dim_a), static_cast<Eigen::Index>(dim_a));
    }
    return out;
}

EhReport eh_report(const Matrix& rho_a, const Lattice& lattice, int n_rep)
{
    if (n_rep < 2) throw std::invalid_argument("eh_report requires n >= 2");
    const double trace = rho_a.trace();
    if (!(std::abs(trace) > 0.0)) throw std::invalid_argument("reduced density matrix has zero trace");
    const int n_sites = lattice.sites_per_layer();
    const auto dim = rho_a.rows();
    if (dim != (Eigen::Index{1} << n_sites)) throw std::invalid_argument("reduced density matrix does not match layer A");

    const Matrix rho = rho_a / trace;
    EhReport rep;
    rep.n_rep = n_rep;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            if (i != j) rep.defect = std::max(rep.defect, std::abs(rho(i, j)));

    const Spectrum sp = diagonalize(rho);
    const Eigen::VectorXd lambda = sp.energies.cwiseMax(0.0);
    for (Eigen::Index p = dim - 1; p >= 0; --p) {
        const double l = lambda(p);
        rep.eigenvalues.push_back(l);
        rep.levels.push_back(l > 0.0 ? -std::log(l) : std::numeric_limits<double>::infinity());
        if (l > 0.0) rep.entropy -= l * std::log(l);
    }

    // Powers of rho_A through its eigenbasis.
    std::vector<Eigen::VectorXd> powers(static_cast<std::size_t>(n_rep + 1));
    for (int t = 0; t <= n_rep; ++t) powers[static_cast<std::size_t>(t)] = lambda.array().pow(t);
    const double z_n = powers[static_cast<std::size_t>(n_rep)].sum();

    // sigma_i in the eigenbasis.
    std::vector<Matrix> sig(static_cast<std::size_t>(n_sites));
    for (int i = 0; i < n_sites; ++i) {
        Eigen::VectorXd d(dim);
        for (Eigen::Index s = 0; s < dim; ++s) d(s) = sigma(static_cast<std::size_t>(s), i);
        sig[static_cast<std::size_t>(i)] = sp.vectors.transpose() * d.asDiagonal() * sp.vectors;
    }

    // C_ij(tau) = Tr(rho^{n-tau} sigma_i rho^tau sigma_j) / Tr(rho^n)
    auto pair = [&](int i, int j, int tau) {
        const Matrix& si = sig[static_cast<std::size_t>(i)];
        const Matrix& sj = sig[static_cast<std::size_t>(j)];
        const auto& left = powers[static_cast<std::size_t>(n_rep - tau)];
        const auto& right = powers[static_cast<std::size_t>(tau)];
        double sum = 0.0;
        for (Eigen::Index p = 0; p < dim; ++p)
            for (Eigen::Index q = 0; q < dim; ++q) sum += left(p) * si(p, q) * right(q) * sj(q, p);
        return sum / z_n;
    };

    rep.g_onsite.assign(static_cast<std::size_t>(n_sites), std::vector<double>(static_cast<std::size_t>(n_rep)));
    for (int i = 0; i < n_sites; ++i)
        for (int tau = 0; tau < n_rep; ++tau) rep.g_onsite[static_cast<std::size_t>(i)][static_cast<std::size_t>(tau)] = pair(i, i, tau);

    // G(k, tau) = L^-4 sum_ij e^{-ik(r_i - r_j)} C_ij. Grid phases are periodic
    // in r, so summing C over pairs at displacement d (mod L) and Fourier
    // transforming is exact for either boundary.
    const int L = lattice.linear_size();
    rep.g_momentum.assign(static_cast<std::size_t>(n_sites), std::vector<double>(static_cast<std::size_t>(n_rep)));
    for (int tau = 0; tau < n_rep; ++tau) {
        std::vector<double> by_disp(static_cast<std::size_t>(n_sites), 0.0);
        for (int i = 0; i < n_sites; ++i)
            for (int dy = 0; dy < L; ++dy)
                for (int dx = 0; dx < L; ++dx)
                    by_disp[static_cast<std::size_t>(dy * L + dx)] += pair(i, lattice.shifted(i, dx, dy), tau);
        const auto ck = fourier_correlations(by_disp, L);
        const double norm = 1.0 / (static_cast<double>(n_sites) * n_sites);
        for (int k = 0; k < n_sites; ++k)
            rep.g_momentum[static_cast<std::size_t>(k)][static_cast<std::size_t>(tau)] = norm * ck[static_cast<std::size_t>(k)].real();
    }
    return rep;
}

ThermalObservables thermal_observables(const Spectrum& spectrum, double beta, const Lattice& lattice)
{
    const double e0 = spectrum.energies.minCoeff();
    Eigen::VectorXd w = (-(spectrum.energies.array() - e0) * beta).exp();
    w /= w.sum();
    ThermalObservables out;
    out.scalars.E = w.dot(spectrum.energies);

    // Diagonal probabilities p(alpha) = rho_{alpha alpha}.
    const Eigen::VectorXd p = (spectrum.vectors.array().square().matrix() * w);
    const int half = lattice.sites_per_layer();
    const int N = lattice.n_spins();
    out.G.assign(static_cast<std::size_t>(half), 0.0);
    SpinState spins(static_cast<std::size_t>(N));
    for (Eigen::Index a = 0; a < p.size(); ++a) {
        const double pa = p(a);
        for (int s = 0; s < N; ++s) spins[static_cast<std::size_t>(s)] = static_cast<std::int8_t>(sigma(static_cast<std::size_t>(a), s));
        const double m = order_parameter(spins, lattice);
        out.m += pa * m;
        out.scalars.m_abs += pa * std::abs(m);
        out.scalars.m2 += pa * m * m;
        out.scalars.m4 += pa * m * m * m * m;
        const auto g = correlation_G(spins, lattice);
        for (int d = 0; d < half; ++d) out.G[static_cast<std::size_t>(d)] += pa * g[static_cast<std::size_t>(d)];
    }
    out.scalars.U2 = binder(out.scalars.m2, out.scalars.m4).value_or(std::numeric_limits<double>::quiet_NaN());
    out.scalars.chi = susceptibility(out.scalars.m2, out.scalars.m_abs, beta, N);
    return out;
}

ThermalObservables thermal_observables(const Matrix& h, double beta, const Lattice& lattice)
{
    return thermal_observables(diagonalize(h), beta, lattice);
}

nlohmann::json to_json(const EhReport& report, std::size_t max_levels)
{
    auto finite = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::json j;
    j["n_rep"] = report.n_rep;
    j["defect"] = report.defect;
    j["entropy"] = report.entropy;
    auto ev = nlohmann::json::array();
    auto lv = nlohmann::json::array();
    for (std::size_t i = 0; i < report.eigenvalues.size() && i < max_levels; ++i) {
        ev.push_back(report.eigenvalues[i]);
        lv.push_back(finite(report.levels[i]));
    }
    j["eigenvalues"] = ev;
    j["levels"] = lv;
    j["g_onsite"] = report.g_onsite;
    j["g_momentum"] = report.g_momentum;
    return j;
}

nlohmann::json to_json(const ThermalObservables& obs)
{
    return {{"E", obs.scalars.E},     {"m", obs.m},       {"m_abs", obs.scalars.m_abs},
            {"m2", obs.scalars.m2},   {"m4", obs.scalars.m4}, {"U2", obs.scalars.U2},
            {"chi", obs.scalars.chi}, {"G", obs.G}};
}

}  // namespace bilayer::ed
