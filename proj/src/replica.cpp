#include "bilayer/replica.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "bilayer/estimators.hpp"

namespace bilayer {

ReplicaManifold::ReplicaManifold(const Lattice& lattice, Couplings couplings, double beta, int n_rep,
                                 std::uint64_t seed, std::int64_t initial_cutoff)
    : lattice_(lattice), couplings_(couplings), rng_(seed)
{
    if (n_rep < 2) throw std::invalid_argument("replica manifold needs n_rep >= 2");
    const int half = lattice_.sites_per_layer();
    glued_.assign(static_cast<std::size_t>(lattice_.n_spins()), 0);
    for (int i = 0; i < half; ++i) glued_[static_cast<std::size_t>(i)] = 1;

    replicas_.reserve(static_cast<std::size_t>(n_rep));
    for (int k = 0; k < n_rep; ++k) replicas_.push_back(make_config(lattice_, beta, rng_, initial_cutoff));
    // Empty strings: every seam must carry the same A configuration.
    for (int k = 1; k < n_rep; ++k)
        std::copy_n(replicas_.front().spins.begin(), half, replicas_[static_cast<std::size_t>(k)].spins.begin());
}

void ReplicaManifold::sweep(bool equilibrating)
{
    for (auto& rep : replicas_) diagonal_sweep(rep, lattice_, couplings_, rng_);
    vertices_.rebuild(replicas_, lattice_, glued_);
    cluster_sweep(replicas_, vertices_, lattice_, rng_);
    if (equilibrating)
        for (auto& rep : replicas_) adjust_cutoff(rep);
}

bool ReplicaManifold::check_invariants(std::string* why) const
{
    auto fail = [&](std::string msg) {
        if (why) *why = std::move(msg);
        return false;
    };
    const int half = lattice_.sites_per_layer();
    const int n = n_rep();
    for (int k = 0; k < n; ++k) {
        const auto& rep = replicas_[static_cast<std::size_t>(k)];
        const auto& next = replicas_[static_cast<std::size_t>((k + 1) % n)];
        std::int64_t count = 0, offdiag = 0;
        std::vector<int> parity(static_cast<std::size_t>(lattice_.n_bonds()), 0);
        for (const auto op : rep.ops) {
            if (op.is_null()) continue;
            ++count;
            if (op.is_offdiagonal()) {
                ++offdiag;
                parity[static_cast<std::size_t>(op.bond())] ^= 1;
            }
        }
        if (count != rep.n_ops || offdiag != rep.n_offdiag)
            return fail("operator counts out of sync in replica " + std::to_string(k));
        for (int p : parity)
            if (p) return fail("odd off-diagonal count on a bond in replica " + std::to_string(k));
        SpinState s = rep.spins;
        std::string inner;
        if (!propagate(rep, lattice_, s, &inner)) return fail("replica " + std::to_string(k) + ": " + inner);
        for (int i = 0; i < lattice_.n_spins(); ++i) {
            const bool in_a = i < half;
            const auto expect = in_a ? next.spins[static_cast<std::size_t>(i)] : rep.spins[static_cast<std::size_t>(i)];
            if (s[static_cast<std::size_t>(i)] != expect)
                return fail(std::string(in_a ? "layer-A seam mismatch" : "layer-B periodicity broken") +
                            " after replica " + std::to_string(k) + " at site " + std::to_string(i));
        }
    }
    return true;
}

std::vector<double> measure_G_onsite(const ReplicaManifold& manifold)
{
    const int n = manifold.n_rep();
    const int half = manifold.lattice().sites_per_layer();
    std::vector<double> out(static_cast<std::size_t>(half * n), 0.0);
    for (int i = 0; i < half; ++i)
        for (int tau = 0; tau < n; ++tau) {
            int sum = 0;
            for (int s = 0; s < n; ++s) sum += manifold.seam_spin((s + tau) % n, i) * manifold.seam_spin(s, i);
            out[static_cast<std::size_t>(i * n + tau)] = static_cast<double>(sum) / n;
        }
    return out;
}

std::vector<double> measure_G_momentum(const ReplicaManifold& manifold)
{
    const int n = manifold.n_rep();
    const auto& lat = manifold.lattice();
    const int L = lat.linear_size();
    const int half = L * L;
    std::vector<std::complex<double>> phase(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) phase[static_cast<std::size_t>(j)] = std::polar(1.0, -2.0 * std::numbers::pi * j / L);

    std::vector<std::complex<double>> sk(static_cast<std::size_t>(half * n));
    for (int s = 0; s < n; ++s)
        for (int kn = 0; kn < L; ++kn)
            for (int km = 0; km < L; ++km) {
                std::complex<double> sum = 0.0;
                for (int r = 0; r < half; ++r)
                    sum += static_cast<double>(manifold.seam_spin(s, r)) *
                           phase[static_cast<std::size_t>((km * (r % L) + kn * (r / L)) % L)];
                sk[static_cast<std::size_t>((kn * L + km) * n + s)] = sum / static_cast<double>(half);
            }

    std::vector<double> out(static_cast<std::size_t>(half * n), 0.0);
    for (int k = 0; k < half; ++k)
        for (int tau = 0; tau < n; ++tau) {
            double sum = 0.0;
            for (int s = 0; s < n; ++s)
                sum += (sk[static_cast<std::size_t>(k * n + (s + tau) % n)] * std::conj(sk[static_cast<std::size_t>(k * n + s)])).real();
            out[static_cast<std::size_t>(k * n + tau)] = sum / n;
        }
    return out;
}

std::vector<std::string> eh_labels(const Lattice& lattice, int n_rep)
{
    const int L = lattice.linear_size();
    std::vector<std::string> labels;
    for (int i = 0; i < L * L; ++i)
        for (int tau = 0; tau < n_rep; ++tau) labels.push_back("Gi_" + std::to_string(i) + "_" + std::to_string(tau));
    for (int k = 0; k < L * L; ++k)
        for (int tau = 0; tau < n_rep; ++tau)
            labels.push_back("Gk_" + std::to_string(k % L) + "_" + std::to_string(k / L) + "_" + std::to_string(tau));
    return labels;
}

ObservableSeries run_manifold(ReplicaManifold& manifold, const RunPlan& plan)
{
    if (plan.bin_size < 1 || plan.n_bins < 0 || plan.n_equil < 0) throw std::invalid_argument("invalid run plan");
    const auto& lat = manifold.lattice();
    ObservableSeries series(eh_labels(lat, manifold.n_rep()));
    series.meta().L = lat.linear_size();
    series.meta().g = manifold.couplings().g();
    series.meta().beta = manifold.beta();
    series.meta().n_equil = plan.n_equil;
    series.meta().bin_size = plan.bin_size;

    for (std::int64_t i = 0; i < plan.n_equil; ++i) manifold.sweep(true);
    const std::size_t k = series.n_observables();
    std::vector<double> sums(k);
    for (std::int64_t b = 0; b < plan.n_bins; ++b) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::int64_t i = 0; i < plan.bin_size; ++i) {
            manifold.sweep(false);
            const auto onsite = measure_G_onsite(manifold);
            const auto mom = measure_G_momentum(manifold);
            for (std::size_t j = 0; j < onsite.size(); ++j) sums[j] += onsite[j];
            for (std::size_t j = 0; j < mom.size(); ++j) sums[onsite.size() + j] += mom[j];
        }
        for (auto& s : sums) s /= static_cast<double>(plan.bin_size);
        series.add_bin(sums);
    }
    return series;
}

EhCorrelator summarize_eh(const ObservableSeries& series, const Lattice& lattice, int n_rep)
{
    EhCorrelator eh;
    eh.L = lattice.linear_size();
    eh.n_rep = n_rep;
    const int half = lattice.sites_per_layer();
    eh.onsite.assign(static_cast<std::size_t>(half), std::vector<Estimate>(static_cast<std::size_t>(n_rep)));
    eh.momentum.assign(static_cast<std::size_t>(half), std::vector<Estimate>(static_cast<std::size_t>(n_rep)));
    std::size_t idx = 0;
    for (int i = 0; i < half; ++i)
        for (int tau = 0; tau < n_rep; ++tau)
            eh.onsite[static_cast<std::size_t>(i)][static_cast<std::size_t>(tau)] = ObservableSeries::bin_estimate(series.bins(idx++));
    for (int k = 0; k < half; ++k)
        for (int tau = 0; tau < n_rep; ++tau)
            eh.momentum[static_cast<std::size_t>(k)][static_cast<std::size_t>(tau)] = ObservableSeries::bin_estimate(series.bins(idx++));
    return eh;
}

void write_eh_momentum_csv(std::ostream& os, const EhCorrelator& eh, double g, double beta, bool header)
{
    if (header) os << eh_momentum_csv_header << '\n';
    for (std::size_t k = 0; k < eh.momentum.size(); ++k)
        for (int tau = 0; tau < eh.n_rep; ++tau) {
            const auto& e = eh.momentum[k][static_cast<std::size_t>(tau)];
            os << eh.L << ',' << format_double(g) << ',' << format_double(beta) << ',' << eh.n_rep << ','
               << static_cast<int>(k) % eh.L << ',' << static_cast<int>(k) / eh.L << ',' << tau << ','
               << format_double(e.mean) << ',' << format_double(e.error) << '\n';
        }
}

void write_eh_onsite_csv(std::ostream& os, const EhCorrelator& eh, double g, double beta, bool header)
{
    if (header) os << eh_onsite_csv_header << '\n';
    for (std::size_t i = 0; i < eh.onsite.size(); ++i)
        for (int tau = 0; tau < eh.n_rep; ++tau) {
            const auto& e = eh.onsite[i][static_cast<std::size_t>(tau)];
            os << eh.L << ',' << format_double(g) << ',' << format_double(beta) << ',' << eh.n_rep << ',' << i
               << ',' << tau << ',' << format_double(e.mean) << ',' << format_double(e.error) << '\n';
        }
}

}  // namespace bilayer
