#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bilayer/lattice.hpp"
#include "bilayer/series.hpp"
#include "bilayer/simulation.hpp"
#include "bilayer/sse.hpp"

namespace bilayer {

inline constexpr int default_n_rep = 4;

/// n SSE replicas at the physical beta whose layer-A boundaries are glued
/// cyclically (end of replica k = start of replica k+1) while layer B stays
/// time-periodic inside each replica. Samples Tr(rho_A^n).
///
/// replicas()[k].spins is the full basis state at the start of replica k, so
/// its A part is the configuration at seam k.
class ReplicaManifold {
public:
    ReplicaManifold(const Lattice& lattice, Couplings couplings, double beta, int n_rep, std::uint64_t seed,
                    std::int64_t initial_cutoff = 20);

    void sweep(bool equilibrating);

    int n_rep() const { return static_cast<int>(replicas_.size()); }
    const Lattice& lattice() const { return lattice_; }
    const Couplings& couplings() const { return couplings_; }
    double beta() const { return replicas_.front().beta; }
    std::span<const SseConfig> replicas() const { return replicas_; }
    std::span<SseConfig> replicas() { return replicas_; }
    std::span<const std::uint8_t> glue_mask() const { return glued_; }

    std::int8_t seam_spin(int seam, int site_in_layer) const
    {
        return replicas_[static_cast<std::size_t>(seam)].spins[static_cast<std::size_t>(site_in_layer)];
    }

    /// Vertex compatibility in every replica, A continuity across seams, B
    /// periodicity within each replica and operator counts.
    bool check_invariants(std::string* why = nullptr) const;

private:
    Lattice lattice_;
    Couplings couplings_;
    std::vector<SseConfig> replicas_;
    std::vector<std::uint8_t> glued_;
    Rng rng_;
    VertexList vertices_;
};

/// G_i(tau) = (1/n) sum_s sigma_i(s + tau) sigma_i(s) over seams, flattened
/// as [i * n_rep + tau].
std::vector<double> measure_G_onsite(const ReplicaManifold& manifold);

/// G(k, tau) = (1/n) sum_s Re[sk(s + tau) conj(sk(s))] with
/// sk = L^-2 sum_r exp(-i k.r) sigma_r, flattened as [k * n_rep + tau] with
/// k indexed n * L + m.
std::vector<double> measure_G_momentum(const ReplicaManifold& manifold);

std::vector<std::string> eh_labels(const Lattice& lattice, int n_rep);

ObservableSeries run_manifold(ReplicaManifold& manifold, const RunPlan& plan);

struct EhCorrelator {
    int L = 0;
    int n_rep = 0;
    /// [site][tau]
    std::vector<std::vector<Estimate>> onsite;
    /// [k][tau]
    std::vector<std::vector<Estimate>> momentum;
};

EhCorrelator summarize_eh(const ObservableSeries& series, const Lattice& lattice, int n_rep);

inline constexpr const char* eh_momentum_csv_header = "L,g,beta,n_rep,k_m,k_n,tau,G,error";
inline constexpr const char* eh_onsite_csv_header = "L,g,beta,n_rep,site,tau,G,error";

/// Rows (L, g, beta, n_rep, k_m, k_n, tau, G, error).
void write_eh_momentum_csv(std::ostream& os, const EhCorrelator& eh, double g, double beta, bool header = true);
/// Rows (L, g, beta, n_rep, site, tau, G, error).
void write_eh_onsite_csv(std::ostream& os, const EhCorrelator& eh, double g, double beta, bool header = true);

}  // namespace bilayer
