#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bilayer/lattice.hpp"
#include "bilayer/rng.hpp"

namespace bilayer {

/// Intra-layer Ising strength J and inter-layer Heisenberg strength J'.
struct Couplings {
    double J = 1.0;
    double Jp = 0.0;

    /// Validates J > 0 and g >= 0, then sets J' = g J.
    static Couplings from_ratio(double J, double g);
    double g() const { return Jp / J; }
};

enum class VertexKind : std::uint8_t { null = 0, ising_diag = 1, heis_diag = 2, heis_offdiag = 3 };

/// A slot of the operator string, packed as (bond << 2) | kind.
class Operator {
public:
    constexpr Operator() = default;
    constexpr Operator(int bond, VertexKind kind)
        : code_((static_cast<std::uint32_t>(bond) << 2) | static_cast<std::uint32_t>(kind))
    {
    }

    constexpr VertexKind kind() const { return static_cast<VertexKind>(code_ & 3u); }
    constexpr int bond() const { return static_cast<int>(code_ >> 2); }
    constexpr bool is_null() const { return code_ == 0; }
    constexpr bool is_diagonal() const
    {
        return kind() == VertexKind::ising_diag || kind() == VertexKind::heis_diag;
    }
    constexpr bool is_offdiagonal() const { return kind() == VertexKind::heis_offdiag; }

    constexpr std::uint32_t raw() const { return code_; }
    static constexpr Operator from_raw(std::uint32_t code)
    {
        Operator op;
        op.code_ = code;
        return op;
    }

    friend constexpr bool operator==(Operator, Operator) = default;

private:
    std::uint32_t code_ = 0;
};

/// Spins are stored as sigma = 2 S^z in {-1, +1}.
using SpinState = std::vector<std::int8_t>;

/// One SSE configuration: the basis state at slice 0 and an operator string
/// of length M (the cutoff).
struct SseConfig {
    SpinState spins;
    std::vector<Operator> ops;
    std::int64_t n_ops = 0;
    std::int64_t n_offdiag = 0;
    double beta = 1.0;

    std::int64_t cutoff() const { return static_cast<std::int64_t>(ops.size()); }
    friend bool operator==(const SseConfig&, const SseConfig&) = default;
};

/// Empty operator string with a random initial state.
SseConfig make_config(const Lattice& lattice, double beta, Rng& rng, std::int64_t initial_cutoff = 20);

/// Sum over bonds of the maximal matrix element: (N_H J' + 2 N_I J) / 2.
double total_weight(const Lattice& lattice, const Couplings& c);
/// Probability of proposing an Ising operator: 2 N_I J / (N_H J' + 2 N_I J).
double ising_probability(const Lattice& lattice, const Couplings& c);
double insert_probability(double beta, double total_weight, std::int64_t empty_slots);
double remove_probability(double beta, double total_weight, std::int64_t empty_slots);
/// Constant added back to -<n>/beta: (2 N_I J + N_H J') / 4 with N_I per layer.
double energy_shift(const Lattice& lattice, const Couplings& c);

/// Nonzero matrix element of a vertex (J/2 or J'/2), or 0 if the spins
/// below it are incompatible with its kind.
double vertex_weight(Operator op, std::int8_t below1, std::int8_t below2, const Couplings& c);

void diagonal_sweep(SseConfig& cfg, const Lattice& lattice, const Couplings& c, Rng& rng);

/// Grows M to ceil(4n/3) + 10 when n > 3M/4. Returns true when M changed.
bool adjust_cutoff(SseConfig& cfg);

/// Propagates `state` through the whole string in place. Returns false (and
/// fills `why`) at the first vertex whose lower spins are incompatible.
bool propagate(const SseConfig& cfg, const Lattice& lattice, SpinState& state, std::string* why = nullptr);

/// Full invariant check of a single periodic configuration: vertex
/// compatibility, time periodicity, operator counts and per-bond parity of
/// off-diagonal operators.
bool check_config(const SseConfig& cfg, const Lattice& lattice, std::string* why = nullptr);

/// Sum of log matrix elements over all vertices; -inf if any vertex is
/// incompatible.
double log_vertex_weight(const SseConfig& cfg, const Lattice& lattice, const Couplings& c);

/// Linked vertex legs across one or more consecutive string segments.
///
/// Legs of vertex v are 4v + {0: lower site1, 1: lower site2, 2: upper site1,
/// 3: upper site2}. A glued site forms one imaginary-time cycle through all
/// segments in order; any other site wraps within each segment.
class VertexList {
public:
    VertexList() = default;
    VertexList(std::span<const SseConfig> segments, const Lattice& lattice,
               std::span<const std::uint8_t> glued = {});

    void rebuild(std::span<const SseConfig> segments, const Lattice& lattice,
                 std::span<const std::uint8_t> glued = {});

    std::int64_t n_vertices() const { return static_cast<std::int64_t>(kind_.size()); }
    std::int64_t n_legs() const { return 4 * n_vertices(); }
    int n_segments() const { return n_segments_; }
    int n_spins() const { return n_spins_; }

    std::span<const std::int32_t> links() const { return link_; }
    std::int32_t link(std::int32_t leg) const { return link_[static_cast<std::size_t>(leg)]; }
    std::span<const VertexKind> kinds() const { return kind_; }
    VertexKind kind(std::int64_t v) const { return kind_[static_cast<std::size_t>(v)]; }
    int segment_of(std::int64_t v) const { return segment_[static_cast<std::size_t>(v)]; }
    std::int64_t slot_of(std::int64_t v) const { return slot_[static_cast<std::size_t>(v)]; }
    bool glued(int site) const { return !glued_.empty() && glued_[static_cast<std::size_t>(site)] != 0; }

    /// The leg whose lower spin is the state of `site` at the start of
    /// `segment`, or -1 if no vertex touches the site's time cycle.
    std::int32_t seam_leg(int segment, int site) const
    {
        return seam_[static_cast<std::size_t>(segment) * n_spins_ + site];
    }

    std::vector<int> free_sites(int segment = 0) const;

private:
    int n_segments_ = 0;
    int n_spins_ = 0;
    std::vector<VertexKind> kind_;
    std::vector<std::int32_t> segment_;
    std::vector<std::int64_t> slot_;
    std::vector<std::int32_t> link_;
    std::vector<std::int32_t> seam_;
    std::vector<std::uint8_t> glued_;
    std::vector<std::int32_t> first_, last_;
};

/// Swendsen-Wang flips of the Ising/Heisenberg leg clusters. `vl` must have
/// been built from `segments` with the same glue mask.
void cluster_sweep(std::span<SseConfig> segments, const VertexList& vl, const Lattice& lattice, Rng& rng);

inline void cluster_sweep(SseConfig& cfg, const VertexList& vl, const Lattice& lattice, Rng& rng)
{
    cluster_sweep(std::span<SseConfig>(&cfg, 1), vl, lattice, rng);
}

/// One Markov chain on the bilayer.
class Chain {
public:
    Chain(const Lattice& lattice, Couplings couplings, double beta, std::uint64_t seed,
          std::int64_t initial_cutoff = 20);
    Chain(const Lattice& lattice, Couplings couplings, SseConfig config, Rng rng);

    /// Diagonal sweep, vertex list, cluster sweep; then adjust_cutoff when
    /// `equilibrating`.
    void sweep(bool equilibrating);

    const Lattice& lattice() const { return lattice_; }
    const Couplings& couplings() const { return couplings_; }
    const SseConfig& config() const { return config_; }
    SseConfig& config() { return config_; }
    const Rng& rng() const { return rng_; }
    Rng& rng() { return rng_; }
    double beta() const { return config_.beta; }

private:
    Lattice lattice_;
    Couplings couplings_;
    SseConfig config_;
    Rng rng_;
    VertexList vertices_;
};

}  // namespace bilayer
