#include "bilayer/sse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bilayer {

Couplings Couplings::from_ratio(double J, double g)
{
    if (!(J > 0.0) || !std::isfinite(J)) throw std::invalid_argument("J must be positive");
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("g must be non-negative");
    return {J, g * J};
}

SseConfig make_config(const Lattice& lattice, double beta, Rng& rng, std::int64_t initial_cutoff)
{
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (initial_cutoff < 1) throw std::invalid_argument("initial cutoff must be positive");
    SseConfig cfg;
    cfg.beta = beta;
    cfg.spins.resize(static_cast<std::size_t>(lattice.n_spins()));
    for (auto& s : cfg.spins) s = rng.coin() ? 1 : -1;
    cfg.ops.assign(static_cast<std::size_t>(initial_cutoff), Operator{});
    return cfg;
}

double total_weight(const Lattice& lattice, const Couplings& c)
{
    return 0.5 * (lattice.n_inter() * c.Jp + 2.0 * lattice.n_intra_per_layer() * c.J);
}

double ising_probability(const Lattice& lattice, const Couplings& c)
{
    const double ising = 2.0 * lattice.n_intra_per_layer() * c.J;
    const double all = lattice.n_inter() * c.Jp + ising;
    return all > 0.0 ? ising / all : 0.0;
}

double insert_probability(double beta, double total_weight, std::int64_t empty_slots)
{
    if (empty_slots <= 0) return 0.0;
    return std::min(beta * total_weight / static_cast<double>(empty_slots), 1.0);
}

double remove_probability(double beta, double total_weight, std::int64_t empty_slots)
{
    const double bw = beta * total_weight;
    if (bw <= 0.0) return 1.0;
    return std::min(static_cast<double>(empty_slots + 1) / bw, 1.0);
}

double energy_shift(const Lattice& lattice, const Couplings& c)
{
    return 0.25 * (2.0 * lattice.n_intra_per_layer() * c.J + lattice.n_inter() * c.Jp);
}

double vertex_weight(Operator op, std::int8_t below1, std::int8_t below2, const Couplings& c)
{
    switch (op.kind()) {
    case VertexKind::ising_diag: return below1 == below2 ? 0.5 * c.J : 0.0;
    case VertexKind::heis_diag:
    case VertexKind::heis_offdiag: return below1 != below2 ? 0.5 * c.Jp : 0.0;
    case VertexKind::null: break;
    }
    return 1.0;
}

void diagonal_sweep(SseConfig& cfg, const Lattice& lattice, const Couplings& c, Rng& rng)
{
    const double bw = cfg.beta * total_weight(lattice, c);
    const double p_ising = ising_probability(lattice, c);
    const auto n_intra = static_cast<std::uint64_t>(lattice.n_intra());
    const auto n_inter = static_cast<std::uint64_t>(lattice.n_inter());
    const auto bonds = lattice.bonds();
    const double M = static_cast<double>(cfg.ops.size());

    SpinState s = cfg.spins;
    for (auto& op : cfg.ops) {
        if (op.is_null()) {
            if (bw <= 0.0) continue;
            int b;
            VertexKind kind;
            if (rng.uniform() < p_ising) {
                b = static_cast<int>(rng.below(n_intra));
                if (s[bonds[b].site1] != s[bonds[b].site2]) continue;
                kind = VertexKind::ising_diag;
            } else {
                b = static_cast<int>(n_intra + rng.below(n_inter));
                if (s[bonds[b].site1] == s[bonds[b].site2]) continue;
                kind = VertexKind::heis_diag;
            }
            if (rng.uniform() * (M - static_cast<double>(cfg.n_ops)) < bw) {
                op = Operator(b, kind);
                ++cfg.n_ops;
            }
        } else if (op.is_diagonal()) {
            if (rng.uniform() * bw < M - static_cast<double>(cfg.n_ops) + 1.0) {
                op = Operator{};
                --cfg.n_ops;
            }
        } else {
            const Bond& bd = bonds[op.bond()];
            s[bd.site1] = static_cast<std::int8_t>(-s[bd.site1]);
            s[bd.site2] = static_cast<std::int8_t>(-s[bd.site2]);
        }
    }
}

bool adjust_cutoff(SseConfig& cfg)
{
    const std::int64_t M = cfg.cutoff();
    if (4 * cfg.n_ops <= 3 * M) return false;
    const std::int64_t grown = (4 * cfg.n_ops + 2) / 3 + 10;
    cfg.ops.resize(static_cast<std::size_t>(grown), Operator{});
    return true;
}

bool propagate(const SseConfig& cfg, const Lattice& lattice, SpinState& state, std::string* why)
{
    const auto bonds = lattice.bonds();
    for (std::size_t p = 0; p < cfg.ops.size(); ++p) {
        const Operator op = cfg.ops[p];
        if (op.is_null()) continue;
        const Bond& bd = bonds[op.bond()];
        const bool parallel = state[bd.site1] == state[bd.site2];
        const bool ising = op.kind() == VertexKind::ising_diag;
        if (ising != (bd.kind != BondKind::inter) || ising != parallel) {
            if (why) *why = "incompatible vertex at slot " + std::to_string(p);
            return false;
        }
        if (op.is_offdiagonal()) {
            state[bd.site1] = static_cast<std::int8_t>(-state[bd.site1]);
            state[bd.site2] = static_cast<std::int8_t>(-state[bd.site2]);
        }
    }
    return true;
}

bool check_config(const SseConfig& cfg, const Lattice& lattice, std::string* why)
{
    auto fail = [&](std::string msg) {
        if (why) *why = std::move(msg);
        return false;
    };
    if (cfg.spins.size() != static_cast<std::size_t>(lattice.n_spins())) return fail("spin count mismatch");
    std::int64_t n = 0, n2 = 0;
    std::vector<std::int64_t> per_bond(static_cast<std::size_t>(lattice.n_bonds()), 0);
    for (const auto op : cfg.ops) {
        if (op.is_null()) continue;
        if (op.bond() >= lattice.n_bonds()) return fail("bond index out of range");
        ++n;
        if (op.is_offdiagonal()) {
            ++n2;
            ++per_bond[static_cast<std::size_t>(op.bond())];
        }
    }
    if (n != cfg.n_ops) return fail("n_ops does not match the string");
    if (n2 != cfg.n_offdiag) return fail("n_offdiag does not match the string");
    if (n2 % 2 != 0) return fail("odd number of off-diagonal operators");
    for (auto count : per_bond)
        if (count % 2 != 0) return fail("odd off-diagonal count on a bond");
    SpinState s = cfg.spins;
    if (!propagate(cfg, lattice, s, why)) return false;
    if (s != cfg.spins) return fail("propagated state differs from the initial state");
    return true;
}

double log_vertex_weight(const SseConfig& cfg, const Lattice& lattice, const Couplings& c)
{
    SpinState s = cfg.spins;
    const auto bonds = lattice.bonds();
    double sum = 0.0;
    for (const auto op : cfg.ops) {
        if (op.is_null()) continue;
        const Bond& bd = bonds[op.bond()];
        const double w = vertex_weight(op, s[bd.site1], s[bd.site2], c);
        if (w <= 0.0 || (op.kind() == VertexKind::ising_diag) != (bd.kind != BondKind::inter))
            return -std::numeric_limits<double>::infinity();
        sum += std::log(w);
        if (op.is_offdiagonal()) {
            s[bd.site1] = static_cast<std::int8_t>(-s[bd.site1]);
            s[bd.site2] = static_cast<std::int8_t>(-s[bd.site2]);
        }
    }
    return sum;
}

// ---------------------------------------------------------------------------

VertexList::VertexList(std::span<const SseConfig> segments, const Lattice& lattice,
                       std::span<const std::uint8_t> glued)
{
    rebuild(segments, lattice, glued);
}

void VertexList::rebuild(std::span<const SseConfig> segments, const Lattice& lattice,
                         std::span<const std::uint8_t> glued)
{
    n_segments_ = static_cast<int>(segments.size());
    n_spins_ = lattice.n_spins();
    const auto N = static_cast<std::size_t>(n_spins_);
    if (!glued.empty() && glued.size() != N) throw std::invalid_argument("glue mask size mismatch");
    glued_.assign(glued.begin(), glued.end());

    std::int64_t nv = 0;
    for (const auto& seg : segments) nv += seg.n_ops;
    kind_.resize(static_cast<std::size_t>(nv));
    segment_.resize(static_cast<std::size_t>(nv));
    slot_.resize(static_cast<std::size_t>(nv));
    link_.assign(static_cast<std::size_t>(4 * nv), -1);
    seam_.assign(static_cast<std::size_t>(n_segments_) * N, -1);
    first_.assign(N, -1);
    last_.assign(N, -1);

    const auto bonds = lattice.bonds();
    auto connect = [this](std::int32_t a, std::int32_t b) {
        link_[static_cast<std::size_t>(a)] = b;
        link_[static_cast<std::size_t>(b)] = a;
    };

    std::int32_t v = 0;
    for (int k = 0; k < n_segments_; ++k) {
        const auto& seg = segments[static_cast<std::size_t>(k)];
        std::int32_t* seam = seam_.data() + static_cast<std::size_t>(k) * N;
        for (std::size_t p = 0; p < seg.ops.size(); ++p) {
            const Operator op = seg.ops[p];
            if (op.is_null()) continue;
            kind_[static_cast<std::size_t>(v)] = op.kind();
            segment_[static_cast<std::size_t>(v)] = k;
            slot_[static_cast<std::size_t>(v)] = static_cast<std::int64_t>(p);
            const Bond& bd = bonds[op.bond()];
            const int sites[2] = {bd.site1, bd.site2};
            for (int j = 0; j < 2; ++j) {
                const int s = sites[j];
                const std::int32_t lower = 4 * v + j;
                if (last_[s] >= 0)
                    connect(last_[s], lower);
                else
                    first_[s] = lower;
                if (seam[s] < 0) seam[s] = lower;
                last_[s] = lower + 2;
            }
            ++v;
        }
        for (std::size_t s = 0; s < N; ++s) {
            if (glued_.empty() || glued_[s] == 0) {
                if (first_[s] >= 0) connect(last_[s], first_[s]);
                first_[s] = last_[s] = -1;
            }
        }
    }
    if (v != nv) throw std::logic_error("n_ops does not match the operator strings");

    for (std::size_t s = 0; s < N; ++s) {
        if (glued_.empty() || glued_[s] == 0 || first_[s] < 0) continue;
        connect(last_[s], first_[s]);
        // Segments without a vertex on s see the next vertex in cyclic order.
        std::int32_t carry = -1;
        for (int pass = 0; pass < 2; ++pass)
            for (int k = n_segments_ - 1; k >= 0; --k) {
                auto& seam = seam_[static_cast<std::size_t>(k) * N + s];
                if (seam >= 0)
                    carry = seam;
                else if (pass == 1)
                    seam = carry;
            }
    }
}

std::vector<int> VertexList::free_sites(int segment) const
{
    std::vector<int> out;
    for (int s = 0; s < n_spins_; ++s)
        if (seam_leg(segment, s) < 0) out.push_back(s);
    return out;
}

void cluster_sweep(std::span<SseConfig> segments, const VertexList& vl, const Lattice& lattice, Rng& rng)
{
    if (static_cast<int>(segments.size()) != vl.n_segments())
        throw std::invalid_argument("vertex list built for a different segment count");
    const std::int64_t n_legs = vl.n_legs();
    // -1 unvisited, otherwise the flip decision of the leg's cluster.
    std::vector<std::int8_t> flip(static_cast<std::size_t>(n_legs), -1);
    std::vector<std::int32_t> stack_buf(static_cast<std::size_t>(n_legs) + 1);
    std::int32_t* stack = stack_buf.data();
    std::int8_t* fl = flip.data();
    const std::int32_t* link = vl.links().data();
    const VertexKind* kind = vl.kinds().data();

    // Cluster coins are taken one bit at a time from 64-bit draws.
    std::uint64_t bits = 0;
    int bits_left = 0;

    for (std::int32_t start = 0; start < n_legs; ++start) {
        if (fl[start] >= 0) continue;
        if (bits_left == 0) {
            bits = rng();
            bits_left = 64;
        }
        const auto f = static_cast<std::int8_t>(bits & 1u);
        bits >>= 1;
        --bits_left;

        std::int64_t top = 0;
        fl[start] = f;
        stack[top++] = start;
        while (top > 0) {
            const std::int32_t leg = stack[--top];
            const std::int32_t partner = link[leg];
            if (fl[partner] < 0) {
                fl[partner] = f;
                stack[top++] = partner;
            }
            if (kind[leg >> 2] == VertexKind::ising_diag) {
                const std::int32_t base = leg & ~3;
                for (std::int32_t j = base; j < base + 4; ++j)
                    if (fl[j] < 0) {
                        fl[j] = f;
                        stack[top++] = j;
                    }
            } else if (fl[leg ^ 1] < 0) {
                fl[leg ^ 1] = f;
                stack[top++] = leg ^ 1;
            }
        }
    }

    for (std::int64_t v = 0; v < vl.n_vertices(); ++v) {
        const VertexKind kind = vl.kind(v);
        if (kind == VertexKind::ising_diag) continue;
        if (flip[static_cast<std::size_t>(4 * v)] == flip[static_cast<std::size_t>(4 * v + 2)]) continue;
        auto& op = segments[static_cast<std::size_t>(vl.segment_of(v))].ops[static_cast<std::size_t>(vl.slot_of(v))];
        op = Operator(op.bond(),
                      kind == VertexKind::heis_diag ? VertexKind::heis_offdiag : VertexKind::heis_diag);
    }

    const int N = lattice.n_spins();
    // Free time cycles: a glued site shares one coin across all segments.
    std::vector<std::int8_t> glued_coin(static_cast<std::size_t>(N), 0);
    for (int s = 0; s < N; ++s)
        if (vl.glued(s) && vl.seam_leg(0, s) < 0) glued_coin[static_cast<std::size_t>(s)] = rng.coin() ? 1 : 0;

    for (int k = 0; k < vl.n_segments(); ++k) {
        auto& seg = segments[static_cast<std::size_t>(k)];
        for (int s = 0; s < N; ++s) {
            const std::int32_t leg = vl.seam_leg(k, s);
            bool flipped;
            if (leg >= 0)
                flipped = flip[static_cast<std::size_t>(leg)] == 1;
            else if (vl.glued(s))
                flipped = glued_coin[static_cast<std::size_t>(s)] == 1;
            else
                flipped = rng.coin();
            if (flipped) seg.spins[static_cast<std::size_t>(s)] = static_cast<std::int8_t>(-seg.spins[static_cast<std::size_t>(s)]);
        }
        std::int64_t n2 = 0;
        for (const auto op : seg.ops)
            if (op.is_offdiagonal()) ++n2;
        seg.n_offdiag = n2;
    }
}

// ---------------------------------------------------------------------------

Chain::Chain(const Lattice& lattice, Couplings couplings, double beta, std::uint64_t seed,
             std::int64_t initial_cutoff)
    : lattice_(lattice), couplings_(couplings), rng_(seed)
{
    config_ = make_config(lattice_, beta, rng_, initial_cutoff);
}

Chain::Chain(const Lattice& lattice, Couplings couplings, SseConfig config, Rng rng)
    : lattice_(lattice), couplings_(couplings), config_(std::move(config)), rng_(rng)
{
    if (config_.spins.size() != static_cast<std::size_t>(lattice_.n_spins()))
        throw std::invalid_argument("configuration does not match the lattice");
}

void Chain::sweep(bool equilibrating)
{
    diagonal_sweep(config_, lattice_, couplings_, rng_);
    vertices_.rebuild(std::span<const SseConfig>(&config_, 1), lattice_);
    cluster_sweep(config_, vertices_, lattice_, rng_);
    if (equilibrating) adjust_cutoff(config_);
}

}  // namespace bilayer
