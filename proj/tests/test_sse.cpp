#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bilayer/ed.hpp"
#include "bilayer/estimators.hpp"
#include "bilayer/simulation.hpp"
#include "bilayer/sse.hpp"

using namespace bilayer;

namespace {

SseConfig empty_config(const Lattice& lat, int cutoff, double beta = 1.0) {
    SseConfig cfg;
    cfg.spins.assign(static_cast<std::size_t>(lat.n_spins()), 1);
    cfg.ops.assign(static_cast<std::size_t>(cutoff), Operator{});
    cfg.beta = beta;
    return cfg;
}

}  // namespace

TEST_CASE("couplings") {
    Couplings c = Couplings::from_ratio(2.0, 1.5);
    CHECK(c.J == 2.0);
    CHECK(c.Jp == 3.0);
    CHECK(c.g() == 1.5);
    CHECK_THROWS_AS(Couplings::from_ratio(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(Couplings::from_ratio(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("operator packing") {
    Operator op(1234, VertexKind::heis_offdiag);
    CHECK(op.bond() == 1234);
    CHECK(op.kind() == VertexKind::heis_offdiag);
    CHECK(op.is_offdiagonal());
    CHECK_FALSE(op.is_diagonal());
    CHECK(Operator::from_raw(op.raw()) == op);
    CHECK(Operator{}.is_null());
}

TEST_CASE("diagonal-update probabilities") {
    Lattice lat(4, Boundary::periodic);
    Couplings c{1.0, 3.0};
    CHECK(ising_probability(lat, c) == doctest::Approx(4.0 / 7.0));
    CHECK(total_weight(lat, c) == doctest::Approx(56.0));
    CHECK(insert_probability(8.0, 56.0, 100) == 1.0);  // beta W = 448
    CHECK(insert_probability(1.0, 56.0, 100) == doctest::Approx(0.56));
    CHECK(remove_probability(1.0, 56.0, 100) == 1.0);
    CHECK(remove_probability(8.0, 56.0, 100) == doctest::Approx(101.0 / 448.0));
    CHECK(energy_shift(lat, c) == doctest::Approx((64.0 + 48.0) / 4.0));

    // matrix elements and compatibility
    int ib = lat.n_intra() > 0 ? 0 : -1;
    Operator ising(ib, VertexKind::ising_diag), hd(lat.inter_bond(0), VertexKind::heis_diag),
        ho(lat.inter_bond(0), VertexKind::heis_offdiag);
    CHECK(vertex_weight(ising, 1, 1, c) == 0.5);
    CHECK(vertex_weight(ising, -1, -1, c) == 0.5);
    CHECK(vertex_weight(ising, 1, -1, c) == 0.0);  // Ising insertion on antiparallel spins rejected
    CHECK(vertex_weight(hd, 1, -1, c) == 1.5);
    CHECK(vertex_weight(hd, 1, 1, c) == 0.0);
    CHECK(vertex_weight(ho, -1, 1, c) == 1.5);
}

TEST_CASE("cutoff adjustment") {
    Lattice lat(2, Boundary::open);
    SseConfig cfg = empty_config(lat, 100);
    cfg.n_ops = 80;
    CHECK(adjust_cutoff(cfg));
    CHECK(cfg.cutoff() == 117);
    cfg = empty_config(lat, 100);
    cfg.n_ops = 10;
    CHECK_FALSE(adjust_cutoff(cfg));
    CHECK(cfg.cutoff() == 100);
    Rng rng(1);
    SseConfig fresh = make_config(lat, 1.0, rng, 20);
    CHECK(fresh.n_ops == 0);
    CHECK_FALSE(adjust_cutoff(fresh));
    CHECK(fresh.cutoff() == 20);
}

TEST_CASE("vertex list of an empty string") {
    Lattice lat(2, Boundary::open);
    SseConfig cfg = empty_config(lat, 10);
    VertexList vl(std::span<const SseConfig>(&cfg, 1), lat);
    CHECK(vl.n_vertices() == 0);
    CHECK(vl.free_sites().size() == 8);
}

TEST_CASE("vertex list links") {
    Lattice lat(2, Boundary::open);
    const int b = lat.inter_bond(0);
    const int s1 = lat.bond(b).site1, s2 = lat.bond(b).site2;

    SUBCASE("one Heisenberg diagonal operator links to itself across time") {
        SseConfig cfg = empty_config(lat, 10);
        cfg.spins[s2] = -1;
        cfg.ops[3] = Operator(b, VertexKind::heis_diag);
        cfg.n_ops = 1;
        REQUIRE(check_config(cfg, lat));
        VertexList vl(std::span<const SseConfig>(&cfg, 1), lat);
        REQUIRE(vl.n_vertices() == 1);
        CHECK(vl.link(0) == 2);
        CHECK(vl.link(1) == 3);
        CHECK(vl.link(2) == 0);
        CHECK(vl.link(3) == 1);
        CHECK(vl.free_sites().size() == static_cast<std::size_t>(2 * 4 - 2));
        CHECK(vl.seam_leg(0, s1) == 0);
        CHECK(vl.seam_leg(0, s2) == 1);
    }
    SUBCASE("stacked operators") {
        SseConfig cfg = empty_config(lat, 10);
        cfg.spins[s2] = -1;
        cfg.ops[2] = Operator(b, VertexKind::heis_diag);
        cfg.ops[6] = Operator(b, VertexKind::heis_diag);
        const int ib = 0;  // intra bond of layer A touching site1 of bond b
        REQUIRE((lat.bond(ib).site1 == s1 || lat.bond(ib).site2 == s1));
        cfg.ops[4] = Operator(ib, VertexKind::ising_diag);
        cfg.n_ops = 3;
        REQUIRE(check_config(cfg, lat));
        VertexList vl(std::span<const SseConfig>(&cfg, 1), lat);
        REQUIRE(vl.n_vertices() == 3);
        int leg_on_s1 = lat.bond(ib).site1 == s1 ? 0 : 1;
        CHECK(vl.link(2) == 4 + leg_on_s1);      // heis upper(s1) -> ising lower(s1)
        CHECK(vl.link(4 + 2 + leg_on_s1) == 8);  // ising upper(s1) -> second heis lower(s1)
        CHECK(vl.link(3) == 9);                  // s2 skips the Ising vertex
        CHECK(vl.link(10) == 0);                 // wrap around
        CHECK(vl.link(11) == 1);
        for (int leg = 0; leg < vl.n_legs(); ++leg) CHECK(vl.link(vl.link(leg)) == leg);
    }
}

TEST_CASE("link relation is an involution on random strings") {
    for (auto [L, bnd] : {std::pair{2, Boundary::open}, std::pair{4, Boundary::periodic}}) {
        Lattice lat(L, bnd);
        Chain chain(lat, Couplings{1.0, 2.0}, 3.0, 42);
        for (int s = 0; s < 50; ++s) {
            chain.sweep(true);
            VertexList vl(std::span<const SseConfig>(&chain.config(), 1), lat);
            bool ok = true;
            std::set<std::int32_t> seen;
            for (std::int32_t leg = 0; leg < vl.n_legs(); ++leg) {
                ok = ok && vl.link(vl.link(leg)) == leg;
                seen.insert(vl.link(leg));
            }
            CHECK(ok);
            CHECK(seen.size() == static_cast<std::size_t>(vl.n_legs()));
        }
    }
}

TEST_CASE("cluster flips") {
    Lattice lat(2, Boundary::open);
    Couplings c{1.0, 3.0};
    const int b = lat.inter_bond(0);
    const int s1 = lat.bond(b).site1, s2 = lat.bond(b).site2;

    SUBCASE("two Heisenberg vertices: partial flips turn both off-diagonal") {
        SseConfig cfg = empty_config(lat, 8);
        cfg.spins[s2] = -1;
        cfg.ops[1] = Operator(b, VertexKind::heis_diag);
        cfg.ops[5] = Operator(b, VertexKind::heis_diag);
        cfg.n_ops = 2;
        const double w0 = log_vertex_weight(cfg, lat, c);
        int n_off = 0, n_diag = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            SseConfig t = cfg;
            Rng rng(seed);
            VertexList vl(std::span<const SseConfig>(&t, 1), lat);
            cluster_sweep(t, vl, lat, rng);
            REQUIRE(check_config(t, lat));
            CHECK(log_vertex_weight(t, lat, c) == doctest::Approx(w0));
            CHECK(t.spins[s1] == -t.spins[s2]);
            if (t.n_offdiag == 2) {
                ++n_off;
                CHECK(t.ops[1].kind() == VertexKind::heis_offdiag);
                CHECK(t.ops[5].kind() == VertexKind::heis_offdiag);
            } else {
                CHECK(t.n_offdiag == 0);
                ++n_diag;
            }
        }
        CHECK(n_off > 50);
        CHECK(n_diag > 50);
    }
    SUBCASE("an Ising vertex flips its four legs together") {
        const Bond& ib = lat.bond(0);
        SseConfig cfg = empty_config(lat, 8);
        cfg.ops[2] = Operator(0, VertexKind::ising_diag);
        cfg.n_ops = 1;
        int flipped = 0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            SseConfig t = cfg;
            Rng rng(seed);
            VertexList vl(std::span<const SseConfig>(&t, 1), lat);
            cluster_sweep(t, vl, lat, rng);
            REQUIRE(check_config(t, lat));
            CHECK(t.spins[ib.site1] == t.spins[ib.site2]);
            CHECK(t.ops[2].kind() == VertexKind::ising_diag);
            flipped += t.spins[ib.site1] == -1;
        }
        CHECK(flipped > 60);
        CHECK(flipped < 140);
    }
    SUBCASE("an empty string resamples every spin") {
        SseConfig cfg = empty_config(lat, 8);
        VertexList vl(std::span<const SseConfig>(&cfg, 1), lat);
        Rng rng(5);
        std::vector<int> ups(8, 0);
        for (int s = 0; s < 1000; ++s) {
            cluster_sweep(cfg, vl, lat, rng);
            for (int i = 0; i < 8; ++i) ups[i] += cfg.spins[i] == 1;
        }
        for (int u : ups) {
            CHECK(u > 420);
            CHECK(u < 580);
        }
    }
}

TEST_CASE("invariants survive many sweeps") {
    Lattice lat(4, Boundary::periodic);
    Couplings c{1.0, 2.5};
    Chain chain(lat, c, 4.0, 7);
    Rng rng(99);
    bool ok = true;
    std::string why;
    for (int s = 0; s < 300; ++s) {
        chain.sweep(s < 100);
        ok = ok && check_config(chain.config(), lat, &why);
        // cluster flips alone leave the weight unchanged
        SseConfig t = chain.config();
        double w = log_vertex_weight(t, lat, c);
        VertexList vl(std::span<const SseConfig>(&t, 1), lat);
        cluster_sweep(t, vl, lat, rng);
        ok = ok && std::abs(log_vertex_weight(t, lat, c) - w) < 1e-9 * std::max(1.0, std::abs(w));
        ok = ok && t.n_offdiag % 2 == 0;
    }
    CHECK_MESSAGE(ok, why);
    CHECK(chain.config().n_ops > 0);
}

TEST_CASE("off-diagonal sector is visited") {
    Lattice lat(2, Boundary::open);
    Chain chain(lat, Couplings{1.0, 3.0}, 1.0, 3);
    bool zero = false, two = false;
    for (int s = 0; s < 2000; ++s) {
        chain.sweep(s < 200);
        zero = zero || chain.config().n_offdiag == 0;
        two = two || chain.config().n_offdiag >= 2;
    }
    CHECK(zero);
    CHECK(two);
}

TEST_CASE("same seed, same chain") {
    Lattice lat(4, Boundary::periodic);
    Chain a(lat, Couplings{1.0, 3.0}, 8.0, 2024), b(lat, Couplings{1.0, 3.0}, 8.0, 2024);
    Chain d(lat, Couplings{1.0, 3.0}, 8.0, 2025);
    for (int s = 0; s < 200; ++s) {
        a.sweep(s < 100);
        b.sweep(s < 100);
        d.sweep(s < 100);
    }
    CHECK(a.config() == b.config());
    CHECK(a.rng() == b.rng());
    CHECK_FALSE(a.config() == d.config());
}

TEST_CASE("energy agrees with exact diagonalization") {
    Lattice lat(2, Boundary::open);
    for (double g : {0.5, 3.0}) {
        Couplings c = Couplings::from_ratio(1.0, g);
        const double beta = 8.0;
        auto exact = ed::thermal_observables(ed::build_hamiltonian(lat, c), beta, lat);
        Chain chain(lat, c, beta, 77);
        MeasureOptions opts;
        RunPlan plan{2000, 20, 1000};
        ObservableSeries series = run(chain, plan, standard_labels(lat, opts), standard_measure(opts));
        CHECK(series.n_bins() == 20);
        auto est = summarize(series, lat, c, beta);
        auto E = std::find_if(est.begin(), est.end(), [](const NamedEstimate& e) { return e.observable == "E"; });
        REQUIRE(E != est.end());
        CHECK(E->value.reliable);
        CHECK(std::abs(E->value.mean - exact.scalars.E) < 3.0 * E->value.error);
        CHECK(E->value.error < 0.01 * std::abs(exact.scalars.E));
    }
}

TEST_CASE("layer correlations agree with exact diagonalization") {
    Lattice lat(2, Boundary::open);
    Couplings c = Couplings::from_ratio(1.0, 3.0);
    const double beta = 8.0;
    auto exact = ed::thermal_observables(ed::build_hamiltonian(lat, c), beta, lat);
    Chain chain(lat, c, beta, 78);
    MeasureOptions opts;
    opts.correlations = true;
    ObservableSeries series = run(chain, RunPlan{2000, 20, 2000}, standard_labels(lat, opts), standard_measure(opts));
    for (int d = 0; d < 4; ++d) {
        const Estimate e = series.estimate(correlation_label(d % 2, d / 2));
        CHECK(std::abs(e.mean - exact.G[static_cast<std::size_t>(d)]) <= 3.0 * e.error + 1e-12);
    }
}
