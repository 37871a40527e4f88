#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bilayer/estimators.hpp"
#include "bilayer/rng.hpp"
#include "bilayer/series.hpp"

using namespace bilayer;

TEST_CASE("order parameter and moments") {
    Lattice lat(2, Boundary::open);
    SpinState s(8, 1);
    CHECK(order_parameter(s, lat) == 0.0);  // all up: layers cancel
    for (int i = 4; i < 8; ++i) s[i] = -1;
    CHECK(order_parameter(s, lat) == 0.5);  // staggered between layers
    SseConfig cfg;
    cfg.spins = s;
    cfg.ops.assign(10, Operator{});
    MagnetizationSample m = measure_m(cfg, lat);
    CHECK(m.m == 0.5);
    CHECK(m.abs == 0.5);
    CHECK(m.m2 == 0.25);
    CHECK(m.m4 == 0.0625);
    MagnetizationSample avg = measure_m(cfg, lat, true);  // no operators: falls back to slice 0
    CHECK(avg.m2 == 0.25);
}

TEST_CASE("Binder cumulant and susceptibility") {
    CHECK(*binder(0.25, 0.0625) == doctest::Approx(1.0));  // ordered
    CHECK(*binder(1.0, 3.0) == doctest::Approx(0.0));      // Gaussian
    CHECK_FALSE(binder(0.0, 0.0).has_value());
    CHECK(susceptibility(0.25, 0.5, 8.0, 8) == doctest::Approx(0.0));
    CHECK(susceptibility(0.1, 0.2, 2.0, 32) == doctest::Approx(2.0 * 32 * (0.1 - 0.04)));
}

TEST_CASE("equal-time correlations") {
    Lattice lat(4, Boundary::periodic);
    SpinState up(32, 1);
    auto G = correlation_G(up, lat);
    REQUIRE(G.size() == 16);
    for (double v : G) CHECK(v == doctest::Approx(0.25));
    // columnar stripes along x in layer A
    SpinState stripes(32, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) stripes[lat.site(0, x, y)] = x % 2 ? -1 : 1;
    G = correlation_G(stripes, lat);
    CHECK(G[0] == doctest::Approx(0.25));
    CHECK(G[1] == doctest::Approx(-0.25));  // dx = 1
    CHECK(G[2] == doctest::Approx(0.25));
    CHECK(G[4] == doctest::Approx(0.25));   // dy = 1
}

TEST_CASE("energy estimator") {
    Lattice lat(2, Boundary::open);
    Couplings c{1.0, 3.0};
    CHECK(energy(10.0, 2.0, lat, c) == doctest::Approx(0.0));
    CHECK(energy(0.0, 2.0, lat, c) == doctest::Approx(5.0));
}

TEST_CASE("binned statistics") {
    SUBCASE("constant series has zero error") {
        std::vector<double> raw(1000, 0.3);
        auto s = bin_series(raw, 100, "x");
        CHECK(s.n_bins() == 10);
        Estimate e = s.estimate("x");
        CHECK(e.mean == doctest::Approx(0.3));
        CHECK(e.error == 0.0);
        CHECK(e.reliable);
    }
    SUBCASE("partial bins are dropped; few bins are unreliable") {
        std::vector<double> raw(950, 1.0);
        auto s = bin_series(raw, 100, "x");
        CHECK(s.n_bins() == 9);
        CHECK_FALSE(s.estimate("x").reliable);
    }
    SUBCASE("independent samples give the textbook standard error") {
        Rng rng(12);
        std::vector<double> raw(10000);
        for (double& v : raw) v = rng.normal();
        Estimate e = bin_series(raw, 100, "x").estimate("x");
        CHECK(e.error == doctest::Approx(0.01).epsilon(0.3));
        CHECK(std::abs(e.mean) < 3.0 * e.error);
    }
    SUBCASE("jackknife Binder cumulant of Gaussian samples vanishes") {
        Rng rng(13);
        ObservableSeries s({"m2", "m4"});
        for (int b = 0; b < 50; ++b) {
            double m2 = 0, m4 = 0;
            for (int i = 0; i < 200; ++i) {
                double m = rng.normal();
                m2 += m * m;
                m4 += m * m * m * m;
            }
            std::vector<double> bin = {m2 / 200, m4 / 200};
            s.add_bin(bin);
        }
        std::vector<std::string> in = {"m2", "m4"};
        Estimate u = jackknife(s, in, [](std::span<const double> x) { return *binder(x[0], x[1]); });
        CHECK(u.error > 0.0);
        CHECK(std::abs(u.mean) < 3.0 * u.error);
    }
    SUBCASE("jackknife of a linear function matches the bin error") {
        Rng rng(14);
        ObservableSeries s({"x"});
        for (int b = 0; b < 40; ++b) {
            std::vector<double> bin = {rng.normal()};
            s.add_bin(bin);
        }
        std::vector<std::string> in = {"x"};
        Estimate j = jackknife(s, in, [](std::span<const double> x) { return 2.0 * x[0] + 1.0; });
        Estimate b = s.estimate("x");
        CHECK(j.mean == doctest::Approx(2.0 * b.mean + 1.0));
        CHECK(j.error == doctest::Approx(2.0 * b.error));
    }
}

TEST_CASE("summary of a deterministic series") {
    Lattice lat(2, Boundary::open);
    Couplings c{1.0, 1.0};
    MeasureOptions opts;
    ObservableSeries s(standard_labels(lat, opts));
    for (int b = 0; b < 12; ++b) {
        // n, m, m_abs, m2, m4: an ordered state with |m| = 1/2
        std::vector<double> bin = {4.0, 0.0, 0.5, 0.25, 0.0625};
        s.add_bin(bin);
    }
    auto est = summarize(s, lat, c, 2.0);
    auto get = [&](const std::string& name) {
        for (const auto& e : est)
            if (e.observable == name) return e.value;
        FAIL("missing " << name);
        return Estimate{};
    };
    CHECK(get("U2").mean == doctest::Approx(1.0));
    CHECK(get("chi").mean == doctest::Approx(0.0));
    CHECK(get("E").mean == doctest::Approx(-2.0 + (8.0 + 4.0) / 4.0));
    CHECK(get("m_abs").error == 0.0);
}

TEST_CASE("result CSV round trip") {
    std::vector<ResultRow> rows = {
        {8, 3.045, 16.0, 123456789012345ULL, "U2", 0.123456789012345678, 1e-17, 20},
        {12, 0.1 + 0.2, 24.0, 1, "chi", -1.5e300, 0.0, 10},
        {16, 3.0, 32.0, 0, "G_1_0", std::nan(""), std::numeric_limits<double>::infinity(), 3},
    };
    std::ostringstream os;
    write_result_csv(os, rows);
    CHECK(os.str().rfind(std::string(result_csv_header) + "\n", 0) == 0);
    std::istringstream is(os.str());
    auto back = read_result_csv(is);
    REQUIRE(back.size() == 3);
    CHECK(back[0] == rows[0]);
    CHECK(back[1] == rows[1]);
    CHECK(std::isnan(back[2].mean));
    CHECK(std::isinf(back[2].error));
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");

    std::istringstream bad("L,g\n1,2\n");
    CHECK_THROWS(read_result_csv(bad));
}
