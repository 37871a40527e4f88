#include <doctest.h>

#include "bilayer/config.hpp"

using namespace bilayer;

namespace {

bool rejects(std::string_view text, std::string_view fragment) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        if (std::string(e.what()).find(fragment) != std::string::npos) return true;
        MESSAGE("unexpected message: " << e.what());
        return false;
    }
    return false;
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
    RunConfig c = parse_config("[lattice]\nL = 8\n[couplings]\ng = 3.0\n");
    CHECK(c.mode == Mode::observables);
    CHECK(c.sizes == std::vector<int>{8});
    CHECK(c.g_values == std::vector<double>{3.0});
    CHECK(c.beta_for(8) == 16.0);
    CHECK(c.plan.bin_size == 100);
    CHECK(c.boundary == Boundary::periodic);
    CHECK(c.J == 1.0);
    CHECK(c.workers == 1);
}

TEST_CASE("full config") {
    const char* text = R"(# sweep near the critical point
mode = "observables"
seed = 42
workers = 4
chains = 2

[lattice]
L = [8, 12, 16]   # sizes
boundary = "periodic"

[couplings]
J = 1
g_range = [2.9, 3.2, 0.05]

[temperature]
beta_per_L = 2

[sweeps]
equil = 2000
bins = 20
bin_size = 500
checkpoint_every = 5

[measure]
correlations = true

[output]
dir = "runs/critical # not a comment"
)";
    RunConfig c = parse_config(text);
    CHECK(c.seed == 42);
    CHECK(c.workers == 4);
    CHECK(c.chains == 2);
    CHECK(c.sizes == std::vector<int>{8, 12, 16});
    REQUIRE(c.g_values.size() == 7);
    CHECK(c.g_values[1] == 2.95);
    CHECK(c.g_values[6] == 3.2);
    CHECK(c.beta_for(12) == 24.0);
    CHECK(c.plan == RunPlan{2000, 20, 500});
    CHECK(c.checkpoint_every == 5);
    CHECK(c.measure.correlations);
    CHECK_FALSE(c.measure.slice_average);
    CHECK(c.output_dir == "runs/critical # not a comment");

    SUBCASE("round trip") {
        std::string once = serialize(c);
        RunConfig back = parse_config(once);
        CHECK(back == c);
        CHECK(serialize(back) == once);
    }
}

TEST_CASE("other modes round trip") {
    RunConfig eh = parse_config("mode = \"replica-eh\"\n[lattice]\nL = 8\n[couplings]\ng = [2.0, 3.045, 5.0]\n"
                                "[temperature]\nbeta = 16\n[replica]\nn_rep = 4\n");
    CHECK(eh.n_rep == 4);
    CHECK(eh.beta_for(8) == 16.0);
    CHECK(parse_config(serialize(eh)) == eh);

    RunConfig ed = parse_config("mode = \"ed\"\n[lattice]\nL = 2\nboundary = \"open\"\n[couplings]\ng = 3\n"
                                "[temperature]\nbeta = 8\n[ed]\nh = 0.5\n");
    CHECK(ed.h == 0.5);
    CHECK(parse_config(serialize(ed)) == ed);

    RunConfig an = parse_config("mode = \"analyze\"\n[analyze]\ninput = \"sweep.csv\"\n");
    CHECK(an.input == "sweep.csv");
    CHECK(parse_config(serialize(an)) == an);
}

TEST_CASE("invalid configs are rejected") {
    const std::string base = "[lattice]\nL = 8\n";
    CHECK(rejects(base + "[couplings]\ng = -1\n", "couplings.g must be >= 0"));
    CHECK(rejects("mode = \"replica-eh\"\n" + base + "[couplings]\ng = 3\n", "requires replica.n_rep"));
    CHECK(rejects(base + "[couplings]\ng = 3\nfoo = 1\n", "unknown key 'couplings.foo'"));
    CHECK(rejects(base + "[couplings]\ng = 3\n[sweeps]\nbins = 2.5\n", "must be an integer"));
    CHECK(rejects(base + "[couplings]\ng = \"three\"\n", "must be a number"));
    CHECK(rejects("[couplings]\ng = 3\n", "missing required key 'lattice.L'"));
    CHECK(rejects(base, "missing required key 'couplings.g'"));
    CHECK(rejects(base + "[couplings]\ng = 3\ng = 4\n", "duplicate key"));
    CHECK(rejects(base + "[couplings]\ng = 3\ng_range = [1, 2, 0.5]\n", "not both"));
    CHECK(rejects(base + "[couplings]\ng = [3, 4\n", "unterminated array"));
    CHECK(rejects(base + "[couplings]\ng = 3\n[temperature]\nbeta = 0\n", "beta must be positive"));
    CHECK(rejects("[lattice]\nL = 2\n[couplings]\ng = 3\n", "periodic boundaries need L >= 3"));
    CHECK(rejects(base + "[couplings]\ng = 3\n[replica]\nn_rep = 1\n", "n_rep must be >= 2"));
    CHECK(rejects("mode = \"ed\"\n" + base + "[couplings]\ng = 3\n", "limited to 14 spins"));
    CHECK(rejects("mode = \"bogus\"\n" + base + "[couplings]\ng = 3\n", "unknown mode"));
    CHECK(rejects(base + "oops\n", "line 3"));
    CHECK(rejects(base + "[couplings]\ng = 3\n[lattice]\n", "duplicate section"));
}

TEST_CASE("coupling grids are bit-stable") {
    auto g = coupling_grid(2.8, 3.3, 0.05);
    REQUIRE(g.size() == 11);
    CHECK(g[3] == 2.95);
    CHECK(g.back() == 3.3);
    CHECK(coupling_grid(1.0, 1.0, 0.1) == std::vector<double>{1.0});
    CHECK_THROWS_AS(coupling_grid(1.0, 2.0, 0.0), ConfigError);
}
