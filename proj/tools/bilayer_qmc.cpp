// Command-line front end: one subcommand per entry point of the library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bilayer/checkpoint.hpp"
#include "bilayer/config.hpp"
#include "bilayer/driver.hpp"
#include "bilayer/fss.hpp"

using namespace bilayer;
using nlohmann::json;

namespace {

enum Exit { ok = 0, runtime_failure = 1, usage = 2, checkpoint = 3 };

int report_error(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
}

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out;
};

void add_common(CLI::App* app, Common& c, bool needs_config) {
    auto* opt = app->add_option("--config", c.config, "run configuration file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "master seed (overrides the config)");
    app->add_option("--workers", c.workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

RunConfig configured(const Common& c, Mode mode) {
    RunConfig cfg = load_config(c.config);
    cfg.mode = mode;
    if (c.seed) cfg.seed = *c.seed;
    if (c.workers) cfg.workers = *c.workers;
    if (!c.out.empty()) cfg.output_dir = c.out;
    validate(cfg);
    return cfg;
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_file_atomic(out, text);
}

fss::SweepDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    auto rows = read_result_csv(in);
    fss::SweepDataset d = fss::dataset_from_rows(rows);
    if (d.sizes.empty()) throw ConfigError("'" + path + "' holds no U2/chi/m_abs rows");
    return d;
}

DriverOptions driver_options(bool quiet) {
    DriverOptions o;
    if (!quiet) o.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum Monte Carlo for the Ising-Heisenberg bilayer"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "no progress messages on stderr");

    Common run_c, sweep_c, eh_c, ed_c;
    std::optional<std::int64_t> halt_after;
    bool no_resume = false;

    auto* run = app.add_subcommand("run", "observables at a single (L, g) point");
    add_common(run, run_c, true);
    run->add_option("--out", run_c.out, "output directory");

    auto* sweep = app.add_subcommand("sweep", "observables over an (L, g) grid");
    add_common(sweep, sweep_c, true);
    sweep->add_option("--out", sweep_c.out, "output directory");
    sweep->add_option("--halt-after-bins", halt_after, "stop every chain after this many bins (leaves checkpoints)")
        ->check(CLI::NonNegativeNumber);
    sweep->add_flag("--no-resume", no_resume, "ignore existing checkpoints");

    auto* eh = app.add_subcommand("replica-eh", "entanglement-Hamiltonian correlators on the replica manifold");
    add_common(eh, eh_c, true);
    eh->add_option("--out", eh_c.out, "output directory");

    auto* ed = app.add_subcommand("ed", "exact diagonalization report (JSON)");
    add_common(ed, ed_c, true);
    ed->add_option("--out", ed_c.out, "output file (default: stdout)");

    std::string an_in, an_out, an_collapsed, an_config;
    int resamples = 200;
    auto* analyze = app.add_subcommand("analyze", "Binder crossings and g_c extrapolation from an estimator CSV");
    analyze->add_option("--in", an_in, "estimator CSV");
    analyze->add_option("--config", an_config, "configuration with analyze.input")->check(CLI::ExistingFile);
    analyze->add_option("--out", an_out, "report file (default: stdout)");
    analyze->add_option("--collapsed", an_collapsed, "also write collapsed U2 coordinates at the extrapolated g_c");
    analyze->add_option("--resamples", resamples, "bootstrap resamples per crossing")->check(CLI::PositiveNumber);

    std::string co_in, co_out, co_obs = "U2";
    fss::CollapseParams cp;
    bool optimize = false;
    auto* collapse = app.add_subcommand("collapse", "data-collapse cost and collapsed coordinates");
    collapse->add_option("--in", co_in, "estimator CSV")->required()->check(CLI::ExistingFile);
    collapse->add_option("--out", co_out, "collapsed-coordinates CSV");
    collapse->add_option("--observable", co_obs, "U2, chi or m_abs");
    collapse->add_option("--gc", cp.g_c, "critical coupling");
    collapse->add_option("--nu", cp.nu, "correlation-length exponent")->check(CLI::PositiveNumber);
    collapse->add_option("--gamma", cp.gamma, "susceptibility exponent");
    collapse->add_option("--eta", cp.eta, "anomalous dimension");
    collapse->add_flag("--optimize", optimize, "minimize the cost over (g_c, nu) first");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", e.what(), usage);
    }

    try {
        if (run->parsed() || sweep->parsed()) {
            const Common& c = run->parsed() ? run_c : sweep_c;
            RunConfig cfg = configured(c, Mode::observables);
            if (run->parsed() && (cfg.sizes.size() != 1 || cfg.g_values.size() != 1))
                throw ConfigError("run takes a single (L, g) point; use sweep for grids");
            DriverOptions o = driver_options(quiet);
            o.resume = !no_resume;
            o.halt_after_bins = halt_after;
            SweepOutcome r = run_sweep(cfg, o);
            std::cout << json{{"status", r.complete ? "complete" : "interrupted"},
                              {"results", (r.out_dir / (r.complete ? "results.csv" : "results.partial.csv")).string()},
                              {"rows", r.rows.size()}}
                             .dump()
                      << '\n';
        } else if (eh->parsed()) {
            RunConfig cfg = configured(eh_c, Mode::replica_eh);
            EhOutcome r = run_replica_eh(cfg, driver_options(quiet));
            std::cout << json{{"status", "complete"},
                              {"momentum", (r.out_dir / "eh_momentum.csv").string()},
                              {"onsite", (r.out_dir / "eh_onsite.csv").string()}}
                             .dump()
                      << '\n';
        } else if (ed->parsed()) {
            std::string out = ed_c.out;
            ed_c.out.clear();
            RunConfig cfg = configured(ed_c, Mode::ed);
            emit(out, run_ed(cfg).dump(2) + "\n");
        } else if (analyze->parsed()) {
            std::string input = an_in;
            if (input.empty() && !an_config.empty()) {
                RunConfig cfg = load_config(an_config);
                input = cfg.input;
            }
            if (input.empty()) throw ConfigError("analyze needs --in or a config with analyze.input");
            fss::SweepDataset data = load_dataset(input);
            json report = fss::analysis_report(data, resamples);
            fss::CollapseParams base;
            if (report["g_c"].is_object()) base.g_c = report["g_c"]["value"].get<double>();
            const double nus[] = {0.5, 0.63, 1.0};
            report["collapse"] = {{"U2", fss::collapse_scan(data, fss::Observable::U2, base, nus)},
                                  {"chi", fss::collapse_scan(data, fss::Observable::chi, base, nus)}};
            if (!an_collapsed.empty()) {
                std::ostringstream os;
                auto pts = fss::collapse_points(data, base, fss::Observable::U2);
                fss::write_collapsed_csv(os, pts);
                write_file_atomic(an_collapsed, os.str());
            }
            emit(an_out, report.dump(2) + "\n");
        } else if (collapse->parsed()) {
            fss::SweepDataset data = load_dataset(co_in);
            fss::Observable obs = fss::parse_observable(co_obs);
            if (optimize) cp = fss::optimize_collapse(data, cp, obs);
            fss::CollapseResult r = fss::collapse_cost(data, cp, obs);
            if (!co_out.empty()) {
                std::ostringstream os;
                auto pts = fss::collapse_points(data, cp, obs);
                fss::write_collapsed_csv(os, pts);
                write_file_atomic(co_out, os.str());
            }
            std::cout << json{{"observable", co_obs},
                              {"g_c", cp.g_c},
                              {"nu", cp.nu},
                              {"gamma", cp.gamma},
                              {"eta", cp.eta},
                              {"cost", std::isfinite(r.cost) ? json(r.cost) : json(nullptr)},
                              {"overlap_ok", r.overlap_ok},
                              {"n_points", r.n_points},
                              {"lambda", r.lambda}}
                             .dump()
                      << '\n';
        }
    } catch (const ConfigError& e) {
        return report_error("config", e.what(), usage);
    } catch (const CheckpointError& e) {
        return report_error("checkpoint", e.what(), checkpoint);
    } catch (const SweepError& e) {
        return report_error("sweep", e.what(), runtime_failure);
    } catch (const std::invalid_argument& e) {
        return report_error("invalid_argument", e.what(), usage);
    } catch (const std::exception& e) {
        return report_error("runtime", e.what(), runtime_failure);
    }
    return ok;
}
