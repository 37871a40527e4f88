#include "bilayer/driver.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "bilayer/checkpoint.hpp"
#include "bilayer/ed.hpp"
#include "bilayer/rng.hpp"

namespace bilayer {

namespace fs = std::filesystem;

std::uint64_t chain_seed(std::uint64_t master, int L, double g, int chain) {
    return mix_seed({master, static_cast<std::uint64_t>(L), double_bits(g), static_cast<std::uint64_t>(chain)});
}

std::vector<Job> make_jobs(const RunConfig& cfg) {
    std::vector<int> sizes = cfg.sizes;
    std::stable_sort(sizes.begin(), sizes.end());
    std::vector<Job> jobs;
    for (int L : sizes)
        for (double g : cfg.g_values)
            for (int c = 0; c < cfg.chains; ++c) jobs.push_back({L, g, c, chain_seed(cfg.seed, L, g, c)});
    return jobs;
}

std::vector<std::string> parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                if (errors[i].empty()) errors[i] = "unknown error";
            } catch (...) {
                errors[i] = "unknown error";
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || n <= 1) {
        worker();
        return errors;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return errors;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << contents;
        os.flush();
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

fs::path out_dir_of(const RunConfig& cfg, const DriverOptions& o) { return o.out_dir ? *o.out_dir : fs::path(cfg.output_dir); }

void note(const DriverOptions& o, const std::string& msg) {
    static std::mutex m;
    if (!o.log) return;
    std::lock_guard lock(m);
    o.log(msg);
}

std::string job_name(const Job& j) {
    return "L" + std::to_string(j.L) + "_g" + format_double(j.g) + "_c" + std::to_string(j.chain);
}

// Jobs sharing (L, g) are contiguous in make_jobs order.
std::vector<std::pair<std::size_t, std::size_t>> point_ranges(const std::vector<Job>& jobs) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < jobs.size();) {
        std::size_t j = i;
        while (j < jobs.size() && jobs[j].L == jobs[i].L && jobs[j].g == jobs[i].g) ++j;
        out.emplace_back(i, j);
        i = j;
    }
    return out;
}

void check_matches(const Checkpoint& cp, const Job& job, const RunConfig& cfg, const Couplings& c) {
    const auto& meta = cp.progress.series.meta();
    bool ok = cp.chain.lattice().linear_size() == job.L && cp.chain.lattice().boundary() == cfg.boundary &&
              cp.chain.couplings().J == c.J && cp.chain.couplings().Jp == c.Jp &&
              cp.chain.beta() == cfg.beta_for(job.L) && cp.plan == cfg.plan && meta.seed == job.seed;
    if (!ok) throw CheckpointError("checkpoint for " + job_name(job) + " does not match the configuration");
}

struct ChainState {
    ObservableSeries series;
    bool complete = false;
};

ChainState run_chain(const Job& job, const RunConfig& cfg, const DriverOptions& o, const fs::path& chk_dir) {
    const Lattice lat(job.L, cfg.boundary);
    const Couplings c = Couplings::from_ratio(cfg.J, job.g);
    const double beta = cfg.beta_for(job.L);
    const fs::path chk = chk_dir / (job_name(job) + ".chk");
    const bool checkpointing = cfg.checkpoint_every > 0 || o.halt_after_bins.has_value();

    std::optional<Checkpoint> cp;
    if (o.resume && checkpointing) cp = load_checkpoint(chk);
    if (cp) {
        check_matches(*cp, job, cfg, c);
        note(o, "resume " + job_name(job) + " at bin " + std::to_string(cp->progress.series.n_bins()));
    } else {
        RunProgress progress;
        progress.series = ObservableSeries(standard_labels(lat, cfg.measure));
        auto& meta = progress.series.meta();
        meta.L = job.L;
        meta.g = job.g;
        meta.beta = beta;
        meta.seed = job.seed;
        meta.n_equil = cfg.plan.n_equil;
        meta.bin_size = cfg.plan.bin_size;
        cp.emplace(Checkpoint{Chain(lat, c, beta, job.seed), cfg.plan, std::move(progress)});
    }

    const Measure measure = standard_measure(cfg.measure);
    const std::int64_t n_bins = cfg.plan.n_bins;
    for (;;) {
        std::int64_t have = cp->progress.series.n_bins();
        if (have >= n_bins) break;
        std::int64_t target = n_bins;
        if (cfg.checkpoint_every > 0) target = std::min(target, (have / cfg.checkpoint_every + 1) * cfg.checkpoint_every);
        if (o.halt_after_bins) target = std::min(target, std::max(*o.halt_after_bins, have));
        if (target <= have) break;  // halted
        advance(cp->chain, cp->progress, cfg.plan, measure, target);
        if (checkpointing) save_checkpoint(chk, cp->chain, cp->plan, cp->progress);
    }
    ChainState st;
    st.complete = cp->progress.series.n_bins() >= n_bins;
    if (st.complete && checkpointing) fs::remove(chk);
    st.series = std::move(cp->progress.series);
    return st;
}

nlohmann::json grid_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["mode"] = to_string(cfg.mode);
    j["seed"] = cfg.seed;
    std::vector<int> sizes = cfg.sizes;
    std::stable_sort(sizes.begin(), sizes.end());
    j["L"] = sizes;
    j["g"] = cfg.g_values;
    j["boundary"] = to_string(cfg.boundary);
    j["J"] = cfg.J;
    j["beta"] = cfg.beta ? nlohmann::json(*cfg.beta) : nlohmann::json(nullptr);
    j["beta_per_L"] = cfg.beta ? nlohmann::json(nullptr) : nlohmann::json(cfg.beta_per_L);
    j["chains"] = cfg.chains;
    j["sweeps"] = {{"equil", cfg.plan.n_equil}, {"bins", cfg.plan.n_bins}, {"bin_size", cfg.plan.bin_size}};
    return j;
}

}  // namespace

SweepOutcome run_sweep(const RunConfig& cfg, const DriverOptions& o) {
    validate(cfg);
    if (cfg.mode != Mode::observables) throw std::invalid_argument("run_sweep needs mode = observables");
    const fs::path dir = out_dir_of(cfg, o);
    const fs::path chk_dir = dir / "checkpoints";
    fs::create_directories(dir);
    if (cfg.checkpoint_every > 0 || o.halt_after_bins) fs::create_directories(chk_dir);

    const auto jobs = make_jobs(cfg);
    std::vector<ChainState> states(jobs.size());
    std::atomic<std::size_t> done{0};
    auto errors = parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
        states[i] = run_chain(jobs[i], cfg, o, chk_dir);
        note(o, "finished " + job_name(jobs[i]) + " (" + std::to_string(++done) + "/" + std::to_string(jobs.size()) + ")");
    });

    SweepOutcome out;
    out.out_dir = dir;
    nlohmann::json manifest = grid_json(cfg);
    manifest["points"] = nlohmann::json::array();
    bool all_complete = true, any_error = false;
    std::vector<ResultRow> rows;
    for (auto [a, b] : point_ranges(jobs)) {
        bool complete = true;
        nlohmann::json errs = nlohmann::json::array();
        for (std::size_t i = a; i < b; ++i) {
            if (!errors[i].empty()) {
                errs.push_back({{"chain", jobs[i].chain}, {"error", errors[i]}});
                complete = false;
            } else if (!states[i].complete) {
                complete = false;
            }
        }
        std::string status = !errs.empty() ? "failed" : complete ? "complete" : "interrupted";
        nlohmann::json pj{{"L", jobs[a].L}, {"g", jobs[a].g}, {"status", status}};
        if (!errs.empty()) pj["errors"] = errs;
        manifest["points"].push_back(pj);
        any_error = any_error || !errs.empty();
        all_complete = all_complete && complete;
        if (!complete) continue;
        ObservableSeries pooled = states[a].series;
        for (std::size_t i = a + 1; i < b; ++i) pooled.append(states[i].series);
        const Lattice lat(jobs[a].L, cfg.boundary);
        const double beta = cfg.beta_for(jobs[a].L);
        auto values = summarize(pooled, lat, Couplings::from_ratio(cfg.J, jobs[a].g), beta);
        SeriesMeta meta = pooled.meta();
        meta.seed = cfg.seed;
        auto r = to_rows(meta, pooled.n_bins(), values);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    std::ostringstream csv;
    write_result_csv(csv, rows);
    const char* name = all_complete ? "results.csv" : "results.partial.csv";
    write_file_atomic(dir / name, csv.str());
    if (!all_complete && fs::exists(dir / "results.csv")) fs::remove(dir / "results.csv");
    manifest["status"] = all_complete ? "complete" : any_error ? "failed" : "interrupted";
    manifest["results"] = name;
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    out.complete = all_complete;
    out.rows = std::move(rows);
    if (any_error) {
        std::string first;
        for (const auto& e : errors)
            if (!e.empty()) {
                first = e;
                break;
            }
        throw SweepError("sweep failed (" + first + "); partial results in " + (dir / name).string());
    }
    return out;
}

EhOutcome run_replica_eh(const RunConfig& cfg, const DriverOptions& o) {
    validate(cfg);
    if (cfg.mode != Mode::replica_eh) throw std::invalid_argument("run_replica_eh needs mode = replica-eh");
    const fs::path dir = out_dir_of(cfg, o);
    fs::create_directories(dir);
    const int n_rep = *cfg.n_rep;
    const auto jobs = make_jobs(cfg);
    std::vector<ObservableSeries> series(jobs.size());
    std::atomic<std::size_t> done{0};
    auto errors = parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
        const Job& j = jobs[i];
        const Lattice lat(j.L, cfg.boundary);
        ReplicaManifold m(lat, Couplings::from_ratio(cfg.J, j.g), cfg.beta_for(j.L), n_rep, j.seed);
        series[i] = run_manifold(m, cfg.plan);
        note(o, "finished " + job_name(j) + " (" + std::to_string(++done) + "/" + std::to_string(jobs.size()) + ")");
    });

    EhOutcome out;
    out.out_dir = dir;
    nlohmann::json manifest = grid_json(cfg);
    manifest["n_rep"] = n_rep;
    manifest["points"] = nlohmann::json::array();
    std::ostringstream mom, onsite;
    mom << eh_momentum_csv_header << '\n';
    onsite << eh_onsite_csv_header << '\n';
    bool failed = false;
    std::string first_error;
    for (auto [a, b] : point_ranges(jobs)) {
        std::string err;
        for (std::size_t i = a; i < b; ++i)
            if (!errors[i].empty() && err.empty()) err = errors[i];
        nlohmann::json pj{{"L", jobs[a].L}, {"g", jobs[a].g}, {"status", err.empty() ? "complete" : "failed"}};
        if (!err.empty()) {
            pj["error"] = err;
            failed = true;
            if (first_error.empty()) first_error = err;
        }
        manifest["points"].push_back(pj);
        if (!err.empty()) continue;
        ObservableSeries pooled = series[a];
        for (std::size_t i = a + 1; i < b; ++i) pooled.append(series[i]);
        const Lattice lat(jobs[a].L, cfg.boundary);
        EhCorrelator eh = summarize_eh(pooled, lat, n_rep);
        write_eh_momentum_csv(mom, eh, jobs[a].g, cfg.beta_for(jobs[a].L), false);
        write_eh_onsite_csv(onsite, eh, jobs[a].g, cfg.beta_for(jobs[a].L), false);
        out.points.push_back(std::move(eh));
    }
    const std::string suffix = failed ? ".partial.csv" : ".csv";
    write_file_atomic(dir / ("eh_momentum" + suffix), mom.str());
    write_file_atomic(dir / ("eh_onsite" + suffix), onsite.str());
    manifest["status"] = failed ? "failed" : "complete";
    manifest["results"] = {"eh_momentum" + suffix, "eh_onsite" + suffix};
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    if (failed) throw SweepError("replica run failed (" + first_error + "); partial results in " + dir.string());
    return out;
}

nlohmann::json run_ed(const RunConfig& cfg) {
    validate(cfg);
    const int n_rep = cfg.n_rep.value_or(default_n_rep);
    std::vector<int> sizes = cfg.sizes;
    std::stable_sort(sizes.begin(), sizes.end());
    auto out = nlohmann::json::array();
    for (int L : sizes)
        for (double g : cfg.g_values) {
            const Lattice lat(L, cfg.boundary);
            const double beta = cfg.beta_for(L);
            ed::Spectrum sp = ed::diagonalize(ed::build_hamiltonian(lat, Couplings::from_ratio(cfg.J, g), ed::Extras{cfg.h}));
            ed::EhReport eh = ed::eh_report(ed::reduce_to_A(ed::thermal_rho(sp, beta), lat), lat, n_rep);
            out.push_back({{"L", L},
                           {"g", g},
                           {"beta", beta},
                           {"h", cfg.h},
                           {"boundary", to_string(cfg.boundary)},
                           {"thermal", ed::to_json(ed::thermal_observables(sp, beta, lat))},
                           {"eh", ed::to_json(eh)}});
        }
    return out;
}

}  // namespace bilayer
