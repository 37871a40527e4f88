#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilayer/config.hpp"
#include "bilayer/estimators.hpp"
#include "bilayer/replica.hpp"

namespace bilayer {

/// One independent Markov chain of a sweep.
struct Job {
    int L = 0;
    double g = 0.0;
    int chain = 0;
    std::uint64_t seed = 0;
};

/// Depends only on its arguments, so extending a grid leaves existing chains
/// untouched.
std::uint64_t chain_seed(std::uint64_t master, int L, double g, int chain);

/// Ordered by L, then g in configuration order, then chain.
std::vector<Job> make_jobs(const RunConfig& cfg);

struct DriverOptions {
    /// Overrides cfg.output_dir when set.
    std::optional<std::filesystem::path> out_dir;
    bool resume = true;
    /// Stop every chain after this many bins, leaving its checkpoint behind
    /// (a controlled interruption).
    std::optional<std::int64_t> halt_after_bins;
    std::function<void(const std::string&)> log;
};

/// A sweep failed; completed points were written with a partial-result
/// manifest before this was thrown.
class SweepError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepOutcome {
    bool complete = false;
    std::vector<ResultRow> rows;
    std::filesystem::path out_dir;
};

/// Observables mode: runs every job on cfg.workers threads, checkpointing
/// every cfg.checkpoint_every bins, and writes results.csv plus
/// manifest.json. Bins of chains with equal (L, g) are pooled.
SweepOutcome run_sweep(const RunConfig& cfg, const DriverOptions& options = {});

struct EhOutcome {
    std::vector<EhCorrelator> points;
    std::filesystem::path out_dir;
};

/// Replica mode: writes eh_momentum.csv, eh_onsite.csv and manifest.json.
EhOutcome run_replica_eh(const RunConfig& cfg, const DriverOptions& options = {});

/// ED mode: thermal observables and the entanglement report for every point.
nlohmann::json run_ed(const RunConfig& cfg);

/// Runs `n` tasks on up to `workers` threads; task i always runs exactly
/// once. Returns the error message of each failed task (empty on success).
std::vector<std::string> parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

/// Writes through a temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace bilayer
