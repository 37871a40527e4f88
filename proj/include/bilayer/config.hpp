#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bilayer/estimators.hpp"
#include "bilayer/lattice.hpp"
#include "bilayer/simulation.hpp"

namespace bilayer {

/// Run configuration text format.
///
///     # comment
///     key = value                 top-level keys
///     [section]
///     key = value                 keys of that section
///
/// A value is an integer (`12`, `-3`), a real (`3.045`, `1e-3`), a boolean
/// (`true`/`false`), a double-quoted string without escapes, or a flat array
/// `[v, v, ...]`. One pair per line; `#` starts a comment outside strings.
///
/// Keys:
///     mode = "observables" | "replica-eh" | "ed" | "analyze"
///     seed, workers, chains                          integers
///     [lattice]      L (int or array), boundary ("periodic" | "open")
///     [couplings]    J, g (real or array) or g_range = [first, last, step]
///     [temperature]  beta, or beta_per_L (default 2)
///     [sweeps]       equil, bins, bin_size (default 100), checkpoint_every
///     [replica]      n_rep (required in replica-eh mode)
///     [ed]           h
///     [measure]      correlations, slice_average
///     [output]       dir
///     [analyze]      input
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { observables, replica_eh, ed, analyze };

Mode parse_mode(std::string_view s);
std::string to_string(Mode m);

struct RunConfig {
    Mode mode = Mode::observables;
    std::vector<int> sizes;
    Boundary boundary = Boundary::periodic;
    double J = 1.0;
    std::vector<double> g_values;
    std::optional<double> beta;
    double beta_per_L = 2.0;
    RunPlan plan{1000, 20, 100};
    std::int64_t checkpoint_every = 0;
    std::uint64_t seed = 1;
    int workers = 1;
    int chains = 1;
    std::optional<int> n_rep;
    double h = 0.0;
    MeasureOptions measure;
    std::string output_dir = "out";
    std::string input;

    double beta_for(int L) const { return beta ? *beta : beta_per_L * L; }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws ConfigError naming the line for syntax errors, unknown keys, type
/// mismatches, missing keys and invalid values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
std::string serialize(const RunConfig& cfg);

/// Re-checks the semantic constraints (after command-line overrides).
void validate(const RunConfig& cfg);

/// Inclusive grid first, first + step, ... up to last, rounded to 12
/// significant digits so that grids stay bit-stable.
std::vector<double> coupling_grid(double first, double last, double step);

}  // namespace bilayer
