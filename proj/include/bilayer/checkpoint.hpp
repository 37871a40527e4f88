#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>

#include "bilayer/simulation.hpp"
#include "bilayer/sse.hpp"

namespace bilayer {

/// Binary checkpoint layout (all integers and doubles little-endian):
///
///   "BLQMCCHK"  8-byte magic
///   u32         format version (checkpoint_version)
///   chain:      i32 L, u8 boundary (0 periodic, 1 open), f64 J, f64 J',
///               f64 beta, i64 M, i64 n_ops, i64 n_offdiag,
///               u32 n_spins, i8 spins[n_spins], u32 ops[M], u64 rng[4]
///   plan:       i64 n_equil, i64 n_bins, i64 bin_size
///   progress:   i64 equil_done,
///               meta: i32 L, f64 g, f64 beta, u64 seed, i64 n_equil, i64 bin_size,
///               u32 n_labels, (u32 length, bytes)[n_labels],
///               i64 n_bins, f64 bins[n_labels][n_bins]
inline constexpr std::uint32_t checkpoint_version = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Checkpoint {
    Chain chain;
    RunPlan plan;
    RunProgress progress;
};

void write_chain(std::ostream& os, const Chain& chain);
Chain read_chain(std::istream& is);

void write_checkpoint(std::ostream& os, const Chain& chain, const RunPlan& plan, const RunProgress& progress);
Checkpoint read_checkpoint(std::istream& is);

/// Writes to a temporary file and renames it over `path`.
void save_checkpoint(const std::filesystem::path& path, const Chain& chain, const RunPlan& plan,
                     const RunProgress& progress);
/// Empty if the file does not exist; throws CheckpointError if it is corrupt
/// or has another version.
std::optional<Checkpoint> load_checkpoint(const std::filesystem::path& path);

}  // namespace bilayer
