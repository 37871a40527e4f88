#include "bilayer/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace bilayer {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> magic{'B', 'L', 'Q', 'M', 'C', 'C', 'H', 'K'};

template <class T>
void put(std::ostream& os, T value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& is)
{
    T value{};
    if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw CheckpointError("truncated checkpoint");
    return value;
}

template <class T>
void get_array(std::istream& is, T* data, std::size_t count)
{
    if (count == 0) return;
    if (!is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T))))
        throw CheckpointError("truncated checkpoint");
}

constexpr std::int64_t max_reasonable = std::int64_t{1} << 40;

std::int64_t get_count(std::istream& is)
{
    const auto v = get<std::int64_t>(is);
    if (v < 0 || v > max_reasonable) throw CheckpointError("corrupt checkpoint (bad count)");
    return v;
}

void write_header(std::ostream& os)
{
    os.write(magic.data(), magic.size());
    put<std::uint32_t>(os, checkpoint_version);
}

void read_header(std::istream& is)
{
    std::array<char, 8> m{};
    if (!is.read(m.data(), m.size()) || m != magic) throw CheckpointError("not a checkpoint file");
    const auto version = get<std::uint32_t>(is);
    if (version != checkpoint_version)
        throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(checkpoint_version) + ")");
}

void write_chain_body(std::ostream& os, const Chain& chain)
{
    const auto& lat = chain.lattice();
    const auto& cfg = chain.config();
    put<std::int32_t>(os, lat.linear_size());
    put<std::uint8_t>(os, lat.boundary() == Boundary::periodic ? 0 : 1);
    put<double>(os, chain.couplings().J);
    put<double>(os, chain.couplings().Jp);
    put<double>(os, cfg.beta);
    put<std::int64_t>(os, cfg.cutoff());
    put<std::int64_t>(os, cfg.n_ops);
    put<std::int64_t>(os, cfg.n_offdiag);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(cfg.spins.size()));
    os.write(reinterpret_cast<const char*>(cfg.spins.data()), static_cast<std::streamsize>(cfg.spins.size()));
    for (const auto op : cfg.ops) put<std::uint32_t>(os, op.raw());
    for (const auto w : chain.rng().state()) put<std::uint64_t>(os, w);
}

Chain read_chain_body(std::istream& is)
{
    const auto L = get<std::int32_t>(is);
    const auto bc = get<std::uint8_t>(is);
    if (bc > 1) throw CheckpointError("corrupt checkpoint (boundary)");
    Couplings c;
    c.J = get<double>(is);
    c.Jp = get<double>(is);
    SseConfig cfg;
    cfg.beta = get<double>(is);
    const auto M = get_count(is);
    cfg.n_ops = get_count(is);
    cfg.n_offdiag = get_count(is);
    const auto n_spins = get<std::uint32_t>(is);
    Lattice lattice(L, bc == 0 ? Boundary::periodic : Boundary::open);
    if (n_spins != static_cast<std::uint32_t>(lattice.n_spins())) throw CheckpointError("corrupt checkpoint (spins)");
    cfg.spins.resize(n_spins);
    get_array(is, cfg.spins.data(), n_spins);
    std::vector<std::uint32_t> raw(static_cast<std::size_t>(M));
    get_array(is, raw.data(), raw.size());
    cfg.ops.reserve(raw.size());
    for (auto r : raw) cfg.ops.push_back(Operator::from_raw(r));
    Rng::State state;
    for (auto& w : state) w = get<std::uint64_t>(is);
    Rng rng;
    rng.set_state(state);
    std::string why;
    if (!check_config(cfg, lattice, &why)) throw CheckpointError("checkpoint holds an invalid configuration: " + why);
    return Chain(lattice, c, std::move(cfg), rng);
}

}  // namespace

void write_chain(std::ostream& os, const Chain& chain)
{
    write_header(os);
    write_chain_body(os, chain);
}

Chain read_chain(std::istream& is)
{
    read_header(is);
    return read_chain_body(is);
}

void write_checkpoint(std::ostream& os, const Chain& chain, const RunPlan& plan, const RunProgress& progress)
{
    write_header(os);
    write_chain_body(os, chain);
    put<std::int64_t>(os, plan.n_equil);
    put<std::int64_t>(os, plan.n_bins);
    put<std::int64_t>(os, plan.bin_size);
    put<std::int64_t>(os, progress.equil_done);
    const auto& series = progress.series;
    const SeriesMeta& meta = series.meta();
    put<std::int32_t>(os, meta.L);
    put<double>(os, meta.g);
    put<double>(os, meta.beta);
    put<std::uint64_t>(os, meta.seed);
    put<std::int64_t>(os, meta.n_equil);
    put<std::int64_t>(os, meta.bin_size);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(series.n_observables()));
    for (const auto& label : series.labels()) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(label.size()));
        os.write(label.data(), static_cast<std::streamsize>(label.size()));
    }
    put<std::int64_t>(os, series.n_bins());
    for (std::size_t i = 0; i < series.n_observables(); ++i)
        for (double b : series.bins(i)) put<double>(os, b);
}

Checkpoint read_checkpoint(std::istream& is)
{
    read_header(is);
    Chain chain = read_chain_body(is);
    RunPlan plan;
    plan.n_equil = get_count(is);
    plan.n_bins = get_count(is);
    plan.bin_size = get_count(is);
    RunProgress progress;
    progress.equil_done = get_count(is);
    SeriesMeta meta;
    meta.L = get<std::int32_t>(is);
    meta.g = get<double>(is);
    meta.beta = get<double>(is);
    meta.seed = get<std::uint64_t>(is);
    meta.n_equil = get<std::int64_t>(is);
    meta.bin_size = get<std::int64_t>(is);
    const auto n_labels = get<std::uint32_t>(is);
    std::vector<std::string> labels;
    for (std::uint32_t i = 0; i < n_labels; ++i) {
        const auto len = get<std::uint32_t>(is);
        if (len > 4096) throw CheckpointError("corrupt checkpoint (label)");
        std::string label(len, '\0');
        get_array(is, label.data(), len);
        labels.push_back(std::move(label));
    }
    const auto n_bins = get_count(is);
    std::vector<std::vector<double>> columns(n_labels, std::vector<double>(static_cast<std::size_t>(n_bins)));
    for (auto& col : columns) get_array(is, col.data(), col.size());
    progress.series = ObservableSeries(std::move(labels), meta);
    std::vector<double> row(n_labels);
    for (std::int64_t b = 0; b < n_bins; ++b) {
        for (std::size_t i = 0; i < n_labels; ++i) row[i] = columns[i][static_cast<std::size_t>(b)];
        progress.series.add_bin(row);
    }
    return {std::move(chain), plan, std::move(progress)};
}

void save_checkpoint(const std::filesystem::path& path, const Chain& chain, const RunPlan& plan,
                     const RunProgress& progress)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        write_checkpoint(os, chain, plan, progress);
        os.flush();
        if (!os) throw std::runtime_error("failed writing checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::optional<Checkpoint> load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    return read_checkpoint(is);
}

}  // namespace bilayer
