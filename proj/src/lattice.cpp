#include "bilayer/lattice.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bilayer {

Boundary parse_boundary(std::string_view text)
{
    if (text == "periodic") return Boundary::periodic;
    if (text == "open") return Boundary::open;
    throw std::invalid_argument("unknown boundary '" + std::string(text) + "'");
}

std::string_view to_string(Boundary b)
{
    return b == Boundary::periodic ? "periodic" : "open";
}

Lattice::Lattice(int linear_size, Boundary boundary) : L_(linear_size), boundary_(boundary)
{
    if (L_ < 1) throw std::invalid_argument("lattice size must be >= 1");
    if (boundary_ == Boundary::periodic && L_ < 3)
        throw std::invalid_argument("periodic lattice requires L >= 3 (smaller sizes duplicate bonds)");

    const bool periodic = boundary_ == Boundary::periodic;
    n_intra_ = periodic ? 2 * L_ * L_ : 2 * L_ * (L_ - 1);
    bonds_.reserve(static_cast<std::size_t>(2 * n_intra_ + L_ * L_));

    for (int layer = 0; layer < 2; ++layer) {
        const auto kind = layer == 0 ? BondKind::intra_a : BondKind::intra_b;
        for (int y = 0; y < L_; ++y)
            for (int x = 0; x < L_; ++x)
                if (periodic || x + 1 < L_)
                    bonds_.push_back({kind, site(layer, x, y), site(layer, (x + 1) % L_, y)});
        for (int y = 0; y < L_; ++y)
            for (int x = 0; x < L_; ++x)
                if (periodic || y + 1 < L_)
                    bonds_.push_back({kind, site(layer, x, y), site(layer, x, (y + 1) % L_)});
    }
    for (int i = 0; i < L_ * L_; ++i)
        bonds_.push_back({BondKind::inter, i, i + L_ * L_});
}

int Lattice::shifted(int site_in_layer, int dx, int dy) const
{
    const int x = ((site_in_layer % L_ + dx) % L_ + L_) % L_;
    const int y = ((site_in_layer / L_ + dy) % L_ + L_) % L_;
    return y * L_ + x;
}

std::vector<Momentum> momentum_grid(int L)
{
    std::vector<Momentum> grid;
    grid.reserve(static_cast<std::size_t>(L * L));
    const double step = 2.0 * std::numbers::pi / L;
    for (int n = 0; n < L; ++n)
        for (int m = 0; m < L; ++m)
            grid.push_back({m, n, step * m, step * n});
    return grid;
}

std::vector<std::complex<double>> fourier_correlations(std::span<const double> c, int L)
{
    if (L < 1 || c.size() != static_cast<std::size_t>(L * L))
        throw std::invalid_argument("fourier_correlations: input does not match an L x L grid");
    // Phases only depend on (m x + n y) mod L.
    std::vector<std::complex<double>> phase(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j)
        phase[j] = std::polar(1.0, -2.0 * std::numbers::pi * j / L);

    std::vector<std::complex<double>> out(c.size());
    for (int n = 0; n < L; ++n)
        for (int m = 0; m < L; ++m) {
            std::complex<double> sum = 0.0;
            for (int y = 0; y < L; ++y)
                for (int x = 0; x < L; ++x)
                    sum += c[y * L + x] * phase[(m * x + n * y) % L];
            out[n * L + m] = sum;
        }
    return out;
}

std::vector<double> inverse_fourier(std::span<const std::complex<double>> ck, int L)
{
    if (L < 1 || ck.size() != static_cast<std::size_t>(L * L))
        throw std::invalid_argument("inverse_fourier: input does not match an L x L grid");
    std::vector<std::complex<double>> phase(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j)
        phase[j] = std::polar(1.0, 2.0 * std::numbers::pi * j / L);

    std::vector<double> out(ck.size());
    const double norm = 1.0 / (L * L);
    for (int y = 0; y < L; ++y)
        for (int x = 0; x < L; ++x) {
            std::complex<double> sum = 0.0;
            for (int n = 0; n < L; ++n)
                for (int m = 0; m < L; ++m)
                    sum += ck[n * L + m] * phase[(m * x + n * y) % L];
            out[y * L + x] = norm * sum.real();
        }
    return out;
}

}  // namespace bilayer
