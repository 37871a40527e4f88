#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace bilayer {

enum class Boundary : std::uint8_t { periodic, open };

Boundary parse_boundary(std::string_view text);
std::string_view to_string(Boundary b);

enum class BondKind : std::uint8_t { intra_a, intra_b, inter };

struct Bond {
    BondKind kind;
    std::int32_t site1;
    std::int32_t site2;
};

/// Bilayer L x L square lattice. Spin index = layer * L^2 + y * L + x with
/// layer 0 = A (upper), layer 1 = B (bottom).
///
/// Bond order: layer A x-bonds (row-major), layer A y-bonds, the same for
/// layer B, then one inter-layer bond per site. Intra bonds therefore occupy
/// [0, 2 N_I) and the inter bond of in-layer site i is 2 N_I + i.
class Lattice {
public:
    Lattice(int linear_size, Boundary boundary);

    int linear_size() const { return L_; }
    Boundary boundary() const { return boundary_; }
    int sites_per_layer() const { return L_ * L_; }
    int n_spins() const { return 2 * L_ * L_; }
    /// N_H
    int n_inter() const { return L_ * L_; }
    /// N_I, per layer
    int n_intra_per_layer() const { return n_intra_; }
    int n_intra() const { return 2 * n_intra_; }
    int n_bonds() const { return static_cast<int>(bonds_.size()); }

    std::span<const Bond> bonds() const { return bonds_; }
    const Bond& bond(int b) const { return bonds_[static_cast<std::size_t>(b)]; }
    int inter_bond(int site_in_layer) const { return n_intra() + site_in_layer; }

    int site(int layer, int x, int y) const { return layer * L_ * L_ + y * L_ + x; }
    int layer_of(int s) const { return s / (L_ * L_); }
    int x_of(int s) const { return (s % (L_ * L_)) % L_; }
    int y_of(int s) const { return (s % (L_ * L_)) / L_; }

    /// In-layer index of (x + dx, y + dy) with periodic wrapping. Used for
    /// displacement-indexed correlations regardless of the boundary.
    int shifted(int site_in_layer, int dx, int dy) const;

private:
    int L_;
    Boundary boundary_;
    int n_intra_ = 0;
    std::vector<Bond> bonds_;
};

struct Momentum {
    int m;
    int n;
    double kx;
    double ky;
};

/// k = (2 pi / L)(m, n), m, n in [0, L), ordered with index n * L + m.
std::vector<Momentum> momentum_grid(int L);

/// C(k) = sum_r exp(-i k.r) C(r). Input and output indexed y * L + x and
/// n * L + m respectively.
std::vector<std::complex<double>> fourier_correlations(std::span<const double> c, int L);

/// Inverse of fourier_correlations; imaginary parts are dropped.
std::vector<double> inverse_fourier(std::span<const std::complex<double>> ck, int L);

}  // namespace bilayer
