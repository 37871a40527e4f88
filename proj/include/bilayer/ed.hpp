#pragma once

#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bilayer/estimators.hpp"
#include "bilayer/lattice.hpp"
#include "bilayer/sse.hpp"

/// Dense exact diagonalization of small bilayers.
///
/// Basis states are bit strings over the global spin index with bit s set
/// for S^z_s = +1/2. Layer A occupies the low L^2 bits, so a basis index
/// factorizes as a + (b << L^2).
namespace bilayer::ed {

inline constexpr int max_spins = 14;

using Matrix = Eigen::MatrixXd;

struct Extras {
    /// Transverse field -h sum_{i in A} S^x_i.
    double h = 0.0;
};

Matrix build_hamiltonian(const Lattice& lattice, const Couplings& c, const Extras& extras = {});

struct Spectrum {
    Eigen::VectorXd energies;
    Matrix vectors;
};

Spectrum diagonalize(const Matrix& h);

/// e^{-beta H} / Z.
Matrix thermal_rho(const Spectrum& spectrum, double beta);
Matrix thermal_rho(const Matrix& h, double beta);

/// Partial trace over layer B.
Matrix reduce_to_A(const Matrix& rho, const Lattice& lattice);

struct EhReport {
    int n_rep = 0;
    /// Descending.
    std::vector<double> eigenvalues;
    /// xi = -ln(lambda); +inf for vanishing eigenvalues.
    std::vector<double> levels;
    /// max |(rho_A)_{st}|, s != t.
    double defect = 0.0;
    double entropy = 0.0;
    /// [site][tau], sigma = 2 S^z convention.
    std::vector<std::vector<double>> g_onsite;
    /// [k index n * L + m][tau].
    std::vector<std::vector<double>> g_momentum;
};

/// G_i(tau) = Tr(rho_A^{n-tau} sigma_i rho_A^tau sigma_i) / Tr(rho_A^n) and the
/// momentum-space counterpart, evaluated in the eigenbasis of rho_A.
EhReport eh_report(const Matrix& rho_a, const Lattice& lattice, int n_rep);

struct ThermalObservables {
    ScalarSet scalars;
    double m = 0.0;
    /// Same displacement convention as correlation_G.
    std::vector<double> G;
};

ThermalObservables thermal_observables(const Spectrum& spectrum, double beta, const Lattice& lattice);
ThermalObservables thermal_observables(const Matrix& h, double beta, const Lattice& lattice);

nlohmann::json to_json(const EhReport& report, std::size_t max_levels = 64);
nlohmann::json to_json(const ThermalObservables& obs);

}  // namespace bilayer::ed
