// Fock-basis quantum states and their exact reference quantities.
//
// Everything here is deterministic linear algebra on truncated number-basis
// matrices. The statistical layers treat these functions as ground truth.
#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hetsim/errors.hpp"

namespace hetsim {

using Complex = std::complex<double>;

// Density matrix in the number basis, truncated to dim() levels.
struct DensityMatrix {
    Eigen::MatrixXcd elements;

    int dim() const { return static_cast<int>(elements.rows()); }

    // Throws Error when hermiticity (1e-12 elementwise) or unit trace (1e-9)
    // fail. check_psd additionally requires the smallest eigenvalue to be
    // >= -1e-9; that solve is comparatively slow, so it is opt-in.
    void validate(bool check_psd = false) const;
};

struct Coherent {
    Complex alpha;
};

struct Number {
    int n = 0;
};

struct SqueezedCoherent {
    Complex alpha;
    double r = 0.0;     // squeeze magnitude, >= 0
    double theta = 0.0; // squeeze phase; theta = 0 squeezes the phi = 0 quadrature
};

struct Superposition {
    // Number-basis amplitudes psi_0..psi_{k-1}; normalized during build.
    std::vector<Complex> coefficients;
};

struct StateSpec;

struct Mixture {
    std::vector<double> weights; // nonnegative; normalized during build
    std::vector<StateSpec> components;
};

struct StateSpec {
    std::variant<Coherent, Number, SqueezedCoherent, Superposition, Mixture> kind;
    int dim = 0; // Fock truncation D

    // Factories pick a default truncation adequate for the usual parameter
    // ranges (|alpha| <= 4, sinh^2 r <= 2). Pass dim explicitly to override.
    static StateSpec coherent(Complex alpha, int dim = 64);
    static StateSpec number(int n, int dim = 0);
    static StateSpec squeezed_coherent(Complex alpha, double r, double theta = 0.0,
                                       int dim = 64);
    static StateSpec superposition(std::vector<Complex> coefficients, int dim = 0);
    static StateSpec mixture(std::vector<double> weights, std::vector<StateSpec> components,
                             int dim = 0);
};

// Compact human-readable label, used in result tables.
std::string describe(const StateSpec& spec);

DensityMatrix build_state(const StateSpec& spec);

// Husimi function <beta|rho|beta>; integrates to 1 with measure d^2beta/pi.
double q_function(const DensityMatrix& rho, Complex beta);

// Canonical phase distribution (1/2pi) sum_{n,m} e^{i(n-m)phi} rho_{n,m};
// normalized over [-pi, pi).
double canonical_phase_distribution(const DensityMatrix& rho, double phi);

// trace(rho adag^n a^{n+d}); requires n + d < dim.
Complex exact_moment(const DensityMatrix& rho, int n, int d);

struct QuadratureStats {
    double mean = 0.0;
    double variance = 0.0;
};

// Statistics of x_phi = (a e^{-i phi} + adag e^{i phi}) / 2; vacuum variance 1/4.
QuadratureStats exact_quadrature_stats(const DensityMatrix& rho, double phi);

} // namespace hetsim
