// Density-matrix reconstruction from heterodyne samples.
//
// Works for states whose Fock support fits below a cutoff N: each element
// rho_{n+k,n} is the sample average of a closed-form kernel built from
// associated Laguerre polynomials, with block-averaged confidence intervals.
#pragma once

#include "hetsim/estimators.hpp"

namespace hetsim {

struct ReconstructionResult {
    int cutoff_N = 0;
    Eigen::MatrixXcd elements; // (N+1)x(N+1); upper triangle mirrored by conjugation
    Eigen::MatrixXd hw_re;     // per-element half-widths, real part
    Eigen::MatrixXd hw_im;
    EstimateWithCI trace_estimate;

    int dim() const { return cutoff_N + 1; }
};

// Kernel whose sample average estimates rho_{n+k,n}. Requires n + k <= N,
// eta in (0, 1]; N is capped at 20 to keep the exact integer coefficients
// and the eta^{-p} amplification inside double range.
Complex element_kernel(int n, int k, int N, double eta, Complex alpha);

ReconstructionResult reconstruct(const HeterodyneSampleSet& samples, int N, int n_blocks = 50);

struct CutoffChoice {
    int cutoff_N = 0;
    bool unstable = false;
};

// Smallest N* whose element estimates are stable against raising the cutoff
// to N*+1 and N*+2 (changes within three times the larger of the two
// half-widths per component) while every diagonal above N* is consistent
// with zero at two half-widths in the N_max reconstruction. Falls back to
// N_max with the unstable flag set, which is the expected outcome whenever
// the state's support exceeds N_max - 2.
CutoffChoice choose_cutoff(const HeterodyneSampleSet& samples, int N_max, int n_blocks = 50);

} // namespace hetsim
