// Statistical estimators over heterodyne sample sets.
//
// Every estimator averages a kernel function of the complex outcomes; the
// kernels absorb the detector efficiency so the averages converge to ideal
// state quantities. Confidence half-widths are one standard error of the
// mean, from either the plug-in variance or block averaging.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hetsim/detector.hpp"

namespace hetsim {

enum class CiMethod { PlugInVariance, BlockAverage };

struct EstimateWithCI {
    Complex value;
    double hw_re = 0.0; // half-width for Re(value)
    double hw_im = 0.0; // half-width for Im(value)
    std::int64_t n_used = 0;
    CiMethod method = CiMethod::PlugInVariance;

    // Combined half-width; equals hw_re for real observables.
    double half_width() const { return std::hypot(hw_re, hw_im); }
};

struct PhaseHistogram {
    int n_bins = 0;
    std::vector<double> bin_masses; // fractions over uniform bins of [-pi, pi)

    double bin_width() const { return 2.0 * M_PI / n_bins; }
    double bin_center(int b) const { return -M_PI + (b + 0.5) * bin_width(); }
};

using Kernel = std::function<Complex(Complex)>;

// Associated Laguerre L_n^k(x) by the three-term recurrence; stable for n <= 64.
double laguerre(int n, int k, double x);

EstimateWithCI estimate_generic(const HeterodyneSampleSet& samples, const Kernel& kernel);

// <n>, kernel |alpha|^2 - 1/eta.
EstimateWithCI estimate_mean_photon(const HeterodyneSampleSet& samples);

// <n> from direct detection: count mean divided by eta.
EstimateWithCI estimate_mean_photon(const CountSampleSet& counts);

struct PhotonFluctuations {
    EstimateWithCI mean;     // <n>
    EstimateWithCI second;   // <n^2>
    EstimateWithCI variance; // <n^2> - <n>^2, block-averaged CI
};

PhotonFluctuations estimate_photon_fluctuations(const HeterodyneSampleSet& samples,
                                                int n_blocks = 50);

struct QuadratureEstimate {
    EstimateWithCI mean;     // <x_phi>
    EstimateWithCI second;   // <x_phi^2>
    EstimateWithCI variance; // plug-in difference, block-averaged CI
};

QuadratureEstimate estimate_quadrature(const HeterodyneSampleSet& samples, double phi,
                                       int n_blocks = 50);

// <adag^n a^{n+d}>, kernel ((-1)^n n!/eta^n) alpha^d L_n^d(eta |alpha|^2).
EstimateWithCI estimate_normal_moment(const HeterodyneSampleSet& samples, int n, int d);

// <e^{i phi n}>; phi must lie in [0, shift_phase_bound(eta)) or the kernel
// variance diverges.
EstimateWithCI estimate_shift_operator(const HeterodyneSampleSet& samples, double phi);

double shift_phase_bound(double eta);

PhaseHistogram phase_histogram(const HeterodyneSampleSet& samples, int n_bins);

struct PhaseModes {
    std::vector<int> peak_bins;          // ascending bin indices of the modes
    std::vector<double> smoothed_masses; // circular moving average of bin_masses
};

// Modes of the phase distribution: local maxima of the window-averaged
// histogram that rise above the uniform level 1/n_bins. The threshold keeps
// shot noise on the flat troughs from registering as extra peaks while any
// genuine mode of a normalized distribution must exceed it somewhere.
PhaseModes find_phase_modes(const PhaseHistogram& hist, int smooth_window = 3);

// Mean with half-widths from the scatter of contiguous block means.
EstimateWithCI block_confidence(const HeterodyneSampleSet& samples, const Kernel& kernel,
                                int n_blocks = 50);

} // namespace hetsim
