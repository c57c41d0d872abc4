// Simulated detection: heterodyne outcomes and direct photocounts.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetsim/states.hpp"

namespace hetsim {

struct DetectorConfig {
    double eta = 1.0;           // quantum efficiency in (0, 1]
    std::int64_t n_samples = 0; // >= 1
    std::uint64_t seed = 0;

    // Ordering parameter of the distribution the detector actually measures.
    double s() const { return 1.0 - 2.0 / eta; }

    void validate() const;
};

struct HeterodyneSampleSet {
    std::vector<Complex> outcomes;
    double eta = 1.0;
    std::uint64_t seed = 0;
    std::string state_label;

    double s() const { return 1.0 - 2.0 / eta; }
};

struct CountSampleSet {
    std::vector<int> counts;
    double eta = 1.0;
    std::uint64_t seed = 0;
};

// Rejection sampler for the Husimi function of a fixed state. Construction
// does the spectral work and fixes the proposal envelope once; sample() can
// then be called with any detector config. Ideal outcomes beta are drawn
// from Q(beta) = <beta|rho|beta>, and efficiency eta < 1 adds a circular
// Gaussian with per-quadrature variance (1-eta)/(2 eta).
class HeterodyneSampler {
public:
    explicit HeterodyneSampler(const DensityMatrix& rho);

    HeterodyneSampleSet sample(const DetectorConfig& cfg, std::string state_label = {}) const;

    // Expected fraction of proposals accepted; construction fails below 1%.
    double expected_acceptance() const { return 1.0 / (bound_m_ * envelope_c_); }

private:
    double f_value(Complex beta) const; // Q(beta) * exp(|beta|^2 / c)

    std::vector<Eigen::VectorXcd> comps_; // eigenvectors scaled by sqrt(eigenvalue), coeff n by 1/sqrt(n!)
    double envelope_c_ = 2.0;             // proposal scale: |beta|^2 ~ c * Exp(1)
    double bound_m_ = 1.2;                // 1.2 * grid max of f_value
};

HeterodyneSampleSet sample_heterodyne(const DensityMatrix& rho, const DetectorConfig& cfg,
                                      std::string state_label = {});

// Each count: draw n from the photon number distribution, then keep each of
// the n photons with probability eta.
CountSampleSet sample_direct(const DensityMatrix& rho, const DetectorConfig& cfg);

} // namespace hetsim
