#include "hetsim/estimators.hpp"

#include <string>

namespace hetsim {

namespace {

void require_two(std::size_t n) {
    if (n < 2) throw EmptySample("estimator needs at least two outcomes");
}

struct BlockLayout {
    std::int64_t n = 0;
    int n_blocks = 0;
    std::int64_t base = 0;
    std::int64_t extra = 0;

    std::int64_t size(int b) const { return base + (b < extra ? 1 : 0); }
};

BlockLayout make_blocks(std::int64_t n, int n_blocks) {
    if (n_blocks < 2) throw TooFewSamples("block averaging needs at least 2 blocks");
    if (n < n_blocks) throw TooFewSamples("block averaging needs at least one sample per block");
    return BlockLayout{n, n_blocks, n / n_blocks, n % n_blocks};
}

// Plug-in variance (second_kernel mean minus squared mean_kernel mean) with a
// half-width from the scatter of the same statistic over contiguous blocks.
EstimateWithCI block_plugin_variance(const HeterodyneSampleSet& samples,
                                     const Kernel& second_kernel, const Kernel& mean_kernel,
                                     int n_blocks) {
    require_two(samples.outcomes.size());
    const BlockLayout layout = make_blocks(static_cast<std::int64_t>(samples.outcomes.size()),
                                           n_blocks);
    std::vector<double> block_var(static_cast<std::size_t>(layout.n_blocks));
    double g1 = 0.0;
    double g2 = 0.0;
    std::size_t idx = 0;
    for (int b = 0; b < layout.n_blocks; ++b) {
        const std::int64_t sz = layout.size(b);
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::int64_t t = 0; t < sz; ++t, ++idx) {
            const Complex a = samples.outcomes[idx];
            s1 += mean_kernel(a).real();
            s2 += second_kernel(a).real();
        }
        g1 += s1;
        g2 += s2;
        const double m1 = s1 / static_cast<double>(sz);
        block_var[static_cast<std::size_t>(b)] = s2 / static_cast<double>(sz) - m1 * m1;
    }
    const double m1 = g1 / static_cast<double>(layout.n);
    const double v = g2 / static_cast<double>(layout.n) - m1 * m1;
    double ss = 0.0;
    for (double x : block_var) ss += (x - v) * (x - v);

    EstimateWithCI est;
    est.value = v;
    est.hw_re = std::sqrt(ss) / layout.n_blocks;
    est.n_used = layout.n;
    est.method = CiMethod::BlockAverage;
    return est;
}

Kernel mean_photon_kernel(double eta) {
    const double inv_eta = 1.0 / eta;
    return [inv_eta](Complex a) { return Complex(std::norm(a) - inv_eta, 0.0); };
}

Kernel photon_second_kernel(double s) {
    return [s](Complex a) {
        const double m = std::norm(a);
        return Complex(m * m + (2.0 * s - 1.0) * m + 0.5 * s * (s - 1.0), 0.0);
    };
}

Kernel quadrature_mean_kernel(double phi) {
    const Complex rot = std::polar(1.0, -phi);
    return [rot](Complex a) { return Complex((a * rot).real(), 0.0); };
}

Kernel quadrature_second_kernel(double phi, double s) {
    const Complex rot2 = std::polar(1.0, -2.0 * phi);
    return [rot2, s](Complex a) {
        return Complex(0.25 * (2.0 * (a * a * rot2).real() + 2.0 * std::norm(a) + s), 0.0);
    };
}

} // namespace

double laguerre(int n, int k, double x) {
    if (n < 0 || n > 64) throw DegreeOutOfRange("laguerre degree must be in [0, 64]");
    if (k < 0) throw DegreeOutOfRange("laguerre order must be >= 0");
    if (n == 0) return 1.0;
    double lm2 = 1.0;
    double lm1 = 1.0 + k - x;
    for (int m = 2; m <= n; ++m) {
        const double cur = ((2.0 * m - 1.0 + k - x) * lm1 - (m - 1.0 + k) * lm2) / m;
        lm2 = lm1;
        lm1 = cur;
    }
    return lm1;
}

EstimateWithCI estimate_generic(const HeterodyneSampleSet& samples, const Kernel& kernel) {
    require_two(samples.outcomes.size());
    const double n = static_cast<double>(samples.outcomes.size());
    double s_re = 0.0, s_im = 0.0, s_re2 = 0.0, s_im2 = 0.0;
    for (const Complex a : samples.outcomes) {
        const Complex kv = kernel(a);
        s_re += kv.real();
        s_im += kv.imag();
        s_re2 += kv.real() * kv.real();
        s_im2 += kv.imag() * kv.imag();
    }
    const double m_re = s_re / n;
    const double m_im = s_im / n;
    EstimateWithCI est;
    est.value = Complex(m_re, m_im);
    est.hw_re = std::sqrt(std::max(0.0, s_re2 / n - m_re * m_re) / n);
    est.hw_im = std::sqrt(std::max(0.0, s_im2 / n - m_im * m_im) / n);
    est.n_used = static_cast<std::int64_t>(samples.outcomes.size());
    est.method = CiMethod::PlugInVariance;
    return est;
}

EstimateWithCI estimate_mean_photon(const HeterodyneSampleSet& samples) {
    return estimate_generic(samples, mean_photon_kernel(samples.eta));
}

EstimateWithCI estimate_mean_photon(const CountSampleSet& counts) {
    require_two(counts.counts.size());
    const double n = static_cast<double>(counts.counts.size());
    double s1 = 0.0, s2 = 0.0;
    for (const int c : counts.counts) {
        s1 += c;
        s2 += static_cast<double>(c) * c;
    }
    const double mean = s1 / n;
    EstimateWithCI est;
    est.value = mean / counts.eta;
    est.hw_re = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n) / counts.eta;
    est.n_used = static_cast<std::int64_t>(counts.counts.size());
    est.method = CiMethod::PlugInVariance;
    return est;
}

PhotonFluctuations estimate_photon_fluctuations(const HeterodyneSampleSet& samples,
                                                int n_blocks) {
    const Kernel k1 = mean_photon_kernel(samples.eta);
    const Kernel k2 = photon_second_kernel(samples.s());
    PhotonFluctuations out;
    out.mean = estimate_generic(samples, k1);
    out.second = estimate_generic(samples, k2);
    out.variance = block_plugin_variance(samples, k2, k1, n_blocks);
    return out;
}

QuadratureEstimate estimate_quadrature(const HeterodyneSampleSet& samples, double phi,
                                       int n_blocks) {
    const Kernel k1 = quadrature_mean_kernel(phi);
    const Kernel k2 = quadrature_second_kernel(phi, samples.s());
    QuadratureEstimate out;
    out.mean = estimate_generic(samples, k1);
    out.second = estimate_generic(samples, k2);
    out.variance = block_plugin_variance(samples, k2, k1, n_blocks);
    return out;
}

EstimateWithCI estimate_normal_moment(const HeterodyneSampleSet& samples, int n, int d) {
    if (n < 0 || n > 16) throw DegreeOutOfRange("normal moment needs 0 <= n <= 16");
    if (d < 0) throw DegreeOutOfRange("normal moment needs d >= 0");
    const double eta = samples.eta;
    double pref = 1.0;
    for (int t = 1; t <= n; ++t) pref *= static_cast<double>(t) / eta;
    if (n % 2 == 1) pref = -pref;
    return estimate_generic(samples, [pref, eta, n, d](Complex a) {
        Complex p = pref;
        for (int t = 0; t < d; ++t) p *= a;
        return p * laguerre(n, d, eta * std::norm(a));
    });
}

double shift_phase_bound(double eta) { return std::acos(1.0 - 0.5 * eta * eta); }

EstimateWithCI estimate_shift_operator(const HeterodyneSampleSet& samples, double phi) {
    const double eta = samples.eta;
    const double bound = shift_phase_bound(eta);
    if (!(phi >= 0.0 && phi < bound))
        throw PhaseOutOfDomain("shift phase " + std::to_string(phi) + " outside [0, " +
                               std::to_string(bound) + ") at eta " + std::to_string(eta));
    const Complex eip = std::polar(1.0, phi);
    const Complex pref = eta / (eta - 1.0 + eip);
    const Complex w = eta * (1.0 - eip) / (1.0 - eip - eta);
    return estimate_generic(samples,
                            [pref, w](Complex a) { return pref * std::exp(w * std::norm(a)); });
}

PhaseHistogram phase_histogram(const HeterodyneSampleSet& samples, int n_bins) {
    if (samples.outcomes.empty()) throw EmptySample("phase histogram needs outcomes");
    if (n_bins < 2) throw InvalidSpec("phase histogram needs at least 2 bins");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_bins), 0);
    for (const Complex a : samples.outcomes) {
        // Outcomes at the origin carry no phase information; count them at 0.
        const double arg = std::abs(a) < 1e-12 ? 0.0 : std::arg(a);
        int b = static_cast<int>(std::floor((arg + M_PI) / (2.0 * M_PI) * n_bins));
        if (b < 0) b = 0;
        if (b >= n_bins) b = n_bins - 1; // arg exactly pi joins the last bin
        ++counts[static_cast<std::size_t>(b)];
    }
    PhaseHistogram hist;
    hist.n_bins = n_bins;
    hist.bin_masses.resize(static_cast<std::size_t>(n_bins));
    const double n = static_cast<double>(samples.outcomes.size());
    for (int b = 0; b < n_bins; ++b)
        hist.bin_masses[static_cast<std::size_t>(b)] =
            static_cast<double>(counts[static_cast<std::size_t>(b)]) / n;
    return hist;
}

PhaseModes find_phase_modes(const PhaseHistogram& hist, int smooth_window) {
    const int n = hist.n_bins;
    if (n < 2) throw InvalidSpec("phase mode search needs a histogram with at least 2 bins");
    if (smooth_window < 1 || smooth_window % 2 == 0)
        throw InvalidSpec("smoothing window must be a positive odd bin count");
    PhaseModes modes;
    modes.smoothed_masses.resize(static_cast<std::size_t>(n));
    const int half = smooth_window / 2;
    for (int b = 0; b < n; ++b) {
        double acc = 0.0;
        for (int j = -half; j <= half; ++j)
            acc += hist.bin_masses[static_cast<std::size_t>(((b + j) % n + n) % n)];
        modes.smoothed_masses[static_cast<std::size_t>(b)] = acc / smooth_window;
    }
    const double floor_level = 1.0 / n;
    for (int b = 0; b < n; ++b) {
        const double here = modes.smoothed_masses[static_cast<std::size_t>(b)];
        const double left = modes.smoothed_masses[static_cast<std::size_t>((b + n - 1) % n)];
        const double right = modes.smoothed_masses[static_cast<std::size_t>((b + 1) % n)];
        // >= on the right lets a two-bin plateau register exactly once.
        if (here > floor_level && here > left && here >= right)
            modes.peak_bins.push_back(b);
    }
    return modes;
}

EstimateWithCI block_confidence(const HeterodyneSampleSet& samples, const Kernel& kernel,
                                int n_blocks) {
    require_two(samples.outcomes.size());
    const BlockLayout layout = make_blocks(static_cast<std::int64_t>(samples.outcomes.size()),
                                           n_blocks);
    std::vector<Complex> block_mean(static_cast<std::size_t>(layout.n_blocks));
    Complex total = 0.0;
    std::size_t idx = 0;
    for (int b = 0; b < layout.n_blocks; ++b) {
        const std::int64_t sz = layout.size(b);
        Complex s = 0.0;
        for (std::int64_t t = 0; t < sz; ++t, ++idx) s += kernel(samples.outcomes[idx]);
        total += s;
        block_mean[static_cast<std::size_t>(b)] = s / static_cast<double>(sz);
    }
    const Complex mean = total / static_cast<double>(layout.n);
    double ss_re = 0.0, ss_im = 0.0;
    for (const Complex m : block_mean) {
        ss_re += (m.real() - mean.real()) * (m.real() - mean.real());
        ss_im += (m.imag() - mean.imag()) * (m.imag() - mean.imag());
    }
    EstimateWithCI est;
    est.value = mean;
    est.hw_re = std::sqrt(ss_re) / layout.n_blocks;
    est.hw_im = std::sqrt(ss_im) / layout.n_blocks;
    est.n_used = layout.n;
    est.method = CiMethod::BlockAverage;
    return est;
}

} // namespace hetsim
