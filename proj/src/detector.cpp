#include "hetsim/detector.hpp"

#include <algorithm>
#include <cmath>

#include "hetsim/rng.hpp"

namespace hetsim {

namespace {

constexpr std::int64_t kChunk = 4096; // samples per RNG substream
constexpr std::uint64_t kTagHeterodyne = 0x6865743a73747230ULL;
constexpr std::uint64_t kTagDirect = 0x6469723a73747230ULL;

} // namespace

void DetectorConfig::validate() const {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidSpec("detector eta must be in (0, 1]");
    if (n_samples < 1) throw InvalidSpec("detector n_samples must be >= 1");
}

HeterodyneSampler::HeterodyneSampler(const DensityMatrix& rho) {
    rho.validate(false);
    const int d = rho.dim();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.elements);
    if (es.info() != Eigen::Success) throw Error("eigensolver failed on density matrix");
    std::vector<double> inv_sqrt_fact(static_cast<std::size_t>(d), 1.0);
    for (int n = 1; n < d; ++n)
        inv_sqrt_fact[n] = inv_sqrt_fact[n - 1] / std::sqrt(static_cast<double>(n));
    for (int k = 0; k < d; ++k) {
        const double lam = es.eigenvalues()(k);
        if (lam <= 1e-14) continue;
        Eigen::VectorXcd c = es.eigenvectors().col(k) * std::sqrt(lam);
        for (int n = 0; n < d; ++n) c(n) *= inv_sqrt_fact[n];
        comps_.push_back(std::move(c));
    }

    // Radius that carries all but 1e-10 of the photon number mass.
    double cum = 0.0;
    int n_upper = d - 1;
    for (int n = 0; n < d; ++n) {
        cum += std::max(0.0, rho.elements(n, n).real());
        if (cum >= 1.0 - 1e-10) {
            n_upper = n;
            break;
        }
    }
    const double r_support = std::sqrt(n_upper + 1.0);

    // Coarse polar grid of the polynomial part of Q. The grid extends far
    // enough to cover the peak of f for every candidate scale below, and the
    // 1.2 safety factor absorbs the discretization error.
    const double r_max = 3.2 * (r_support + 1.0) + 1.0;
    const int n_r = 320;
    const int n_th = 128;
    std::vector<double> mass(static_cast<std::size_t>(n_r) * n_th);
    std::vector<double> r2(static_cast<std::size_t>(n_r));
    for (int i = 0; i < n_r; ++i) {
        const double r = r_max * (i + 0.5) / n_r;
        r2[i] = r * r;
        for (int j = 0; j < n_th; ++j) {
            const Complex beta = std::polar(r, 2.0 * M_PI * j / n_th);
            const Complex bc = std::conj(beta);
            double m = 0.0;
            for (const auto& comp : comps_) {
                Complex h = 0.0;
                for (int n = d - 1; n >= 0; --n) h = h * bc + comp(n);
                m += std::norm(h);
            }
            mass[static_cast<std::size_t>(i) * n_th + j] = m;
        }
    }

    // Pick the proposal scale minimizing c * sup f, i.e. maximizing the
    // acceptance rate, from a fixed candidate list.
    const double candidates[] = {1.5, 2.0, 3.0, 4.5, 6.5, 9.0, 13.0, 18.0, 25.0};
    double best = -1.0;
    for (const double c : candidates) {
        double peak = 0.0;
        for (int i = 0; i < n_r; ++i) {
            const double damp = std::exp(-r2[i] * (1.0 - 1.0 / c));
            for (int j = 0; j < n_th; ++j)
                peak = std::max(peak, mass[static_cast<std::size_t>(i) * n_th + j] * damp);
        }
        if (best < 0.0 || c * peak < best) {
            best = c * peak;
            envelope_c_ = c;
            bound_m_ = 1.2 * peak;
        }
    }
    if (expected_acceptance() < 0.01)
        throw EnvelopeFailure("rejection envelope too loose, acceptance below 1%");
}

double HeterodyneSampler::f_value(Complex beta) const {
    const Complex bc = std::conj(beta);
    double m = 0.0;
    for (const auto& comp : comps_) {
        Complex h = 0.0;
        for (Eigen::Index n = comp.size() - 1; n >= 0; --n) h = h * bc + comp(n);
        m += std::norm(h);
    }
    return m * std::exp(-std::norm(beta) * (1.0 - 1.0 / envelope_c_));
}

HeterodyneSampleSet HeterodyneSampler::sample(const DetectorConfig& cfg,
                                              std::string state_label) const {
    cfg.validate();
    HeterodyneSampleSet out;
    out.eta = cfg.eta;
    out.seed = cfg.seed;
    out.state_label = std::move(state_label);
    out.outcomes.resize(static_cast<std::size_t>(cfg.n_samples));

    const double sigma = std::sqrt((1.0 - cfg.eta) / (2.0 * cfg.eta));
    for (std::int64_t start = 0; start < cfg.n_samples; start += kChunk) {
        Rng rng = Rng::stream(cfg.seed, kTagHeterodyne, static_cast<std::uint64_t>(start / kChunk));
        const std::int64_t end = std::min(cfg.n_samples, start + kChunk);
        for (std::int64_t i = start; i < end; ++i) {
            Complex beta;
            long tries = 0;
            for (;;) {
                const double radius = std::sqrt(envelope_c_ * rng.exponential());
                beta = std::polar(radius, 2.0 * M_PI * rng.uniform());
                if (rng.uniform() * bound_m_ <= f_value(beta)) break;
                if (++tries > 1000000) throw EnvelopeFailure("rejection sampler stalled");
            }
            if (sigma > 0.0) {
                double z0, z1;
                rng.normal_pair(z0, z1);
                beta += Complex(sigma * z0, sigma * z1);
            }
            out.outcomes[static_cast<std::size_t>(i)] = beta;
        }
    }
    return out;
}

HeterodyneSampleSet sample_heterodyne(const DensityMatrix& rho, const DetectorConfig& cfg,
                                      std::string state_label) {
    return HeterodyneSampler(rho).sample(cfg, std::move(state_label));
}

CountSampleSet sample_direct(const DensityMatrix& rho, const DetectorConfig& cfg) {
    cfg.validate();
    rho.validate(false);
    const int d = rho.dim();
    std::vector<double> cum(static_cast<std::size_t>(d));
    double acc = 0.0;
    for (int n = 0; n < d; ++n) {
        acc += std::max(0.0, rho.elements(n, n).real());
        cum[static_cast<std::size_t>(n)] = acc;
    }

    CountSampleSet out;
    out.eta = cfg.eta;
    out.seed = cfg.seed;
    out.counts.resize(static_cast<std::size_t>(cfg.n_samples));
    for (std::int64_t start = 0; start < cfg.n_samples; start += kChunk) {
        Rng rng = Rng::stream(cfg.seed, kTagDirect, static_cast<std::uint64_t>(start / kChunk));
        const std::int64_t end = std::min(cfg.n_samples, start + kChunk);
        for (std::int64_t i = start; i < end; ++i) {
            const double u = rng.uniform() * acc;
            const auto it = std::lower_bound(cum.begin(), cum.end(), u);
            int n = static_cast<int>(it - cum.begin());
            if (n >= d) n = d - 1;
            int count = 0;
            if (cfg.eta >= 1.0) {
                count = n;
            } else {
                for (int t = 0; t < n; ++t)
                    if (rng.uniform() < cfg.eta) ++count;
            }
            out.counts[static_cast<std::size_t>(i)] = count;
        }
    }
    return out;
}

} // namespace hetsim
