#include "hetsim/reconstruction.hpp"

#include <array>
#include <cmath>

namespace hetsim {

namespace {

constexpr int kMaxCutoff = 20;

// Pascal's triangle up to kMaxCutoff; every coefficient the kernel needs is
// C(p+n, p) with p+n <= N <= 20, so long long is ample (C(20,10) ~ 1.8e5).
double binomial(int upper, int lower) {
    static const auto table = [] {
        std::array<std::array<long long, kMaxCutoff + 1>, kMaxCutoff + 1> t{};
        for (int i = 0; i <= kMaxCutoff; ++i) {
            t[i][0] = 1;
            for (int j = 1; j <= i; ++j)
                t[i][j] = t[i - 1][j - 1] + (j <= i - 1 ? t[i - 1][j] : 0);
        }
        return t;
    }();
    return static_cast<double>(table[upper][lower]);
}

void check_kernel_args(int n, int k, int N, double eta) {
    if (N > kMaxCutoff) throw CutoffTooLarge("reconstruction cutoff is limited to N <= 20");
    if (n < 0 || k < 0 || N < 0 || n + k > N)
        throw IndexOutOfRange("element index (n, k) must satisfy 0 <= n, 0 <= k, n + k <= N");
    if (!(eta > 0.0) || eta > 1.0)
        throw InvalidSpec("quantum efficiency must lie in (0, 1]");
}

} // namespace

Complex element_kernel(int n, int k, int N, double eta, Complex alpha) {
    check_kernel_args(n, k, N, eta);
    const double x = eta * std::norm(alpha);
    double sum = 0.0;
    double eta_pow = 1.0;
    for (int p = 0; p <= N - n - k; ++p) {
        sum += binomial(p + n, p) * eta_pow * laguerre(p + n, k, x);
        eta_pow /= eta;
    }
    double pref = 1.0;
    for (int j = 0; j < n; ++j) pref /= -eta;
    // sqrt(n!/(n+k)!) written as the inverse square root of a rising product.
    double rising = 1.0;
    for (int j = n + 1; j <= n + k; ++j) rising *= j;
    pref /= std::sqrt(rising);
    Complex ap = 1.0;
    for (int j = 0; j < k; ++j) ap *= alpha;
    return pref * ap * sum;
}

ReconstructionResult reconstruct(const HeterodyneSampleSet& samples, int N, int n_blocks) {
    check_kernel_args(0, 0, N, samples.outcomes.empty() ? 1.0 : samples.eta);
    if (samples.outcomes.empty()) throw EmptySample("reconstruction needs a nonempty sample");

    ReconstructionResult out;
    out.cutoff_N = N;
    out.elements = Eigen::MatrixXcd::Zero(N + 1, N + 1);
    out.hw_re = Eigen::MatrixXd::Zero(N + 1, N + 1);
    out.hw_im = Eigen::MatrixXd::Zero(N + 1, N + 1);

    const double eta = samples.eta;
    for (int n = 0; n <= N; ++n)
        for (int k = 0; n + k <= N; ++k) {
            const EstimateWithCI est = block_confidence(
                samples, [=](Complex a) { return element_kernel(n, k, N, eta, a); }, n_blocks);
            out.elements(n + k, n) = est.value;
            out.hw_re(n + k, n) = est.hw_re;
            out.hw_im(n + k, n) = est.hw_im;
            if (k > 0) {
                out.elements(n, n + k) = std::conj(est.value);
                out.hw_re(n, n + k) = est.hw_re;
                out.hw_im(n, n + k) = est.hw_im;
            }
        }

    out.trace_estimate = block_confidence(
        samples,
        [=](Complex a) {
            Complex t = 0.0;
            for (int n = 0; n <= N; ++n) t += element_kernel(n, 0, N, eta, a);
            return t;
        },
        n_blocks);
    return out;
}

CutoffChoice choose_cutoff(const HeterodyneSampleSet& samples, int N_max, int n_blocks) {
    check_kernel_args(0, 0, N_max, 1.0);
    std::vector<ReconstructionResult> rec;
    rec.reserve(N_max + 1);
    for (int c = 0; c <= N_max; ++c) rec.push_back(reconstruct(samples, c, n_blocks));

    // A raised cutoff adds Laguerre terms whose spread exceeds the element's
    // own standard error, so a one-half-width band would flag pure sampling
    // noise as instability; three half-widths keeps the joint false-alarm
    // rate over the whole block small.
    const auto stable_against = [&](int cand, int higher) {
        const ReconstructionResult& a = rec[cand];
        const ReconstructionResult& b = rec[higher];
        for (int row = 0; row <= cand; ++row)
            for (int col = 0; col <= row; ++col) {
                const Complex d = a.elements(row, col) - b.elements(row, col);
                if (std::abs(d.real()) > 3.0 * std::max(a.hw_re(row, col), b.hw_re(row, col)))
                    return false;
                if (std::abs(d.imag()) > 3.0 * std::max(a.hw_im(row, col), b.hw_im(row, col)))
                    return false;
            }
        return true;
    };
    const auto tail_is_empty = [&](int cand) {
        const ReconstructionResult& top = rec[N_max];
        for (int j = cand + 1; j <= N_max; ++j)
            if (std::abs(top.elements(j, j).real()) > 2.0 * top.hw_re(j, j)) return false;
        return true;
    };

    for (int cand = 0; cand + 2 <= N_max; ++cand)
        if (stable_against(cand, cand + 1) && stable_against(cand, cand + 2) &&
            tail_is_empty(cand))
            return {cand, false};
    return {N_max, true};
}

} // namespace hetsim
