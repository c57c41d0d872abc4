#include "hetsim/states.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace hetsim {

namespace {

// Mass allowed beyond the truncation for states with unbounded support.
constexpr double kTailTol = 1e-8;

Eigen::MatrixXcd annihilation_op(int dim) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

// exp(G) for anti-Hermitian G through the eigensolve of the Hermitian iG.
Eigen::MatrixXcd exp_antihermitian(const Eigen::MatrixXcd& g) {
    const Complex im(0.0, 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(im * g);
    if (es.info() != Eigen::Success) throw Error("eigensolver failed on state generator");
    Eigen::VectorXcd phases(g.rows());
    for (Eigen::Index k = 0; k < phases.size(); ++k)
        phases(k) = std::exp(Complex(0.0, -es.eigenvalues()(k)));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::VectorXcd coherent_vector(Complex alpha, int dim) {
    Eigen::VectorXcd psi(dim);
    psi(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n)
        psi(n) = psi(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return psi;
}

DensityMatrix finalize(Eigen::MatrixXcd m) {
    DensityMatrix rho;
    rho.elements = 0.5 * (m + m.adjoint());
    const double tr = rho.elements.trace().real();
    if (!(tr > 0.0)) throw InvalidSpec("state has nonpositive trace");
    rho.elements /= tr;
    rho.validate(false);
    return rho;
}

DensityMatrix from_pure(Eigen::VectorXcd psi) {
    psi.normalize();
    return finalize(psi * psi.adjoint());
}

} // namespace

void DensityMatrix::validate(bool check_psd) const {
    if (elements.rows() < 1 || elements.rows() != elements.cols())
        throw Error("density matrix must be square and nonempty");
    const double asym = (elements - elements.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= 1e-12))
        throw Error("density matrix is not hermitian, max asymmetry " + std::to_string(asym));
    const double tr_err = std::abs(elements.trace() - Complex(1.0));
    if (!(tr_err < 1e-9))
        throw Error("density matrix trace differs from 1 by " + std::to_string(tr_err));
    if (check_psd) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(elements, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw Error("eigensolver failed during validation");
        const double lo = es.eigenvalues().minCoeff();
        if (!(lo >= -1e-9))
            throw Error("density matrix has negative eigenvalue " + std::to_string(lo));
    }
}

StateSpec StateSpec::coherent(Complex alpha, int dim) {
    return StateSpec{Coherent{alpha}, dim};
}

StateSpec StateSpec::number(int n, int dim) {
    return StateSpec{Number{n}, dim > 0 ? dim : n + 8};
}

StateSpec StateSpec::squeezed_coherent(Complex alpha, double r, double theta, int dim) {
    return StateSpec{SqueezedCoherent{alpha, r, theta}, dim};
}

StateSpec StateSpec::superposition(std::vector<Complex> coefficients, int dim) {
    const int len = static_cast<int>(coefficients.size());
    return StateSpec{Superposition{std::move(coefficients)}, dim > 0 ? dim : len + 6};
}

StateSpec StateSpec::mixture(std::vector<double> weights, std::vector<StateSpec> components,
                             int dim) {
    int d = dim;
    if (d <= 0)
        for (const auto& c : components) d = std::max(d, c.dim);
    return StateSpec{Mixture{std::move(weights), std::move(components)}, d};
}

DensityMatrix build_state(const StateSpec& spec) {
    if (spec.dim < 1) throw InvalidSpec("state dim must be >= 1");
    const int dim = spec.dim;

    if (const auto* c = std::get_if<Coherent>(&spec.kind)) {
        Eigen::VectorXcd psi = coherent_vector(c->alpha, dim);
        const double tail = 1.0 - psi.squaredNorm();
        if (!(tail < kTailTol))
            throw TruncationTooSmall("coherent amplitude " + std::to_string(std::abs(c->alpha)) +
                                     " leaves tail mass " + std::to_string(tail) + " at dim " +
                                     std::to_string(dim));
        return from_pure(std::move(psi));
    }

    if (const auto* num = std::get_if<Number>(&spec.kind)) {
        if (num->n < 0) throw InvalidSpec("number state index must be >= 0");
        if (num->n >= dim)
            throw TruncationTooSmall("number state |" + std::to_string(num->n) +
                                     "> does not fit in dim " + std::to_string(dim));
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
        psi(num->n) = 1.0;
        return from_pure(std::move(psi));
    }

    if (const auto* sq = std::get_if<SqueezedCoherent>(&spec.kind)) {
        if (sq->r < 0.0) throw InvalidSpec("squeeze magnitude must be >= 0");
        // Work in a padded space so the truncated exponentials stay accurate,
        // then keep the leading dim amplitudes.
        const int work = 2 * dim;
        const Eigen::MatrixXcd a = annihilation_op(work);
        const Eigen::MatrixXcd a2 = a * a;
        const Complex zeta = std::polar(sq->r, sq->theta);
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(work);
        psi(0) = 1.0;
        psi = exp_antihermitian(0.5 * (std::conj(zeta) * a2 - zeta * a2.adjoint())) * psi;
        if (sq->alpha != 0.0)
            psi = exp_antihermitian(sq->alpha * a.adjoint() - std::conj(sq->alpha) * a) * psi;
        const double tail = psi.tail(work - dim).squaredNorm();
        if (!(tail < kTailTol))
            throw TruncationTooSmall("squeezed state leaves tail mass " + std::to_string(tail) +
                                     " at dim " + std::to_string(dim));
        return from_pure(psi.head(dim).eval());
    }

    if (const auto* sup = std::get_if<Superposition>(&spec.kind)) {
        if (sup->coefficients.empty())
            throw InvalidSpec("superposition needs at least one coefficient");
        if (static_cast<int>(sup->coefficients.size()) > dim)
            throw TruncationTooSmall("superposition has more coefficients than dim");
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
        for (std::size_t i = 0; i < sup->coefficients.size(); ++i)
            psi(static_cast<Eigen::Index>(i)) = sup->coefficients[i];
        if (psi.norm() == 0.0) throw InvalidSpec("superposition coefficients are all zero");
        return from_pure(std::move(psi));
    }

    const auto& mix = std::get<Mixture>(spec.kind);
    if (mix.components.empty() || mix.weights.size() != mix.components.size())
        throw InvalidSpec("mixture needs matching nonempty weight and component lists");
    double wsum = 0.0;
    for (double w : mix.weights) {
        if (w < 0.0) throw InvalidSpec("mixture weight is negative");
        wsum += w;
    }
    if (wsum <= 0.0) throw InvalidSpec("mixture weights sum to zero");
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t i = 0; i < mix.components.size(); ++i) {
        const DensityMatrix part = build_state(mix.components[i]);
        if (part.dim() > dim)
            throw TruncationTooSmall("mixture dim is smaller than a component dim");
        acc.topLeftCorner(part.dim(), part.dim()) += (mix.weights[i] / wsum) * part.elements;
    }
    return finalize(std::move(acc));
}

double q_function(const DensityMatrix& rho, Complex beta) {
    const int d = rho.dim();
    Eigen::VectorXcd v(d);
    v(0) = std::exp(-0.5 * std::norm(beta));
    for (int n = 1; n < d; ++n) v(n) = v(n - 1) * beta / std::sqrt(static_cast<double>(n));
    const Complex q = v.dot(rho.elements * v);
    return std::max(0.0, q.real());
}

double canonical_phase_distribution(const DensityMatrix& rho, double phi) {
    const int d = rho.dim();
    Eigen::VectorXcd w(d);
    for (int n = 0; n < d; ++n) w(n) = std::polar(1.0, -phi * n);
    const Complex p = w.dot(rho.elements * w);
    return std::max(0.0, p.real() / (2.0 * M_PI));
}

Complex exact_moment(const DensityMatrix& rho, int n, int d) {
    if (n < 0 || d < 0) throw IndexBeyondTruncation("moment orders must be >= 0");
    if (n + d >= rho.dim())
        throw IndexBeyondTruncation("moment order n+d = " + std::to_string(n + d) +
                                    " needs dim > " + std::to_string(n + d));
    Complex acc = 0.0;
    for (int j = n + d; j < rho.dim(); ++j) {
        // adag^n a^{n+d} maps |j> to sqrt(Falling(j, n+d) Falling(j-d, n)) |j-d>.
        double w = 1.0;
        for (int t = 0; t < n + d; ++t) w *= static_cast<double>(j - t);
        for (int t = 0; t < n; ++t) w *= static_cast<double>(j - d - t);
        acc += rho.elements(j, j - d) * std::sqrt(w);
    }
    return acc;
}

QuadratureStats exact_quadrature_stats(const DensityMatrix& rho, double phi) {
    const Complex rot = std::polar(1.0, -phi);
    const Complex a1 = exact_moment(rho, 0, 1);
    const Complex a2 = exact_moment(rho, 0, 2);
    const double nbar = exact_moment(rho, 1, 0).real();
    const double mean = (a1 * rot).real();
    const double x2 = 0.25 * (2.0 * (a2 * rot * rot).real() + 2.0 * nbar + 1.0);
    return QuadratureStats{mean, x2 - mean * mean};
}

namespace {

std::string fmt_complex(Complex z) {
    std::ostringstream os;
    os << z.real() << (z.imag() < 0 ? '-' : '+') << std::abs(z.imag()) << 'i';
    return os.str();
}

} // namespace

std::string describe(const StateSpec& spec) {
    std::ostringstream os;
    if (const auto* c = std::get_if<Coherent>(&spec.kind)) {
        os << "coherent(" << fmt_complex(c->alpha) << ")";
    } else if (const auto* num = std::get_if<Number>(&spec.kind)) {
        os << "number(" << num->n << ")";
    } else if (const auto* sq = std::get_if<SqueezedCoherent>(&spec.kind)) {
        os << "squeezed(" << fmt_complex(sq->alpha) << ",r=" << sq->r << ",theta=" << sq->theta
           << ")";
    } else if (const auto* sup = std::get_if<Superposition>(&spec.kind)) {
        os << "superposition[";
        for (std::size_t i = 0; i < sup->coefficients.size(); ++i)
            os << (i ? "," : "") << fmt_complex(sup->coefficients[i]);
        os << "]";
    } else {
        const auto& mix = std::get<Mixture>(spec.kind);
        os << "mix[";
        for (std::size_t i = 0; i < mix.components.size(); ++i)
            os << (i ? "," : "") << mix.weights[i] << "*" << describe(mix.components[i]);
        os << "]";
    }
    return os.str();
}

} // namespace hetsim
