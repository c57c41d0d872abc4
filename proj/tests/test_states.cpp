#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hetsim/rng.hpp"
#include "hetsim/states.hpp"

using namespace hetsim;

namespace {

const Complex kI(0.0, 1.0);

StateSpec zero_plus_i_two(int dim = 8) {
    return StateSpec::superposition({1.0 / std::sqrt(2.0), 0.0, kI / std::sqrt(2.0)}, dim);
}

// Squeezed coherent state with energy split evenly between displacement and
// squeezing: |alpha|^2 = sinh^2 r = 1/2, alpha real, squeezing along phi = 0.
StateSpec half_half_squeezed(int dim = 64) {
    return StateSpec::squeezed_coherent(std::sqrt(0.5), std::asinh(std::sqrt(0.5)), 0.0, dim);
}

StateSpec random_mixed(Rng& rng, int dim, int n_parts) {
    std::vector<double> weights;
    std::vector<StateSpec> parts;
    for (int p = 0; p < n_parts; ++p) {
        std::vector<Complex> c(static_cast<std::size_t>(dim));
        for (auto& z : c) {
            double a, b;
            rng.normal_pair(a, b);
            z = Complex(a, b);
        }
        parts.push_back(StateSpec::superposition(std::move(c), dim));
        weights.push_back(rng.uniform() + 0.05);
    }
    return StateSpec::mixture(std::move(weights), std::move(parts), dim);
}

double q_norm_on_grid(const DensityMatrix& rho, double r_max, int n_r, int n_th) {
    const double dr = r_max / n_r;
    const double dth = 2.0 * M_PI / n_th;
    double total = 0.0;
    for (int i = 0; i < n_r; ++i) {
        const double r = (i + 0.5) * dr;
        double ring = 0.0;
        for (int j = 0; j < n_th; ++j) ring += q_function(rho, std::polar(r, j * dth));
        total += ring * r * dr * dth;
    }
    return total / M_PI;
}

} // namespace

TEST_CASE("number state is a projector") {
    const DensityMatrix rho = build_state(StateSpec::number(1, 4));
    rho.validate(true);
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
            const Complex want = (m == 1 && n == 1) ? 1.0 : 0.0;
            CHECK(std::abs(rho.elements(m, n) - want) < 1e-14);
        }
}

TEST_CASE("two-component superposition matrix elements") {
    const DensityMatrix rho = build_state(zero_plus_i_two(4));
    rho.validate(true);
    CHECK(std::abs(rho.elements(0, 0) - 0.5) < 1e-12);
    CHECK(std::abs(rho.elements(2, 2) - 0.5) < 1e-12);
    CHECK(std::abs(rho.elements(2, 0) - 0.5 * kI) < 1e-12);
    CHECK(std::abs(rho.elements(0, 2) + 0.5 * kI) < 1e-12);
    CHECK(std::abs(rho.elements(1, 1)) < 1e-14);
}

TEST_CASE("coherent state has Poisson diagonal") {
    const DensityMatrix rho = build_state(StateSpec::coherent(1.0, 32));
    rho.validate(true);
    // Independent factorial series for e^{-1} / n!.
    double fact = 1.0;
    for (int n = 0; n < 6; ++n) {
        if (n > 0) fact *= n;
        CHECK(std::abs(rho.elements(n, n).real() - std::exp(-1.0) / fact) < 1e-10);
        CHECK(std::abs(rho.elements(n, n).imag()) < 1e-14);
    }
}

TEST_CASE("construction rejects bad specs") {
    CHECK_THROWS_AS(build_state(StateSpec::coherent(5.0, 16)), TruncationTooSmall);
    CHECK_THROWS_AS(build_state(StateSpec::number(4, 4)), TruncationTooSmall);
    CHECK_THROWS_AS(build_state(StateSpec::squeezed_coherent(0.0, 2.0, 0.0, 8)),
                    TruncationTooSmall);
    CHECK_THROWS_AS(build_state(StateSpec::superposition({}, 4)), InvalidSpec);
    CHECK_THROWS_AS(build_state(StateSpec::superposition({0.0, 0.0}, 4)), InvalidSpec);
    CHECK_THROWS_AS(build_state(StateSpec::squeezed_coherent(0.0, -0.5, 0.0, 16)), InvalidSpec);
    CHECK_THROWS_AS(
        build_state(StateSpec::mixture({-0.5, 1.5}, {StateSpec::number(0), StateSpec::number(1)})),
        InvalidSpec);
    CHECK_THROWS_AS(build_state(StateSpec::mixture({}, {})), InvalidSpec);
    StateSpec bad = StateSpec::number(0);
    bad.dim = 0;
    CHECK_THROWS_AS(build_state(bad), InvalidSpec);
}

TEST_CASE("q function closed forms") {
    const DensityMatrix vac = build_state(StateSpec::number(0, 4));
    CHECK(q_function(vac, 0.0) == doctest::Approx(1.0).epsilon(1e-12));

    const Complex alpha(1.3, -0.4);
    const DensityMatrix coh = build_state(StateSpec::coherent(alpha, 48));
    const DensityMatrix one = build_state(StateSpec::number(1, 8));
    const Complex betas[] = {{0.0, 0.0}, {0.5, 0.2}, {-1.1, 0.9}, {2.0, -1.5}};
    for (const Complex b : betas) {
        CHECK(q_function(coh, b) ==
              doctest::Approx(std::exp(-std::norm(b - alpha))).epsilon(1e-8));
        CHECK(q_function(one, b) ==
              doctest::Approx(std::norm(b) * std::exp(-std::norm(b))).epsilon(1e-12));
        CHECK(q_function(coh, b) <= 1.0 + 1e-12);
    }
}

TEST_CASE("q function integrates to one on a polar grid") {
    std::vector<DensityMatrix> states;
    states.push_back(build_state(StateSpec::number(0, 4)));
    states.push_back(build_state(StateSpec::number(3, 8)));
    states.push_back(build_state(StateSpec::coherent(2.0, 32)));
    states.push_back(build_state(half_half_squeezed(32)));
    states.push_back(build_state(zero_plus_i_two()));
    Rng rng(321);
    states.push_back(build_state(random_mixed(rng, 12, 4)));
    for (const auto& rho : states) CHECK(q_norm_on_grid(rho, 9.0, 450, 128) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("q function is nonnegative and bounded for random mixed states") {
    Rng rng(99);
    for (int s = 0; s < 10; ++s) {
        const DensityMatrix rho = build_state(random_mixed(rng, 10, 3));
        rho.validate(true);
        for (int p = 0; p < 1000; ++p) {
            double a, b;
            rng.normal_pair(a, b);
            const double q = q_function(rho, Complex(2.0 * a, 2.0 * b));
            CHECK(q >= 0.0);
            CHECK(q <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("canonical phase distribution") {
    const DensityMatrix two = build_state(StateSpec::number(2, 6));
    for (const double phi : {-3.0, -0.5, 0.0, 1.2, 3.1})
        CHECK(canonical_phase_distribution(two, phi) ==
              doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));

    const DensityMatrix sup = build_state(zero_plus_i_two());
    CHECK(canonical_phase_distribution(sup, 0.0) ==
          doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));

    // Normalization over [-pi, pi) by midpoint quadrature.
    const DensityMatrix coh = build_state(StateSpec::coherent(1.0, 32));
    for (const DensityMatrix* rho : {&two, &sup, &coh}) {
        const int n = 10000;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double phi = -M_PI + (i + 0.5) * 2.0 * M_PI / n;
            const double p = canonical_phase_distribution(*rho, phi);
            CHECK(p >= 0.0);
            total += p * 2.0 * M_PI / n;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("exact moments") {
    const DensityMatrix one = build_state(StateSpec::number(1, 4));
    CHECK(std::abs(exact_moment(one, 1, 0) - Complex(1.0)) < 1e-12);

    const DensityMatrix coh = build_state(StateSpec::coherent(2.0, 64));
    CHECK(std::abs(exact_moment(coh, 1, 0) - Complex(4.0)) < 1e-7);
    CHECK(std::abs(exact_moment(coh, 0, 1) - Complex(2.0)) < 1e-7);

    const DensityMatrix sup = build_state(zero_plus_i_two());
    CHECK(std::abs(exact_moment(sup, 0, 2) - kI / std::sqrt(2.0)) < 1e-12);

    CHECK_THROWS_AS(exact_moment(one, 2, 2), IndexBeyondTruncation);

    // <n> agrees with the direct diagonal sum.
    Rng rng(777);
    const DensityMatrix mixed = build_state(random_mixed(rng, 12, 4));
    for (const DensityMatrix* rho : {&coh, &sup, &mixed}) {
        double diag = 0.0;
        for (int n = 0; n < rho->dim(); ++n) diag += n * rho->elements(n, n).real();
        CHECK(std::abs(exact_moment(*rho, 1, 0).real() - diag) < 1e-12);
        CHECK(std::abs(exact_moment(*rho, 1, 0).imag()) < 1e-12);
    }
}

TEST_CASE("quadrature statistics") {
    const DensityMatrix vac = build_state(StateSpec::number(0, 4));
    const DensityMatrix one = build_state(StateSpec::number(1, 5));
    for (const double phi : {0.0, 0.7, M_PI / 2}) {
        const QuadratureStats v = exact_quadrature_stats(vac, phi);
        CHECK(v.mean == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(v.variance == doctest::Approx(0.25).epsilon(1e-12));
        const QuadratureStats o = exact_quadrature_stats(one, phi);
        CHECK(o.mean == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(o.variance == doctest::Approx(0.75).epsilon(1e-12));
    }

    const DensityMatrix sq = build_state(half_half_squeezed());
    const double r = std::asinh(std::sqrt(0.5));
    const QuadratureStats squeezed_axis = exact_quadrature_stats(sq, 0.0);
    const QuadratureStats anti_axis = exact_quadrature_stats(sq, M_PI / 2);
    CHECK(squeezed_axis.mean == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));
    CHECK(squeezed_axis.variance == doctest::Approx(std::exp(-2.0 * r) / 4.0).epsilon(1e-7));
    CHECK(anti_axis.mean == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(anti_axis.variance == doctest::Approx(std::exp(2.0 * r) / 4.0).epsilon(1e-7));

    // Squeeze phase theta rotates the squeezed quadrature to theta / 2.
    const DensityMatrix rot =
        build_state(StateSpec::squeezed_coherent(0.0, r, M_PI / 2, 32));
    CHECK(exact_quadrature_stats(rot, M_PI / 4).variance ==
          doctest::Approx(std::exp(-2.0 * r) / 4.0).epsilon(1e-7));
}

TEST_CASE("squeezed coherent energy splits between displacement and squeezing") {
    const DensityMatrix sq = build_state(half_half_squeezed());
    sq.validate(true);
    CHECK(exact_moment(sq, 1, 0).real() == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(exact_moment(sq, 0, 1) - Complex(std::sqrt(0.5))) < 1e-7);
}

TEST_CASE("state descriptions") {
    CHECK(describe(StateSpec::number(2)) == "number(2)");
    CHECK(describe(StateSpec::coherent(1.0)).find("coherent") == 0);
    const std::string mix = describe(
        StateSpec::mixture({0.5, 0.5}, {StateSpec::number(0), StateSpec::number(2)}));
    CHECK(mix.find("number(0)") != std::string::npos);
    CHECK(mix.find("number(2)") != std::string::npos);
}
