#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "linbolt/rng.hpp"
#include "linbolt/weyl.hpp"

using namespace linbolt;

// Note: b >= 0 does NOT imply b^W >= 0 as an operator; no test below
// asserts positivity of quantized symbols.

TEST_CASE("symplectic fourier: involution, zero, gaussian closed form") {
    Symbol zero(1, 32, 0.3, 2.0 * kPi / (32 * 0.3));
    Symbol fz = symplectic_fourier(zero);
    for (auto& v : fz.values) REQUIRE(std::abs(v) == 0.0);

    // involution on random data (any consistent grid)
    Symbol rnd(1, 32, 0.21, 0.47);
    RngStream rng(7);
    for (auto& v : rnd.values)
        v = cplx(rng.next_gaussian(), rng.next_gaussian());
    Symbol back = symplectic_fourier(symplectic_fourier(rnd));
    REQUIRE(std::abs(back.x_step - rnd.x_step) < 1e-15);
    REQUIRE(std::abs(back.xi_step - rnd.xi_step) < 1e-15);
    double worst = 0.0;
    for (std::size_t i = 0; i < rnd.values.size(); ++i)
        worst = std::max(worst, std::abs(back.values[i] - rnd.values[i]));
    REQUIRE(worst < 1e-10);

    // standard gaussian is a fixed point of F^sigma (width 1, d = 1)
    const int n = 64;
    const double xs = 0.25, xis = 2.0 * kPi / (n * xs);
    Symbol g = Symbol::sample(1, n, xs, xis, [](const Vec3& x, const Vec3& xi) {
        return std::exp(-0.5 * (x[0] * x[0] + xi[0] * xi[0]));
    });
    Symbol fg = symplectic_fourier(g);
    double sup = 0.0;
    for (int a = 0; a < n; ++a)
        for (int k = 0; k < n; ++k) {
            const double px = fg.coord(0, a), pxi = fg.coord(1, k);
            const double expect = std::exp(-0.5 * (px * px + pxi * pxi));
            sup = std::max(sup, std::abs(fg.values[static_cast<std::size_t>(
                                             a * n + k)] -
                                         expect));
        }
    REQUIRE(sup < 1e-8);
}

TEST_CASE("tau operators: identity, unitarity, product law") {
    QuantumGrid g(1, 32, 16.0);
    const double h = 0.25;

    SymplecticPoint zero;
    Eigen::MatrixXcd T0 = tau_op(g, zero, h);
    REQUIRE((T0 - Eigen::MatrixXcd::Identity(32, 32)).cwiseAbs().maxCoeff() <
            1e-14);

    // incommensurate points are rejected
    SymplecticPoint bad;
    bad.xi = {0.3 * g.dxi() / h, 0, 0};
    REQUIRE_THROWS(tau_op(g, bad, h));

    RngStream rng(3);
    auto random_point = [&]() {
        SymplecticPoint P;
        P.x = {g.dx() * std::floor(8.0 * rng.next_uniform() - 4.0), 0, 0};
        P.xi = {g.dxi() / h * std::floor(8.0 * rng.next_uniform() - 4.0), 0,
                0};
        return P;
    };
    for (int trial = 0; trial < 8; ++trial) {
        SymplecticPoint P1 = random_point(), P2 = random_point();
        Eigen::MatrixXcd T1 = tau_op(g, P1, h);
        REQUIRE((T1 * T1.adjoint() -
                 Eigen::MatrixXcd::Identity(T1.rows(), T1.cols()))
                    .cwiseAbs()
                    .maxCoeff() < 1e-12);
        Eigen::MatrixXcd T2 = tau_op(g, P2, h);
        SymplecticPoint P12;
        for (int a = 0; a < 1; ++a) {
            P12.x[a] = P1.x[a] + P2.x[a];
            P12.xi[a] = P1.xi[a] + P2.xi[a];
        }
        const cplx phase =
            std::polar(1.0, 0.5 * h * symplectic_form(P1, P2, g.dim));
        Eigen::MatrixXcd rhs = phase * tau_op(g, P12, h);
        REQUIRE((T1 * T2 - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("weyl quantization: identity symbol, hermiticity, superposition") {
    QuantumGrid g(1, 32, 16.0);
    const double h = 0.25;

    Eigen::MatrixXcd I =
        weyl_quantize(g, h, [](const Vec3&, const Vec3&) { return 1.0; });
    REQUIRE((I - Eigen::MatrixXcd::Identity(32, 32)).cwiseAbs().maxCoeff() <
            1e-12);

    auto bump = [](const Vec3& y, const Vec3& xi) {
        return std::exp(-2.0 * (y[0] - 0.4) * (y[0] - 0.4) -
                        1.5 * (xi[0] - 0.8) * (xi[0] - 0.8));
    };
    Eigen::MatrixXcd B = weyl_quantize(g, h, bump);
    REQUIRE((B - B.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

    // superposition formula: b^W = sum_P F^sigma b(P) tau^h_P dP
    Symbol bs = sample_measurement_symbol(g, h, bump);
    Symbol fb = symplectic_fourier(bs);
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(32, 32);
    const double cell = fb.x_step * fb.xi_step / (2.0 * kPi);
    for (int a = 0; a < 32; ++a)
        for (int k = 0; k < 32; ++k) {
            SymplecticPoint P;
            P.x = {fb.coord(0, a), 0, 0};
            P.xi = {fb.coord(1, k), 0, 0};
            S += fb.values[static_cast<std::size_t>(a * 32 + k)] *
                 tau_op(g, P, h);
        }
    S *= cell;
    REQUIRE((S - B).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("measurement: delta-state normalization and route agreement") {
    QuantumGrid g(1, 64, 24.0);
    const double h = 0.2;

    Eigen::VectorXcd delta = Eigen::VectorXcd::Zero(64);
    delta(17) = 1.0;
    DensityMatrix rho = DensityMatrix::pure(delta);
    rho.validate();
    const double m1 = measure_observable(
        g, h, [](const Vec3&, const Vec3&) { return 1.0; }, rho);
    REQUIRE(m1 == Catch::Approx(1.0).margin(1e-12));

    // a normalized wave packet against a smooth bump, both routes
    Eigen::VectorXcd psi(64);
    for (int a = 0; a < 64; ++a) {
        const double x = g.position(static_cast<std::size_t>(a))[0];
        psi(a) = std::polar(std::exp(-0.5 * (x - 1.0) * (x - 1.0) / 4.0),
                            1.3 * x);
    }
    psi.normalize();
    DensityMatrix rpack = DensityMatrix::pure(psi);
    auto bump = [](const Vec3& y, const Vec3& xi) {
        return std::exp(-1.5 * (y[0] - 0.2) * (y[0] - 0.2) -
                        0.8 * (xi[0] - 1.3) * (xi[0] - 1.3));
    };
    const double dense = measure_observable(g, h, bump, rpack);
    double resid = 0.0;
    const double super = measure_observable_superposition(
        g, h, sample_measurement_symbol(g, h, bump), rpack, &resid);
    REQUIRE(std::abs(dense - super) < 1e-6);
    REQUIRE(resid < 1e-10); // m_h real for real b, Hermitian rho
}

TEST_CASE("coherent packets concentrate on the symbol value as h -> 0") {
    // packet at macroscopic point (X0, xi0); width s = 1/sqrt(h) vanishes
    // in both position (h s) and momentum (1/s)
    const double X0 = 1.0, xi0 = 1.2;
    auto bump = [](const Vec3& y, const Vec3& xi) {
        return std::exp(-(y[0] - 0.7) * (y[0] - 0.7) -
                        0.6 * (xi[0] - 0.9) * (xi[0] - 0.9));
    };
    double prev_err = 1e9;
    for (double h : {0.2, 0.1, 0.05}) {
        const double s = 1.0 / std::sqrt(h);
        const double x0 = X0 / h;
        const double L = 2.0 * (x0 + 8.0 * s) + 8.0;
        const int n = static_cast<int>(std::ceil(L / 0.6 / 32.0)) * 32;
        QuantumGrid g(1, n, L);
        Eigen::VectorXcd psi(n);
        for (int a = 0; a < n; ++a) {
            const double x = g.position(static_cast<std::size_t>(a))[0];
            psi(a) = std::polar(
                std::exp(-0.25 * (x - x0) * (x - x0) / (s * s)), xi0 * x);
        }
        psi.normalize();
        DensityMatrix rho = DensityMatrix::pure(psi);
        const double m = measure_observable(g, h, bump, rho);
        const double err = std::abs(m - bump({X0, 0, 0}, {xi0, 0, 0}));
        REQUIRE(err < prev_err);
        prev_err = err;
    }
    REQUIRE(prev_err < 5e-2);
}
