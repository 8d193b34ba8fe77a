#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "opo/analytics.hpp"
#include "opo/grid.hpp"
#include "opo/params.hpp"
#include "support/quadrature.hpp"

using namespace opo;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexField plane_wave(const GridSpec& g, int mx, int my, Complex amp) {
    ComplexField f(g.size());
    for (int ix = 0; ix < g.nx; ++ix)
        for (int iy = 0; iy < g.ny; ++iy) {
            const double phase = 2.0 * kPi *
                                 (static_cast<double>(mx) * ix / g.nx +
                                  static_cast<double>(my) * iy / g.ny);
            f[static_cast<std::size_t>(ix) * g.ny + iy] =
                amp * std::exp(Complex(0.0, phase));
        }
    return f;
}

}  // namespace

TEST_CASE("self-consistent Gaussian intensity") {
    const auto at0 = gaussian_self_consistency(0.0);
    CHECK(std::abs(at0.c - 0.25) < 1e-12);
    CHECK(std::abs(at0.eta1_prime - 0.5) < 1e-12);

    // At eta1 = 1 the cubic 64c^3 + 32c^2 = 1 is solved by 1/(4*phi) with
    // phi the golden ratio.
    const auto at1 = gaussian_self_consistency(1.0);
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    CHECK(at1.c == doctest::Approx(1.0 / (4.0 * phi)).epsilon(1e-12));

    double prev = at0.c;
    for (double eta1 : {0.5, 1.0, 2.0, 10.0}) {
        const auto s = gaussian_self_consistency(eta1);
        const double residual =
            64.0 * s.c * s.c * s.c + 32.0 * eta1 * s.c * s.c - 1.0;
        CHECK(std::abs(residual) < 1e-12);
        CHECK(s.eta1_prime == doctest::Approx(eta1 + 2.0 * s.c).epsilon(1e-14));
        CHECK(s.c < prev);
        prev = s.c;
    }
    CHECK_THROWS_AS(gaussian_self_consistency(-0.1), std::domain_error);
}

TEST_CASE("far-field correlation formula and domain") {
    CHECK(far_field_corr(0.0, 0.5, 0.0, 0.5) == doctest::Approx(2.0));
    const double k = 1.3, e1 = 0.4, e2 = -0.2, e3 = 0.5;
    CHECK(far_field_corr(k, e1, e2, e3) ==
          doctest::Approx(1.0 / (e1 + e2 * k * k + e3 * k * k * k * k))
              .epsilon(1e-14));
    CHECK_THROWS_AS(far_field_corr(1.0, -2.0, 0.0, 0.5), std::domain_error);
}

TEST_CASE("kelvin kei against the Hankel quadrature oracle") {
    CHECK(std::abs(kelvin_kei(0.0) - (-kPi / 4.0)) < 1e-14);
    // Spot values across all three internal branches; the full [0, 20] sweep
    // runs in the acceptance suite.
    for (double x : {0.05, 0.5, 1.0, 2.0, 3.9, 4.1, 7.0, 12.0, 20.0, 29.9, 31.0}) {
        const double want = oracle::kei_integral(x);
        CHECK(std::abs(kelvin_kei(x) - want) < 1e-8);
    }
    // Known reference value kei(1) (Abramowitz & Stegun tables give -0.49499).
    CHECK(kelvin_kei(1.0) == doctest::Approx(-0.4949946365187).epsilon(1e-9));
    CHECK_THROWS_AS(kelvin_kei(-1.0), std::domain_error);
}

TEST_CASE("near-field correlation matches its Hankel transform") {
    // The isotropic 2D inverse transform of 1/(e1' + e3 k^4) is
    // (1/2pi) * int k J0(k r)/(e1' + e3 k^4) dk, evaluated independently.
    const double e1p = 0.5, e3 = 0.5;
    for (double r : {0.0, 0.3, 1.0, 2.5, 6.0}) {
        const double want =
            oracle::hankel_trace_integral(r, e1p, e3) / (2.0 * kPi);
        CHECK(std::abs(near_field_corr(r, e1p, e3) - want) < 1e-8);
    }
    // Unequal coefficients exercise the rescaling inside the implementation.
    const double e1b = 2.0, e3b = 0.7;
    for (double r : {0.0, 0.5, 1.5}) {
        const double want =
            oracle::hankel_trace_integral(r, e1b, e3b) / (2.0 * kPi);
        CHECK(std::abs(near_field_corr(r, e1b, e3b) - want) < 1e-8);
    }
}

TEST_CASE("near-field r->0 limit equals the self-consistent intensity") {
    for (double eta1 : {0.0, 0.5, 1.0, 10.0}) {
        const auto s = gaussian_self_consistency(eta1);
        CHECK(std::abs(near_field_corr(0.0, s.eta1_prime, 0.5) - s.c) < 1e-10);
    }
}

TEST_CASE("slaved damped quadrature is the scaled laplacian") {
    const GridSpec g{16, 16, 8.0, 8.0};
    SpectralWorkspace ws(g);
    const double mu = 1.0;
    const double kx = 2.0 * kPi * 3 / g.lx;
    const ComplexField X = plane_wave(g, 3, 0, Complex(0.7, -0.1));
    ComplexField Y;
    slaved_y(ws, X, mu, Y);
    for (int i = 0; i < g.size(); ++i) {
        const Complex want = -kx * kx / (1.0 + mu) * X[i];
        CHECK(std::abs(Y[i] - want) < 1e-10);
    }
    CHECK_THROWS_AS(slaved_y(ws, X, -1.0, Y), std::invalid_argument);
}

TEST_CASE("hamiltonian of a single cosine mode") {
    const GridSpec g{32, 32, 10.0, 10.0};
    SpectralWorkspace ws(g);
    const double a = 0.8;
    const int m = 3;
    const double k0 = 2.0 * kPi * m / g.lx;
    VectorField X;
    X.c1.resize(g.size());
    X.c2.assign(g.size(), 0.0);
    for (int ix = 0; ix < g.nx; ++ix)
        for (int iy = 0; iy < g.ny; ++iy)
            X.c1[static_cast<std::size_t>(ix) * g.ny + iy] =
                a * std::cos(k0 * ix * g.dx());
    const EtaSet etas{0.4, -0.1, 0.5};
    // Exact lattice averages of cos^2 and cos^4 over a commensurate period:
    // 1/2 and 3/8.
    const double quad = etas.eta1 * a * a / 2.0 +
                        (etas.eta2 * k0 * k0 + etas.eta3 * k0 * k0 * k0 * k0) *
                            a * a / 2.0;
    const double quartic = 0.5 * (3.0 / 8.0) * a * a * a * a;
    const double want = g.area() * (quad + quartic);
    CHECK(gl_hamiltonian(ws, X, etas) == doctest::Approx(want).epsilon(1e-10));

    // The complex packing carries the same value.
    const ComplexField packed = pack_components(X);
    CHECK(gl_hamiltonian(ws, packed, etas) ==
          doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("hamiltonian is invariant under component rotation") {
    const GridSpec g{16, 16, 6.0, 6.0};
    SpectralWorkspace ws(g);
    VectorField X;
    X.c1.resize(g.size());
    X.c2.resize(g.size());
    for (int i = 0; i < g.size(); ++i) {
        X.c1[i] = std::sin(0.13 * i);
        X.c2[i] = 0.4 * std::cos(0.21 * i);
    }
    const EtaSet etas{0.2, 0.1, 0.5};
    const double h0 = gl_hamiltonian(ws, X, etas);
    const double th = 0.77;
    VectorField R;
    R.c1.resize(g.size());
    R.c2.resize(g.size());
    for (int i = 0; i < g.size(); ++i) {
        R.c1[i] = std::cos(th) * X.c1[i] - std::sin(th) * X.c2[i];
        R.c2[i] = std::sin(th) * X.c1[i] + std::cos(th) * X.c2[i];
    }
    CHECK(gl_hamiltonian(ws, R, etas) == doctest::Approx(h0).epsilon(1e-12));
}
