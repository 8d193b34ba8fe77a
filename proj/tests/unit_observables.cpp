#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "opo/grid.hpp"
#include "opo/observables.hpp"

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

TEST_CASE("kahan sum survives catastrophic cancellation") {
    CHECK(kahan_sum({1e16, 1.0, -1e16}) == 1.0);
    std::vector<double> many(100000, 0.1);
    CHECK(kahan_sum(many) == doctest::Approx(10000.0).epsilon(1e-15));
    CHECK(kahan_sum({}) == 0.0);
}

TEST_CASE("ensemble estimate has the textbook mean and stderr") {
    const auto e = ensemble_estimate({1.0, 2.0, 3.0, 4.0});
    CHECK(e.mean == doctest::Approx(2.5));
    CHECK(e.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-14));
    CHECK(e.n == 4);
    CHECK_THROWS_AS(ensemble_estimate({1.0}), std::domain_error);
    const auto same = ensemble_estimate({2.0, 2.0, 2.0});
    CHECK(same.stderr_ == 0.0);
}

TEST_CASE("field intensity is the spatial mean of X.X") {
    const GridSpec g{8, 8, 4.0, 4.0};
    VectorField v;
    v.c1.assign(g.size(), 0.3);
    v.c2.assign(g.size(), -0.4);
    CHECK(field_intensity(v, g) == doctest::Approx(0.25).epsilon(1e-15));
    ComplexField f(g.size(), Complex(0.3, -0.4));
    CHECK(field_intensity(f, g) == doctest::Approx(0.25).epsilon(1e-15));
    ComplexField wrong(g.size() + 1);
    CHECK_THROWS_AS(field_intensity(wrong, g), std::invalid_argument);

    std::vector<ComplexField> ens{ComplexField(g.size(), Complex(1.0, 0.0)),
                                  ComplexField(g.size(), Complex(0.0, 2.0))};
    const auto e = mean_intensity(ens, g);
    CHECK(e.mean == doctest::Approx(2.5));
}

TEST_CASE("momentum spectrum of a plane wave is a single loaded mode") {
    const GridSpec g{16, 16, 8.0, 8.0};
    SpectralWorkspace ws(g);
    const Complex amp(0.5, 0.5);
    std::vector<ComplexField> ens{plane_wave(g, 3, 14, amp),
                                  plane_wave(g, 3, 14, amp)};
    const Spectrum2D spec = momentum_spectrum(ens, ws);
    const std::size_t loaded = 3u * 16u + 14u;
    // S = <|X_hat|^2> dA; the plane wave puts |amp|^2 * N into one mode.
    const double want = std::norm(amp) * g.size() * g.cell_area();
    for (std::size_t i = 0; i < spec.S.size(); ++i) {
        if (i == loaded)
            CHECK(spec.S[i] == doctest::Approx(want).epsilon(1e-12));
        else
            CHECK(std::abs(spec.S[i]) < 1e-10);
    }
}

TEST_CASE("spectrum satisfies the Parseval normalization") {
    const GridSpec g{12, 12, 5.0, 5.0};
    SpectralWorkspace ws(g);
    std::vector<ComplexField> ens;
    for (int t = 0; t < 3; ++t) {
        ComplexField f(g.size());
        for (int i = 0; i < g.size(); ++i)
            f[i] = Complex(std::sin(0.31 * i + t), std::cos(0.17 * i - t));
        ens.push_back(std::move(f));
    }
    const Spectrum2D spec = momentum_spectrum(ens, ws);
    double total = 0.0;
    for (double s : spec.S) total += s;
    const auto direct = mean_intensity(ens, g);
    CHECK(total / g.area() == doctest::Approx(direct.mean).epsilon(1e-12));

    // The accumulation form adds the same numbers.
    std::vector<double> accum(g.size(), 0.0);
    for (const auto& f : ens) accumulate_spectrum(ws, f, accum);
    for (int i = 0; i < g.size(); ++i)
        CHECK(accum[i] / ens.size() == doctest::Approx(spec.S[i]).epsilon(1e-12));
}

TEST_CASE("radial average bins annuli of width 2*pi/L") {
    const GridSpec g{16, 16, 8.0, 8.0};
    SpectralWorkspace ws(g);
    Spectrum2D spec{g, std::vector<double>(g.size(), 1.0)};
    const RadialSpectrum r = radial_average(spec);
    const double dk = 2.0 * kPi / 8.0;
    REQUIRE(r.k.size() >= 2);
    for (std::size_t b = 0; b < r.k.size(); ++b) {
        CHECK(r.k[b] == doctest::Approx(b * dk));
        if (r.count[b] > 0) CHECK(r.S[b] == doctest::Approx(1.0));
        CHECK(r.stderr_[b] == 0.0);
    }
    int total = 0;
    for (int c : r.count) total += c;
    CHECK(total == g.size());

    // A pure |k|^2 profile averages to the analytic bin values.
    Spectrum2D quad{g, std::vector<double>(g.size())};
    for (int i = 0; i < g.size(); ++i) quad.S[i] = ws.k2()[i];
    const RadialSpectrum rq = radial_average(quad);
    const RadialSpectrum rf =
        radial_average_function(ws, [](double k) { return k * k; });
    REQUIRE(rq.k.size() == rf.k.size());
    for (std::size_t b = 0; b < rq.k.size(); ++b)
        if (rq.count[b] > 0)
            CHECK(rq.S[b] == doctest::Approx(rf.S[b]).epsilon(1e-12));
}

TEST_CASE("radial average over trajectories reports between-sample spread") {
    const GridSpec g{8, 8, 4.0, 4.0};
    std::vector<Spectrum2D> per;
    per.push_back({g, std::vector<double>(g.size(), 1.0)});
    per.push_back({g, std::vector<double>(g.size(), 3.0)});
    const RadialSpectrum r = radial_average(per);
    for (std::size_t b = 0; b < r.k.size(); ++b) {
        if (r.count[b] == 0) continue;
        CHECK(r.S[b] == doctest::Approx(2.0));
        // two samples, values 1 and 3: sample sd = sqrt(2), stderr = 1
        CHECK(r.stderr_[b] == doctest::Approx(1.0));
    }
}

TEST_CASE("spatial correlation of a homogeneous ensemble is flat") {
    const GridSpec g{8, 8, 4.0, 4.0};
    SpectralWorkspace ws(g);
    std::vector<ComplexField> ens{ComplexField(g.size(), Complex(0.6, 0.8)),
                                  ComplexField(g.size(), Complex(0.6, 0.8))};
    const auto corr = spatial_correlation(ens, ws);
    REQUIRE(corr.size() == static_cast<std::size_t>(g.size()));
    for (double c : corr) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spatial correlation of a plane wave oscillates at its wavevector") {
    const GridSpec g{16, 16, 8.0, 8.0};
    SpectralWorkspace ws(g);
    std::vector<ComplexField> ens{plane_wave(g, 2, 0, Complex(1.0, 0.0)),
                                  plane_wave(g, 2, 0, Complex(1.0, 0.0))};
    const auto corr = spatial_correlation(ens, ws);
    const double k = 2.0 * kPi * 2 / g.lx;
    for (int ix = 0; ix < g.nx; ++ix) {
        const double want = std::cos(k * ix * g.dx());
        CHECK(corr[static_cast<std::size_t>(ix) * g.ny] ==
              doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("step convergence attaches matching observables") {
    RunSummary coarse{7, 2e-3, 2, "fixed", {{"intensity", 0.251}, {"h", 1.0}}};
    RunSummary fine{7, 1e-3, 1, "fixed", {{"intensity", 0.250}}};
    const auto entries = step_convergence(coarse, fine);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].name == "intensity");
    CHECK(entries[0].abs_diff == doctest::Approx(0.001));

    RunSummary bad_seed = fine;
    bad_seed.seed = 8;
    CHECK_THROWS_AS(step_convergence(coarse, bad_seed), std::logic_error);
    RunSummary bad_sched = fine;
    bad_sched.schedule = "ramp";
    CHECK_THROWS_AS(step_convergence(coarse, bad_sched), std::logic_error);
    RunSummary bad_sub = fine;
    bad_sub.substeps = 2;  // coarse.substeps must equal ratio * fine.substeps
    CHECK_THROWS_AS(step_convergence(coarse, bad_sub), std::logic_error);
    RunSummary bad_dt = fine;
    bad_dt.dt = 3e-3;
    CHECK_THROWS_AS(step_convergence(coarse, bad_dt), std::logic_error);
}
