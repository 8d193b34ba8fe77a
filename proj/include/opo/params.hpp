#pragma once

#include <array>
#include <complex>

namespace opo {

// Cavity and pump parameters of the degenerate two-mode model, in units of
// the signal loss rate unless stated otherwise. delta is the common cavity
// detuning of the down-converted modes, delta0 the pump detuning.
struct PhysicalParams {
    double gamma0 = 1.0;  // pump loss rate
    double gamma = 1.0;   // signal/idler loss rate
    double delta = 0.0;   // signal/idler detuning (units of gamma)
    double delta0 = 0.0;  // pump detuning (units of gamma0)
    double chi = 1.0;     // parametric coupling
    double pump = 0.0;    // driving amplitude E
    double v = 1.0;       // intracavity light speed
    double omega = 1.0;   // carrier frequency

    void validate() const;
    std::complex<double> gamma0_tilde() const;  // gamma0 * (1 + i*delta0)
    std::complex<double> gamma_tilde() const;   // gamma * (1 + i*delta)
    double gamma_bar() const;                   // gamma * sqrt(1 + delta^2)
};

// Scales of the reduced critical description: mu is the pump relative to
// threshold, g the fluctuation strength, x0/t0 the space/time units, and
// eta1..eta3 the linear-operator coefficients -eta1 + eta2*Lap - eta3*Lap^2.
struct DimensionlessParams {
    double g = 0.0;
    double mu = 0.0;
    double x0 = 0.0;
    double t0 = 0.0;
    double eta1 = 0.0;
    double eta2 = 0.0;
    double eta3 = 0.0;
};

struct EtaSet {
    double eta1 = 0.0;
    double eta2 = 0.0;
    double eta3 = 0.0;
};

// eta1 = (1-mu)/g, eta2 = delta/((1+mu)*sqrt(g)), eta3 = 1/(1+mu).
EtaSet reduced_coefficients(double mu, double delta, double g);

// Full scale derivation from physical inputs (degenerate operation).
DimensionlessParams derive_scales(const PhysicalParams& p);

// Dimensionless-first construction: unit space/time scales.
DimensionlessParams dimensionless_from(double g, double mu, double delta);

// Pump amplitude at which the homogeneous solution destabilizes:
// E_c = gamma_bar * |gamma0_tilde| / |chi|.
double critical_pump(const PhysicalParams& p);

// Steady-state signal intensity of the classical (noise-free, homogeneous)
// equations; zero at or below threshold.
double classical_intensity(const PhysicalParams& p);

// Linearization of the homogeneous reduced system around X = Y = 0 in the
// (X, Y) quadrature basis: growth rates lambda_pm = -1 +- sqrt(mu^2 - delta^2)
// in units of gamma_bar, with eigenvectors (mu, i*delta +- sqrt(mu^2-delta^2)).
struct StabilityResult {
    std::complex<double> lambda_plus;
    std::complex<double> lambda_minus;
    std::array<std::complex<double>, 2> mode_plus;
    std::array<std::complex<double>, 2> mode_minus;
    bool above_threshold = false;  // Re(lambda_plus) > 0
};

StabilityResult stability_eigensystem(double mu, double delta);

}  // namespace opo
