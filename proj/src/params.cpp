#include "opo/params.hpp"

#include <cmath>
#include <stdexcept>

namespace opo {

void PhysicalParams::validate() const {
    if (!(gamma0 > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("params: decay rates must be positive");
    if (!(chi > 0.0))
        throw std::invalid_argument("params: chi must be positive");
    if (!(v > 0.0) || !(omega > 0.0))
        throw std::invalid_argument("params: v and omega must be positive");
    if (!(pump >= 0.0))
        throw std::invalid_argument("params: pump must be non-negative");
}

std::complex<double> PhysicalParams::gamma0_tilde() const {
    return gamma0 * std::complex<double>(1.0, delta0);
}

std::complex<double> PhysicalParams::gamma_tilde() const {
    return gamma * std::complex<double>(1.0, delta);
}

double PhysicalParams::gamma_bar() const {
    return gamma * std::sqrt(1.0 + delta * delta);
}

EtaSet reduced_coefficients(double mu, double delta, double g) {
    if (!(g > 0.0)) throw std::invalid_argument("params: g must be positive");
    return {(1.0 - mu) / g, delta / ((1.0 + mu) * std::sqrt(g)),
            1.0 / (1.0 + mu)};
}

DimensionlessParams derive_scales(const PhysicalParams& p) {
    p.validate();
    DimensionlessParams d;
    d.g = std::pow(p.chi * p.chi * p.omega / (2.0 * p.gamma0 * p.v * p.v),
                   2.0 / 3.0);
    d.mu = p.chi * p.pump / (p.gamma0 * p.gamma);
    d.x0 = std::sqrt(p.v * p.v / (2.0 * p.gamma * std::sqrt(d.g) * p.omega));
    d.t0 = 1.0 / (d.g * p.gamma);
    const EtaSet e = reduced_coefficients(d.mu, p.delta, d.g);
    d.eta1 = e.eta1;
    d.eta2 = e.eta2;
    d.eta3 = e.eta3;
    return d;
}

DimensionlessParams dimensionless_from(double g, double mu, double delta) {
    if (!(g > 0.0)) throw std::invalid_argument("params: g must be positive");
    DimensionlessParams d;
    d.g = g;
    d.mu = mu;
    d.x0 = 1.0;
    d.t0 = 1.0;
    const EtaSet e = reduced_coefficients(mu, delta, g);
    d.eta1 = e.eta1;
    d.eta2 = e.eta2;
    d.eta3 = e.eta3;
    return d;
}

double critical_pump(const PhysicalParams& p) {
    p.validate();
    return p.gamma_bar() * std::abs(p.gamma0_tilde()) / p.chi;
}

double classical_intensity(const PhysicalParams& p) {
    p.validate();
    const std::complex<double> z = p.gamma0_tilde() * p.gamma_tilde();
    const double chiE = p.chi * p.pump;
    // Branch point: the two roots meet at I1 = 0 when |chi E| = |z|.
    const double disc = chiE * chiE + z.real() * z.real() - std::norm(z);
    if (chiE <= std::abs(z) + 1e-12 * std::abs(z) || disc <= 0.0) return 0.0;
    const double root = (-z.real() + std::sqrt(disc)) / (p.chi * p.chi);
    return root > 0.0 ? root : 0.0;
}

StabilityResult stability_eigensystem(double mu, double delta) {
    StabilityResult r;
    const std::complex<double> s =
        std::sqrt(std::complex<double>(mu * mu - delta * delta, 0.0));
    r.lambda_plus = -1.0 + s;
    r.lambda_minus = -1.0 - s;
    const std::complex<double> idelta(0.0, delta);
    r.mode_plus = {std::complex<double>(mu, 0.0), idelta + s};
    r.mode_minus = {std::complex<double>(mu, 0.0), idelta - s};
    r.above_threshold = r.lambda_plus.real() > 0.0;
    return r;
}

}  // namespace opo
