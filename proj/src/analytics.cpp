#include "opo/analytics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace opo {

SelfConsistentSolution gaussian_self_consistency(double eta1) {
    if (eta1 < 0.0)
        throw std::domain_error(
            "analytics: self-consistency defined on the eta1 >= 0 branch");
    // f(c) = 64c^3 + 32*eta1*c^2 - 1 is monotone on c > 0 with f(0) = -1 and
    // f(1/4) = 2*eta1 >= 0, so the root lies in (0, 1/4].
    const auto f = [eta1](double c) {
        return ((64.0 * c + 32.0 * eta1) * c) * c - 1.0;
    };
    double lo = 0.0, hi = 0.25;
    if (f(hi) == 0.0) return {hi, eta1 + 2.0 * hi};
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double c = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        const double df = (192.0 * c + 64.0 * eta1) * c;
        c -= f(c) / df;
    }
    return {c, eta1 + 2.0 * c};
}

double far_field_corr(double k, double eta1_prime, double eta2, double eta3) {
    const double k2 = k * k;
    const double denom = eta1_prime + eta2 * k2 + eta3 * k2 * k2;
    if (!(denom > 0.0))
        throw std::domain_error(
            "analytics: spectral denominator not positive (past the "
            "modulational instability)");
    return 1.0 / denom;
}

namespace {

// kei via its power series, paired with ber/bei. Good to ~1e-13 for x <= 4.
double kei_series(double x) {
    const double q = 0.25 * x * x;  // (x/2)^2
    const double q2 = q * q;        // (x/2)^4
    double ber = 0.0, bei = 0.0, corr = 0.0;
    double ber_t = 1.0;             // (x/2)^{4k} / ((2k)!)^2
    double bei_t = q;               // (x/2)^{4k+2} / ((2k+1)!)^2
    double psi = -std::numbers::egamma;  // psi(1)
    double sign = 1.0;
    for (int k = 0;; ++k) {
        ber += sign * ber_t;
        bei += sign * bei_t;
        // psi(2k+2) = -gamma + sum_{j=1}^{2k+1} 1/j
        psi += 1.0 / (2.0 * k + 1.0);
        corr += sign * bei_t * psi;
        psi += 1.0 / (2.0 * k + 2.0);
        if (bei_t < 1e-17 * (std::abs(corr) + 1.0) && k > 2) break;
        const double d1 = 2.0 * k + 1.0, d2 = 2.0 * k + 2.0;
        const double d3 = 2.0 * k + 3.0;
        ber_t *= q2 / (d1 * d1 * d2 * d2);
        bei_t *= q2 / (d2 * d2 * d3 * d3);
        sign = -sign;
    }
    return -std::log(0.5 * x) * bei - 0.25 * std::numbers::pi * ber + corr;
}

// K0(z) = int_0^inf exp(-z cosh t) dt by trapezoid; the integrand is analytic
// and decays double-exponentially, so a fixed step converges geometrically.
std::complex<double> k0_cosh_integral(std::complex<double> z) {
    const double h = 0.05;
    const double rez = z.real();
    // Truncate where |exp(-z cosh t)| < 1e-22.
    const double cosh_max = 22.0 * std::numbers::ln10 / rez;
    const double tmax = std::acosh(std::max(cosh_max, 2.0)) + h;
    std::complex<double> sum = 0.5 * std::exp(-z);
    for (double t = h; t <= tmax; t += h) sum += std::exp(-z * std::cosh(t));
    return h * sum;
}

// Asymptotic K0(z) ~ sqrt(pi/(2z)) e^{-z} sum_k u_k z^{-k}.
std::complex<double> k0_asymptotic(std::complex<double> z) {
    std::complex<double> term = 1.0, sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
        const double a = 2.0 * k - 1.0;
        term *= -a * a / (8.0 * k) / z;
        sum += term;
        if (std::abs(term) < 1e-18) break;
    }
    return std::sqrt(0.5 * std::numbers::pi / z) * std::exp(-z) * sum;
}

}  // namespace

double kelvin_kei(double x) {
    if (x < 0.0) throw std::domain_error("analytics: kei requires x >= 0");
    if (x == 0.0) return -0.25 * std::numbers::pi;
    if (x <= 4.0) return kei_series(x);
    const std::complex<double> rot(std::numbers::sqrt2 / 2.0,
                                   std::numbers::sqrt2 / 2.0);
    const std::complex<double> z = x * rot;  // ker + i*kei = K0(x e^{i pi/4})
    if (x < 30.0) return k0_cosh_integral(z).imag();
    return k0_asymptotic(z).imag();
}

double near_field_corr(double r, double eta1_prime, double eta3) {
    if (!(eta1_prime > 0.0))
        throw std::domain_error("analytics: near field requires eta1' > 0");
    if (!(eta3 > 0.0))
        throw std::domain_error("analytics: near field requires eta3 > 0");
    if (r < 0.0) throw std::domain_error("analytics: near field requires r >= 0");
    const double arg = std::pow(eta1_prime / eta3, 0.25) * r;
    return -kelvin_kei(arg) /
           (2.0 * std::numbers::pi * std::sqrt(eta1_prime * eta3));
}

void slaved_y(SpectralWorkspace& ws, const ComplexField& X, double mu,
              ComplexField& Y) {
    if (!(mu > -1.0))
        throw std::invalid_argument("analytics: slaved quadrature needs mu > -1");
    ws.laplacian(X, Y);
    const double scale = 1.0 / (1.0 + mu);
    for (auto& y : Y) y *= scale;
}

double gl_hamiltonian(SpectralWorkspace& ws, const ComplexField& X,
                      const EtaSet& etas) {
    const GridSpec& g = ws.spec();
    const int n = g.size();
    if (static_cast<int>(X.size()) != n)
        throw std::invalid_argument("analytics: field size mismatch");
    double local = 0.0, comp = 0.0;
    for (int i = 0; i < n; ++i) {
        const double I = std::norm(X[i]);
        const double v = etas.eta1 * I + 0.5 * I * I;
        const double y = v - comp;
        const double t = local + y;
        comp = (t - local) - y;
        local = t;
    }
    static thread_local ComplexField hat;
    ws.transform_forward(X, hat);
    double grad = 0.0;
    comp = 0.0;
    const auto& k2 = ws.k2();
    const auto& k4 = ws.k4();
    for (int i = 0; i < n; ++i) {
        const double v = (etas.eta2 * k2[i] + etas.eta3 * k4[i]) * std::norm(hat[i]);
        const double y = v - comp;
        const double t = grad + y;
        comp = (t - grad) - y;
        grad = t;
    }
    return g.cell_area() * (local + grad);
}

double gl_hamiltonian(SpectralWorkspace& ws, const VectorField& X,
                      const EtaSet& etas) {
    const int n = ws.spec().size();
    if (static_cast<int>(X.c1.size()) != n ||
        static_cast<int>(X.c2.size()) != n)
        throw std::invalid_argument("analytics: field size mismatch");
    // Pack the two real components into one complex field: the local terms
    // depend only on X.X = |Xc|^2, and the k-space cross terms cancel in pairs
    // (k, -k) because the multiplier is even and the components are real.
    ComplexField packed(n);
    for (int i = 0; i < n; ++i) packed[i] = Complex(X.c1[i], X.c2[i]);
    return gl_hamiltonian(ws, packed, etas);
}

}  // namespace opo
