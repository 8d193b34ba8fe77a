#pragma once

#include "opo/grid.hpp"
#include "opo/params.hpp"

namespace opo {

struct SelfConsistentSolution {
    double c = 0.0;           // <X.X> of the self-consistent Gaussian theory
    double eta1_prime = 0.0;  // eta1 + 2c
};

// Unique positive root of c = 1/(4*sqrt(2*(eta1 + 2c))) (eta3 = 1/2 line),
// i.e. 64c^3 + 32*eta1*c^2 - 1 = 0, to 1e-12. Requires eta1 >= 0.
SelfConsistentSolution gaussian_self_consistency(double eta1);

// Trace spectral density 1/(eta1' + eta2 k^2 + eta3 k^4).
// Throws std::domain_error when the denominator is not positive.
double far_field_corr(double k, double eta1_prime, double eta2, double eta3);

// Kelvin function kei(x) = -int_0^inf k J0(k x)/(1 + k^4) dk, x >= 0.
// Branches: power series (x <= 4), trapezoidal cosh-integral of K0 at the
// rotated argument (4 < x < 30), asymptotic K0 expansion (x >= 30);
// relative accuracy ~1e-12, contract 1e-10.
double kelvin_kei(double x);

// Trace-normalized near-field correlation
//   <X(r0).X(r0+r)> = -kei((eta1'/eta3)^{1/4} r) / (2*pi*sqrt(eta1'*eta3)).
// The r->0 limit is 1/(8*sqrt(eta1'*eta3)), which equals the self-consistent
// <X.X> on the eta3 = 1/2 line. Requires eta1' > 0, eta3 > 0, r >= 0.
double near_field_corr(double r, double eta1_prime, double eta3);

// Damped-quadrature slaving Y = laplacian(X)/(1+mu). Requires mu > -1.
void slaved_y(SpectralWorkspace& ws, const ComplexField& X, double mu,
              ComplexField& Y);

// Stationary functional H = sum dA [ eta1 X.X + (X.X)^2/2 ] +
// sum_k (eta2 k^2 + eta3 k^4) |X_hat|^2 dA. The noise-free reduced drift is
// -1/2 dH/dX, so H decreases along deterministic trajectories and the SDE's
// stationary law is exp(-H).
double gl_hamiltonian(SpectralWorkspace& ws, const VectorField& X,
                      const EtaSet& etas);
double gl_hamiltonian(SpectralWorkspace& ws, const ComplexField& X,
                      const EtaSet& etas);

}  // namespace opo
