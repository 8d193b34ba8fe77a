#pragma once

// Independent quadrature oracles used only by tests. These deliberately avoid
// the library's kei/near-field code paths: Bessel J0 comes from the standard
// library and the improper integrals are done by adaptive Simpson on
// oscillation half-periods with iterated averaging of the alternating tail.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double m, double b, double fa,
                                   double fm, double fb, double whole,
                                   double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double err = left + right - whole;
    if (depth <= 0 || std::abs(err) < 15.0 * tol)
        return left + right + err / 15.0;
    return adaptive_simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol,
                                depth - 1) +
           adaptive_simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol,
                                depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, 40);
}

// int_0^inf k J0(k r) / (e1p + e3 k^4) dk.
// r = 0 reduces to an elementary integral (u = k^2); r > 0 is integrated
// between multiples of pi/r and the alternating tail of segments is summed
// with iterated averaging (Euler transformation).
inline double hankel_trace_integral(double r, double e1p, double e3) {
    if (r == 0.0) {
        const double ratio = std::sqrt(e3 / e1p);
        const auto f = [&](double u) { return 0.5 / (e1p + e3 * u * u); };
        const double U = 400.0 / ratio;
        const double head = adaptive_simpson(f, 0.0, U, 1e-14);
        const double tail = 0.5 / std::sqrt(e1p * e3) *
                            (0.5 * std::numbers::pi - std::atan(U * ratio));
        return head + tail;
    }
    const auto f = [&](double k) {
        return k * std::cyl_bessel_j(0.0, k * r) / (e1p + e3 * k * k * k * k);
    };
    const double dk = std::numbers::pi / r;
    // Head: integrate past the spectral peak before relying on alternation.
    const double kpeak = std::pow(e1p / e3, 0.25);
    const int head_segs = static_cast<int>(std::ceil((2.0 * kpeak + dk) / dk));
    double total = 0.0;
    for (int s = 0; s < head_segs; ++s)
        total += adaptive_simpson(f, s * dk, (s + 1) * dk, 1e-14);
    // Alternating tail: partial sums, then iterated averaging.
    const int nseg = 80;
    std::vector<double> partial(nseg);
    double acc = total;
    for (int s = 0; s < nseg; ++s) {
        const double a = (head_segs + s) * dk, b = (head_segs + s + 1) * dk;
        acc += adaptive_simpson(f, a, b, 1e-15);
        partial[s] = acc;
    }
    std::vector<double> row = partial;
    for (int level = 0; level < 40 && row.size() > 1; ++level) {
        std::vector<double> next(row.size() - 1);
        for (size_t i = 0; i + 1 < row.size(); ++i)
            next[i] = 0.5 * (row[i] + row[i + 1]);
        row.swap(next);
    }
    return row.back();
}

// Oracle for the Kelvin function via its defining Hankel integral.
inline double kei_integral(double x) {
    return -hankel_trace_integral(x, 1.0, 1.0);
}

}  // namespace oracle
