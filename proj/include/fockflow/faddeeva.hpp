#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

namespace fockflow {

// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0, after the
// Poppe & Wijers rational evaluation: a truncated Taylor series near the
// origin and a Laplace continued fraction elsewhere, with region-dependent
// truncation depth. Relative accuracy ~1e-14 over the domain used here.
// The lower half plane is not needed (Voigt profiles have Im z = gamma > 0)
// and is rejected instead of silently transformed.
inline std::complex<double> faddeeva(std::complex<double> z) {
    const double factor = 1.12837916709551257388;  // 2/sqrt(pi)
    if (z.imag() < 0.0)
        throw std::domain_error("faddeeva: requires Im z >= 0");

    const double xabs = std::abs(z.real());
    const double yabs = z.imag();
    const double xr = xabs / 6.3;
    const double yr = yabs / 4.4;
    double qrho = xr * xr + yr * yr;

    const double xabsq = xabs * xabs;
    const double xquad = xabsq - yabs * yabs;
    const double yquad = 2.0 * xabs * yabs;

    double u, v;
    if (qrho < 0.085264) {
        // Taylor expansion of z*erfc(-iz)-ish series; depth tuned to qrho
        qrho = (1.0 - 0.85 * yr) * std::sqrt(qrho);
        const int n = static_cast<int>(std::lround(6.0 + 72.0 * qrho));
        int j = 2 * n + 1;
        double xsum = 1.0 / j;
        double ysum = 0.0;
        for (int i = n; i >= 1; --i) {
            j -= 2;
            const double xaux = (xsum * xquad - ysum * yquad) / i;
            ysum = (xsum * yquad + ysum * xquad) / i;
            xsum = xaux + 1.0 / j;
        }
        const double u1 = -factor * (xsum * yabs + ysum * xabs) + 1.0;
        const double v1 = factor * (xsum * xabs - ysum * yabs);
        const double daux = std::exp(-xquad);
        const double u2 = daux * std::cos(yquad);
        const double v2 = -daux * std::sin(yquad);
        u = u1 * u2 - v1 * v2;
        v = u1 * v2 + v1 * u2;
    } else {
        double h = 0.0, h2 = 0.0, qlambda = 0.0;
        int kapn = 0, nu;
        if (qrho > 1.0) {
            qrho = std::sqrt(qrho);
            nu = static_cast<int>(3.0 + 1442.0 / (26.0 * qrho + 77.0));
        } else {
            qrho = (1.0 - yr) * std::sqrt(1.0 - qrho);
            h = 1.88 * qrho;
            h2 = 2.0 * h;
            kapn = static_cast<int>(std::lround(7.0 + 34.0 * qrho));
            nu = static_cast<int>(std::lround(16.0 + 26.0 * qrho));
        }
        const bool series = h > 0.0;
        if (series) qlambda = std::pow(h2, kapn);

        double rx = 0.0, ry = 0.0, sx = 0.0, sy = 0.0;
        for (int n = nu; n >= 0; --n) {
            const double np1 = n + 1.0;
            double tx = yabs + h + np1 * rx;
            double ty = xabs - np1 * ry;
            const double c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if (series && n <= kapn) {
                tx = qlambda + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                qlambda /= h2;
            }
        }
        if (!series) {
            u = factor * rx;
            v = factor * ry;
        } else {
            u = factor * sx;
            v = factor * sy;
        }
        if (yabs == 0.0) u = std::exp(-xabsq);
    }

    // w(-x+iy) = conj(w(x+iy))
    if (z.real() < 0.0) v = -v;
    return {u, v};
}

// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x) = Re w(ix),
// for x >= 0. Feeds the closed-form visibility integral.
inline double erfcx_scaled(double x) {
    if (x < 0.0) throw std::domain_error("erfcx_scaled: requires x >= 0");
    return faddeeva({0.0, x}).real();
}

}  // namespace fockflow
