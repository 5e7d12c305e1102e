#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace fockflow {

// Which coincidence observable a histogram holds. Distinct-port and
// same-port record pair delays behind a splitter; tcspc records single
// arrival times against the pulse clock.
enum class CorrelationMode { distinct_ports, same_port, tcspc };

// Uniformly binned density over a contiguous axis. bin_edges has one more
// entry than density; density[i] is the rate evaluated at the center of
// bin i, so integrals are midpoint sums. density stays nonnegative.
struct CorrelationHistogram {
    Eigen::ArrayXd bin_edges;
    Eigen::ArrayXd density;
    CorrelationMode mode = CorrelationMode::distinct_ports;
    bool warning = false;

    Eigen::Index size() const { return density.size(); }

    double bin_width() const {
        if (bin_edges.size() < 2) throw std::logic_error("CorrelationHistogram: missing bin edges");
        return bin_edges[1] - bin_edges[0];
    }

    double center(Eigen::Index i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }

    Eigen::ArrayXd centers() const {
        const Eigen::Index n = size();
        return 0.5 * (bin_edges.head(n) + bin_edges.tail(n));
    }

    void validate() const {
        if (density.size() < 1) throw std::logic_error("CorrelationHistogram: empty density");
        if (bin_edges.size() != density.size() + 1)
            throw std::logic_error("CorrelationHistogram: edge/density size mismatch");
        const double w = bin_edges[1] - bin_edges[0];
        if (!(w > 0)) throw std::logic_error("CorrelationHistogram: bins must increase");
        for (Eigen::Index i = 1; i + 1 < bin_edges.size(); ++i) {
            const double wi = bin_edges[i + 1] - bin_edges[i];
            if (std::abs(wi - w) > 1e-9 * w)
                throw std::logic_error("CorrelationHistogram: bins must be uniform");
        }
        if ((density < 0).any()) throw std::logic_error("CorrelationHistogram: negative density");
    }

    // Integral of the density over [lo, hi]; partially covered bins count
    // by their overlap fraction so window edges move continuously.
    double area(double lo, double hi) const {
        if (!(hi > lo)) return 0.0;
        double total = 0.0;
        for (Eigen::Index i = 0; i < size(); ++i) {
            const double a = std::max(lo, bin_edges[i]);
            const double b = std::min(hi, bin_edges[i + 1]);
            if (b > a) total += density[i] * (b - a);
        }
        return total;
    }

    double area() const { return density.sum() * bin_width(); }
};

// Edges of n uniform bins starting at lo. Each edge is formed with a
// single rounding so symmetric constructions stay exactly symmetric.
inline Eigen::ArrayXd uniform_bin_edges(double lo, double width, Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("uniform_bin_edges: need at least one bin");
    if (!(width > 0)) throw std::invalid_argument("uniform_bin_edges: width must be positive");
    Eigen::ArrayXd edges(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) edges[i] = lo + static_cast<double>(i) * width;
    return edges;
}

// Edges of n uniform bins centered on zero: edge i sits at (i - n/2) * width,
// so the axis is exactly antisymmetric and, for odd n, zero is a bin center.
inline Eigen::ArrayXd symmetric_bin_edges(double width, Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("symmetric_bin_edges: need at least one bin");
    if (!(width > 0)) throw std::invalid_argument("symmetric_bin_edges: width must be positive");
    Eigen::ArrayXd edges(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i)
        edges[i] = (static_cast<double>(i) - 0.5 * static_cast<double>(n)) * width;
    return edges;
}

// Full width at half maximum by linear interpolation around the peak bin.
// Requires the half level to be bracketed on both flanks.
inline double histogram_fwhm(const CorrelationHistogram& hist) {
    const Eigen::ArrayXd c = hist.centers();
    Eigen::Index peak = 0;
    hist.density.maxCoeff(&peak);
    const double half = 0.5 * hist.density[peak];
    if (!(half > 0)) throw std::domain_error("histogram_fwhm: empty histogram");

    Eigen::Index left = peak;
    while (left > 0 && hist.density[left] > half) --left;
    Eigen::Index right = peak;
    while (right + 1 < hist.size() && hist.density[right] > half) ++right;
    if (hist.density[left] > half || hist.density[right] > half)
        throw std::domain_error("histogram_fwhm: half maximum not bracketed");

    auto cross = [&](Eigen::Index lo_i, Eigen::Index hi_i) {
        const double y0 = hist.density[lo_i];
        const double y1 = hist.density[hi_i];
        if (y1 == y0) return c[lo_i];
        return c[lo_i] + (half - y0) / (y1 - y0) * (c[hi_i] - c[lo_i]);
    };
    const double t_left = (left == peak) ? c[peak] : cross(left, left + 1);
    const double t_right = (right == peak) ? c[peak] : cross(right, right - 1);
    return t_right - t_left;
}

// Center of the most populated bin.
inline double histogram_peak_position(const CorrelationHistogram& hist) {
    Eigen::Index peak = 0;
    hist.density.maxCoeff(&peak);
    return hist.center(peak);
}

// First moment of the density.
inline double histogram_centroid(const CorrelationHistogram& hist) {
    const double mass = hist.density.sum();
    if (!(mass > 0)) throw std::domain_error("histogram_centroid: empty histogram");
    return (hist.centers() * hist.density).sum() / mass;
}

}  // namespace fockflow
