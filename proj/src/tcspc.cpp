#include "fockflow/tcspc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "fockflow/constants.hpp"
#include "fockflow/quadrature.hpp"
#include "fockflow/wavepacket.hpp"

namespace fockflow {

namespace {

using Cplx = std::complex<double>;

Eigen::FFT<double>& fft_engine() {
    static thread_local Eigen::FFT<double> engine;
    return engine;
}

Eigen::VectorXcd forward_fft(const Eigen::ArrayXcd& x) {
    Eigen::VectorXcd out(x.size());
    fft_engine().fwd(out, x.matrix().eval());
    return out;
}

Eigen::VectorXcd backward_fft(const Eigen::VectorXcd& x) {
    Eigen::VectorXcd out(x.size());
    fft_engine().inv(out, x);
    return out;
}

// Unit-mass Gaussian kernel stored in wrapped order (center at index zero),
// so circular convolution needs no shifting.
Eigen::ArrayXcd wrapped_gaussian(Eigen::Index n, double dt, double fwhm) {
    const double s = fwhm / std::sqrt(8.0 * std::log(2.0));
    Eigen::ArrayXd kernel(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double t = static_cast<double>(std::min(j, n - j)) * dt;
        kernel[j] = std::exp(-0.5 * t * t / (s * s));
    }
    kernel /= kernel.sum();
    return kernel.cast<Cplx>();
}

struct EnsembleTraces {
    Eigen::ArrayXd one;      // mean arrival density, full lattice
    Eigen::ArrayXd two_raw;  // unnormalized heralded pair density
    double nbar = 0.0;       // mean survival
    double weight = 0.0;     // integral of two_raw
};

// The packets traverse the response when the interferometer routes them
// through the cell, free space of the same length otherwise (keeping the
// transit delay so on/off traces stay comparable).
FrequencyGrid resolve_grid(const EmitterModel& emitter, const InterferometerConfig& config,
                           const OpticalResponse* response, const char* who) {
    if (config.vapor_in_path && response == nullptr)
        throw std::invalid_argument(std::string(who) +
                                    ": vapor_in_path requires an optical response");
    return response != nullptr ? response->grid : default_grid(emitter.carrier_center);
}

EnsembleTraces build_traces(const EmitterModel& emitter, Polarization polarization,
                            const FrequencyGrid& grid, const OpticalResponse& response,
                            double length, int order, bool need_two) {
    if (order < 1)
        throw std::invalid_argument("tcspc: quadrature order must be >= 1");
    const double sigma = emitter.diffusion_sigma;
    const GaussHermiteRule rule = sigma > 0 ? gauss_hermite(order) : gauss_hermite(1);
    const int K = rule.order();
    const Eigen::Index n = grid.count();
    const double dt = grid.time_step();

    std::vector<Eigen::ArrayXcd> profiles;
    profiles.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        PhotonWavepacket wp = lorentzian_amplitude(
            grid, emitter.decay, emitter.carrier_center + sigma * rule.nodes[k], 0.0);
        wp = propagate(wp, response, length);
        profiles.push_back(to_time_domain(wp));
    }

    EnsembleTraces traces;
    traces.one = Eigen::ArrayXd::Zero(n);
    Eigen::ArrayXd survival(K);
    for (int k = 0; k < K; ++k) {
        const Eigen::ArrayXd intensity = profiles[static_cast<std::size_t>(k)].abs2();
        traces.one += rule.weights[k] * intensity;
        survival[k] = intensity.sum() * dt;
    }
    traces.nbar = (rule.weights * survival).sum();
    if (!need_two) return traces;

    if (polarization == Polarization::orthogonal) {
        // distinguishable photons never bunch coherently: the heralded
        // trace is the plain mixture and the weight has no overlap part
        traces.two_raw = traces.nbar * traces.one;
        traces.weight = traces.nbar * traces.nbar;
        return traces;
    }

    // work on the intensity support; the cross term vanishes with it
    const double peak = traces.one.maxCoeff();
    Eigen::Index lo = 0;
    Eigen::Index hi = n;
    while (lo < hi && traces.one[lo] <= 1e-12 * peak) ++lo;
    while (hi > lo && traces.one[hi - 1] <= 1e-12 * peak) --hi;
    lo = std::max<Eigen::Index>(0, lo - 64);
    hi = std::min<Eigen::Index>(n, hi + 64);
    const Eigen::Index m = hi - lo;

    Eigen::MatrixXcd packet_rows(K, m);
    for (int k = 0; k < K; ++k)
        packet_rows.row(k) = profiles[static_cast<std::size_t>(k)].segment(lo, m).matrix();

    // pair overlaps O(a, b) = integral chi_a* chi_b dt (Hermitian)
    Eigen::MatrixXcd overlap(K, K);
    for (int a = 0; a < K; ++a) {
        for (int b = a; b < K; ++b) {
            const Cplx o =
                (packet_rows.row(a).conjugate().cwiseProduct(packet_rows.row(b))).sum() *
                dt;
            overlap(a, b) = o;
            overlap(b, a) = std::conj(o);
        }
    }

    // cross(t) = Re sum_ab w_a w_b chi_a(t) chi_b*(t) O(a, b)
    const Eigen::VectorXd weights = rule.weights.matrix();
    const Eigen::MatrixXcd weighted = weights.asDiagonal() * packet_rows;
    const Eigen::MatrixXcd mixed = overlap.transpose() * weighted;
    const Eigen::ArrayXd cross = weighted.conjugate()
                                     .cwiseProduct(mixed)
                                     .colwise()
                                     .sum()
                                     .real()
                                     .transpose()
                                     .array();

    double overlap_mass = 0.0;
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b)
            overlap_mass +=
                rule.weights[a] * rule.weights[b] * std::norm(overlap(a, b));

    traces.two_raw = traces.nbar * traces.one;
    traces.two_raw.segment(lo, m) += cross;
    traces.weight = traces.nbar * traces.nbar + overlap_mass;
    return traces;
}

CorrelationHistogram crop_to_window(const Eigen::ArrayXd& trace, const FrequencyGrid& grid,
                                    double window_lo, double window_hi, const char* who) {
    if (!(window_lo < window_hi))
        throw std::invalid_argument(std::string(who) + ": empty time window");
    const double dt = grid.time_step();
    const Eigen::Index half = grid.count() / 2;
    const Eigen::Index j_lo =
        std::max<Eigen::Index>(0, half + static_cast<Eigen::Index>(std::ceil(window_lo / dt)));
    const Eigen::Index j_hi = std::min<Eigen::Index>(
        grid.count() - 1, half + static_cast<Eigen::Index>(std::floor(window_hi / dt)));
    if (j_hi < j_lo)
        throw std::invalid_argument(std::string(who) + ": window misses the lattice");

    CorrelationHistogram hist;
    hist.mode = CorrelationMode::tcspc;
    const Eigen::Index nb = j_hi - j_lo + 1;
    hist.bin_edges =
        uniform_bin_edges(grid.time(j_lo) - 0.5 * dt, dt, nb);
    hist.density = trace.segment(j_lo, nb).max(0.0);
    return hist;
}

CorrelationHistogram tcspc_trace(const EmitterModel& emitter,
                                 const InterferometerConfig& config,
                                 const OpticalResponse* response, double length,
                                 const DetectorModel& detector, double window_lo,
                                 double window_hi, int order, bool two_photon,
                                 const char* who) {
    emitter.validate();
    config.validate();
    detector.validate();
    const FrequencyGrid grid = resolve_grid(emitter, config, response, who);
    const OpticalResponse vacuum = vacuum_response(grid);
    const OpticalResponse& effective = config.vapor_in_path ? *response : vacuum;
    EnsembleTraces traces = build_traces(emitter, config.polarization, grid, effective,
                                         length, order, two_photon);
    Eigen::ArrayXd trace =
        two_photon ? Eigen::ArrayXd(traces.two_raw / traces.weight) : traces.one;
    if (detector.jitter_fwhm > 0)
        trace = convolve_gaussian(trace, grid.time_step(), detector.jitter_fwhm);
    return crop_to_window(trace, grid, window_lo, window_hi, who);
}

}  // namespace

CorrelationHistogram tcspc_one_photon(const EmitterModel& emitter,
                                      const InterferometerConfig& config,
                                      const OpticalResponse* response, double length,
                                      const DetectorModel& detector, double window_lo,
                                      double window_hi, int quadrature_order) {
    return tcspc_trace(emitter, config, response, length, detector, window_lo, window_hi,
                       quadrature_order, false, "tcspc_one_photon");
}

CorrelationHistogram tcspc_two_photon(const EmitterModel& emitter,
                                      const InterferometerConfig& config,
                                      const OpticalResponse* response, double length,
                                      const DetectorModel& detector, double window_lo,
                                      double window_hi, int quadrature_order) {
    return tcspc_trace(emitter, config, response, length, detector, window_lo, window_hi,
                       quadrature_order, true, "tcspc_two_photon");
}

double tcspc_herald_weight(const EmitterModel& emitter, const InterferometerConfig& config,
                           const OpticalResponse* response, double length,
                           int quadrature_order) {
    emitter.validate();
    config.validate();
    const FrequencyGrid grid = resolve_grid(emitter, config, response, "tcspc_herald_weight");
    const OpticalResponse vacuum = vacuum_response(grid);
    const OpticalResponse& effective = config.vapor_in_path ? *response : vacuum;
    const EnsembleTraces traces = build_traces(emitter, config.polarization, grid,
                                               effective, length, quadrature_order, true);
    return traces.weight;
}

Eigen::ArrayXd convolve_gaussian(const Eigen::ArrayXd& values, double dt, double fwhm) {
    if (!(dt > 0)) throw std::invalid_argument("convolve_gaussian: dt must be positive");
    if (fwhm <= 0) return values;
    const Eigen::VectorXcd h = forward_fft(wrapped_gaussian(values.size(), dt, fwhm));
    const Eigen::VectorXcd f = forward_fft(values.cast<Cplx>());
    return backward_fft((f.array() * h.array()).matrix()).array().real();
}

Eigen::ArrayXd deconvolve_gaussian(const Eigen::ArrayXd& values, double dt, double fwhm,
                                   double epsilon) {
    if (!(dt > 0)) throw std::invalid_argument("deconvolve_gaussian: dt must be positive");
    if (!(epsilon > 0))
        throw std::invalid_argument("deconvolve_gaussian: epsilon must be positive");
    if (fwhm <= 0) return values;
    const Eigen::VectorXcd h = forward_fft(wrapped_gaussian(values.size(), dt, fwhm));
    const Eigen::VectorXcd f = forward_fft(values.cast<Cplx>());
    const Eigen::ArrayXcd filt =
        f.array() * h.array().conjugate() / (h.array().abs2() + epsilon);
    return backward_fft(filt.matrix()).array().real();
}

double fit_exponential_decay(const Eigen::ArrayXd& t, const Eigen::ArrayXd& y,
                             double t_lo, double t_hi) {
    if (t.size() != y.size())
        throw std::invalid_argument("fit_exponential_decay: axis/value size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        if (t[i] <= t_lo || t[i] >= t_hi || !(y[i] > 0)) continue;
        const double ly = std::log(y[i]);
        sx += t[i];
        sy += ly;
        sxx += t[i] * t[i];
        sxy += t[i] * ly;
        ++count;
    }
    if (count < 8)
        throw std::domain_error("fit_exponential_decay: too few positive samples in window");
    const double nf = static_cast<double>(count);
    const double slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
    if (!(slope < 0))
        throw std::domain_error("fit_exponential_decay: window shows no decay");
    return -1.0 / slope;
}

}  // namespace fockflow
