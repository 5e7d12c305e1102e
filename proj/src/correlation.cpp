#include "fockflow/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "fockflow/constants.hpp"
#include "fockflow/faddeeva.hpp"
#include "fockflow/quadrature.hpp"
#include "fockflow/sampling.hpp"

namespace fockflow {

namespace {

using Cplx = std::complex<double>;

Eigen::FFT<double>& fft_engine() {
    static thread_local Eigen::FFT<double> engine;
    return engine;
}

Eigen::Index next_pow2(Eigen::Index n) {
    Eigen::Index p = 1;
    while (p < n) p <<= 1;
    return p;
}

Eigen::VectorXcd padded_fft(const Eigen::ArrayXcd& x, Eigen::Index nfft) {
    Eigen::VectorXcd in = Eigen::VectorXcd::Zero(nfft);
    in.head(x.size()) = x.matrix();
    Eigen::VectorXcd out(nfft);
    fft_engine().fwd(out, in);
    return out;
}

Eigen::VectorXcd inverse_fft(const Eigen::VectorXcd& spectrum) {
    Eigen::VectorXcd out(spectrum.size());
    fft_engine().inv(out, spectrum);
    return out;
}

// Lags -lagmax..lagmax of a circular correlation, stored at index lag+lagmax
// and scaled by dt so entries approximate continuum integrals.
Eigen::ArrayXd extract_lags(const Eigen::VectorXcd& lat, Eigen::Index lagmax, double dt) {
    const Eigen::Index nfft = lat.size();
    Eigen::ArrayXd out(2 * lagmax + 1);
    for (Eigen::Index k = -lagmax; k <= lagmax; ++k)
        out[k + lagmax] = lat[((k % nfft) + nfft) % nfft].real() * dt;
    return out;
}

struct LagCorrelations {
    Eigen::Index lagmax = 0;
    Eigen::ArrayXd t_part;  // sum_m I1[m+k] I2[m] dt
    Eigen::ArrayXd c_part;  // Re sum_m g[m+k] g*[m] dt with g = x1 conj(x2)
};

// Wrap-free lattice correlations of a packet pair: zero padding to
// nfft >= m + lagmax + 1 keeps every requested lag clear of circular
// aliasing, so the entries equal the plain (non-circular) sums.
LagCorrelations lattice_pair(const Eigen::ArrayXcd& x1, const Eigen::ArrayXcd& x2,
                             double dt, Eigen::Index lagmax) {
    const Eigen::Index m = x1.size();
    const Eigen::Index nfft = next_pow2(m + lagmax + 1);
    const Eigen::VectorXcd f1 = padded_fft(x1.abs2().cast<Cplx>(), nfft);
    const Eigen::VectorXcd f2 = padded_fft(x2.abs2().cast<Cplx>(), nfft);
    const Eigen::VectorXcd tlat =
        inverse_fft((f1.array() * f2.array().conjugate()).matrix());
    const Eigen::VectorXcd fg = padded_fft(x1 * x2.conjugate(), nfft);
    const Eigen::VectorXcd clat = inverse_fft(fg.array().abs2().cast<Cplx>().matrix());

    LagCorrelations out;
    out.lagmax = lagmax;
    out.t_part = extract_lags(tlat, lagmax, dt);
    out.c_part = extract_lags(clat, lagmax, dt);
    return out;
}

struct CropWindow {
    Eigen::Index lo = 0;
    Eigen::Index hi = 0;  // half open
};

// Indices where the intensity exceeds rel * peak, widened by margin. The
// discarded tail changes correlation entries by at most rel relatively.
CropWindow crop_support(const Eigen::ArrayXd& intensity, double rel, Eigen::Index margin,
                        const char* who) {
    const double peak = intensity.maxCoeff();
    if (!(peak > 0)) throw std::domain_error(std::string(who) + ": zero intensity");
    const double threshold = rel * peak;
    Eigen::Index lo = 0;
    Eigen::Index hi = intensity.size();
    while (lo < hi && intensity[lo] <= threshold) ++lo;
    while (hi > lo && intensity[hi - 1] <= threshold) --hi;
    lo = std::max<Eigen::Index>(0, lo - margin);
    hi = std::min<Eigen::Index>(intensity.size(), hi + margin);
    return {lo, hi};
}

// Linear interpolation over the lag axis of extract_lags output; arguments
// beyond the stored range clamp to the edge entries (callers size lagmax so
// those entries are already negligible).
double lag_interp(const Eigen::ArrayXd& arr, Eigen::Index lagmax, double kf) {
    const double lim = static_cast<double>(lagmax);
    kf = std::clamp(kf, -lim, lim);
    const double fl = std::floor(kf);
    const Eigen::Index i0 = static_cast<Eigen::Index>(fl) + lagmax;
    const double f = kf - fl;
    if (i0 + 1 >= arr.size()) return arr[arr.size() - 1];
    return arr[i0] * (1.0 - f) + arr[i0 + 1] * f;
}

void check_edges(const Eigen::ArrayXd& edges, const char* who) {
    if (edges.size() < 2)
        throw std::invalid_argument(std::string(who) + ": need at least one bin");
    const double w = edges[1] - edges[0];
    if (!(w > 0)) throw std::invalid_argument(std::string(who) + ": bin edges must increase");
    for (Eigen::Index i = 1; i + 1 < edges.size(); ++i)
        if (std::abs(edges[i + 1] - edges[i] - w) > 1e-9 * w)
            throw std::invalid_argument(std::string(who) + ": bins must be uniform");
}

Eigen::ArrayXd edge_centers(const Eigen::ArrayXd& edges) {
    const Eigen::Index n = edges.size() - 1;
    return 0.5 * (edges.head(n) + edges.tail(n));
}

enum class CrossSign { minus, plus, none };

CrossSign cross_sign(CorrelationMode mode, Polarization polarization) {
    if (polarization == Polarization::orthogonal) return CrossSign::none;
    return mode == CorrelationMode::distinct_ports ? CrossSign::minus : CrossSign::plus;
}

double combine(double t1, double t2, double c, CrossSign sign) {
    switch (sign) {
        case CrossSign::minus: return 0.25 * (t1 + t2 - 2.0 * c);
        case CrossSign::plus: return 0.25 * (t1 + t2 + 2.0 * c);
        default: return 0.25 * (t1 + t2);
    }
}

// Coincidence density for one fixed packet pair behind a balanced splitter.
CorrelationHistogram pair_g2(const PhotonWavepacket& a, const PhotonWavepacket& b,
                             const Eigen::ArrayXd& edges, CrossSign sign,
                             CorrelationMode mode, const char* who) {
    if (!(a.grid == b.grid))
        throw std::logic_error(std::string(who) + ": packets must share a grid");
    check_edges(edges, who);

    CorrelationHistogram hist;
    hist.bin_edges = edges;
    hist.mode = mode;
    const Eigen::ArrayXd centers = edge_centers(edges);
    const Eigen::Index nb = centers.size();
    hist.density.resize(nb);

    if (a.analytic_lorentzian && b.analytic_lorentzian) {
        // continuum closed forms: exact, and exactly zero for identical
        // packets on distinct ports
        const double dn = a.carrier - b.carrier;
        for (Eigen::Index i = 0; i < nb; ++i) {
            const double c = centers[i];
            const double t1 = pair_t_overlap(c, a.decay, a.emission_time, b.decay,
                                             b.emission_time);
            const double t2 = pair_t_overlap(-c, a.decay, a.emission_time, b.decay,
                                             b.emission_time);
            double cr = 0.0;
            if (sign != CrossSign::none)
                cr = pair_cross_term(c, a.decay, a.emission_time, b.decay,
                                     b.emission_time, dn)
                         .real();
            hist.density[i] = std::max(0.0, combine(t1, t2, cr, sign));
        }
        return hist;
    }

    const double dt = a.grid.time_step();
    const Eigen::ArrayXcd xa = to_time_domain(a);
    const Eigen::ArrayXcd xb = to_time_domain(b);
    const double cmax = centers.abs().maxCoeff();
    const Eigen::Index lagmax = static_cast<Eigen::Index>(std::ceil(cmax / dt)) + 16;
    const CropWindow w = crop_support(xa.abs2() + xb.abs2(), 1e-6, lagmax + 16, who);
    const Eigen::Index m = w.hi - w.lo;
    const LagCorrelations lat =
        lattice_pair(xa.segment(w.lo, m), xb.segment(w.lo, m), dt, lagmax);

    for (Eigen::Index i = 0; i < nb; ++i) {
        const double kf = centers[i] / dt;
        const double t1 = lag_interp(lat.t_part, lagmax, kf);
        const double t2 = lag_interp(lat.t_part, lagmax, -kf);
        const double cr =
            sign == CrossSign::none ? 0.0 : lag_interp(lat.c_part, lagmax, kf);
        hist.density[i] = std::max(0.0, combine(t1, t2, cr, sign));
    }
    return hist;
}

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(constants::two_pi);
}

// Conditional means of K equal-probability strata of a standard normal:
// E[X | stratum k] = K (pdf(z_k) - pdf(z_{k+1})) with z_k the k/K quantile.
std::vector<double> strata_means(int strata) {
    std::vector<double> rep(static_cast<std::size_t>(strata), 0.0);
    if (strata < 2) return rep;
    double prev = 0.0;  // pdf at the -inf boundary
    for (int k = 0; k < strata; ++k) {
        const double next =
            (k + 1 == strata) ? 0.0
                              : normal_pdf(normal_quantile(double(k + 1) / strata));
        rep[static_cast<std::size_t>(k)] = strata * (prev - next);
        prev = next;
    }
    return rep;
}

// Propagated packet bank over the diffusion law: one packet per carrier
// offset, all on the response grid (or free space when response is null).
std::vector<Eigen::ArrayXcd> packet_bank(const FrequencyGrid& grid,
                                         const EmitterModel& emitter,
                                         const std::vector<double>& offsets,
                                         double emission_time,
                                         const OpticalResponse* response,
                                         double length) {
    std::vector<Eigen::ArrayXcd> profiles;
    profiles.reserve(offsets.size());
    for (const double off : offsets) {
        PhotonWavepacket wp = lorentzian_amplitude(
            grid, emitter.decay, emitter.carrier_center + off, emission_time);
        if (response != nullptr) wp = propagate(wp, *response, length);
        profiles.push_back(to_time_domain(wp));
    }
    return profiles;
}

}  // namespace

double pair_t_overlap(double delay, double tau1, double t01, double tau2, double t02) {
    if (!(tau1 > 0) || !(tau2 > 0))
        throw std::domain_error("pair_t_overlap: lifetimes must be positive");
    const double lb = std::max(t02, t01 - delay);
    return std::exp(-(lb + delay - t01) / tau1 - (lb - t02) / tau2) / (tau1 + tau2);
}

std::complex<double> pair_cross_term(double delay, double tau1, double t01, double tau2,
                                     double t02, double carrier_diff) {
    if (!(tau1 > 0) || !(tau2 > 0))
        throw std::domain_error("pair_cross_term: lifetimes must be positive");
    const double lb = std::max(t01, t02) + std::max(0.0, -delay);
    const double expo = (lb + delay - t01) / (2.0 * tau1) + (lb - t01) / (2.0 * tau1) +
                        (lb + delay - t02) / (2.0 * tau2) + (lb - t02) / (2.0 * tau2);
    return std::polar(std::exp(-expo) / (tau1 + tau2), -carrier_diff * delay);
}

CorrelationHistogram g2_distinct(const PhotonWavepacket& a, const PhotonWavepacket& b,
                                 const Eigen::ArrayXd& bin_edges) {
    return pair_g2(a, b, bin_edges, CrossSign::minus, CorrelationMode::distinct_ports,
                   "g2_distinct");
}

CorrelationHistogram g2_same(const PhotonWavepacket& a, const PhotonWavepacket& b,
                             const Eigen::ArrayXd& bin_edges) {
    return pair_g2(a, b, bin_edges, CrossSign::plus, CorrelationMode::same_port,
                   "g2_same");
}

CorrelationHistogram g2_orthogonal(const PhotonWavepacket& a, const PhotonWavepacket& b,
                                   const Eigen::ArrayXd& bin_edges) {
    return pair_g2(a, b, bin_edges, CrossSign::none, CorrelationMode::distinct_ports,
                   "g2_orthogonal");
}

double ensemble_g2_closed_form(double delay, double tau, double sigma,
                               CorrelationMode mode) {
    if (!(tau > 0)) throw std::domain_error("ensemble_g2_closed_form: tau must be positive");
    if (!(sigma >= 0))
        throw std::domain_error("ensemble_g2_closed_form: sigma must be nonnegative");
    if (mode == CorrelationMode::tcspc)
        throw std::invalid_argument("ensemble_g2_closed_form: tcspc is not a pair mode");
    const double envelope = std::exp(-std::abs(delay) / tau) / (4.0 * tau);
    const double phi = std::exp(-sigma * sigma * delay * delay);
    return mode == CorrelationMode::distinct_ports ? envelope * (1.0 - phi)
                                                   : envelope * (1.0 + phi);
}

double visibility_closed_form(double sigma, double tau) {
    if (!(tau > 0)) throw std::domain_error("visibility_closed_form: tau must be positive");
    if (!(sigma >= 0))
        throw std::domain_error("visibility_closed_form: sigma must be nonnegative");
    if (sigma == 0.0) return 1.0;
    const double u = 1.0 / (2.0 * sigma * tau);
    return std::sqrt(constants::pi) * u * erfcx_scaled(u);
}

double solve_sigma_for_visibility(double target, double tau) {
    if (!(tau > 0))
        throw std::domain_error("solve_sigma_for_visibility: tau must be positive");
    if (!(target > 0 && target <= 1))
        throw std::invalid_argument(
            "solve_sigma_for_visibility: target visibility must lie in (0, 1]");
    if (target == 1.0) return 0.0;

    double lo = 0.0;
    double hi = 1.0 / tau;
    for (int i = 0; i < 200 && visibility_closed_form(hi, tau) >= target; ++i) hi *= 2.0;
    // V(sigma) decreases monotonically from 1, so bisection converges
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (visibility_closed_form(mid, tau) >= target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

CorrelationHistogram ensemble_g2_numeric(const EmitterModel& emitter,
                                         const InterferometerConfig& config,
                                         CorrelationMode mode,
                                         const Eigen::ArrayXd& bin_edges,
                                         std::int64_t n_samples, std::uint64_t seed,
                                         const OpticalResponse* response, double length) {
    emitter.validate();
    config.validate();
    if (mode == CorrelationMode::tcspc)
        throw std::invalid_argument("ensemble_g2_numeric: tcspc is not a pair mode");
    if (n_samples < 1000)
        throw std::invalid_argument(
            "ensemble_g2_numeric: at least 1000 samples are required");
    if (config.vapor_in_path && response == nullptr)
        throw std::invalid_argument(
            "ensemble_g2_numeric: vapor_in_path requires an optical response");
    check_edges(bin_edges, "ensemble_g2_numeric");

    CorrelationHistogram hist;
    hist.bin_edges = bin_edges;
    hist.mode = mode;
    const Eigen::ArrayXd centers = edge_centers(bin_edges);
    const Eigen::Index nb = centers.size();
    const CrossSign sign = cross_sign(mode, config.polarization);
    const double tau = emitter.decay;
    const double sigma = emitter.diffusion_sigma;
    const double inv_n = 1.0 / static_cast<double>(n_samples);

    if (!config.vapor_in_path) {
        // Free-space packets share one envelope; only the carrier difference
        // delta = sqrt(2) sigma z survives in the pair density, so each
        // stratified sample contributes cos(delta t). The symmetric mean
        // coordinate integrates out exactly.
        const Eigen::ArrayXd envelope = (-centers.abs() / tau).exp() / (4.0 * tau);
        if (sign == CrossSign::none) {
            hist.density = envelope;
            return hist;
        }
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(nb);
        for (std::int64_t j = 0; j < n_samples; ++j) {
            RandomStream stream(seed, static_cast<std::uint64_t>(j));
            double p = (static_cast<double>(j) + stream.uniform()) * inv_n;
            p = std::clamp(p, 1e-18, 1.0 - 1e-18);
            const double dnu = std::sqrt(2.0) * sigma * normal_quantile(p);
            acc += (dnu * centers).cos();
        }
        acc *= inv_n;
        const double s = (sign == CrossSign::minus) ? -1.0 : 1.0;
        hist.density = envelope * (1.0 + s * acc);
        hist.density = hist.density.max(0.0);
        return hist;
    }

    // Vapor path: propagate a bank of carrier strata once, then correlate
    // sampled pairs on the lattice. 128 is a power of two, so masking the
    // raw bits gives an unbiased stratum index.
    const FrequencyGrid& grid = response->grid;
    const double dt = grid.time_step();
    const int strata = sigma > 0 ? 128 : 1;
    std::vector<double> offsets = strata_means(strata);
    for (double& off : offsets) off *= sigma;
    const std::vector<Eigen::ArrayXcd> bank =
        packet_bank(grid, emitter, offsets, 0.0, response, length);

    Eigen::ArrayXd mean_intensity = Eigen::ArrayXd::Zero(grid.count());
    for (const auto& profile : bank) mean_intensity += profile.abs2();
    mean_intensity /= static_cast<double>(strata);

    const double cmax = centers.abs().maxCoeff();
    const Eigen::Index lagmax = static_cast<Eigen::Index>(std::ceil(cmax / dt)) + 16;
    const CropWindow w =
        crop_support(mean_intensity, 1e-10, lagmax + 16, "ensemble_g2_numeric");
    const Eigen::Index m = w.hi - w.lo;
    const Eigen::Index nfft = next_pow2(m + lagmax + 1);

    std::vector<Eigen::ArrayXcd> sliced(bank.size());
    std::vector<Eigen::VectorXcd> intensity_fft(bank.size());
    for (std::size_t k = 0; k < bank.size(); ++k) {
        sliced[k] = bank[k].segment(w.lo, m);
        intensity_fft[k] = padded_fft(sliced[k].abs2().cast<Cplx>(), nfft);
    }

    Eigen::ArrayXcd t_spec = Eigen::ArrayXcd::Zero(nfft);
    Eigen::ArrayXd c_spec = Eigen::ArrayXd::Zero(nfft);
    const std::uint32_t mask = static_cast<std::uint32_t>(strata - 1);
    for (std::int64_t j = 0; j < n_samples; ++j) {
        RandomStream stream(seed, static_cast<std::uint64_t>(j));
        const std::size_t k1 = stream.bits32() & mask;
        const std::size_t k2 = stream.bits32() & mask;
        t_spec += intensity_fft[k1].array() * intensity_fft[k2].array().conjugate();
        if (sign != CrossSign::none) {
            const Eigen::VectorXcd fg =
                padded_fft(sliced[k1] * sliced[k2].conjugate(), nfft);
            c_spec += fg.array().abs2();
        }
    }
    const Eigen::ArrayXd t_part =
        extract_lags(inverse_fft((t_spec * inv_n).matrix()), lagmax, dt);
    Eigen::ArrayXd c_part = Eigen::ArrayXd::Zero(2 * lagmax + 1);
    if (sign != CrossSign::none)
        c_part = extract_lags(inverse_fft((c_spec * inv_n).cast<Cplx>().matrix()),
                              lagmax, dt);

    hist.density.resize(nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
        const double kf = centers[i] / dt;
        const double t1 = lag_interp(t_part, lagmax, kf);
        const double t2 = lag_interp(t_part, lagmax, -kf);
        const double cr = sign == CrossSign::none ? 0.0 : lag_interp(c_part, lagmax, kf);
        hist.density[i] = std::max(0.0, combine(t1, t2, cr, sign));
    }
    return hist;
}

CorrelationHistogram ensemble_g2_kernel(const EmitterModel& emitter, CorrelationMode mode,
                                        Polarization polarization,
                                        const OpticalResponse* response, double length,
                                        double lag_half_span, int quadrature_order) {
    emitter.validate();
    if (mode == CorrelationMode::tcspc)
        throw std::invalid_argument("ensemble_g2_kernel: tcspc is not a pair mode");
    if (quadrature_order < 1)
        throw std::invalid_argument("ensemble_g2_kernel: quadrature order must be >= 1");

    const FrequencyGrid grid =
        response != nullptr ? response->grid : default_grid(emitter.carrier_center);
    const double dt = grid.time_step();
    if (lag_half_span <= 0) lag_half_span = 0.55 * emitter.repetition_period;
    const Eigen::Index lagmax =
        static_cast<Eigen::Index>(std::ceil(lag_half_span / dt)) + 4;
    const double sigma = emitter.diffusion_sigma;
    const CrossSign sign = cross_sign(mode, polarization);

    // The node set resolves the diffusion phase exp(i sigma x delay) only
    // while sigma * delay stays below roughly 0.22 per node; past that the
    // discrete average aliases instead of decaying.
    if (sign != CrossSign::none &&
        sigma * static_cast<double>(lagmax) * dt > 0.225 * quadrature_order)
        throw std::invalid_argument(
            "ensemble_g2_kernel: sigma * lag exceeds the quadrature validity; raise "
            "the order or use the sampled estimator");

    const GaussHermiteRule rule =
        sigma > 0 ? gauss_hermite(quadrature_order) : gauss_hermite(1);
    const int K = rule.order();
    std::vector<double> offsets(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) offsets[static_cast<std::size_t>(k)] = sigma * rule.nodes[k];
    const std::vector<Eigen::ArrayXcd> bank =
        packet_bank(grid, emitter, offsets, 0.0, response, length);

    Eigen::ArrayXd mean_intensity = Eigen::ArrayXd::Zero(grid.count());
    for (int k = 0; k < K; ++k)
        mean_intensity += rule.weights[k] * bank[static_cast<std::size_t>(k)].abs2();

    const CropWindow w =
        crop_support(mean_intensity, 1e-10, lagmax + 4, "ensemble_g2_kernel");
    const Eigen::Index m = w.hi - w.lo;
    const Eigen::Index nfft = next_pow2(m + lagmax + 1);

    // Intensities average before correlating: the mean pair density
    // factorizes into the autocorrelation of the mean intensity.
    const Eigen::VectorXcd fI =
        padded_fft(mean_intensity.segment(w.lo, m).cast<Cplx>(), nfft);
    const Eigen::ArrayXd t_part =
        extract_lags(inverse_fft(fI.array().abs2().cast<Cplx>().matrix()), lagmax, dt);

    // The interference kernel needs the full double node sum; conjugate
    // symmetry of pair (a, b) against (b, a) halves it on the real part.
    Eigen::ArrayXd c_part = Eigen::ArrayXd::Zero(2 * lagmax + 1);
    if (sign != CrossSign::none) {
        std::vector<Eigen::ArrayXcd> sliced(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            sliced[static_cast<std::size_t>(k)] =
                bank[static_cast<std::size_t>(k)].segment(w.lo, m);
        Eigen::ArrayXd c_spec = Eigen::ArrayXd::Zero(nfft);
        for (int a = 0; a < K; ++a) {
            for (int b = a; b < K; ++b) {
                const Eigen::VectorXcd fg = padded_fft(
                    sliced[static_cast<std::size_t>(a)] *
                        sliced[static_cast<std::size_t>(b)].conjugate(),
                    nfft);
                const double factor =
                    (a == b ? 1.0 : 2.0) * rule.weights[a] * rule.weights[b];
                c_spec += factor * fg.array().abs2();
            }
        }
        c_part = extract_lags(inverse_fft(c_spec.cast<Cplx>().matrix()), lagmax, dt);
    }

    CorrelationHistogram hist;
    hist.mode = mode;
    const Eigen::Index nb = 2 * lagmax + 1;
    hist.bin_edges = symmetric_bin_edges(dt, nb);
    hist.density.resize(nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
        const double t1 = t_part[i];
        const double t2 = t_part[nb - 1 - i];
        const double cr = sign == CrossSign::none ? 0.0 : c_part[i];
        hist.density[i] = std::max(0.0, combine(t1, t2, cr, sign));
    }
    return hist;
}

double visibility(const CorrelationHistogram& parallel,
                  const CorrelationHistogram& orthogonal, double window) {
    parallel.validate();
    orthogonal.validate();
    if (parallel.bin_edges.size() != orthogonal.bin_edges.size() ||
        (parallel.bin_edges != orthogonal.bin_edges).any())
        throw std::logic_error("visibility: histograms must share bin edges");
    if (!(window > 0)) throw std::invalid_argument("visibility: window must be positive");

    const double area_parallel = parallel.area(-0.5 * window, 0.5 * window);
    const double area_orthogonal = orthogonal.area(-0.5 * window, 0.5 * window);
    if (!(area_orthogonal > 0))
        throw std::domain_error("visibility: orthogonal reference area is zero");
    return std::abs(1.0 - area_parallel / area_orthogonal);
}

// Coincidence landscape across repetition periods.
//
// Probability tree per trigger, with r the entrance/first-splitter ratio
// (short arm and port-3 probability alike), q the second-splitter ratio,
// and photon A the one reaching detector A (delay variable t_A - t_B):
//
//   arm choice:   P(short) = r, P(long) = 1 - r
//   first split:  P(3 | short) = r,      P(3 | long) = 1 - r
//                 P(4 | short) = 1 - r,  P(4 | long) = r
//   cascade:      P(5 | 3) = q, P(6 | 3) = 1 - q
//
// A pair from pulses (k, k - m) with arm choices (alpha, beta) lands at
// delay m T + (alpha - beta) D. All combinations are independent except
// (m = +1, short, long) and its mirror (m = -1, long, short): those are the
// same physical slot pair, counted once with occupancy r (1 - r) and the
// two-amplitude interference density
//   ports 3,4:  s^2 T1 + (1-s)^2 T2 - 2 s (1-s) Re C   (s = r)
//   port 3 cascaded to 5,6:  q (1-q) s (1-s) [T1 + T2 + 2 Re C]
// where T1, T2, C are the pair integrals at packet offset T - D and Re C
// carries the ensemble diffusion factor. Orthogonal polarization drops C.
CorrelationHistogram peak_pattern(const EmitterModel& emitter,
                                  const InterferometerConfig& config, CorrelationMode mode,
                                  int n_peaks, const OpticalResponse* response,
                                  double length, Eigen::Index bins_per_period) {
    emitter.validate();
    config.validate();
    if (mode == CorrelationMode::tcspc)
        throw std::invalid_argument("peak_pattern: tcspc is not a pair mode");
    if (n_peaks < 1 || n_peaks % 2 == 0)
        throw std::logic_error("peak_pattern: n_peaks must be odd and positive");
    if (bins_per_period < 3 || bins_per_period % 2 == 0)
        throw std::logic_error("peak_pattern: bins_per_period must be odd and >= 3");
    if (config.vapor_in_path && response == nullptr)
        throw std::invalid_argument("peak_pattern: vapor_in_path requires an optical response");

    const double T = emitter.repetition_period;
    const double D = config.path_delay;
    const double tau = emitter.decay;
    const double sigma = emitter.diffusion_sigma;
    const double r = config.bs1_ratio;
    const double q = config.bs2_ratio;
    const bool cascade = (mode == CorrelationMode::same_port);
    const bool interfere = (config.polarization == Polarization::parallel);
    const double lead = T - D;  // short-path photon lead within the slot pair

    const Eigen::Index nb = static_cast<Eigen::Index>(n_peaks) * bins_per_period;
    CorrelationHistogram hist;
    hist.mode = mode;
    hist.bin_edges = symmetric_bin_edges(T / static_cast<double>(bins_per_period), nb);
    hist.density = Eigen::ArrayXd::Zero(nb);
    const Eigen::ArrayXd centers = edge_centers(hist.bin_edges);
    const double half_span = 0.5 * static_cast<double>(n_peaks) * T;

    // shape evaluators, free space by closed form, vapor by lattice kernels
    std::function<double(double)> indep_shape, slot_t1, slot_t2, slot_cross;
    double reach = 16.0 * tau;

    Eigen::ArrayXd indep_lat, t1_lat, c_lat;  // vapor lattices
    Eigen::Index lag_t = 0, lag_c = 0;
    double dt = 0.0;

    if (!config.vapor_in_path) {
        indep_shape = [tau](double x) { return pair_t_overlap(x, tau, 0.0, tau, 0.0); };
        slot_t1 = [tau, lead](double c) {
            return pair_t_overlap(c, tau, lead, tau, 0.0);
        };
        slot_t2 = [tau, lead](double c) {
            return pair_t_overlap(-c, tau, lead, tau, 0.0);
        };
        slot_cross = [tau, lead, sigma](double c) {
            return pair_cross_term(c, tau, lead, tau, 0.0, 0.0).real() *
                   std::exp(-sigma * sigma * c * c);
        };
    } else {
        const FrequencyGrid& grid = response->grid;
        dt = grid.time_step();

        // The cross kernel oscillates as exp(i sigma x c); keep it inside
        // the node-set validity and rely on its exp(-|c|/tau) envelope
        // beyond (under e^-8 of the peak, far below every tolerance here).
        const double span_c =
            sigma > 0 ? std::min(8.0 * tau, 0.225 * 48.0 / sigma) : 8.0 * tau;
        if (interfere && span_c < 5.0 * tau)
            throw std::invalid_argument(
                "peak_pattern: diffusion too wide for the vapor interference "
                "kernel; use the event-stream sampler");

        const GaussHermiteRule rule = sigma > 0 ? gauss_hermite(48) : gauss_hermite(1);
        const int K = rule.order();
        std::vector<double> offsets(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k)
            offsets[static_cast<std::size_t>(k)] = sigma * rule.nodes[k];

        // family 1 carries the slot lead as an emission-time shift
        const std::vector<Eigen::ArrayXcd> lead_bank =
            packet_bank(grid, emitter, offsets, lead, response, length);
        const std::vector<Eigen::ArrayXcd> base_bank =
            packet_bank(grid, emitter, offsets, 0.0, response, length);

        Eigen::ArrayXd lead_intensity = Eigen::ArrayXd::Zero(grid.count());
        Eigen::ArrayXd base_intensity = Eigen::ArrayXd::Zero(grid.count());
        for (int k = 0; k < K; ++k) {
            lead_intensity += rule.weights[k] * lead_bank[static_cast<std::size_t>(k)].abs2();
            base_intensity += rule.weights[k] * base_bank[static_cast<std::size_t>(k)].abs2();
        }

        const CropWindow w = crop_support(lead_intensity + base_intensity, 1e-10, 8,
                                          "peak_pattern");
        const Eigen::Index m = w.hi - w.lo;
        lag_t = m;  // full autocorrelation support
        lag_c = static_cast<Eigen::Index>(std::ceil(span_c / dt));
        const Eigen::Index nfft = next_pow2(m + lag_t + 1);

        const Eigen::VectorXcd f_base =
            padded_fft(base_intensity.segment(w.lo, m).cast<Cplx>(), nfft);
        indep_lat =
            extract_lags(inverse_fft(f_base.array().abs2().cast<Cplx>().matrix()),
                         lag_t, dt);
        const Eigen::VectorXcd f_lead =
            padded_fft(lead_intensity.segment(w.lo, m).cast<Cplx>(), nfft);
        t1_lat = extract_lags(
            inverse_fft((f_lead.array() * f_base.array().conjugate()).matrix()), lag_t,
            dt);

        if (interfere) {
            Eigen::ArrayXd c_spec = Eigen::ArrayXd::Zero(nfft);
            for (int a = 0; a < K; ++a) {
                const Eigen::ArrayXcd lead_slice =
                    lead_bank[static_cast<std::size_t>(a)].segment(w.lo, m);
                for (int b = 0; b < K; ++b) {
                    const Eigen::VectorXcd fg = padded_fft(
                        lead_slice *
                            base_bank[static_cast<std::size_t>(b)].segment(w.lo, m)
                                .conjugate(),
                        nfft);
                    c_spec += rule.weights[a] * rule.weights[b] * fg.array().abs2();
                }
            }
            c_lat = extract_lags(inverse_fft(c_spec.cast<Cplx>().matrix()), lag_c, dt);
        }

        reach = static_cast<double>(lag_t) * dt;
        const double step = dt;
        const Eigen::Index lt = lag_t, lc = lag_c;
        const Eigen::ArrayXd* ip = &indep_lat;
        const Eigen::ArrayXd* t1p = &t1_lat;
        const Eigen::ArrayXd* cp = &c_lat;
        indep_shape = [ip, lt, step](double x) {
            if (std::abs(x) >= static_cast<double>(lt) * step) return 0.0;
            return lag_interp(*ip, lt, x / step);
        };
        slot_t1 = [t1p, lt, step](double c) {
            if (std::abs(c) >= static_cast<double>(lt) * step) return 0.0;
            return lag_interp(*t1p, lt, c / step);
        };
        slot_t2 = [t1p, lt, step](double c) {
            if (std::abs(c) >= static_cast<double>(lt) * step) return 0.0;
            return lag_interp(*t1p, lt, -c / step);
        };
        slot_cross = [cp, lc, step](double c) {
            if (std::abs(c) >= static_cast<double>(lc) * step) return 0.0;
            return lag_interp(*cp, lc, c / step);
        };
    }

    // independent pulse combinations
    const auto route_a = [&](int arm_long) {
        const double to3 = arm_long ? 1.0 - r : r;
        return cascade ? to3 * q : to3;
    };
    const auto route_b = [&](int arm_long) {
        const double to3 = arm_long ? 1.0 - r : r;
        if (cascade) return to3 * (1.0 - q);
        return arm_long ? r : 1.0 - r;  // port 4
    };
    const int m_reach =
        static_cast<int>(std::ceil((half_span + reach + std::abs(D)) / T)) + 1;
    for (int m = -m_reach; m <= m_reach; ++m) {
        if (m == 0) continue;  // one photon per pulse
        for (int arm_a = 0; arm_a <= 1; ++arm_a) {
            for (int arm_b = 0; arm_b <= 1; ++arm_b) {
                if ((m == 1 && arm_a == 0 && arm_b == 1) ||
                    (m == -1 && arm_a == 1 && arm_b == 0))
                    continue;  // the interfering slot pair, added below
                const double offset = m * T + (arm_a - arm_b) * D;
                if (std::abs(offset) > half_span + reach) continue;
                const double occupancy =
                    (arm_a ? 1.0 - r : r) * (arm_b ? 1.0 - r : r);
                const double weight = occupancy * route_a(arm_a) * route_b(arm_b);
                for (Eigen::Index i = 0; i < nb; ++i)
                    hist.density[i] += weight * indep_shape(centers[i] - offset);
            }
        }
    }

    // the interfering slot pair (short photon of one pulse against the long
    // photon of the previous), occupancy r (1 - r)
    const double s = r;
    const double occupancy = r * (1.0 - r);
    for (Eigen::Index i = 0; i < nb; ++i) {
        const double c = centers[i];
        const double t1 = slot_t1(c);
        const double t2 = slot_t2(c);
        const double cr = interfere ? slot_cross(c) : 0.0;
        double g;
        if (!cascade)
            g = s * s * t1 + (1.0 - s) * (1.0 - s) * t2 - 2.0 * s * (1.0 - s) * cr;
        else
            g = q * (1.0 - q) * s * (1.0 - s) * (t1 + t2 + 2.0 * cr);
        hist.density[i] += occupancy * g;
    }
    hist.density = hist.density.max(0.0);
    return hist;
}

}  // namespace fockflow
