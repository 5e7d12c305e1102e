#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Core>

#include "fockflow/emitter.hpp"
#include "fockflow/histogram.hpp"
#include "fockflow/vapor.hpp"
#include "fockflow/wavepacket.hpp"

namespace fockflow {

// Closed forms for a pair of one-sided exponential packets
//   psi_i(t) = exp(-i W_i (t - t0_i)) exp(-(t - t0_i) / (2 tau_i)) / sqrt(tau_i)
// for t >= t0_i. pair_t_overlap is the intensity cross correlation
// integral I1(t + delay) I2(t) dt; swapping the sign of delay swaps which
// packet leads. pair_cross_term is the interference kernel
// integral psi1(t + delay) psi2*(t + delay) psi1*(t) psi2(t) dt whose phase
// rotates as exp(-i carrier_diff delay) with carrier_diff = W1 - W2.
// Coincidence rates behind a balanced splitter combine them as
//   (T1 + T2 -+ 2 Re C) / 4
// with the minus sign for distinct ports and plus for a common port;
// orthogonal polarizations drop the cross term.
double pair_t_overlap(double delay, double tau1, double t01, double tau2, double t02);
std::complex<double> pair_cross_term(double delay, double tau1, double t01, double tau2,
                                     double t02, double carrier_diff);

// Coincidence densities for one fixed pair of packets meeting at a balanced
// splitter, evaluated at the centers of bin_edges. Packets carrying the
// exponential tag use the closed forms above; anything else (propagated
// packets included) goes through an FFT lattice correlation with linear
// interpolation onto the requested centers. Both packets must share a grid.
CorrelationHistogram g2_distinct(const PhotonWavepacket& a, const PhotonWavepacket& b,
                                 const Eigen::ArrayXd& bin_edges);
CorrelationHistogram g2_same(const PhotonWavepacket& a, const PhotonWavepacket& b,
                             const Eigen::ArrayXd& bin_edges);
CorrelationHistogram g2_orthogonal(const PhotonWavepacket& a, const PhotonWavepacket& b,
                                   const Eigen::ArrayXd& bin_edges);

// Ensemble-averaged coincidence density for equal-lifetime packets whose
// carrier difference is Gaussian with variance 2 sigma^2:
//   exp(-|delay| / tau) / (4 tau) * (1 -+ exp(-sigma^2 delay^2)).
double ensemble_g2_closed_form(double delay, double tau, double sigma, CorrelationMode mode);

// Interference visibility of the ensemble dip, V = sqrt(pi) u erfcx(u) with
// u = 1 / (2 sigma tau), and the inverse map from a target visibility to
// the diffusion width that produces it. V decreases monotonically from 1
// at sigma = 0.
double visibility_closed_form(double sigma, double tau);
double solve_sigma_for_visibility(double target, double tau);

// Monte Carlo estimate of the ensemble coincidence density: emission
// carriers are sampled per pair from the diffusion law, each pair
// contributes its closed-form (vacuum) or lattice (vapor) density at the
// bin centers. Sampling is stratified so the estimate converges roughly
// one order faster than plain sampling; the result is deterministic in
// (seed, n_samples) and independent of evaluation order.
// config contributes the polarization and whether the packets traverse the
// cell (vapor_in_path requires response). mode selects distinct or common
// ports; tcspc is not a pair observable here.
CorrelationHistogram ensemble_g2_numeric(const EmitterModel& emitter,
                                         const InterferometerConfig& config,
                                         CorrelationMode mode,
                                         const Eigen::ArrayXd& bin_edges,
                                         std::int64_t n_samples, std::uint64_t seed,
                                         const OpticalResponse* response = nullptr,
                                         double length = 0.0);

// Deterministic ensemble coincidence density on the native time lattice by
// Gauss-Hermite integration over the diffusion law. The intensity part
// averages exactly; the interference part is a double sum over quadrature
// nodes, valid while sigma * |delay| stays below about ten radians at the
// default order (beyond that the discrete node set aliases and this
// routine refuses). Lags cover +-lag_half_span, default 0.55 repetition
// periods. A null response means free propagation.
CorrelationHistogram ensemble_g2_kernel(const EmitterModel& emitter, CorrelationMode mode,
                                        Polarization polarization = Polarization::parallel,
                                        const OpticalResponse* response = nullptr,
                                        double length = 0.0, double lag_half_span = -1.0,
                                        int quadrature_order = 48);

// Visibility from a matched pair of histograms: one minus the ratio of the
// parallel to the orthogonal coincidence counts inside a window of the
// given full width centred on zero delay. Both histograms must share their
// bin edges; an empty orthogonal window is a domain error.
double visibility(const CorrelationHistogram& parallel,
                  const CorrelationHistogram& orthogonal, double window);

// Pulsed coincidence landscape: n_peaks (odd) repetition periods of the
// delay axis around zero, combining the interfering slot pair with all
// independent pulse combinations routed through the interferometer. Peak
// weights follow the probability tree documented in the implementation.
// Densities are per trigger. With vapor_in_path the packet shapes come from
// the propagated ensemble kernel, otherwise from the closed forms.
CorrelationHistogram peak_pattern(const EmitterModel& emitter,
                                  const InterferometerConfig& config, CorrelationMode mode,
                                  int n_peaks, const OpticalResponse* response = nullptr,
                                  double length = 0.0, Eigen::Index bins_per_period = 129);

}  // namespace fockflow
