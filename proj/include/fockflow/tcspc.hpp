#pragma once

#include <Eigen/Core>

#include "fockflow/detector.hpp"
#include "fockflow/emitter.hpp"
#include "fockflow/histogram.hpp"
#include "fockflow/vapor.hpp"

namespace fockflow {

// Time-correlated arrival traces against the pulse clock, ensemble averaged
// over the emitter diffusion law by Gauss-Hermite quadrature and sampled on
// the native time lattice inside [window_lo, window_hi].
//
// tcspc_one_photon returns the mean arrival-time density of a single
// emission; its area is the propagation survival probability (one in free
// space). tcspc_two_photon is the arrival density conditioned on a heralded
// same-port pair (both photons bunched to one output): diffusion makes the
// pair partially distinguishable, which reweights the mixture toward lucky
// carrier pairs and normalizes the trace to unit area. With zero diffusion
// the two traces have identical shape.
//
// The detector contributes its Gaussian jitter here; efficiency and dead
// time only scale and thin event streams, which is the Monte Carlo
// engine's business. With vapor_in_path the packets propagate through the
// response over the given length; otherwise they travel the same length of
// free space (pure delay), so on/off comparisons share a time origin.
CorrelationHistogram tcspc_one_photon(const EmitterModel& emitter,
                                      const InterferometerConfig& config,
                                      const OpticalResponse* response, double length,
                                      const DetectorModel& detector,
                                      double window_lo = -5e-9, double window_hi = 45e-9,
                                      int quadrature_order = 48);

CorrelationHistogram tcspc_two_photon(const EmitterModel& emitter,
                                      const InterferometerConfig& config,
                                      const OpticalResponse* response, double length,
                                      const DetectorModel& detector,
                                      double window_lo = -5e-9, double window_hi = 45e-9,
                                      int quadrature_order = 48);

// Normalization weight of the heralded pair trace: the ensemble mean of
// N_a N_b + |O_ab|^2 over carrier pairs, with N the survival and O the
// packet overlap. Equals the integral of the unnormalized two-photon trace
// and scales the heralded coincidence rate.
double tcspc_herald_weight(const EmitterModel& emitter, const InterferometerConfig& config,
                           const OpticalResponse* response, double length,
                           int quadrature_order = 48);

// Circular convolution with a unit-mass Gaussian of the given full width at
// half maximum, sampled on the same lattice. fwhm <= 0 returns the input.
Eigen::ArrayXd convolve_gaussian(const Eigen::ArrayXd& values, double dt, double fwhm);

// Tikhonov-regularized inverse of convolve_gaussian:
// F -> F H / (|H|^2 + epsilon) with H the kernel transform (unit peak).
Eigen::ArrayXd deconvolve_gaussian(const Eigen::ArrayXd& values, double dt, double fwhm,
                                   double epsilon = 1e-10);

// Lifetime from a log-linear least-squares fit over samples with
// t in (t_lo, t_hi) and y > 0. Requires a decaying tail.
double fit_exponential_decay(const Eigen::ArrayXd& t, const Eigen::ArrayXd& y,
                             double t_lo, double t_hi);

}  // namespace fockflow
