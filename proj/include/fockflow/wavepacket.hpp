#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "fockflow/constants.hpp"
#include "fockflow/frequency_grid.hpp"
#include "fockflow/vapor.hpp"

namespace fockflow {

// Single-photon amplitude spectrum sampled on a frequency grid. The array
// stores chi versus detuning from the grid center (rotating frame); the
// common factor e^{-i omega_center t} is implied and cancels in every
// intensity and cross-correlation observable.
template <class Scalar>
struct PhotonWavepacketT {
    FrequencyGridT<Scalar> grid;
    typename FrequencyGridT<Scalar>::ArrayC amplitude;
    Scalar carrier = 0;        // absolute angular frequency of the line
    Scalar emission_time = 0;  // t0
    Scalar decay = 0;          // tau
    // True while the amplitude is exactly the sampled Lorentzian form with
    // the fields above; propagation through a medium clears it. Lets
    // correlation code dispatch to continuum closed forms free of grid error.
    bool analytic_lorentzian = false;
};

using PhotonWavepacket = PhotonWavepacketT<double>;

template <class Scalar>
Scalar norm_squared(const PhotonWavepacketT<Scalar>& wp) {
    return wp.amplitude.abs2().sum() * wp.grid.spacing();
}

// Lorentzian emission line chi(omega) = sqrt(2 tau/pi) e^{i omega t0} /
// (1 - 2 i tau (omega - omega0)), sampled versus detuning and renormalized
// on the grid (the finite window clips a small tail fraction).
template <class Scalar>
PhotonWavepacketT<Scalar> lorentzian_amplitude(
    const FrequencyGridT<Scalar>& grid, Scalar tau, Scalar carrier,
    Scalar emission_time) {
    using Complex = std::complex<Scalar>;
    if (!(tau > Scalar(0)))
        throw std::invalid_argument("lorentzian_amplitude: tau must be > 0");
    const Scalar d0 = carrier - grid.center();
    if (std::abs(d0) > grid.span() / Scalar(4))
        throw std::invalid_argument(
            "lorentzian_amplitude: carrier outside the central half of the "
            "grid (spectral leakage)");
    if (Scalar(1) / tau > grid.span() / Scalar(10))
        throw std::invalid_argument(
            "lorentzian_amplitude: linewidth too broad for the grid span");

    PhotonWavepacketT<Scalar> wp{grid,
                                 typename FrequencyGridT<Scalar>::ArrayC(
                                     grid.count()),
                                 carrier,
                                 emission_time,
                                 tau,
                                 true};
    const Scalar pref = std::sqrt(Scalar(2) * tau / Scalar(constants::pi));
    // constant phase from the rotating frame: e^{i omega t0} =
    // e^{i omega_center t0} e^{i delta t0}
    const Complex frame = std::polar(Scalar(1), grid.center() * emission_time);
    for (Eigen::Index i = 0; i < grid.count(); ++i) {
        const Scalar d = grid.detuning(i);
        const Complex ramp = std::polar(pref, d * emission_time);
        wp.amplitude[i] =
            frame * ramp / Complex(Scalar(1), -Scalar(2) * tau * (d - d0));
    }
    wp.amplitude /= std::sqrt(norm_squared(wp));
    return wp;
}

// Temporal wavepacket chi(t) on the conjugate axis (see grid.times()).
template <class Scalar>
typename FrequencyGridT<Scalar>::ArrayC to_time_domain(
    const PhotonWavepacketT<Scalar>& wp) {
    return wp.grid.to_time(wp.amplitude);
}

template <class Scalar>
Scalar temporal_centroid(const PhotonWavepacketT<Scalar>& wp) {
    const auto xt = to_time_domain(wp);
    const auto intensity = xt.abs2();
    const Scalar total = intensity.sum();
    if (!(total > Scalar(0)))
        throw std::domain_error("temporal_centroid: wavepacket has zero norm");
    Scalar first = 0;
    for (Eigen::Index j = 0; j < wp.grid.count(); ++j)
        first += wp.grid.time(j) * intensity[j];
    return first / total;
}

// Norm relative to creation (lorentzian_amplitude normalizes to exactly 1,
// so this is the Beer-Lambert survival probability after propagation).
template <class Scalar>
Scalar survival_probability(const PhotonWavepacketT<Scalar>& wp) {
    const Scalar n2 = norm_squared(wp);
    if (!(n2 > Scalar(0)))
        throw std::domain_error("survival_probability: wavepacket has zero norm");
    return n2;
}

// Dispersive propagation chi'(omega) = chi(omega) e^{i omega n(omega) L/c}.
// The sign makes a medium with d(Re n)/domega > 0 retard the packet; the
// imaginary part of n attenuates it (Beer-Lambert). The phase is stored
// relative to the carrier-at-reference vacuum phase e^{i omega_center L/c},
// a global phase with no intensity or cross-correlation consequence, which
// keeps trigonometric arguments small.
inline PhotonWavepacket propagate(const PhotonWavepacket& wp,
                                  const OpticalResponse& response, double L) {
    if (!(wp.grid == response.grid))
        throw std::logic_error("propagate: wavepacket and response grids differ");
    if (L < 0) throw std::domain_error("propagate: L must be >= 0");
    if (L == 0) return wp;

    PhotonWavepacket out = wp;
    out.analytic_lorentzian = false;
    const double oc = wp.grid.center();
    const double Lc = L / constants::c_light;
    for (Eigen::Index i = 0; i < wp.grid.count(); ++i) {
        const double d = wp.grid.detuning(i);
        const std::complex<double> n = response.refractive_index[i];
        // (omega n - omega_center) L/c = [delta + omega (n-1)] L/c
        const double phase = (d + (oc + d) * (n.real() - 1.0)) * Lc;
        const double decay = (oc + d) * n.imag() * Lc;
        out.amplitude[i] *= std::polar(std::exp(-decay), phase);
    }
    return out;
}

}  // namespace fockflow
