#pragma once

#include <stdexcept>

namespace fockflow {

// Relative polarization of the two photons meeting at the splitter.
// Orthogonal photons are fully distinguishable and never interfere.
enum class Polarization { parallel, orthogonal };

// Pulsed single-photon source. Each trigger emits one photon with an
// exponential envelope of lifetime decay; slow spectral diffusion draws the
// carrier of every emission from N(carrier_center, diffusion_sigma^2), so
// the detuning difference of a photon pair has variance 2 sigma^2.
// purity_g2 is the residual same-pulse two-photon probability used by the
// event-stream generator; the ensemble averages treat emissions as single
// photons.
struct EmitterModel {
    double decay = 0.43e-9;             // s
    double diffusion_sigma = 0.0;       // rad/s
    double carrier_center = 0.0;        // rad/s, absolute
    double repetition_period = 6.5e-9;  // s
    double purity_g2 = 0.0;

    void validate() const {
        if (!(decay > 0)) throw std::invalid_argument("EmitterModel: decay must be positive");
        if (!(diffusion_sigma >= 0))
            throw std::invalid_argument("EmitterModel: diffusion_sigma must be nonnegative");
        if (!(repetition_period > 0))
            throw std::invalid_argument("EmitterModel: repetition_period must be positive");
        if (!(purity_g2 >= 0 && purity_g2 < 1))
            throw std::invalid_argument("EmitterModel: purity_g2 must lie in [0, 1)");
    }
};

// Unbalanced interferometer in front of the measurement splitters. The
// entrance coupler routes each photon to a short or a long arm (long excess
// path_delay, nominally one repetition period so consecutive emissions
// overlap), both arms meet again at the first splitter with outputs 3 and 4,
// and a second splitter behind output 3 feeds the cascaded ports 5 and 6.
// The entrance coupler and the first splitter are the same physical ratio.
// bs1_ratio is the probability that a short-arm photon exits at port 3;
// bs2_ratio the probability that port 3 continues to port 5.
struct InterferometerConfig {
    double path_delay = 6.5e-9;  // s
    Polarization polarization = Polarization::parallel;
    double bs1_ratio = 0.5;
    double bs2_ratio = 0.5;
    bool vapor_in_path = false;

    void validate() const {
        if (!(path_delay >= 0))
            throw std::invalid_argument("InterferometerConfig: path_delay must be nonnegative");
        if (!(bs1_ratio > 0 && bs1_ratio < 1))
            throw std::invalid_argument("InterferometerConfig: bs1_ratio must lie in (0, 1)");
        if (!(bs2_ratio > 0 && bs2_ratio < 1))
            throw std::invalid_argument("InterferometerConfig: bs2_ratio must lie in (0, 1)");
    }
};

}  // namespace fockflow
