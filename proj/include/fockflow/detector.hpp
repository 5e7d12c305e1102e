#pragma once

#include <stdexcept>

namespace fockflow {

// Single-photon detector chain: Bernoulli efficiency, Gaussian timing
// jitter of the given full width at half maximum, and a nonparalyzable
// dead time during which later arrivals are dropped.
struct DetectorModel {
    double jitter_fwhm = 400e-12;  // s
    double efficiency = 0.2;
    double dead_time = 1e-9;  // s

    void validate() const {
        if (!(jitter_fwhm >= 0))
            throw std::invalid_argument("DetectorModel: jitter_fwhm must be nonnegative");
        if (!(efficiency > 0 && efficiency <= 1))
            throw std::invalid_argument("DetectorModel: efficiency must lie in (0, 1]");
        if (!(dead_time >= 0))
            throw std::invalid_argument("DetectorModel: dead_time must be nonnegative");
    }
};

}  // namespace fockflow
