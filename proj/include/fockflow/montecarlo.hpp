#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fockflow/detector.hpp"
#include "fockflow/emitter.hpp"
#include "fockflow/events.hpp"
#include "fockflow/vapor.hpp"

namespace fockflow {

// Which detectors are armed. source_only couples the emitter straight into
// channel 3 (lifetime and rate calibrations); hom_ports reads the two
// measurement splitter outputs 3 and 4; cascade moves the port 3 detector
// behind the second splitter so channels 4, 5 and 6 fire and 5-6
// coincidences herald two-photon slots.
enum class DetectorLayout { source_only, hom_ports, cascade };

// One event-stream run. Every random quantity derives from counter-based
// substreams keyed by (seed, pulse or slot index, purpose), so a run is a
// pure function of this struct and may be partitioned across any number of
// workers without changing a single event.
struct RunConfig {
    std::int64_t n_pulses = 100000;
    std::uint64_t seed = 1;
    EmitterModel emitter;
    InterferometerConfig interferometer;
    DetectorLayout layout = DetectorLayout::hom_ports;
    // chain per channel, indexed 3..6 through detector(); defaults apply to
    // every armed channel
    std::array<DetectorModel, 4> detectors{};
    // thermal click rate per armed channel, Hz; clicks bypass efficiency and
    // jitter but obey dead time
    double dark_rate = 0.0;
    // cell on the bench; photons traverse it when interferometer.vapor_in_path
    // is set and cover the same geometric length in free space when not
    std::optional<VaporCell> vapor;
    int workers = 1;

    const DetectorModel& detector(int channel) const {
        if (channel < 3 || channel > 6)
            throw std::invalid_argument("RunConfig: channels are numbered 3 to 6");
        return detectors[static_cast<std::size_t>(channel - 3)];
    }
    DetectorModel& detector(int channel) {
        if (channel < 3 || channel > 6)
            throw std::invalid_argument("RunConfig: channels are numbered 3 to 6");
        return detectors[static_cast<std::size_t>(channel - 3)];
    }

    // Unlike DetectorModel::validate this admits efficiency zero: a blind
    // detector is a legitimate degenerate run that produces no clicks.
    void validate() const;
};

// Generates the click stream for a run: per pulse one photon (two with
// probability purity_g2, never more), slow carrier diffusion shared within a
// pulse, survival thinning through the cell, routing through the
// interferometer with two-photon interference in the slot where a long-path
// photon meets the next trigger's short-path photon, then the detector
// chain (efficiency, Gaussian jitter, nonparalyzable dead time applied in
// that order). Events return sorted by timestamp. Identical configs give
// identical streams; workers only splits the work.
std::vector<EventRecord> simulate_stream(const RunConfig& config);

}  // namespace fockflow
