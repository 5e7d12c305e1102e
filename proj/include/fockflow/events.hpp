#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fockflow/histogram.hpp"

namespace fockflow {

// One detector click. Channels follow the bench numbering: 3 and 4 are the
// outputs of the measurement splitter, 5 and 6 sit behind the cascade
// splitter on port 3. pulse_index is the trigger the photon originated from
// (for dark counts, the period the click fell into). Timestamps are seconds
// on a common clock that starts at trigger 0.
struct EventRecord {
    double timestamp = 0.0;
    std::uint32_t pulse_index = 0;
    std::uint16_t channel = 0;

    friend bool operator==(const EventRecord& a, const EventRecord& b) {
        return a.timestamp == b.timestamp && a.pulse_index == b.pulse_index &&
               a.channel == b.channel;
    }
};

// Raised by the event readers; byte_offset points at the first byte of the
// construct that failed to parse (the magic, a record, or a CSV line).
class EventParseError : public std::runtime_error {
   public:
    EventParseError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " at byte " + std::to_string(offset)),
          offset_(offset) {}
    std::uint64_t byte_offset() const { return offset_; }

   private:
    std::uint64_t offset_;
};

// Binary event file: the 8-byte magic "FOCKEVT1" followed by packed
// little-endian records of 16 bytes each,
//   u16 channel, u16 reserved (zero), u32 pulse_index, i64 timestamp_fs.
// Timestamps are stored in femtoseconds (llround), which is lossless for
// runs up to about 100 seconds of clock; a second write/read cycle
// reproduces the stream bit for bit.
void write_events(const std::string& path, const std::vector<EventRecord>& events);

// Text fallback, one record per line after the header line
// "channel,pulse_index,t_fs".
void write_events_csv(const std::string& path, const std::vector<EventRecord>& events);

// Reads either format back, deciding by the magic bytes. Malformed content
// (bad magic or CSV header, truncated record, nonzero reserved field,
// unparsable line) raises EventParseError with the byte offset.
std::vector<EventRecord> read_events(const std::string& path);

// Full cross-correlation histogram of two channels: every ordered pair of
// clicks (a, b) within the span contributes at delta = t_a - t_b, so
// swapping the channels mirrors the axis. Correlating a channel against
// itself counts ordered pairs of distinct clicks. The span should cover at
// least three repetition periods on both sides so the uncorrelated peaks
// frame the central window; bins are symmetric around zero with an odd
// count, and density integrates to the number of counted pairs. Events may
// arrive unsorted (the correlator sorts copies internally). A channel with
// no clicks yields an all-zero histogram with the warning flag set.
CorrelationHistogram correlate_events(const std::vector<EventRecord>& events,
                                      int channel_a, int channel_b, double bin_width,
                                      double span);

// Arrival-time histograms against the pulse clock, split by heralding.
// herald_count pairs of clicks on the herald channels within the
// coincidence window mark two-photon slots; both members of each pair fill
// the heralded trace and every remaining click fills the unheralded one.
struct HeraldedTraces {
    CorrelationHistogram heralded;
    CorrelationHistogram unheralded;
    std::int64_t herald_count = 0;
};

// Pairs herald clicks greedily in time order, each click used at most once.
// Times fold modulo the repetition period, so the axis is [0, T). The
// coincidence window must be positive and shorter than the period: a wider
// window could not distinguish neighbouring triggers.
HeraldedTraces heralded_tcspc(const std::vector<EventRecord>& events,
                              std::pair<int, int> herald_pair, double coincidence_window,
                              double repetition_period, double bin_width = 50e-12);

}  // namespace fockflow
