#include "fockflow/events.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace fockflow {

namespace {

constexpr char kMagic[8] = {'F', 'O', 'C', 'K', 'E', 'V', 'T', '1'};
constexpr std::size_t kRecordBytes = 16;

void put_u16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
}

void put_u32(unsigned char* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

void put_u64(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

std::int64_t to_femtoseconds(double seconds) {
    return std::llround(seconds * 1e15);
}

std::vector<EventRecord> read_binary(std::ifstream& in) {
    std::vector<EventRecord> events;
    std::array<unsigned char, kRecordBytes * 4096> buf;
    std::uint64_t offset = sizeof(kMagic);
    while (in) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) break;
        if (got % kRecordBytes != 0)
            throw EventParseError("truncated event record",
                                  offset + got - got % kRecordBytes);
        for (std::size_t k = 0; k < got; k += kRecordBytes) {
            const unsigned char* p = buf.data() + k;
            if (get_u16(p + 2) != 0)
                throw EventParseError("nonzero reserved field", offset + k);
            EventRecord ev;
            ev.channel = get_u16(p);
            ev.pulse_index = get_u32(p + 4);
            ev.timestamp =
                static_cast<double>(static_cast<std::int64_t>(get_u64(p + 8))) * 1e-15;
            events.push_back(ev);
        }
        offset += got;
    }
    return events;
}

// one CSV field up to the separator; returns past-the-end position or throws
template <class Int>
const char* parse_field(const char* first, const char* last, char sep, Int& out,
                        std::uint64_t line_offset, const char* what) {
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr == first)
        throw EventParseError(std::string("unparsable ") + what, line_offset);
    if (sep != '\0') {
        if (ptr == last || *ptr != sep)
            throw EventParseError(std::string("missing separator after ") + what,
                                  line_offset);
        ++ptr;
    } else if (ptr != last) {
        throw EventParseError(std::string("trailing characters after ") + what,
                              line_offset);
    }
    return ptr;
}

std::vector<EventRecord> read_csv(std::ifstream& in) {
    std::vector<EventRecord> events;
    std::string line;
    std::uint64_t offset = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        const std::uint64_t line_offset = offset;
        offset += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != "channel,pulse_index,t_fs")
                throw EventParseError("unrecognized event file header", 0);
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const char* first = line.data();
        const char* last = first + line.size();
        std::uint16_t channel = 0;
        std::uint32_t pulse = 0;
        std::int64_t t_fs = 0;
        first = parse_field(first, last, ',', channel, line_offset, "channel");
        first = parse_field(first, last, ',', pulse, line_offset, "pulse index");
        parse_field(first, last, '\0', t_fs, line_offset, "timestamp");
        events.push_back({static_cast<double>(t_fs) * 1e-15, pulse, channel});
    }
    if (!header_seen) throw EventParseError("unrecognized event file header", 0);
    return events;
}

}  // namespace

void write_events(const std::string& path, const std::vector<EventRecord>& events) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_events: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    std::array<unsigned char, kRecordBytes * 4096> buf;
    std::size_t fill = 0;
    for (const EventRecord& ev : events) {
        unsigned char* p = buf.data() + fill;
        put_u16(p, ev.channel);
        put_u16(p + 2, 0);
        put_u32(p + 4, ev.pulse_index);
        put_u64(p + 8, static_cast<std::uint64_t>(to_femtoseconds(ev.timestamp)));
        fill += kRecordBytes;
        if (fill == buf.size()) {
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(fill));
            fill = 0;
        }
    }
    if (fill > 0)
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(fill));
    if (!out) throw std::runtime_error("write_events: write failed on " + path);
}

void write_events_csv(const std::string& path, const std::vector<EventRecord>& events) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_events_csv: cannot open " + path);
    out << "channel,pulse_index,t_fs\n";
    for (const EventRecord& ev : events)
        out << ev.channel << ',' << ev.pulse_index << ','
            << to_femtoseconds(ev.timestamp) << '\n';
    if (!out) throw std::runtime_error("write_events_csv: write failed on " + path);
}

std::vector<EventRecord> read_events(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_events: cannot open " + path);
    char magic[sizeof(kMagic)] = {};
    in.read(magic, sizeof(magic));
    if (in.gcount() == sizeof(magic) && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0)
        return read_binary(in);
    in.clear();
    in.seekg(0);
    return read_csv(in);
}

CorrelationHistogram correlate_events(const std::vector<EventRecord>& events,
                                      int channel_a, int channel_b, double bin_width,
                                      double span) {
    if (!(bin_width > 0))
        throw std::invalid_argument("correlate_events: bin_width must be positive");
    if (!(span >= bin_width))
        throw std::invalid_argument("correlate_events: span must cover at least one bin");

    const auto half_bins = static_cast<Eigen::Index>(std::floor(span / bin_width));
    const Eigen::Index n = 2 * half_bins + 1;
    CorrelationHistogram hist;
    hist.bin_edges = symmetric_bin_edges(bin_width, n);
    hist.density = Eigen::ArrayXd::Zero(n);

    std::vector<double> ta, tb;
    for (const EventRecord& ev : events) {
        if (ev.channel == channel_a) ta.push_back(ev.timestamp);
        if (ev.channel == channel_b) tb.push_back(ev.timestamp);
    }
    if (ta.empty() || tb.empty()) {
        hist.warning = true;
        return hist;
    }
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());

    const double lo_edge = hist.bin_edges[0];
    const double half = hist.bin_edges[n];  // symmetric: -lo_edge
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n), 0);
    const bool same = (channel_a == channel_b);
    for (std::size_t i = 0; i < ta.size(); ++i) {
        const double t = ta[i];
        auto it = std::lower_bound(tb.begin(), tb.end(), t - half);
        for (; it != tb.end() && *it <= t + half; ++it) {
            if (same && static_cast<std::size_t>(it - tb.begin()) == i) continue;
            const auto bin =
                static_cast<Eigen::Index>(std::floor((t - *it - lo_edge) / bin_width));
            if (bin >= 0 && bin < n) ++counts[static_cast<std::size_t>(bin)];
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
        hist.density[i] = static_cast<double>(counts[static_cast<std::size_t>(i)]) / bin_width;
    return hist;
}

HeraldedTraces heralded_tcspc(const std::vector<EventRecord>& events,
                              std::pair<int, int> herald_pair, double coincidence_window,
                              double repetition_period, double bin_width) {
    if (!(repetition_period > 0))
        throw std::invalid_argument("heralded_tcspc: repetition_period must be positive");
    if (!(coincidence_window > 0) || coincidence_window >= repetition_period)
        throw std::invalid_argument(
            "heralded_tcspc: coincidence window must be positive and shorter than the "
            "repetition period");
    if (herald_pair.first == herald_pair.second)
        throw std::invalid_argument("heralded_tcspc: herald channels must differ");
    const auto nb = static_cast<Eigen::Index>(
        std::floor(repetition_period / bin_width + 1e-9));
    if (!(bin_width > 0) || nb < 1)
        throw std::invalid_argument("heralded_tcspc: bin_width must fit the period");

    // clicks on each herald channel in time order, as indices into events
    std::vector<std::size_t> ia, ib;
    for (std::size_t k = 0; k < events.size(); ++k) {
        if (events[k].channel == herald_pair.first) ia.push_back(k);
        if (events[k].channel == herald_pair.second) ib.push_back(k);
    }
    const auto by_time = [&events](std::size_t l, std::size_t r) {
        return events[l].timestamp < events[r].timestamp;
    };
    std::sort(ia.begin(), ia.end(), by_time);
    std::sort(ib.begin(), ib.end(), by_time);

    std::vector<char> heralded_flag(events.size(), 0);
    std::int64_t pairs = 0;
    std::size_t i = 0, j = 0;
    while (i < ia.size() && j < ib.size()) {
        const double da = events[ia[i]].timestamp;
        const double db = events[ib[j]].timestamp;
        if (std::abs(da - db) <= coincidence_window) {
            heralded_flag[ia[i]] = 1;
            heralded_flag[ib[j]] = 1;
            ++pairs;
            ++i;
            ++j;
        } else if (da < db) {
            ++i;
        } else {
            ++j;
        }
    }

    HeraldedTraces out;
    out.herald_count = pairs;
    for (CorrelationHistogram* h : {&out.heralded, &out.unheralded}) {
        h->bin_edges = uniform_bin_edges(0.0, bin_width, nb);
        h->density = Eigen::ArrayXd::Zero(nb);
        h->mode = CorrelationMode::tcspc;
    }
    for (std::size_t k = 0; k < events.size(); ++k) {
        const double t = events[k].timestamp;
        const double rel = t - repetition_period * std::floor(t / repetition_period);
        const auto bin = static_cast<Eigen::Index>(std::floor(rel / bin_width));
        if (bin < 0 || bin >= nb) continue;  // sliver beyond the last full bin
        CorrelationHistogram& h = heralded_flag[k] ? out.heralded : out.unheralded;
        h.density[bin] += 1.0 / bin_width;
    }
    if (pairs == 0) out.heralded.warning = true;
    return out;
}

}  // namespace fockflow
