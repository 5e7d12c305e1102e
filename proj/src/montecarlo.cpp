#include "fockflow/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "fockflow/constants.hpp"
#include "fockflow/frequency_grid.hpp"
#include "fockflow/sampling.hpp"
#include "fockflow/wavepacket.hpp"

namespace fockflow {

namespace {

using Cplx = std::complex<double>;

// substream purposes; the lane is a pulse index, a slot index or a channel
constexpr std::uint32_t kTagEmission = 0;
constexpr std::uint32_t kTagSlot = 1;
constexpr std::uint32_t kTagDetection = 2;
constexpr std::uint32_t kTagDark = 3;

constexpr double kFwhmToSigma = 1.0 / 2.3548200450309493;

// ---- propagated packet bank -------------------------------------------

// One carrier's packet behind the cell: unit-norm amplitude on the time
// lattice cropped to the 1 - 1e-6 mass window, the intensity CDF for
// inverse sampling, and the Beer-Lambert survival.
struct BankEntry {
    double survival = 1.0;
    double t_start = 0.0;
    Eigen::ArrayXcd psi;
    Eigen::ArrayXd cdf;
};

// Packets are precomputed on a uniform comb of carriers covering the
// diffusion law out to five sigma; a photon uses the nearest comb entry for
// its envelope and keeps the residual detuning as an exact beat factor, so
// only the slow absorptive reshaping is quantized.
struct CarrierBank {
    double dt = 0.0;
    double nu_lo = 0.0;  // first entry's offset from the emitter carrier
    double spacing = 1.0;
    std::vector<BankEntry> entries;

    std::size_t nearest_index(double detuning, double& residual) const {
        std::size_t idx = 0;
        if (entries.size() > 1) {
            const auto i =
                static_cast<std::ptrdiff_t>(std::lround((detuning - nu_lo) / spacing));
            idx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
                i, 0, static_cast<std::ptrdiff_t>(entries.size()) - 1));
        }
        residual = detuning - (nu_lo + static_cast<double>(idx) * spacing);
        return idx;
    }

    double sample(const BankEntry& e, double u) const {
        const double* begin = e.cdf.data();
        const double* end = begin + e.cdf.size();
        auto k = static_cast<Eigen::Index>(std::upper_bound(begin, end, u) - begin);
        if (k >= e.cdf.size()) k = e.cdf.size() - 1;
        const double prev = k > 0 ? e.cdf[k - 1] : 0.0;
        const double width = e.cdf[k] - prev;
        const double frac = width > 0 ? (u - prev) / width : 0.5;
        return e.t_start + (static_cast<double>(k) + frac - 0.5) * dt;
    }

    Cplx amplitude(const BankEntry& e, double t) const {
        const double x = (t - e.t_start) / dt;
        if (x < 0.0 || x > static_cast<double>(e.psi.size() - 1)) return {0.0, 0.0};
        const auto k = static_cast<Eigen::Index>(x);
        if (k + 1 >= e.psi.size()) return e.psi[e.psi.size() - 1];
        const double w = x - static_cast<double>(k);
        return e.psi[k] * (1.0 - w) + e.psi[k + 1] * w;
    }
};

CarrierBank build_bank(const EmitterModel& em, const VaporCell& cell) {
    CarrierBank bank;
    const FrequencyGrid grid = default_grid(cell.species.reference_frequency());
    const OpticalResponse response = optical_response(cell, grid);
    bank.dt = grid.time_step();
    const int n = em.diffusion_sigma > 0 ? 256 : 1;
    bank.nu_lo = em.diffusion_sigma > 0 ? -5.0 * em.diffusion_sigma : 0.0;
    bank.spacing = n > 1 ? 10.0 * em.diffusion_sigma / (n - 1) : 1.0;
    bank.entries.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double nu = bank.nu_lo + i * bank.spacing;
        PhotonWavepacket wp =
            lorentzian_amplitude(grid, em.decay, em.carrier_center + nu, 0.0);
        wp = propagate(wp, response, cell.length);
        const double survival = survival_probability(wp);
        const Eigen::ArrayXcd xt = to_time_domain(wp);
        const Eigen::ArrayXd intensity = xt.abs2();
        const double total = intensity.sum();
        if (!(total > 0))
            throw std::domain_error("simulate_stream: packet fully absorbed in the cell");
        const double cut = 0.5e-6 * total;  // trim half the clipped mass per side
        Eigen::Index lo = 0, hi = intensity.size() - 1;
        double acc = 0.0;
        while (lo < hi && acc + intensity[lo] < cut) acc += intensity[lo++];
        acc = 0.0;
        while (hi > lo && acc + intensity[hi] < cut) acc += intensity[hi--];
        BankEntry e;
        const Eigen::Index len = hi - lo + 1;
        const double mass = intensity.segment(lo, len).sum() * bank.dt;
        e.survival = survival;
        e.t_start = grid.time(lo);
        e.psi = xt.segment(lo, len) / std::sqrt(mass);
        e.cdf.resize(len);
        double run = 0.0;
        for (Eigen::Index k = 0; k < len; ++k) {
            run += std::norm(e.psi[k]) * bank.dt;
            e.cdf[k] = run;
        }
        e.cdf /= e.cdf[len - 1];
        bank.entries.push_back(std::move(e));
    }
    return bank;
}

// ---- per-run context ----------------------------------------------------

struct StreamContext {
    const RunConfig& cfg;
    double tau, T, D, r, q, sigma;
    bool interfere = true;
    bool through_cell = false;
    double transit = 0.0;  // free-space transit when the cell sits off the beam
    CarrierBank bank;
    mutable std::mutex overlap_mutex;
    mutable std::unordered_map<std::uint32_t, double> overlap2;

    explicit StreamContext(const RunConfig& c)
        : cfg(c),
          tau(c.emitter.decay),
          T(c.emitter.repetition_period),
          D(c.interferometer.path_delay),
          r(c.interferometer.bs1_ratio),
          q(c.interferometer.bs2_ratio),
          sigma(c.emitter.diffusion_sigma) {}
};

struct PhotonView {
    double origin = 0.0;  // bench time where the envelope starts
    double detuning = 0.0;
    std::uint32_t pulse = 0;
    std::size_t bank_index = 0;
    double residual = 0.0;
    bool coherent = true;
    bool arm_long = false;
};

double sample_arrival(const StreamContext& c, const PhotonView& v, RandomStream& rs) {
    if (c.through_cell)
        return v.origin + c.bank.sample(c.bank.entries[v.bank_index], rs.uniform());
    return v.origin + rs.exponential(c.tau);
}

Cplx amplitude(const StreamContext& c, const PhotonView& v, double t) {
    const double u = t - v.origin;
    if (c.through_cell) {
        const Cplx a = c.bank.amplitude(c.bank.entries[v.bank_index], u);
        if (v.residual == 0.0) return a;
        return a * std::polar(1.0, -v.residual * u);
    }
    if (u < 0.0) return {0.0, 0.0};
    return std::polar(std::sqrt(1.0 / c.tau) * std::exp(-0.5 * u / c.tau),
                      -v.detuning * u);
}

// |<psi_long | psi_short>|^2 of the slot pair including the envelope offset
// between the two triggers. Behind the cell this is the overlap of the
// reshaped packets (cached per carrier pair; the residual beat below the
// comb spacing is neglected here, second order in the spacing).
double overlap_squared(const StreamContext& c, const PhotonView& L, const PhotonView& S) {
    const double offset = L.origin - S.origin;
    if (!c.through_cell) {
        const double d = (L.detuning - S.detuning) * c.tau;
        return std::exp(-std::abs(offset) / c.tau) / (1.0 + d * d);
    }
    if (L.bank_index == S.bank_index && offset == 0.0) return 1.0;
    const auto key =
        static_cast<std::uint32_t>((L.bank_index << 16) | S.bank_index);
    std::lock_guard<std::mutex> lock(c.overlap_mutex);
    const auto it = c.overlap2.find(key);
    if (it != c.overlap2.end()) return it->second;

    const BankEntry& a = c.bank.entries[L.bank_index];
    const BankEntry& b = c.bank.entries[S.bank_index];
    Cplx acc{0.0, 0.0};
    if (offset == 0.0) {
        // both packets live on the same lattice; overlap the index ranges
        const auto shift =
            static_cast<Eigen::Index>(std::llround((a.t_start - b.t_start) / c.bank.dt));
        const Eigen::Index lo = std::max<Eigen::Index>(0, -shift);
        const Eigen::Index hi = std::min(a.psi.size(), b.psi.size() - shift);
        for (Eigen::Index k = lo; k < hi; ++k)
            acc += std::conj(a.psi[k]) * b.psi[k + shift];
    } else {
        for (Eigen::Index k = 0; k < a.psi.size(); ++k) {
            const double t = a.t_start + static_cast<double>(k) * c.bank.dt;
            acc += std::conj(a.psi[k]) * c.bank.amplitude(b, t + offset);
        }
    }
    const double o2 = std::clamp(std::norm(acc * c.bank.dt), 0.0, 1.0);
    c.overlap2.emplace(key, o2);
    return o2;
}

// ---- emission and slot machinery ----------------------------------------

struct PulseDraw {
    double detuning = 0.0;
    int count = 1;
    bool arm_long[2] = {false, false};
    double u_survival[2] = {1.0, 1.0};
};

PulseDraw draw_pulse(const StreamContext& c, std::int64_t p) {
    RandomStream rs(c.cfg.seed, static_cast<std::uint64_t>(p), kTagEmission);
    PulseDraw d;
    d.detuning = c.sigma * rs.normal();
    d.count = rs.uniform() < c.cfg.emitter.purity_g2 ? 2 : 1;
    for (int i = 0; i < d.count; ++i) {
        d.arm_long[i] = !(rs.uniform() < c.r);
        d.u_survival[i] = rs.uniform();
    }
    return d;
}

PhotonView make_view(const StreamContext& c, const PulseDraw& pd, std::int64_t pulse,
                     int i, bool use_arm) {
    PhotonView v;
    v.pulse = static_cast<std::uint32_t>(pulse);
    v.detuning = pd.detuning;
    v.coherent = (i == 0);
    v.arm_long = use_arm && pd.arm_long[i];
    v.origin = static_cast<double>(pulse) * c.T + (v.arm_long ? c.D : 0.0) + c.transit;
    if (c.through_cell) v.bank_index = c.bank.nearest_index(pd.detuning, v.residual);
    return v;
}

bool survives(const StreamContext& c, const PulseDraw& pd, int i, const PhotonView& v) {
    if (!c.through_cell) return true;
    return pd.u_survival[i] < c.bank.entries[v.bank_index].survival;
}

// Generates the arrivals of one slot: the long-path photons of the previous
// trigger against the short-path photons of the current one. The coherent
// photons of the two triggers interfere as a pair; residual photons from
// double emissions route independently.
void run_slot(const StreamContext& c, std::int64_t s, const PulseDraw* prev,
              const PulseDraw* cur, std::vector<EventRecord>& out) {
    const bool source_only = c.cfg.layout == DetectorLayout::source_only;
    PhotonView ph[4];
    int n = 0;
    if (source_only) {
        if (cur)
            for (int i = 0; i < cur->count; ++i) {
                const PhotonView v = make_view(c, *cur, s, i, false);
                if (survives(c, *cur, i, v)) ph[n++] = v;
            }
    } else {
        if (prev)
            for (int i = 0; i < prev->count; ++i) {
                if (!prev->arm_long[i]) continue;
                const PhotonView v = make_view(c, *prev, s - 1, i, true);
                if (survives(c, *prev, i, v)) ph[n++] = v;
            }
        if (cur)
            for (int i = 0; i < cur->count; ++i) {
                if (cur->arm_long[i]) continue;
                const PhotonView v = make_view(c, *cur, s, i, true);
                if (survives(c, *cur, i, v)) ph[n++] = v;
            }
    }
    if (n == 0) return;

    RandomStream slot_rs(c.cfg.seed, static_cast<std::uint64_t>(s), kTagSlot);
    RandomStream det_rs(c.cfg.seed, static_cast<std::uint64_t>(s), kTagDetection);

    const auto emit = [&](double t, int port, std::uint32_t pulse) {
        int channel = 3;
        if (!source_only) {
            if (c.cfg.layout == DetectorLayout::cascade && port == 3)
                channel = det_rs.uniform() < c.q ? 5 : 6;
            else
                channel = port;
        }
        const DetectorModel& dm = c.cfg.detector(channel);
        if (dm.efficiency < 1.0 && !(det_rs.uniform() < dm.efficiency)) return;
        double tt = t;
        if (dm.jitter_fwhm > 0.0) tt += dm.jitter_fwhm * kFwhmToSigma * det_rs.normal();
        out.push_back({tt, pulse, static_cast<std::uint16_t>(channel)});
    };

    // the interfering pair: one coherent photon from each neighbouring pulse
    int iL = -1, iS = -1;
    if (!source_only && c.interfere) {
        for (int k = 0; k < n; ++k) {
            if (!ph[k].coherent) continue;
            if (ph[k].arm_long && ph[k].pulse == static_cast<std::uint32_t>(s - 1))
                iL = k;
            if (!ph[k].arm_long && ph[k].pulse == static_cast<std::uint32_t>(s)) iS = k;
        }
    }

    if (iL < 0 || iS < 0) iL = iS = -1;  // a lone coherent photon routes below

    if (iL >= 0) {
        const PhotonView &L = ph[iL], &S = ph[iS];
        const double o2 = overlap_squared(c, L, S);
        const double p33 = c.r * (1.0 - c.r) * (1.0 + o2);
        const double u = slot_rs.uniform();
        constexpr int kMaxTrials = 1000000;
        if (u < 2.0 * p33) {
            // bunched pair: both photons leave by the same port, joint time
            // density |psi_L psi_S + psi_S psi_L|^2 by exact rejection
            const int port = u < p33 ? 3 : 4;
            int trial = 0;
            for (;; ++trial) {
                if (trial >= kMaxTrials)
                    throw std::logic_error("simulate_stream: pair sampler stalled");
                const bool lo = slot_rs.uniform() < 0.5;
                const double t1 = sample_arrival(c, lo ? L : S, slot_rs);
                const double t2 = sample_arrival(c, lo ? S : L, slot_rs);
                const Cplx x = amplitude(c, L, t1) * amplitude(c, S, t2);
                const Cplx y = amplitude(c, S, t1) * amplitude(c, L, t2);
                const double den = 2.0 * (std::norm(x) + std::norm(y));
                if (!(den > 0.0)) continue;
                if (slot_rs.uniform() * den < std::norm(x + y)) {
                    emit(t1, port, lo ? L.pulse : S.pulse);
                    emit(t2, port, lo ? S.pulse : L.pulse);
                    break;
                }
            }
        } else {
            // split pair: amplitude (1-r) psi_L(t3) psi_S(t4) - r psi_S(t3) psi_L(t4)
            const double wls = (1.0 - c.r) * (1.0 - c.r);
            const double wsl = c.r * c.r;
            int trial = 0;
            for (;; ++trial) {
                if (trial >= kMaxTrials)
                    throw std::logic_error("simulate_stream: pair sampler stalled");
                const bool ls = slot_rs.uniform() * (wls + wsl) < wls;
                const double t3 = sample_arrival(c, ls ? L : S, slot_rs);
                const double t4 = sample_arrival(c, ls ? S : L, slot_rs);
                const Cplx x = amplitude(c, L, t3) * amplitude(c, S, t4);
                const Cplx y = amplitude(c, S, t3) * amplitude(c, L, t4);
                const double den = 2.0 * (wls * std::norm(x) + wsl * std::norm(y));
                if (!(den > 0.0)) continue;
                const Cplx amp = (1.0 - c.r) * x - c.r * y;
                if (slot_rs.uniform() * den < std::norm(amp)) {
                    emit(t3, 3, ls ? L.pulse : S.pulse);
                    emit(t4, 4, ls ? S.pulse : L.pulse);
                    break;
                }
            }
        }
    }

    for (int k = 0; k < n; ++k) {
        if (k == iL || k == iS) continue;
        if (source_only) {
            emit(sample_arrival(c, ph[k], slot_rs), 3, ph[k].pulse);
            continue;
        }
        const double p3 = ph[k].arm_long ? 1.0 - c.r : c.r;
        const int port = slot_rs.uniform() < p3 ? 3 : 4;
        emit(sample_arrival(c, ph[k], slot_rs), port, ph[k].pulse);
    }
}

void run_darks(const StreamContext& c, std::vector<EventRecord>& out) {
    if (!(c.cfg.dark_rate > 0.0)) return;
    const double duration = static_cast<double>(c.cfg.n_pulses) * c.T;
    int lo = 3, hi = 3;
    if (c.cfg.layout == DetectorLayout::hom_ports) hi = 4;
    if (c.cfg.layout == DetectorLayout::cascade) lo = 4, hi = 6;
    for (int ch = lo; ch <= hi; ++ch) {
        RandomStream rs(c.cfg.seed, static_cast<std::uint64_t>(ch), kTagDark);
        double t = rs.exponential(1.0 / c.cfg.dark_rate);
        while (t < duration) {
            const auto p = static_cast<std::uint32_t>(std::clamp<double>(
                std::floor(t / c.T), 0.0, static_cast<double>(c.cfg.n_pulses - 1)));
            out.push_back({t, p, static_cast<std::uint16_t>(ch)});
            t += rs.exponential(1.0 / c.cfg.dark_rate);
        }
    }
}

}  // namespace

void RunConfig::validate() const {
    if (n_pulses < 1)
        throw std::invalid_argument("RunConfig: n_pulses must be at least 1");
    if (n_pulses > static_cast<std::int64_t>(std::numeric_limits<std::uint32_t>::max()))
        throw std::invalid_argument("RunConfig: pulse index would overflow the record");
    if (workers < 1) throw std::invalid_argument("RunConfig: workers must be at least 1");
    if (!(dark_rate >= 0))
        throw std::invalid_argument("RunConfig: dark_rate must be nonnegative");
    emitter.validate();
    interferometer.validate();
    for (const DetectorModel& d : detectors) {
        if (!(d.jitter_fwhm >= 0) || !(d.dead_time >= 0) ||
            !(d.efficiency >= 0 && d.efficiency <= 1))
            throw std::invalid_argument("RunConfig: detector chain out of range");
    }
    if (interferometer.vapor_in_path && !vapor)
        throw std::invalid_argument("RunConfig: vapor_in_path requires a cell");
}

std::vector<EventRecord> simulate_stream(const RunConfig& config) {
    config.validate();
    StreamContext ctx(config);
    ctx.interfere = config.interferometer.polarization == Polarization::parallel;
    ctx.through_cell = config.vapor.has_value() && config.interferometer.vapor_in_path;
    if (ctx.through_cell) ctx.bank = build_bank(config.emitter, *config.vapor);
    if (config.vapor && !ctx.through_cell)
        ctx.transit = config.vapor->length / constants::c_light;

    const std::int64_t n = config.n_pulses;
    const std::int64_t total_slots =
        config.layout == DetectorLayout::source_only ? n : n + 1;
    const int workers =
        static_cast<int>(std::min<std::int64_t>(config.workers, total_slots));
    const bool source_only = config.layout == DetectorLayout::source_only;

    const auto run_range = [&](std::int64_t lo, std::int64_t hi,
                               std::vector<EventRecord>& out) {
        PulseDraw prev_store;
        bool have_prev = false;
        if (!source_only && lo - 1 >= 0 && lo - 1 < n) {
            prev_store = draw_pulse(ctx, lo - 1);
            have_prev = true;
        }
        for (std::int64_t s = lo; s < hi; ++s) {
            PulseDraw cur_store;
            bool have_cur = false;
            if (s < n) {
                cur_store = draw_pulse(ctx, s);
                have_cur = true;
            }
            run_slot(ctx, s, have_prev ? &prev_store : nullptr,
                     have_cur ? &cur_store : nullptr, out);
            prev_store = cur_store;
            have_prev = have_cur;
        }
    };

    std::vector<std::vector<EventRecord>> parts(static_cast<std::size_t>(workers));
    if (workers == 1) {
        run_range(0, total_slots, parts[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            const std::int64_t lo = total_slots * w / workers;
            const std::int64_t hi = total_slots * (w + 1) / workers;
            pool.emplace_back(
                [&, lo, hi, w]() { run_range(lo, hi, parts[static_cast<std::size_t>(w)]); });
        }
        for (std::thread& t : pool) t.join();
    }

    std::vector<EventRecord> all;
    std::size_t count = 0;
    for (const auto& p : parts) count += p.size();
    all.reserve(count + 64);
    for (auto& p : parts) {
        all.insert(all.end(), p.begin(), p.end());
        p.clear();
        p.shrink_to_fit();
    }
    run_darks(ctx, all);

    std::sort(all.begin(), all.end(), [](const EventRecord& a, const EventRecord& b) {
        return std::tie(a.timestamp, a.channel, a.pulse_index) <
               std::tie(b.timestamp, b.channel, b.pulse_index);
    });

    std::vector<EventRecord> kept;
    kept.reserve(all.size());
    double last[4] = {-std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity()};
    for (const EventRecord& ev : all) {
        const DetectorModel& dm = config.detector(ev.channel);
        double& l = last[ev.channel - 3];
        if (dm.dead_time > 0.0 && ev.timestamp - l < dm.dead_time) continue;
        l = ev.timestamp;
        kept.push_back(ev);
    }
    return kept;
}

}  // namespace fockflow
