#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "fockflow/constants.hpp"
#include "fockflow/faddeeva.hpp"
#include "fockflow/frequency_grid.hpp"

namespace fockflow {

struct AtomicLine {
    double detuning;           // rad/s from the reference frequency
    double relative_strength;  // dimensionless, > 0
    double natural_linewidth;  // rad/s, FWHM
};

// Saturated vapor pressure log10 P(atm) = a - b/T with separate solid/liquid
// branches split at the melting point.
struct VaporPressureModel {
    std::string name;
    double solid_a = 0, solid_b = 0;
    double liquid_a = 0, liquid_b = 0;
    double melting_point = 0;  // K
};

// Atomic species data normally loaded from the versioned line-data file.
struct SpeciesData {
    double reference_wavelength = 0;  // m (vacuum)
    double atomic_mass = 0;           // kg
    double oscillator_strength = 0;   // dimensionless absorption f-value
    VaporPressureModel pressure;
    std::vector<AtomicLine> lines;

    double reference_frequency() const {
        return constants::two_pi * constants::c_light / reference_wavelength;
    }
};

// Embedded copy of data/cs_d1_lines.dat; the loader test pins file == builtin.
SpeciesData builtin_cs_d1();

// Parses the line-data file format (# key: value metadata + 3-column rows).
// Throws std::invalid_argument naming the offending line on malformed input.
SpeciesData load_line_data(const std::string& path);

struct VaporCell {
    double temperature = 0;  // K
    double length = 0;       // m
    SpeciesData species;

    void validate() const {
        if (!(temperature > 0))
            throw std::invalid_argument("VaporCell: temperature must be > 0");
        if (length < 0)
            throw std::invalid_argument("VaporCell: length must be >= 0");
        for (const auto& l : species.lines) {
            if (!(l.relative_strength > 0))
                throw std::invalid_argument("AtomicLine: strength must be > 0");
            if (!(l.natural_linewidth > 0))
                throw std::invalid_argument("AtomicLine: linewidth must be > 0");
        }
    }
};

// Number density from the configured vapor-pressure correlation.
// Valid temperature range [273 K, 500 K].
inline double number_density(const SpeciesData& sp, double temperature) {
    if (!(temperature >= 273.0 && temperature <= 500.0))
        throw std::domain_error(
            "number_density: temperature must lie in [273 K, 500 K]");
    const auto& p = sp.pressure;
    const bool solid = temperature < p.melting_point;
    const double a = solid ? p.solid_a : p.liquid_a;
    const double b = solid ? p.solid_b : p.liquid_b;
    const double pressure_pa =
        constants::atmosphere_pa * std::pow(10.0, a - b / temperature);
    return pressure_pa / (constants::k_boltzmann * temperature);
}

// 1-sigma Doppler width of the optical transition, w_ref sqrt(kT/(m c^2)).
inline double doppler_sigma(const SpeciesData& sp, double temperature) {
    return sp.reference_frequency() *
           std::sqrt(constants::k_boltzmann * temperature /
                     (sp.atomic_mass * constants::c_light * constants::c_light));
}

// Integrated absorption cross-section (over angular frequency),
// 2 pi^2 r_e c f, distributed over the hyperfine components by strength.
inline double integrated_cross_section(const SpeciesData& sp) {
    return 2.0 * constants::pi * constants::pi * constants::electron_radius *
           constants::c_light * sp.oscillator_strength;
}

struct OpticalResponse {
    FrequencyGrid grid;
    Eigen::ArrayXcd refractive_index;  // n(center + detuning_i)
};

// Complex refractive index from the sum of Doppler-broadened (Voigt) lines:
// n = 1 + i K sum_k s_k w(z_k), z_k = (delta - delta_k + i Gamma_k/2)/(sqrt2 sD).
// The prefactor is evaluated at the reference frequency so that a symmetric
// line list yields exactly odd dispersion / even absorption about it.
inline std::complex<double> refractive_index_at(const VaporCell& cell,
                                                double density, double delta) {
    const auto& sp = cell.species;
    if (sp.lines.empty()) return {1.0, 0.0};
    const double sd = doppler_sigma(sp, cell.temperature);
    const double pref = density * integrated_cross_section(sp) *
                        constants::c_light /
                        (2.0 * sp.reference_frequency() *
                         std::sqrt(constants::two_pi) * sd);
    std::complex<double> acc{0.0, 0.0};
    const double inv = 1.0 / (std::sqrt(2.0) * sd);
    for (const auto& line : sp.lines) {
        const std::complex<double> z{(delta - line.detuning) * inv,
                                     0.5 * line.natural_linewidth * inv};
        acc += line.relative_strength * faddeeva(z);
    }
    // i * w(z): rotate by 90 degrees
    return {1.0 - pref * acc.imag(), pref * acc.real()};
}

// Samples n(omega) on the grid. Requires the grid to cover every line with
// at least 5 Doppler widths of margin. The optional density override exists
// for linearity tests; by default the vapor-pressure correlation is used.
inline OpticalResponse optical_response(const VaporCell& cell,
                                        const FrequencyGrid& grid,
                                        double density_override = -1.0) {
    cell.validate();
    const auto& sp = cell.species;
    const double density = density_override >= 0.0
                               ? density_override
                               : number_density(sp, cell.temperature);
    if (!sp.lines.empty()) {
        const double sd = doppler_sigma(sp, cell.temperature);
        const double lo = grid.detuning(0) + 5.0 * sd;
        const double hi = grid.detuning(grid.count() - 1) - 5.0 * sd;
        for (const auto& line : sp.lines) {
            if (line.detuning < lo || line.detuning > hi)
                throw std::invalid_argument(
                    "optical_response: grid does not cover the line list with "
                    "5 Doppler widths of margin");
        }
    }
    OpticalResponse r{grid, Eigen::ArrayXcd(grid.count())};
    for (Eigen::Index i = 0; i < grid.count(); ++i)
        r.refractive_index[i] =
            refractive_index_at(cell, density, grid.detuning(i));
    return r;
}

// Vacuum response on a grid (n identically 1).
inline OpticalResponse vacuum_response(const FrequencyGrid& grid) {
    return {grid, Eigen::ArrayXcd::Ones(grid.count())};
}

// Beer-Lambert transmission, alpha = 2 (omega/c) Im n.
inline Eigen::ArrayXd transmission_spectrum(const OpticalResponse& r, double L) {
    if (L < 0) throw std::domain_error("transmission_spectrum: L must be >= 0");
    Eigen::ArrayXd t(r.grid.count());
    for (Eigen::Index i = 0; i < r.grid.count(); ++i) {
        const double omega = r.grid.center() + r.grid.detuning(i);
        const double alpha =
            2.0 * omega / constants::c_light * r.refractive_index[i].imag();
        t[i] = std::exp(-alpha * L);
    }
    return t;
}

// Total traversal time (L/c) d(omega Re n)/domega by central finite
// difference on the grid; subtract L/c for the excess slow-light delay.
// Differencing omega(Re n - 1) instead of omega Re n avoids cancellation
// and makes the vacuum case exact.
inline double group_delay(const OpticalResponse& r, double L, double omega) {
    const Eigen::Index k = r.grid.index_of(omega - r.grid.center());
    if (k == 0 || k == r.grid.count() - 1)
        throw std::domain_error("group_delay: omega at the grid edge");
    const double wm = r.grid.center() + r.grid.detuning(k - 1);
    const double wp = r.grid.center() + r.grid.detuning(k + 1);
    const double fm = wm * (r.refractive_index[k - 1].real() - 1.0);
    const double fp = wp * (r.refractive_index[k + 1].real() - 1.0);
    const double disp = 1.0 + (fp - fm) / (2.0 * r.grid.spacing());
    return L / constants::c_light * disp;
}

inline double excess_group_delay(const OpticalResponse& r, double L,
                                 double omega) {
    return group_delay(r, L, omega) - L / constants::c_light;
}

// Group index n_g = c/v_g = d(omega Re n)/domega at omega.
inline double group_index(const OpticalResponse& r, double omega) {
    return group_delay(r, 1.0, omega) * constants::c_light;
}

struct TransmissionWindow {
    double dip_low = 0;     // detuning of the inner dip below the window
    double dip_high = 0;    // detuning of the inner dip above the window
    double midpoint = 0;    // mean of the two inner dips
    double center = 0;      // detuning of the transmission maximum between them
    double transmission_at_center = 0;
};

// Locates the two innermost transmission dips bracketing the reference
// frequency and the transmission maximum between them. Dips are found as
// local maxima of the optical depth (not minima of transmission: deep in a
// resonance exp(-OD) underflows to a flat zero plateau whose grid minima sit
// at the plateau edges, not at the line). A dip must reach OD > ln 2, i.e.
// transmission below 1/2; anything shallower cannot bound a usable window.
inline TransmissionWindow find_window(const OpticalResponse& r, double L) {
    const Eigen::Index n = r.grid.count();
    Eigen::ArrayXd od(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double omega = r.grid.center() + r.grid.detuning(i);
        const double alpha =
            2.0 * omega / constants::c_light * r.refractive_index[i].imag();
        od[i] = alpha * L;
    }
    const double od_dip = std::log(2.0);
    Eigen::Index ilo = -1, ihi = -1;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        if (od[i] >= od[i - 1] && od[i] > od[i + 1] && od[i] > od_dip) {
            const double d = r.grid.detuning(i);
            if (d < 0 && (ilo < 0 || d > r.grid.detuning(ilo))) ilo = i;
            if (d > 0 && (ihi < 0 || d < r.grid.detuning(ihi))) ihi = i;
        }
    }
    if (ilo < 0 || ihi < 0)
        throw std::invalid_argument(
            "find_window: no absorption dips bracket the reference frequency");

    TransmissionWindow w;
    w.dip_low = r.grid.detuning(ilo);
    w.dip_high = r.grid.detuning(ihi);
    w.midpoint = 0.5 * (w.dip_low + w.dip_high);
    Eigen::Index ibest = ilo;
    for (Eigen::Index i = ilo; i <= ihi; ++i)
        if (od[i] < od[ibest]) ibest = i;
    w.center = r.grid.detuning(ibest);
    w.transmission_at_center = std::exp(-od[ibest]);
    return w;
}

}  // namespace fockflow
