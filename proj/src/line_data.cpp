#include "fockflow/vapor.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace fockflow {

namespace {

SpeciesData assemble(const std::map<std::string, std::string>& meta,
                     std::vector<AtomicLine> lines, const std::string& origin) {
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = meta.find(key);
        if (it == meta.end())
            throw std::invalid_argument(origin + ": missing metadata key '" +
                                        key + "'");
        return it->second;
    };
    auto num = [&](const std::string& key) { return std::stod(need(key)); };

    SpeciesData sp;
    sp.reference_wavelength = num("reference_wavelength_nm") * 1e-9;
    sp.atomic_mass = num("isotope_mass_amu") * constants::atomic_mass_unit;
    sp.oscillator_strength = num("oscillator_strength");
    sp.pressure.name = need("vapor_pressure_model");
    sp.pressure.solid_a = num("vapor_pressure_solid_a");
    sp.pressure.solid_b = num("vapor_pressure_solid_b_K");
    sp.pressure.liquid_a = num("vapor_pressure_liquid_a");
    sp.pressure.liquid_b = num("vapor_pressure_liquid_b_K");
    sp.pressure.melting_point = num("melting_point_K");
    sp.lines = std::move(lines);
    return sp;
}

}  // namespace

SpeciesData load_line_data(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("load_line_data: cannot open " + path);

    std::map<std::string, std::string> meta;
    std::vector<AtomicLine> lines;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string body = raw;
        if (auto pos = body.find('#'); pos != std::string::npos) {
            // "# key: value" metadata; anything else after '#' is a comment
            std::string comment = body.substr(pos + 1);
            body = body.substr(0, pos);
            if (auto colon = comment.find(':'); colon != std::string::npos) {
                std::istringstream ks(comment.substr(0, colon));
                std::string key;
                ks >> key;
                std::string rest;
                if (key != "columns" && !key.empty() && (ks >> rest, !ks)) {
                    std::string value = comment.substr(colon + 1);
                    const auto a = value.find_first_not_of(" \t");
                    const auto b = value.find_last_not_of(" \t\r");
                    if (a != std::string::npos)
                        meta[key] = value.substr(a, b - a + 1);
                }
            }
        }
        std::istringstream ls(body);
        double det, strength, width;
        if (ls >> det) {
            if (!(ls >> strength >> width))
                throw std::invalid_argument(
                    "load_line_data: malformed data row at line " +
                    std::to_string(lineno) + " of " + path);
            constexpr double ghz = constants::two_pi * 1e9;
            constexpr double mhz = constants::two_pi * 1e6;
            lines.push_back({det * ghz, strength, width * mhz});
        }
    }
    if (lines.size() != 4)
        throw std::invalid_argument(
            "load_line_data: expected exactly 4 hyperfine components in " +
            path + ", found " + std::to_string(lines.size()));
    return assemble(meta, std::move(lines), path);
}

SpeciesData builtin_cs_d1() {
    constexpr double ghz = constants::two_pi * 1e9;
    constexpr double mhz = constants::two_pi * 1e6;
    SpeciesData sp;
    sp.reference_wavelength = 894.59295986e-9;
    sp.atomic_mass = 132.905451933 * constants::atomic_mass_unit;
    sp.oscillator_strength = 0.343758492;
    sp.pressure = {"alcock-1984", 4.711, 3999.0, 4.165, 3830.0, 301.59};
    sp.lines = {
        {-4.678596399 * ghz, 21.0 / 64.0, 4.56 * mhz},  // F=4 -> F'=3
        {-3.510916399 * ghz, 15.0 / 64.0, 4.56 * mhz},  // F=4 -> F'=4
        {+4.514035371 * ghz, 7.0 / 64.0, 4.56 * mhz},   // F=3 -> F'=3
        {+5.681715371 * ghz, 21.0 / 64.0, 4.56 * mhz},  // F=3 -> F'=4
    };
    return sp;
}

}  // namespace fockflow
