#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "paces/common.hpp"
#include "paces/engine.hpp"
#include "paces/spectra.hpp"

namespace paces {

// ===========================================================================
// Run configuration files: flat sections of key = value lines.
//
//   [model]
//   kind = holstein            # holstein | tb | spin
//   extents = 5                # up to three integers
//   eps = 0.0                  # scalar or one value per site
//   J = 1.0                    # scalar or one value per bond
//   omega0 = 1.0
//   g = 1.0
//   d_pho = 6
//   units = omega0             # omega0 | THz | percm
//
//   [run]
//   initial = localized        # localized | optical | explicit
//   m_init = 6
//   m = 2
//   q_nom = 10000
//   dt = 0.05
//   t_max = 10
//   ...
//
// Energies are stored internally in units of omega0 (hbar = 1). With
// units = THz or percm the model values are read as physical frequencies /
// wavenumbers and divided by omega0_THz / omega0_percm; times (dt, t_max,
// tau) are then read in fs and converted to 1/omega0.
// ===========================================================================

struct ConfigFile {
    std::string path;
    // section -> key -> value (last assignment wins)
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        return s != sections.end() && s->second.count(key) > 0;
    }
    const std::string& get(const std::string& sec, const std::string& key) const {
        return sections.at(sec).at(key);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline ConfigFile parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open config file: " + path);
    ConfigFile cfg;
    cfg.path = path;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error(path + ":" + std::to_string(lineno) + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            cfg.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw Error(path + ":" + std::to_string(lineno) + ": empty key");
        cfg.sections[section][key] = value;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// typed reading with error collection
// ---------------------------------------------------------------------------

/// Collects every offending key so a bad config reports all problems at once.
class ConfigReader {
public:
    explicit ConfigReader(const ConfigFile& file) : file_(file) {}

    bool has(const std::string& sec, const std::string& key) const { return file_.has(sec, key); }

    std::string str(const std::string& sec, const std::string& key, const std::string& fallback) {
        return has(sec, key) ? file_.get(sec, key) : fallback;
    }

    double number(const std::string& sec, const std::string& key, double fallback) {
        if (!has(sec, key)) return fallback;
        return parse_number(sec, key, file_.get(sec, key));
    }

    std::int64_t integer(const std::string& sec, const std::string& key, std::int64_t fallback) {
        if (!has(sec, key)) return fallback;
        const double v = parse_number(sec, key, file_.get(sec, key));
        if (v != std::floor(v)) fail(sec, key, "expected an integer");
        return static_cast<std::int64_t>(v);
    }

    bool boolean(const std::string& sec, const std::string& key, bool fallback) {
        if (!has(sec, key)) return fallback;
        const std::string v = file_.get(sec, key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail(sec, key, "expected a boolean");
        return fallback;
    }

    std::vector<double> numbers(const std::string& sec, const std::string& key,
                                std::vector<double> fallback) {
        if (!has(sec, key)) return fallback;
        std::vector<double> out;
        std::stringstream ss(file_.get(sec, key));
        std::string tok;
        while (ss >> tok) out.push_back(parse_number(sec, key, tok));
        if (out.empty()) fail(sec, key, "expected one or more numbers");
        return out;
    }

    std::vector<std::uint32_t> extents(const std::string& sec, const std::string& key) {
        std::vector<std::uint32_t> out;
        for (double v : numbers(sec, key, {})) {
            if (v < 1 || v != std::floor(v)) {
                fail(sec, key, "expected positive integers");
                return {1};
            }
            out.push_back(static_cast<std::uint32_t>(v));
        }
        if (out.empty() || out.size() > 3) {
            fail(sec, key, "expected 1 to 3 extents");
            return {1};
        }
        return out;
    }

    void fail(const std::string& sec, const std::string& key, const std::string& why) {
        errors_.push_back("[" + sec + "] " + key + ": " + why);
    }

    void finish() const {
        if (errors_.empty()) return;
        std::string msg = "invalid configuration (" + file_.path + "):";
        for (const auto& e : errors_) msg += "\n  " + e;
        throw Error(msg);
    }

private:
    double parse_number(const std::string& sec, const std::string& key, const std::string& text) {
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        } catch (const std::exception&) {
            fail(sec, key, "not a number: '" + text + "'");
            return 0;
        }
    }

    const ConfigFile& file_;
    std::vector<std::string> errors_;
};

// ---------------------------------------------------------------------------
// assembled run options
// ---------------------------------------------------------------------------

struct SpectrumOptions {
    SpectrumConfig spectrum;
    std::string input;  ///< optional observables CSV to transform instead of running
};

struct LoadedConfig {
    RunConfig run;
    SpectrumOptions spectrum;
    std::string provenance;  ///< resolved configuration, one line
};

namespace detail {

/// Scale factor turning config energies into multiples of omega0, plus the
/// fs -> 1/omega0 time conversion when physical units are selected.
struct UnitSystem {
    double energy_scale = 1.0;  ///< divide energies by this
    double fs_to_time = 0.0;    ///< multiply fs by this; 0 = times are already 1/omega0
};

inline UnitSystem read_units(ConfigReader& r) {
    const std::string u = r.str("model", "units", "omega0");
    UnitSystem out;
    if (u == "omega0") return out;
    double reference = 0;  // omega0 in the unit the energies are written in
    double nu_thz = 0;
    if (u == "THz") {
        reference = r.number("model", "omega0_THz", 0);
        if (reference <= 0) r.fail("model", "omega0_THz", "required (> 0) when units = THz");
        nu_thz = reference;
    } else if (u == "percm") {
        reference = r.number("model", "omega0_percm", 0);
        if (reference <= 0) r.fail("model", "omega0_percm", "required (> 0) when units = percm");
        nu_thz = reference * 0.0299792458;  // c * (1/cm) in THz
    } else {
        r.fail("model", "units", "expected omega0 | THz | percm");
        return out;
    }
    if (reference > 0) {
        out.energy_scale = reference;
        out.fs_to_time = 2e-3 * M_PI * nu_thz;  // omega0 * 1 fs
    }
    return out;
}

}  // namespace detail

/// Reads and validates a full run configuration, converting units and
/// reporting every offending key at once.
inline LoadedConfig load_run_config(const ConfigFile& file, std::uint64_t seed_override = 0,
                                    bool has_seed_override = false) {
    ConfigReader r(file);
    LoadedConfig out;
    RunConfig& run = out.run;

    // --- units ---
    auto units = detail::read_units(r);
    auto energy = [&](std::vector<double> v) {
        for (double& x : v) x /= units.energy_scale;
        return v;
    };
    auto time_value = [&](double v) { return units.fs_to_time > 0 ? v * units.fs_to_time : v; };

    // --- model ---
    const std::string kind = r.str("model", "kind", "holstein");
    if (kind == "holstein")
        run.model.kind = ModelKind::holstein;
    else if (kind == "tb")
        run.model.kind = ModelKind::tight_binding;
    else if (kind == "spin")
        run.model.kind = ModelKind::spin_lattice;
    else
        r.fail("model", "kind", "expected holstein | tb | spin");

    if (r.has("model", "extents")) {
        auto ext = r.extents("model", "extents");
        try {
            run.model.geometry = LatticeGeometry(ext);
        } catch (const Error& e) {
            r.fail("model", "extents", e.what());
        }
    } else {
        r.fail("model", "extents", "required");
    }

    run.model.holstein.eps = energy(r.numbers("model", "eps", {0.0}));
    run.model.holstein.hop_j = energy(r.numbers("model", "J", {0.0}));
    run.model.holstein.omega = energy(r.numbers("model", "omega0", {1.0}));
    run.model.holstein.g = energy(r.numbers("model", "g", {0.0}));
    const auto d_pho = r.integer("model", "d_pho", 1);
    if (d_pho < 1)
        r.fail("model", "d_pho", "must be >= 1");
    else
        run.model.holstein.d_pho = static_cast<std::uint32_t>(d_pho);
    run.model.spin.bond_v = energy(r.numbers("model", "v", {0.0}));
    run.model.spin.field = energy(r.numbers("model", "field", {0.0}));

    // --- run ---
    const std::string init = r.str("run", "initial", "localized");
    if (init == "localized")
        run.initial.kind = InitialStateSpec::Kind::localized;
    else if (init == "optical")
        run.initial.kind = InitialStateSpec::Kind::optical;
    else if (init == "explicit")
        run.initial.kind = InitialStateSpec::Kind::explicit_list;
    else
        r.fail("run", "initial", "expected localized | optical | explicit");
    run.initial.site = r.integer("run", "site", -1);
    if (run.initial.kind == InitialStateSpec::Kind::explicit_list) {
        // entries: semicolon-separated "n1 n2 ... nL : re im"
        const std::string text = r.str("run", "state", "");
        if (text.empty()) r.fail("run", "state", "required for initial = explicit");
        std::stringstream entries(text);
        std::string entry;
        while (std::getline(entries, entry, ';')) {
            const auto colon = entry.find(':');
            if (colon == std::string::npos) {
                r.fail("run", "state", "each entry needs 'occupations : re im'");
                break;
            }
            std::vector<std::uint32_t> occ;
            std::stringstream os(entry.substr(0, colon));
            double v;
            while (os >> v) occ.push_back(static_cast<std::uint32_t>(v));
            std::stringstream as(entry.substr(colon + 1));
            double re = 0, im = 0;
            as >> re >> im;
            run.initial.entries.emplace_back(std::move(occ), cplx(re, im));
        }
    }

    run.m_init = static_cast<int>(r.integer("run", "m_init", 6));
    run.m = static_cast<int>(r.integer("run", "m", 2));
    const auto q_nom = r.integer("run", "q_nom", 1);
    if (q_nom < 1)
        r.fail("run", "q_nom", "must be >= 1");
    else
        run.q_nom = static_cast<std::size_t>(q_nom);
    run.propagator.dt = time_value(r.number("run", "dt", 0.05));
    run.t_max = time_value(r.number("run", "t_max", 1.0));
    run.seed = has_seed_override ? seed_override
                                 : static_cast<std::uint64_t>(r.integer("run", "seed", 0));
    run.cadence = static_cast<std::size_t>(std::max<std::int64_t>(1, r.integer("run", "cadence", 1)));
    run.truncation_future_tau = r.number("run", "truncation_future_tau", 0.0);
    run.emit_histograms = r.boolean("run", "histograms", false);
    run.histogram_bins = static_cast<std::size_t>(r.integer("run", "histogram_bins", 512));

    // --- propagator ---
    run.propagator.rtol = r.number("propagator", "rtol", 1e-15);
    run.propagator.max_order = static_cast<int>(r.integer("propagator", "max_order", 200));
    run.propagator.substeps = static_cast<int>(r.integer("propagator", "substeps", 1));

    // --- spectrum ---
    auto& sp = out.spectrum.spectrum;
    if (r.has("spectrum", "tau"))
        sp.tau = time_value(r.number("spectrum", "tau", 0));
    if (r.boolean("spectrum", "infinite_tau", false)) sp.tau = std::numeric_limits<double>::infinity();
    sp.pad_factor = static_cast<int>(r.integer("spectrum", "pad", 4));
    sp.omega_min = r.number("spectrum", "omega_min", -5.0);
    sp.omega_max = r.number("spectrum", "omega_max", 5.0);
    sp.per_chromophore = r.boolean("spectrum", "per_chromophore", false);
    sp.chromophores = run.model.geometry.sites();
    out.spectrum.input = r.str("spectrum", "input", "");

    r.finish();
    try {
        run.validate();
        if (run.model.kind != ModelKind::spin_lattice) build_model(run.model);  // surface model errors now
    } catch (const Error& e) {
        throw Error("invalid configuration (" + file.path + "):\n  " + e.what());
    }

    // resolved provenance line
    std::ostringstream prov;
    prov << "kind=" << kind;
    prov << " extents=";
    for (int i = 0; i < run.model.geometry.ndim; ++i)
        prov << (i ? "x" : "") << run.model.geometry.extents[i];
    auto vec = [&](const char* name, const std::vector<double>& v) {
        prov << ' ' << name << '=';
        for (std::size_t i = 0; i < v.size(); ++i) prov << (i ? ";" : "") << v[i];
    };
    if (run.model.kind == ModelKind::spin_lattice) {
        vec("v", run.model.spin.bond_v);
        vec("field", run.model.spin.field);
    } else {
        vec("eps", run.model.holstein.eps);
        vec("J", run.model.holstein.hop_j);
        if (run.model.kind == ModelKind::holstein) {
            vec("omega0", run.model.holstein.omega);
            vec("g", run.model.holstein.g);
            prov << " d_pho=" << run.model.holstein.d_pho;
        }
    }
    prov << " initial=" << init;
    if (run.initial.kind == InitialStateSpec::Kind::localized) prov << " site=" << run.initial.site;
    prov << " m_init=" << run.m_init << " m=" << run.m << " q_nom=" << run.q_nom
         << " dt=" << run.propagator.dt << " t_max=" << run.t_max << " rtol=" << run.propagator.rtol
         << " max_order=" << run.propagator.max_order << " substeps=" << run.propagator.substeps
         << " seed=" << run.seed << " cadence=" << run.cadence;
    if (std::isfinite(sp.tau))
        prov << " tau=" << sp.tau << " pad=" << sp.pad_factor << " window=[" << sp.omega_min << ","
             << sp.omega_max << "]";
    out.provenance = prov.str();
    return out;
}

}  // namespace paces
