#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "paces/basis_codec.hpp"
#include "paces/common.hpp"
#include "paces/lattice_models.hpp"
#include "paces/observables.hpp"
#include "paces/propagator.hpp"
#include "paces/subspace.hpp"

namespace paces {

// ===========================================================================
// The full evolution step -- select, grow, detruncate-remap, evolve -- and
// the multi-step run with per-step diagnostics.
// ===========================================================================

struct InitialStateSpec {
    enum class Kind { localized, optical, explicit_list };
    Kind kind = Kind::localized;
    /// lattice site of the Franck-Condon excitation; -1 = central site
    std::int64_t site = -1;
    /// explicit list: (occupation vector, amplitude); normalized on use
    std::vector<std::pair<std::vector<std::uint32_t>, cplx>> entries;
};

struct RunConfig {
    ModelSpec model;
    InitialStateSpec initial;
    int m_init = 6;                     ///< neighbor order around the initial support
    int m = 2;                          ///< neighbor order of the per-step regrowth
    std::size_t q_nom = 1;              ///< nominal truncation count
    PropagatorConfig propagator;        ///< holds dt
    double t_max = 1.0;
    std::uint64_t seed = 0;             ///< truncation tie-breaking seed
    std::size_t cadence = 1;            ///< observables every this many steps
    double truncation_future_tau = 0;   ///< forward-looking weighting; only 0 supported
    bool emit_histograms = false;
    std::size_t histogram_bins = 512;

    void validate() const {
        if (m < 0 || m_init < m) throw Error("run: need m_init >= m >= 0");
        if (q_nom < 1) throw Error("run: q_nom must be >= 1");
        if (t_max < 0) throw Error("run: t_max must be >= 0");
        if (cadence < 1) throw Error("run: cadence must be >= 1");
        if (truncation_future_tau != 0)
            throw Error("run: forward-looking truncation weighting (tau != 0) is not implemented; "
                        "current-weight selection (tau = 0) is the supported and empirically "
                        "preferred choice");
        propagator.validate();
    }

    std::size_t step_count() const {
        if (t_max <= 0) return 0;
        return static_cast<std::size_t>(std::ceil(t_max / propagator.dt - 1e-9));
    }
};

/// Per-step error and bookkeeping quantities.
struct DiagnosticsRecord {
    std::size_t step = 0;
    double t = 0;                   ///< time after the step
    double norm_pre = 0;            ///< before truncation
    double norm_post = 0;           ///< after detruncation-remap
    double discarded_weight = 0;    ///< squared norm dropped by the remap
    double delta_norm_expmv = 0;    ///< norm change across the series evolution
    double energy = 0;              ///< <psi|H_eff|psi> after remap, before evolving
    std::size_t q_true = 0;
    int taylor_order = 0;
};

struct ObservablesRow {
    double t = 0;
    double norm = 0;
    double energy = 0;  ///< normalized expectation on the current space
    double rmsd = 0;
    double xbar = 0;
    cplx amp{0, 0};
    std::vector<double> density;
};

struct RunResult {
    std::vector<ObservablesRow> trajectory;
    std::vector<DiagnosticsRecord> diagnostics;
    std::vector<std::pair<double, WeightHistogram>> histograms;
    SparseState final_state;
    EffectiveSpace final_space;
    std::vector<std::string> warnings;
    std::string error;  ///< nonempty if the run aborted; results cover the last good step
};

// ---------------------------------------------------------------------------
// truncation selection
// ---------------------------------------------------------------------------

/// Picks the q_nom highest-weight keys of the support (all of it when it is
/// small enough). Keys tied at the cutoff weight are admitted in the order of
/// a seeded Fisher-Yates permutation, so degenerate weights carry no
/// lexicographic bias. Deterministic for a given seed.
inline PackedBasisTable<Word> truncate_select(const SparseState& state, std::size_t q_nom,
                                              std::uint64_t seed) {
    if (q_nom < 1) throw Error("truncate_select: q_nom must be >= 1");
    if (!state.table || !state.table->sorted) throw Error("truncate_select: state table must be sorted");
    const auto& table = *state.table;

    std::vector<std::size_t> support;
    support.reserve(state.coeff.size());
    for (std::size_t i = 0; i < state.coeff.size(); ++i)
        if (std::norm(state.coeff[i]) > 0) support.push_back(i);
    if (support.empty()) throw Error("truncate_select: state has no support");

    std::vector<std::size_t> keep;
    if (support.size() <= q_nom) {
        keep = std::move(support);
    } else {
        std::vector<double> weights(support.size());
        for (std::size_t k = 0; k < support.size(); ++k) weights[k] = std::norm(state.coeff[support[k]]);
        std::vector<double> tmp = weights;
        std::nth_element(tmp.begin(), tmp.begin() + (q_nom - 1), tmp.end(), std::greater<double>());
        const double cutoff = tmp[q_nom - 1];

        std::vector<std::size_t> ties;
        for (std::size_t k = 0; k < support.size(); ++k) {
            if (weights[k] > cutoff)
                keep.push_back(support[k]);
            else if (weights[k] == cutoff)
                ties.push_back(support[k]);
        }
        std::size_t need = q_nom - keep.size();
        std::mt19937_64 rng(seed);
        for (std::size_t i = ties.size(); i > 1 && need < ties.size(); --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(ties[i - 1], ties[j]);
        }
        keep.insert(keep.end(), ties.begin(), ties.begin() + need);
        std::sort(keep.begin(), keep.end());
    }

    PackedBasisTable<Word> out(table.layout);
    const std::uint32_t w = table.layout.words_per_row;
    out.words.reserve(keep.size() * w);
    for (std::size_t idx : keep) {
        auto row = table.row(idx);
        out.words.insert(out.words.end(), row.begin(), row.end());
    }
    out.rows = keep.size();
    out.sorted = true;  // ascending indices of a sorted parent
    return out;
}

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

namespace detail {

/// Seed keys plus amplitudes, sorted by key, duplicates rejected.
inline std::pair<PackedBasisTable<Word>, std::vector<cplx>> build_seed_state(
    const RunConfig& config, const HamiltonianTermSet& terms) {
    const auto& layout = terms.layout;
    const std::uint32_t n = terms.lattice_sites();

    std::vector<std::vector<std::uint32_t>> occs;
    std::vector<cplx> amps;
    switch (config.initial.kind) {
        case InitialStateSpec::Kind::localized: {
            std::int64_t site = config.initial.site;
            if (site < 0) {
                const auto& e = config.model.geometry.extents;
                site = config.model.geometry.index(e[0] / 2, e[1] / 2, e[2] / 2);
            }
            if (site >= n) throw Error("initial state: site index out of range");
            std::vector<std::uint32_t> occ(layout.site_count(), 0);
            occ[0] = static_cast<std::uint32_t>(site);
            occs.push_back(occ);
            amps.push_back(1.0);
            break;
        }
        case InitialStateSpec::Kind::optical: {
            std::vector<std::uint32_t> occ(layout.site_count(), 0);
            for (std::uint32_t j = 0; j < n; ++j) {
                occ[0] = j;
                occs.push_back(occ);
                amps.push_back(1.0 / std::sqrt(double(n)));
            }
            break;
        }
        case InitialStateSpec::Kind::explicit_list: {
            if (config.initial.entries.empty()) throw Error("initial state: empty explicit list");
            for (const auto& [occ, a] : config.initial.entries) {
                occs.push_back(occ);
                amps.push_back(a);
            }
            break;
        }
    }

    PackedBasisTable<Word> table(layout);
    for (const auto& occ : occs) table.append_occupations(occ);

    // order by key, keeping amplitudes aligned
    std::vector<std::size_t> idx(table.rows);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return row_less<Word>(table.row(a), table.row(b));
    });
    PackedBasisTable<Word> sorted_table(layout);
    std::vector<cplx> sorted_amps;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (k > 0 && row_equal<Word>(table.row(idx[k]), table.row(idx[k - 1])))
            throw Error("initial state: duplicate basis key");
        sorted_table.append_row(table.row(idx[k]));
        sorted_amps.push_back(amps[idx[k]]);
    }
    sorted_table.sorted = true;

    double n2 = 0;
    for (const cplx& a : sorted_amps) n2 += std::norm(a);
    if (n2 <= 0) throw Error("initial state: not normalizable");
    for (cplx& a : sorted_amps) a /= std::sqrt(n2);
    return {std::move(sorted_table), std::move(sorted_amps)};
}

}  // namespace detail

/// Normalized initial state plus the effective space grown to order m_init
/// around its support.
inline std::pair<SparseState, EffectiveSpace> initialize(const RunConfig& config,
                                                         const HamiltonianTermSet& terms) {
    config.validate();
    if (!terms.has_exciton_register())
        throw Error("dynamics runs support exciton models (tb, holstein) only");
    auto [seeds, amps] = detail::build_seed_state(config, terms);

    EffectiveSpace space = grow_subspace(seeds, terms, config.m_init);

    SparseState seed_state;
    seed_state.table = std::make_shared<PackedBasisTable<Word>>(std::move(seeds));
    seed_state.coeff = std::move(amps);
    seed_state.t = 0;
    auto [state, discarded] = remap_state(seed_state, space);
    if (discarded != 0) throw Error("initialize: seed keys lost during growth");
    return {std::move(state), std::move(space)};
}

// ---------------------------------------------------------------------------
// stepping
// ---------------------------------------------------------------------------

struct StepOutput {
    SparseState state;
    EffectiveSpace space;
    DiagnosticsRecord record;
};

/// One full step: select the q_nom highest-weight keys from psi(t), grow the
/// effective space of order m around them, project psi(t) onto the grown
/// space (rescuing coefficients whose keys reappeared), then evolve inside
/// it. The input state and space are untouched, so a failed step leaves the
/// caller's last good state intact.
inline StepOutput step(const SparseState& state, const EffectiveSpace& space, const RunConfig& config,
                       const HamiltonianTermSet& terms, std::size_t step_index) {
    (void)space;  // the previous space is superseded by the regrowth
    DiagnosticsRecord rec;
    rec.step = step_index;
    rec.norm_pre = state_norm(state);

    auto kept = truncate_select(state, config.q_nom, mix_seed(config.seed + step_index));
    EffectiveSpace next = grow_subspace(kept, terms, config.m);
    require_memory(next.q_true() * sizeof(cplx) * 4, "state vectors");

    auto [psi, discarded] = remap_state(state, next);
    rec.discarded_weight = discarded;
    rec.norm_post = state_norm(psi);
    rec.q_true = next.q_true();
    rec.energy = csr_expectation(next.hamiltonian, psi.coeff);

    auto res = expmv(next.hamiltonian, psi.coeff, config.propagator);
    rec.taylor_order = res.order_used;
    rec.delta_norm_expmv = state_norm(psi) - rec.norm_post;
    psi.t = state.t + config.propagator.dt;
    rec.t = psi.t;
    return {std::move(psi), std::move(next), std::move(rec)};
}

// ---------------------------------------------------------------------------
// full run
// ---------------------------------------------------------------------------

namespace detail {

inline ObservablesRow observe(const SparseState& state, const EffectiveSpace& space,
                              const HamiltonianTermSet& terms) {
    ObservablesRow row;
    row.t = state.t;
    row.norm = state_norm(state);
    row.energy = energy(state, space);
    auto d = exciton_density(state, terms);
    row.rmsd = rmsd(d, terms.geometry);
    row.xbar = mean_position(d);
    row.amp = dipole_amplitude(state, terms);
    row.density = std::move(d.p);
    return row;
}

}  // namespace detail

/// Executes ceil(t_max / dt) steps, recording observables at the configured
/// cadence. A step failure aborts the run and reports the error while
/// keeping everything up to the last good step.
inline RunResult run(const RunConfig& config, const HamiltonianTermSet& terms) {
    config.validate();
    RunResult result;

    auto [state, space] = initialize(config, terms);
    if (space.q_true() > config.q_nom)
        result.warnings.push_back("initial effective space (q_true=" + std::to_string(space.q_true()) +
                                  ") exceeds q_nom=" + std::to_string(config.q_nom) +
                                  "; memory is bounded by the initial growth until truncation binds");

    result.trajectory.push_back(detail::observe(state, space, terms));
    if (config.emit_histograms)
        result.histograms.emplace_back(state.t, weight_histogram(state, config.histogram_bins));

    const std::size_t nsteps = config.step_count();
    for (std::size_t s = 1; s <= nsteps; ++s) {
        try {
            if (s == 1) {
                // The space grown at initialization with the higher order
                // m_init is the effective space of the first evolution;
                // adaptive regrowth with m starts once the state has spread.
                DiagnosticsRecord rec;
                rec.step = s;
                rec.norm_pre = state_norm(state);
                rec.norm_post = rec.norm_pre;
                rec.q_true = space.q_true();
                rec.energy = csr_expectation(space.hamiltonian, state.coeff);
                SparseState psi = state;
                auto res = expmv(space.hamiltonian, psi.coeff, config.propagator);
                rec.taylor_order = res.order_used;
                rec.delta_norm_expmv = state_norm(psi) - rec.norm_post;
                psi.t = state.t + config.propagator.dt;
                rec.t = psi.t;
                state = std::move(psi);
                result.diagnostics.push_back(rec);
            } else {
                auto out = step(state, space, config, terms, s);
                state = std::move(out.state);
                space = std::move(out.space);
                result.diagnostics.push_back(out.record);
            }
        } catch (const std::exception& e) {
            result.error = "step " + std::to_string(s) + ": " + e.what();
            break;
        }
        if (s % config.cadence == 0 || s == nsteps) {
            result.trajectory.push_back(detail::observe(state, space, terms));
            if (config.emit_histograms)
                result.histograms.emplace_back(state.t, weight_histogram(state, config.histogram_bins));
        }
    }

    result.final_state = std::move(state);
    result.final_space = std::move(space);
    return result;
}

inline RunResult run(const RunConfig& config) { return run(config, build_model(config.model)); }

}  // namespace paces
