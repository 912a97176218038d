#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "paces/common.hpp"
#include "paces/lattice_models.hpp"
#include "paces/subspace.hpp"

namespace paces {

// ===========================================================================
// Measured quantities: norm, energy, exciton density and its spread, per-site
// phonon numbers, vacuum-overlap dipole amplitude, and coefficient-weight
// histograms. All are pure reductions over the coefficient array.
// ===========================================================================

/// Per-lattice-site exciton probabilities; sums to the squared norm.
struct ExcitonDensity {
    std::vector<double> p;  ///< indexed by linearized lattice site
};

inline ExcitonDensity exciton_density(const SparseState& state, const HamiltonianTermSet& terms) {
    if (!terms.has_exciton_register()) throw Error("exciton density: model has no exciton register");
    ExcitonDensity d;
    d.p.assign(terms.lattice_sites(), 0.0);
    const auto& table = *state.table;
    for (std::size_t i = 0; i < table.rows; ++i) {
        const double w = std::norm(state.coeff[i]);
        if (w == 0.0) continue;
        d.p[get_site<Word>(table.layout, table.row(i), 0)] += w;
    }
    return d;
}

/// Mean linearized position sum_n x_n P(x_n) (not normalized by the total
/// weight; for a norm-1 state this is the position expectation).
inline double mean_position(const ExcitonDensity& d) {
    double acc = 0;
    for (std::size_t i = 0; i < d.p.size(); ++i) acc += double(i) * d.p[i];
    return acc;
}

/// Standard deviation of the exciton position distribution over lattice
/// coordinates (Euclidean in 2D/3D). Zero for a point mass.
inline double rmsd(const ExcitonDensity& d, const LatticeGeometry& geom) {
    double wsum = 0;
    std::array<double, 3> mean{0, 0, 0};
    for (std::uint32_t i = 0; i < d.p.size(); ++i) {
        const auto c = geom.coords(i);
        wsum += d.p[i];
        for (int a = 0; a < 3; ++a) mean[a] += d.p[i] * double(c[a]);
    }
    if (wsum <= 0) throw Error("rmsd: zero-norm state");
    for (int a = 0; a < 3; ++a) mean[a] /= wsum;
    double var = 0;
    for (std::uint32_t i = 0; i < d.p.size(); ++i) {
        const auto c = geom.coords(i);
        double r2 = 0;
        for (int a = 0; a < 3; ++a) {
            const double dx = double(c[a]) - mean[a];
            r2 += dx * dx;
        }
        var += (d.p[i] / wsum) * r2;
    }
    return std::sqrt(var);
}

inline double norm(const SparseState& state) { return state_norm(state); }

/// <psi|H_eff|psi> / <psi|psi>.
inline double energy(const SparseState& state, const EffectiveSpace& space) {
    if (state.table != space.table && !(state.table && space.table && state.table->words == space.table->words))
        throw Error("energy: state is not aligned to the space");
    const double n2 = std::pow(state_norm(state), 2);
    if (n2 == 0.0) throw Error("energy: zero-norm state");
    return csr_expectation(space.hamiltonian, state.coeff) / n2;
}

/// Mean phonon occupation per lattice site, weighted by |c|^2.
inline std::vector<double> phonon_numbers(const SparseState& state, const HamiltonianTermSet& terms) {
    if (terms.kind != ModelKind::holstein) throw Error("phonon numbers: not a Holstein model");
    std::vector<double> n(terms.lattice_sites(), 0.0);
    const auto& table = *state.table;
    for (std::size_t i = 0; i < table.rows; ++i) {
        const double w = std::norm(state.coeff[i]);
        if (w == 0.0) continue;
        for (std::uint32_t j = 0; j < terms.lattice_sites(); ++j)
            n[j] += w * double(get_site<Word>(table.layout, table.row(i), terms.phonon_slot(j)));
    }
    return n;
}

/// Overlap of the state with the normalized symmetric optical state
/// (1/sqrt(L)) sum_j |j> (x) |vacuum>: picks out the L vacuum-phonon keys.
inline cplx dipole_amplitude(const SparseState& state, const HamiltonianTermSet& terms) {
    if (!terms.has_exciton_register()) throw Error("dipole amplitude: model has no exciton register");
    const auto& table = *state.table;
    const std::uint32_t n = terms.lattice_sites();
    std::vector<std::uint32_t> occ(terms.layout.site_count(), 0);
    cplx acc = 0;
    for (std::uint32_t j = 0; j < n; ++j) {
        occ[0] = j;
        auto key = pack_state<Word>(terms.layout, occ);
        const std::size_t idx = find_row(table, std::span<const Word>(key));
        if (idx < table.rows) acc += state.coeff[idx];
    }
    return acc / std::sqrt(double(n));
}

/// Sorted coefficient-weight curve with cumulative-weight quantile markers.
struct WeightHistogram {
    std::vector<std::size_t> rank;    ///< 1-based ranks of the sampled points
    std::vector<double> weight;      ///< |c|^2 at each sampled rank, descending
    std::size_t support = 0;         ///< number of nonzero coefficients
    std::size_t q50 = 0, q90 = 0, q99 = 0, q9999 = 0;  ///< counts reaching 50/90/99/99.99 %
    double tail_exponent = 0;        ///< least-squares slope of log w vs log rank over the tail
};

inline WeightHistogram weight_histogram(const SparseState& state, std::size_t bins = 0) {
    std::vector<double> w;
    w.reserve(state.coeff.size());
    for (const cplx& c : state.coeff) {
        const double v = std::norm(c);
        if (v > 0) w.push_back(v);
    }
    if (w.empty()) throw Error("weight histogram: empty state");
    std::sort(w.begin(), w.end(), std::greater<double>());

    WeightHistogram h;
    h.support = w.size();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double running = 0;
    std::size_t marks_done = 0;
    const double fractions[4] = {0.50, 0.90, 0.99, 0.9999};
    std::size_t* marks[4] = {&h.q50, &h.q90, &h.q99, &h.q9999};
    for (std::size_t i = 0; i < w.size() && marks_done < 4; ++i) {
        running += w[i];
        while (marks_done < 4 && running >= fractions[marks_done] * total - 1e-15 * total) {
            *marks[marks_done] = i + 1;
            ++marks_done;
        }
    }
    while (marks_done < 4) *marks[marks_done++] = w.size();

    // tail slope over the last nine deciles (skip the head, which is not power-law)
    const std::size_t lo = w.size() / 10;
    if (w.size() - lo >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t cnt = 0;
        for (std::size_t i = lo; i < w.size(); ++i) {
            const double x = std::log(double(i + 1)), y = std::log(w[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
        const double denom = cnt * sxx - sx * sx;
        h.tail_exponent = denom != 0 ? (cnt * sxy - sx * sy) / denom : 0.0;
    }

    // curve, downsampled to at most `bins` points (0 = full curve)
    const std::size_t npts = (bins == 0 || w.size() <= bins) ? w.size() : bins;
    h.rank.reserve(npts);
    h.weight.reserve(npts);
    for (std::size_t k = 0; k < npts; ++k) {
        const std::size_t i = npts == 1 ? 0 : k * (w.size() - 1) / (npts - 1);
        h.rank.push_back(i + 1);
        h.weight.push_back(w[i]);
    }
    return h;
}

}  // namespace paces
