#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "paces/basis_codec.hpp"
#include "paces/common.hpp"

namespace paces {

// ===========================================================================
// Hamiltonians as geometry-aware symbolic term sets. A term set can be
// applied to a single packed basis key to enumerate all keys it couples to,
// together with the matrix elements. hbar = 1 and energies are in units of
// the phonon frequency throughout.
// ===========================================================================

/// Open-boundary chain / square grid / simple cubic lattice with row-major
/// site linearization.
struct LatticeGeometry {
    std::array<std::uint32_t, 3> extents{1, 1, 1};
    int ndim = 1;

    LatticeGeometry() = default;
    explicit LatticeGeometry(std::vector<std::uint32_t> ext) {
        if (ext.empty() || ext.size() > 3) throw Error("lattice must have 1 to 3 extents");
        ndim = static_cast<int>(ext.size());
        for (std::size_t i = 0; i < ext.size(); ++i) {
            if (ext[i] == 0) throw Error("lattice extent must be positive");
            extents[i] = ext[i];
        }
    }

    std::uint32_t sites() const { return extents[0] * extents[1] * extents[2]; }

    std::uint32_t index(std::uint32_t x, std::uint32_t y = 0, std::uint32_t z = 0) const {
        return (z * extents[1] + y) * extents[0] + x;
    }

    std::array<std::uint32_t, 3> coords(std::uint32_t idx) const {
        std::array<std::uint32_t, 3> c;
        c[0] = idx % extents[0];
        c[1] = (idx / extents[0]) % extents[1];
        c[2] = idx / (extents[0] * extents[1]);
        return c;
    }

    /// Every nearest-neighbor pair exactly once, (low index, high index).
    std::vector<std::pair<std::uint32_t, std::uint32_t>> bonds() const {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
        for (std::uint32_t z = 0; z < extents[2]; ++z)
            for (std::uint32_t y = 0; y < extents[1]; ++y)
                for (std::uint32_t x = 0; x < extents[0]; ++x) {
                    const std::uint32_t here = index(x, y, z);
                    if (x + 1 < extents[0]) out.emplace_back(here, index(x + 1, y, z));
                    if (y + 1 < extents[1]) out.emplace_back(here, index(x, y + 1, z));
                    if (z + 1 < extents[2]) out.emplace_back(here, index(x, y, z + 1));
                }
        return out;
    }
};

enum class ModelKind { tight_binding, holstein, spin_lattice };

/// Holstein chain/lattice parameters; the tight-binding model is the g = 0,
/// no-phonon special case and uses its own ModelKind. Scalars broadcast.
struct HolsteinParams {
    std::vector<double> eps;     ///< onsite energies, per site or one value
    std::vector<double> hop_j;   ///< bond hopping, per bond or one value
    std::vector<double> omega;   ///< phonon frequencies, per site or one value
    std::vector<double> g;       ///< vibronic couplings, per site or one value
    std::uint32_t d_pho = 1;     ///< hard phonon cutoff dimension per site
};

/// Nearest-neighbor sigma_x sigma_x bonds plus per-site sigma_z fields.
struct SpinLatticeParams {
    std::vector<double> bond_v;  ///< per bond or one value
    std::vector<double> field;   ///< per site or one value
};

struct ModelSpec {
    ModelKind kind = ModelKind::holstein;
    LatticeGeometry geometry;
    HolsteinParams holstein;
    SpinLatticeParams spin;
};

enum class TermKind : std::uint8_t {
    diagonal_exciton,  ///< eps |j><j|
    phonon_number,     ///< omega a_j^dag a_j
    vibronic_ladder,   ///< g |j><j| (a_j^dag + a_j)
    hop,               ///< J |j><k|, conjugate generated on application
    spin_flip_pair,    ///< v sigma_x^j sigma_x^k
    spin_field,        ///< f sigma_z^j
};

struct Term {
    TermKind kind;
    std::uint32_t a = 0;  ///< primary site
    std::uint32_t b = 0;  ///< partner site for two-site terms
    double amp = 0;
};

/// Symbolic Hamiltonian: a term list plus the packed-site layout it acts on.
/// For exciton models the first packed site is the exciton position register
/// (dimension = lattice sites), followed by one phonon register per lattice
/// site; restriction to the single-exciton manifold is structural.
struct HamiltonianTermSet {
    ModelKind kind = ModelKind::holstein;
    LatticeGeometry geometry;
    SiteLayout<Word> layout;
    std::vector<Term> terms;
    std::uint32_t d_pho = 1;

    bool has_exciton_register() const { return kind != ModelKind::spin_lattice; }
    std::uint32_t lattice_sites() const { return geometry.sites(); }

    /// Index of the phonon register of lattice site j in the packed layout.
    std::size_t phonon_slot(std::uint32_t j) const { return 1 + std::size_t(j); }
};

namespace detail {

inline std::vector<double> broadcast(std::vector<double> v, std::size_t n, const char* name) {
    if (v.empty()) return std::vector<double>(n, 0.0);
    if (v.size() == 1) return std::vector<double>(n, v[0]);
    if (v.size() != n)
        throw Error(std::string(name) + ": expected 1 or " + std::to_string(n) + " values, got " +
                    std::to_string(v.size()));
    return v;
}

}  // namespace detail

inline HamiltonianTermSet build_model(const ModelSpec& spec) {
    HamiltonianTermSet ts;
    ts.kind = spec.kind;
    ts.geometry = spec.geometry;
    const std::uint32_t n = spec.geometry.sites();
    const auto bonds = spec.geometry.bonds();

    switch (spec.kind) {
        case ModelKind::tight_binding:
        case ModelKind::holstein: {
            const auto& p = spec.holstein;
            const auto eps = detail::broadcast(p.eps, n, "eps");
            const auto hop = detail::broadcast(p.hop_j, bonds.size(), "J");
            std::vector<std::uint32_t> dims{n};
            if (spec.kind == ModelKind::holstein) {
                if (p.d_pho < 1) throw Error("d_pho must be >= 1");
                ts.d_pho = p.d_pho;
                dims.insert(dims.end(), n, p.d_pho);
            }
            ts.layout = SiteLayout<Word>(dims);
            for (std::uint32_t j = 0; j < n; ++j)
                if (eps[j] != 0.0) ts.terms.push_back({TermKind::diagonal_exciton, j, j, eps[j]});
            for (std::size_t b = 0; b < bonds.size(); ++b)
                if (hop[b] != 0.0)
                    ts.terms.push_back({TermKind::hop, bonds[b].first, bonds[b].second, hop[b]});
            if (spec.kind == ModelKind::holstein) {
                const auto omega = detail::broadcast(p.omega, n, "omega0");
                const auto g = detail::broadcast(p.g, n, "g");
                for (std::uint32_t j = 0; j < n; ++j) {
                    if (omega[j] != 0.0) ts.terms.push_back({TermKind::phonon_number, j, j, omega[j]});
                    if (g[j] != 0.0) ts.terms.push_back({TermKind::vibronic_ladder, j, j, g[j]});
                }
            }
            break;
        }
        case ModelKind::spin_lattice: {
            const auto& p = spec.spin;
            const auto v = detail::broadcast(p.bond_v, bonds.size(), "v");
            const auto f = detail::broadcast(p.field, n, "field");
            ts.layout = SiteLayout<Word>(std::vector<std::uint32_t>(n, 2));
            for (std::size_t b = 0; b < bonds.size(); ++b)
                if (v[b] != 0.0)
                    ts.terms.push_back({TermKind::spin_flip_pair, bonds[b].first, bonds[b].second, v[b]});
            for (std::uint32_t j = 0; j < n; ++j)
                if (f[j] != 0.0) ts.terms.push_back({TermKind::spin_field, j, j, f[j]});
            break;
        }
    }
    return ts;
}

// ---------------------------------------------------------------------------
// term application
// ---------------------------------------------------------------------------

/// Reusable output container for apply_terms: neighbor keys (flat, one row of
/// layout words each) with their matrix elements <neighbor|H|key>.
struct NeighborBuffer {
    std::vector<Word> keys;
    std::vector<double> amps;
    std::vector<std::uint32_t> occ;  // decode scratch

    void clear() {
        keys.clear();
        amps.clear();
    }
    std::size_t size() const { return amps.size(); }
};

/// Enumerates every basis state with a nonzero Hamiltonian matrix element to
/// `key`, including the diagonal when it is nonzero. Raising a phonon
/// register that already sits at the cutoff d_pho - 1 is dropped.
inline void apply_terms(const HamiltonianTermSet& ts, std::span<const Word> key, NeighborBuffer& out) {
    const auto& layout = ts.layout;
    const std::uint32_t w = layout.words_per_row;
    out.occ.resize(layout.site_count());
    unpack_state<Word>(layout, key, out.occ);  // validates the key

    const std::uint32_t exc = ts.has_exciton_register() ? out.occ[0] : 0;
    double diag = 0.0;

    auto emit_with_site = [&](std::size_t slot, std::uint32_t value, double amp) {
        const std::size_t base = out.keys.size();
        out.keys.insert(out.keys.end(), key.begin(), key.end());
        set_site<Word>(layout, {out.keys.data() + base, w}, slot, value);
        out.amps.push_back(amp);
    };

    for (const Term& t : ts.terms) {
        switch (t.kind) {
            case TermKind::diagonal_exciton:
                if (exc == t.a) diag += t.amp;
                break;
            case TermKind::phonon_number:
                diag += t.amp * double(out.occ[ts.phonon_slot(t.a)]);
                break;
            case TermKind::vibronic_ladder: {
                if (exc != t.a) break;
                const std::size_t slot = ts.phonon_slot(t.a);
                const std::uint32_t nph = out.occ[slot];
                if (nph + 1 < ts.d_pho)  // hard cutoff: no raising past d_pho - 1
                    emit_with_site(slot, nph + 1, t.amp * std::sqrt(double(nph + 1)));
                if (nph >= 1) emit_with_site(slot, nph - 1, t.amp * std::sqrt(double(nph)));
                break;
            }
            case TermKind::hop:
                if (exc == t.a) emit_with_site(0, t.b, t.amp);
                else if (exc == t.b) emit_with_site(0, t.a, t.amp);
                break;
            case TermKind::spin_flip_pair: {
                const std::size_t base = out.keys.size();
                out.keys.insert(out.keys.end(), key.begin(), key.end());
                std::span<Word> row{out.keys.data() + base, w};
                set_site<Word>(layout, row, t.a, 1 - out.occ[t.a]);
                set_site<Word>(layout, row, t.b, 1 - out.occ[t.b]);
                out.amps.push_back(t.amp);
                break;
            }
            case TermKind::spin_field:
                diag += t.amp * (out.occ[t.a] == 0 ? 1.0 : -1.0);
                break;
        }
    }
    if (diag != 0.0) {
        out.keys.insert(out.keys.end(), key.begin(), key.end());
        out.amps.push_back(diag);
    }
}

// ---------------------------------------------------------------------------
// analytic sparsity
// ---------------------------------------------------------------------------

/// Hilbert-space dimension of the model's packed layout.
inline double model_dimension(const ModelSpec& spec) {
    const double n = spec.geometry.sites();
    switch (spec.kind) {
        case ModelKind::tight_binding:
            return n;
        case ModelKind::holstein:
            return n * std::pow(double(spec.holstein.d_pho), n);
        case ModelKind::spin_lattice:
            return std::pow(2.0, n);
    }
    return 0;
}

/// Nonzero count of the dense realization, assuming generically nonzero
/// parameters. For a Holstein chain this reduces to
/// dim * (5L - 2 - 2L/d_pho) / L, for tight-binding to 3L - 2 and for the
/// spin lattice to (1 + bonds) * 2^sites.
inline double predicted_nnz(const ModelSpec& spec) {
    const double n = spec.geometry.sites();
    const double nb = double(spec.geometry.bonds().size());
    switch (spec.kind) {
        case ModelKind::tight_binding:
            return n + 2.0 * nb;
        case ModelKind::holstein: {
            const double d = spec.holstein.d_pho;
            const double dim_pho = std::pow(d, n);
            // diagonals + hops + ladder elements
            return dim_pho * (n + 2.0 * nb + 2.0 * n * (1.0 - 1.0 / d));
        }
        case ModelKind::spin_lattice:
            return (1.0 + nb) * std::pow(2.0, n);
    }
    return 0;
}

inline double predicted_density(const ModelSpec& spec) {
    const double dim = model_dimension(spec);
    return predicted_nnz(spec) / (dim * dim);
}

}  // namespace paces
