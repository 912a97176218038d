#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "paces/basis_codec.hpp"
#include "paces/common.hpp"
#include "paces/lattice_models.hpp"

namespace paces {

// ===========================================================================
// Co-evolving effective Hilbert spaces: grow a key set through repeated
// application of the Hamiltonian, assemble the duplicate-free restricted
// Hamiltonian over the grown table, and remap state vectors between
// successive subspaces by sorted-merge key matching.
// ===========================================================================

/// Hermitian sparse matrix in compressed-row form. All supported models have
/// real matrix elements, so values are stored as doubles; rows act on
/// complex coefficient vectors.
struct CsrMatrix {
    std::int64_t n = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> val;

    std::size_t nnz() const { return val.size(); }
};

/// y = A x. Row-partitioned; deterministic for any thread count.
inline void csr_matvec(const CsrMatrix& a, std::span<const cplx> x, std::span<cplx> y) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < a.n; ++i) {
        cplx acc = 0;
        for (std::int64_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            acc += a.val[k] * x[static_cast<std::size_t>(a.col[k])];
        y[static_cast<std::size_t>(i)] = acc;
    }
}

/// <x|A|x>, real for Hermitian A; serial reduction for reproducibility.
inline double csr_expectation(const CsrMatrix& a, std::span<const cplx> x) {
    double acc = 0;
    for (std::int64_t i = 0; i < a.n; ++i) {
        cplx row = 0;
        for (std::int64_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            row += a.val[k] * x[static_cast<std::size_t>(a.col[k])];
        acc += std::real(std::conj(x[static_cast<std::size_t>(i)]) * row);
    }
    return acc;
}

inline double max_abs_value(const CsrMatrix& a) {
    double m = 0;
    for (double v : a.val) m = std::max(m, std::abs(v));
    return m;
}

/// Matrix elements recorded while growing a subspace, tagged with packed
/// source/target keys; resolved to table indices during assembly.
struct ExpansionTranscript {
    std::uint32_t width = 1;  ///< words per key
    std::vector<Word> src;    ///< column keys, flat
    std::vector<Word> dst;    ///< row keys, flat
    std::vector<double> amp;  ///< <dst|H|src>

    std::size_t size() const { return amp.size(); }
};

/// A grown subspace: sorted key table plus the restriction of the
/// Hamiltonian to its span, with every in-span element present exactly once.
struct EffectiveSpace {
    std::shared_ptr<const PackedBasisTable<Word>> table;
    CsrMatrix hamiltonian;
    int neighbor_order = 0;   ///< m used to grow
    std::size_t q_nom = 0;    ///< seed set size
    std::size_t q_true() const { return table ? table->rows : 0; }
};

/// Truncated wavefunction: coefficients aligned to the rows of a table.
struct SparseState {
    std::shared_ptr<const PackedBasisTable<Word>> table;
    std::vector<cplx> coeff;
    double t = 0;
};

inline double state_norm(const SparseState& s) {
    double acc = 0;
    for (const cplx& c : s.coeff) acc += std::norm(c);
    return std::sqrt(acc);
}

namespace detail {

/// Applies the term set to each row of `frontier`, appending one transcript
/// entry per emitted matrix element. Chunked so the per-chunk buffers can be
/// filled concurrently; concatenation order is fixed by chunk index.
inline void apply_to_rows(const HamiltonianTermSet& terms, const std::vector<Word>& frontier,
                          ExpansionTranscript& transcript, std::vector<Word>& neighbor_rows) {
    const std::uint32_t w = terms.layout.words_per_row;
    const std::size_t n = frontier.size() / w;
    constexpr std::size_t chunk = 2048;
    const std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<NeighborBuffer> buffers(nchunks);
    std::vector<std::vector<Word>> srcs(nchunks);

#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < nchunks; ++c) {
        NeighborBuffer one;
        const std::size_t lo = c * chunk, hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
            one.clear();
            std::span<const Word> key{frontier.data() + i * w, w};
            apply_terms(terms, key, one);
            buffers[c].keys.insert(buffers[c].keys.end(), one.keys.begin(), one.keys.end());
            buffers[c].amps.insert(buffers[c].amps.end(), one.amps.begin(), one.amps.end());
            for (std::size_t r = 0; r < one.size(); ++r)
                srcs[c].insert(srcs[c].end(), key.begin(), key.end());
        }
    }
    for (std::size_t c = 0; c < nchunks; ++c) {
        transcript.src.insert(transcript.src.end(), srcs[c].begin(), srcs[c].end());
        transcript.dst.insert(transcript.dst.end(), buffers[c].keys.begin(), buffers[c].keys.end());
        transcript.amp.insert(transcript.amp.end(), buffers[c].amps.begin(), buffers[c].amps.end());
        if (neighbor_rows.empty())
            neighbor_rows = std::move(buffers[c].keys);
        else
            neighbor_rows.insert(neighbor_rows.end(), buffers[c].keys.begin(), buffers[c].keys.end());
    }
}

}  // namespace detail

/// Resolves transcript keys against the table, closes under Hermitian
/// conjugation and compresses rows. Re-derived duplicates of the same
/// physical element are collapsed to a single entry; unequal duplicate
/// values indicate an internal error.
inline CsrMatrix assemble_effective_hamiltonian(const PackedBasisTable<Word>& table,
                                                const ExpansionTranscript& transcript) {
    if (!table.sorted) throw Error("assemble: table must be sorted");
    const std::uint32_t w = transcript.width;

    struct Entry {
        std::int32_t r, c;
        double v;
    };
    std::vector<Entry> entries;
    require_memory(std::uint64_t(transcript.size()) * 2 * sizeof(Entry), "matrix assembly buffer");
    entries.reserve(transcript.size() * 2);

    for (std::size_t k = 0; k < transcript.size(); ++k) {
        const std::size_t si = find_row(table, {transcript.src.data() + k * w, w});
        const std::size_t di = find_row(table, {transcript.dst.data() + k * w, w});
        if (si >= table.rows || di >= table.rows)
            throw Error("assemble: transcript key missing from table");
        const auto r = static_cast<std::int32_t>(di), c = static_cast<std::int32_t>(si);
        entries.push_back({r, c, transcript.amp[k]});
        if (r != c) entries.push_back({c, r, transcript.amp[k]});  // Hermitian closure (real elements)
    }

    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.r != b.r ? a.r < b.r : a.c < b.c;
    });

    CsrMatrix m;
    m.n = static_cast<std::int64_t>(table.rows);
    m.row_ptr.assign(table.rows + 1, 0);
    m.col.reserve(entries.size());
    m.val.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (k > 0 && entries[k].r == entries[k - 1].r && entries[k].c == entries[k - 1].c) {
            // same physical element re-derived along a different route
            if (entries[k].v != entries[k - 1].v)
                throw Error("assemble: duplicate matrix element with conflicting values");
            continue;
        }
        m.col.push_back(entries[k].c);
        m.val.push_back(entries[k].v);
        ++m.row_ptr[entries[k].r + 1];
    }
    for (std::size_t i = 0; i < table.rows; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
}

/// Grows the effective space around a sorted seed set: the table is the
/// union of neighbor sets up to order m (a breadth-first ball in the graph
/// the Hamiltonian induces on basis states), and the restricted Hamiltonian
/// carries every element with both endpoints in the table. Terms are applied
/// to each key exactly once; applications of the final frontier are filtered
/// to in-table columns.
inline EffectiveSpace grow_subspace(const PackedBasisTable<Word>& seeds,
                                    const HamiltonianTermSet& terms, int m) {
    if (seeds.rows == 0) throw Error("grow_subspace: empty seed set");
    if (!seeds.sorted) throw Error("grow_subspace: seed keys must be sorted");
    if (m < 0) throw Error("grow_subspace: neighbor order must be >= 0");
    if (!(seeds.layout == terms.layout)) throw Error("grow_subspace: layout mismatch");

    const std::uint32_t w = terms.layout.words_per_row;
    std::vector<Word> table_rows = seeds.words;
    std::vector<Word> frontier = seeds.words;

    ExpansionTranscript transcript;
    transcript.width = w;

    for (int k = 0; k < m && !frontier.empty(); ++k) {
        std::vector<Word> neighbor_rows;
        detail::apply_to_rows(terms, frontier, transcript, neighbor_rows);
        detail::sort_unique_rows(neighbor_rows, w);
        frontier = detail::diff_rows(neighbor_rows, table_rows, w);
        table_rows = detail::merge_rows(table_rows, frontier, w);
        require_memory((table_rows.size() + transcript.src.size() * 2) * sizeof(Word) +
                           transcript.amp.size() * sizeof(double),
                       "subspace growth");
    }

    auto table = std::make_shared<PackedBasisTable<Word>>(terms.layout);
    table->words = std::move(table_rows);
    table->rows = table->words.size() / w;
    table->sorted = true;

    if (!frontier.empty()) {
        // final frontier: keep only elements landing inside the table, so the
        // assembled matrix is the exact restriction of H to the span
        ExpansionTranscript edge;
        edge.width = w;
        std::vector<Word> ignored;
        detail::apply_to_rows(terms, frontier, edge, ignored);
        for (std::size_t k = 0; k < edge.size(); ++k) {
            if (find_row(*table, {edge.dst.data() + k * w, w}) < table->rows) {
                transcript.src.insert(transcript.src.end(), edge.src.begin() + k * w,
                                      edge.src.begin() + (k + 1) * w);
                transcript.dst.insert(transcript.dst.end(), edge.dst.begin() + k * w,
                                      edge.dst.begin() + (k + 1) * w);
                transcript.amp.push_back(edge.amp[k]);
            }
        }
    }

    EffectiveSpace space;
    space.table = table;
    space.neighbor_order = m;
    space.q_nom = seeds.rows;
    space.hamiltonian = assemble_effective_hamiltonian(*table, transcript);
    return space;
}

/// |N^(k)_M|: size of the exact k-fold image of the seed set under the
/// Hamiltonian (trivial neighbors included only where the diagonal is
/// nonzero).
inline std::size_t neighbor_image_size(const PackedBasisTable<Word>& seeds,
                                       const HamiltonianTermSet& terms, int k) {
    if (seeds.rows == 0) throw Error("connectivity: empty seed set");
    const std::uint32_t w = terms.layout.words_per_row;
    std::vector<Word> current = seeds.words;
    ExpansionTranscript scratch;
    for (int i = 0; i < k; ++i) {
        scratch.src.clear();
        scratch.dst.clear();
        scratch.amp.clear();
        std::vector<Word> image;
        detail::apply_to_rows(terms, current, scratch, image);
        detail::sort_unique_rows(image, w);
        current = std::move(image);
        if (current.empty()) break;
    }
    return current.size() / w;
}

/// kappa^(k)_M = |N^(k)_M| / |M|.
inline double connectivity(const PackedBasisTable<Word>& seeds, const HamiltonianTermSet& terms, int k) {
    return double(neighbor_image_size(seeds, terms, k)) / double(seeds.rows);
}

/// Projects a state onto a target space by sorted-merge key matching.
/// Coefficients of keys present in the target are copied; the squared norm
/// of everything else is returned as the discarded weight.
inline std::pair<SparseState, double> remap_state(const SparseState& state, const EffectiveSpace& target) {
    if (!state.table || !state.table->sorted) throw Error("remap: state table must be sorted");
    const auto& src = *state.table;
    const auto& dst = *target.table;
    const std::uint32_t w = src.layout.words_per_row;

    SparseState out;
    out.table = target.table;
    out.coeff.assign(dst.rows, cplx(0, 0));
    out.t = state.t;

    double discarded = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < src.rows; ++i) {
        std::span<const Word> row = src.row(i);
        while (j < dst.rows && row_less<Word>(dst.row(j), row)) ++j;
        if (j < dst.rows && row_equal<Word>(dst.row(j), row)) {
            out.coeff[j] = state.coeff[i];
            ++j;
        } else {
            discarded += std::norm(state.coeff[i]);
        }
    }
    return {std::move(out), discarded};
}

}  // namespace paces
