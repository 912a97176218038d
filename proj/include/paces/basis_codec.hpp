#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <type_traits>
#include <vector>

#include "paces/common.hpp"

namespace paces {

// ===========================================================================
// Lossless bit-level codec for many-body basis labels.
//
// A basis label is a vector of per-site occupation numbers n_i with
// 0 <= n_i < d_i. Each site is assigned ceil(log2 d_i) bits and the payloads
// are packed back to back, site 1 first, into Omega fixed-size words with
// site 1 occupying the most significant bits of word 1. Payloads that
// straddle a word boundary are split with their high bits in the earlier
// word. This layout makes lexicographic comparison of word rows equal to
// lexicographic comparison of occupation vectors, which the subspace module
// relies on for sort-based deduplication.
// ===========================================================================

namespace detail {

inline std::uint8_t bits_for_dim(std::uint32_t d) {
    // d == 1 carries no information and occupies zero bits.
    return d <= 1 ? 0 : static_cast<std::uint8_t>(std::bit_width(d - 1));
}

}  // namespace detail

/// Geometry of a packed row: per-site dimensions, bit offsets, word count.
template <class W>
struct SiteLayout {
    static_assert(std::is_unsigned_v<W>, "word type must be unsigned");
    static constexpr std::uint32_t word_bits = std::numeric_limits<W>::digits;

    std::vector<std::uint32_t> dims;     ///< d_i per site
    std::vector<std::uint8_t> bits;      ///< ceil(log2 d_i) per site
    std::vector<std::uint32_t> offsets;  ///< first bit of each site payload
    std::uint32_t total_bits = 0;
    std::uint32_t words_per_row = 1;     ///< Omega

    SiteLayout() = default;

    explicit SiteLayout(std::vector<std::uint32_t> site_dims) : dims(std::move(site_dims)) {
        if (dims.empty()) throw Error("site layout needs at least one site");
        bits.reserve(dims.size());
        offsets.reserve(dims.size());
        std::uint32_t off = 0;
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (dims[i] < 1) throw Error("site dimension must be >= 1 at site " + std::to_string(i));
            const std::uint8_t b = detail::bits_for_dim(dims[i]);
            if (b > word_bits)
                throw Error("site dimension too large for word size at site " + std::to_string(i));
            bits.push_back(b);
            offsets.push_back(off);
            off += b;
        }
        total_bits = off;
        words_per_row = std::max<std::uint32_t>(1, (total_bits + word_bits - 1) / word_bits);
    }

    static SiteLayout uniform(std::size_t site_count, std::uint32_t d) {
        return SiteLayout(std::vector<std::uint32_t>(site_count, d));
    }

    std::size_t site_count() const { return dims.size(); }

    bool operator==(const SiteLayout& o) const { return dims == o.dims; }
};

namespace detail {

template <class W>
inline W low_mask(std::uint32_t nbits) {
    constexpr std::uint32_t WB = std::numeric_limits<W>::digits;
    return nbits >= WB ? ~W(0) : static_cast<W>((W(1) << nbits) - 1);
}

}  // namespace detail

/// Reads the occupation of one site from a packed row. No range check.
template <class W>
inline std::uint32_t get_site(const SiteLayout<W>& layout, std::type_identity_t<std::span<const W>> row, std::size_t site) {
    constexpr std::uint32_t WB = SiteLayout<W>::word_bits;
    const std::uint32_t b = layout.bits[site];
    if (b == 0) return 0;
    const std::uint32_t off = layout.offsets[site];
    const std::uint32_t wi = off / WB;
    const std::uint32_t bit = off % WB;
    const std::uint32_t avail = WB - bit;
    if (b <= avail) {
        return static_cast<std::uint32_t>((row[wi] >> (avail - b)) & detail::low_mask<W>(b));
    }
    const std::uint32_t lo = b - avail;  // bits continuing in the next word
    const std::uint32_t hi_part = static_cast<std::uint32_t>(row[wi] & detail::low_mask<W>(avail));
    const std::uint32_t lo_part = static_cast<std::uint32_t>(row[wi + 1] >> (WB - lo));
    return (hi_part << lo) | lo_part;
}

/// Overwrites the occupation of one site in a packed row. No range check.
template <class W>
inline void set_site(const SiteLayout<W>& layout, std::type_identity_t<std::span<W>> row, std::size_t site, std::uint32_t value) {
    constexpr std::uint32_t WB = SiteLayout<W>::word_bits;
    const std::uint32_t b = layout.bits[site];
    if (b == 0) return;
    const std::uint32_t off = layout.offsets[site];
    const std::uint32_t wi = off / WB;
    const std::uint32_t bit = off % WB;
    const std::uint32_t avail = WB - bit;
    if (b <= avail) {
        const std::uint32_t sh = avail - b;
        row[wi] = static_cast<W>((row[wi] & ~(detail::low_mask<W>(b) << sh)) | (W(value) << sh));
        return;
    }
    const std::uint32_t lo = b - avail;
    row[wi] = static_cast<W>((row[wi] & ~detail::low_mask<W>(avail)) | W(value >> lo));
    const std::uint32_t sh = WB - lo;
    row[wi + 1] =
        static_cast<W>((row[wi + 1] & ~(detail::low_mask<W>(lo) << sh)) | (W(value & detail::low_mask<std::uint32_t>(lo)) << sh));
}

/// Encodes an occupation vector into Omega packed words.
template <class W>
inline void pack_state(const SiteLayout<W>& layout, std::span<const std::uint32_t> occupations, std::type_identity_t<std::span<W>> out) {
    if (occupations.size() != layout.site_count())
        throw Error("pack: occupation vector length " + std::to_string(occupations.size()) +
                    " does not match site count " + std::to_string(layout.site_count()));
    if (out.size() < layout.words_per_row) throw Error("pack: output row too short");
    std::fill(out.begin(), out.begin() + layout.words_per_row, W(0));
    for (std::size_t i = 0; i < occupations.size(); ++i) {
        if (occupations[i] >= layout.dims[i])
            throw Error("pack: occupation " + std::to_string(occupations[i]) + " out of range at site " +
                        std::to_string(i) + " (dim " + std::to_string(layout.dims[i]) + ")");
        set_site(layout, out, i, occupations[i]);
    }
}

template <class W>
inline std::vector<W> pack_state(const SiteLayout<W>& layout, std::span<const std::uint32_t> occupations) {
    std::vector<W> row(layout.words_per_row, W(0));
    pack_state<W>(layout, occupations, row);
    return row;
}

/// Decodes a packed row back into per-site occupations.
template <class W>
inline void unpack_state(const SiteLayout<W>& layout, std::type_identity_t<std::span<const W>> row, std::span<std::uint32_t> out) {
    if (row.size() < layout.words_per_row) throw Error("unpack: row too short");
    if (out.size() != layout.site_count()) throw Error("unpack: output length does not match site count");
    for (std::size_t i = 0; i < layout.site_count(); ++i) {
        const std::uint32_t v = get_site(layout, row, i);
        if (v >= layout.dims[i])
            throw Error("unpack: corrupt row, decoded value " + std::to_string(v) + " >= dim " +
                        std::to_string(layout.dims[i]) + " at site " + std::to_string(i));
        out[i] = v;
    }
}

template <class W>
inline std::vector<std::uint32_t> unpack_state(const SiteLayout<W>& layout, std::type_identity_t<std::span<const W>> row) {
    std::vector<std::uint32_t> occ(layout.site_count());
    unpack_state<W>(layout, row, occ);
    return occ;
}

/// Memory footprint of a q-row lookup table in bits: q * Omega * wordsize.
/// Per row this is sum_i ceil(log2 d_i) payload bits plus up to
/// wordsize - 1 bits of padding in the last word.
template <class W>
inline std::uint64_t table_memory_estimate(const SiteLayout<W>& layout, std::uint64_t q) {
    return q * std::uint64_t(layout.words_per_row) * std::uint64_t(SiteLayout<W>::word_bits);
}

// ---------------------------------------------------------------------------
// row ordering
// ---------------------------------------------------------------------------

/// Lexicographic comparison of two packed rows (word-major, MSB-first packing
/// makes this equal to occupation-vector lexicographic order).
template <class W>
inline bool row_less(std::span<const W> a, std::span<const W> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

template <class W>
inline bool row_equal(std::span<const W> a, std::span<const W> b) {
    return std::equal(a.begin(), a.end(), b.begin());
}

// ---------------------------------------------------------------------------
// packed table
// ---------------------------------------------------------------------------

/// A q x Omega row-major array of packed basis labels.
template <class W>
struct PackedBasisTable {
    SiteLayout<W> layout;
    std::size_t rows = 0;
    std::vector<W> words;  ///< rows * words_per_row, row-major
    bool sorted = false;   ///< rows strictly increasing (implies no duplicates)

    PackedBasisTable() = default;
    explicit PackedBasisTable(SiteLayout<W> l) : layout(std::move(l)) {}

    std::span<const W> row(std::size_t i) const {
        return {words.data() + i * layout.words_per_row, layout.words_per_row};
    }
    std::span<W> row(std::size_t i) {
        return {words.data() + i * layout.words_per_row, layout.words_per_row};
    }

    void append_row(std::span<const W> r) {
        words.insert(words.end(), r.begin(), r.end());
        ++rows;
        sorted = false;
    }

    void append_occupations(std::span<const std::uint32_t> occ) {
        const std::size_t base = words.size();
        words.resize(base + layout.words_per_row, W(0));
        pack_state<W>(layout, occ, {words.data() + base, layout.words_per_row});
        ++rows;
        sorted = false;
    }

    std::uint64_t memory_bits() const { return table_memory_estimate(layout, rows); }
};

// ---------------------------------------------------------------------------
// sorted-row algebra (building blocks for subspace growth)
// ---------------------------------------------------------------------------

namespace detail {

/// Sorts rows of width `w` stored flat in `rows` and removes duplicates.
template <class W>
inline void sort_unique_rows(std::vector<W>& rows, std::uint32_t w) {
    const std::size_t n = rows.size() / w;
    if (n <= 1) return;
    if (w == 1) {
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        return;
    }
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    const W* base = rows.data();
    std::sort(idx.begin(), idx.end(), [base, w](std::uint32_t a, std::uint32_t b) {
        return row_less<W>({base + std::size_t(a) * w, w}, {base + std::size_t(b) * w, w});
    });
    std::vector<W> out;
    out.reserve(rows.size());
    for (std::size_t k = 0; k < n; ++k) {
        std::span<const W> r{base + std::size_t(idx[k]) * w, w};
        if (!out.empty() && row_equal<W>({out.data() + out.size() - w, w}, r)) continue;
        out.insert(out.end(), r.begin(), r.end());
    }
    rows.swap(out);
}

/// a \ b for flat sorted unique row arrays.
template <class W>
inline std::vector<W> diff_rows(const std::vector<W>& a, const std::vector<W>& b, std::uint32_t w) {
    std::vector<W> out;
    std::size_t i = 0, j = 0;
    const std::size_t na = a.size() / w, nb = b.size() / w;
    while (i < na && j < nb) {
        std::span<const W> ra{a.data() + i * w, w}, rb{b.data() + j * w, w};
        if (row_less<W>(ra, rb)) {
            out.insert(out.end(), ra.begin(), ra.end());
            ++i;
        } else if (row_less<W>(rb, ra)) {
            ++j;
        } else {
            ++i;
            ++j;
        }
    }
    for (; i < na; ++i) {
        std::span<const W> ra{a.data() + i * w, w};
        out.insert(out.end(), ra.begin(), ra.end());
    }
    return out;
}

/// Union of two flat sorted unique row arrays.
template <class W>
inline std::vector<W> merge_rows(const std::vector<W>& a, const std::vector<W>& b, std::uint32_t w) {
    std::vector<W> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    const std::size_t na = a.size() / w, nb = b.size() / w;
    while (i < na && j < nb) {
        std::span<const W> ra{a.data() + i * w, w}, rb{b.data() + j * w, w};
        if (row_less<W>(ra, rb)) {
            out.insert(out.end(), ra.begin(), ra.end());
            ++i;
        } else if (row_less<W>(rb, ra)) {
            out.insert(out.end(), rb.begin(), rb.end());
            ++j;
        } else {
            out.insert(out.end(), ra.begin(), ra.end());
            ++i;
            ++j;
        }
    }
    for (; i < na; ++i) out.insert(out.end(), a.data() + i * w, a.data() + (i + 1) * w);
    for (; j < nb; ++j) out.insert(out.end(), b.data() + j * w, b.data() + (j + 1) * w);
    return out;
}

}  // namespace detail

/// Sorts table rows lexicographically and drops duplicates.
template <class W>
inline void sort_and_unique(PackedBasisTable<W>& table) {
    detail::sort_unique_rows(table.words, table.layout.words_per_row);
    table.rows = table.words.size() / table.layout.words_per_row;
    table.sorted = true;
}

/// Binary search in a sorted table; returns row index or rows if absent.
template <class W>
inline std::size_t find_row(const PackedBasisTable<W>& table, std::type_identity_t<std::span<const W>> key) {
    if (!table.sorted) throw Error("find_row requires a sorted table");
    const std::uint32_t w = table.layout.words_per_row;
    std::size_t lo = 0, hi = table.rows;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (row_less<W>(table.row(mid), key))
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo < table.rows && row_equal<W>(table.row(lo), key)) return lo;
    return table.rows;
}

}  // namespace paces
