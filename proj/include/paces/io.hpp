#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "paces/common.hpp"
#include "paces/engine.hpp"
#include "paces/spectra.hpp"

namespace paces {

// ===========================================================================
// File formats: the binary state checkpoint and the CSV emitters. The
// checkpoint layout is fixed: magic "PACES\x01", then little-endian
// wordsize(u8), L(u32), per-site dims (u32 x L), q(u64),
// packed words (u32 x q*Omega), coefficients (f64 re, f64 im) x q, t(f64).
// ===========================================================================

namespace detail {

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(reinterpret_cast<const char*>(p), n);
}

template <class T>
inline void put_le(std::string& out, T v) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((std::uint64_t(v) >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_le(out, bits);
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw Error("checkpoint: truncated file");
    }
    template <class T>
    T get_le() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= std::uint64_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += sizeof(T);
        return static_cast<T>(v);
    }
    double get_f64() {
        const std::uint64_t bits = get_le<std::uint64_t>();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[6] = {'P', 'A', 'C', 'E', 'S', '\x01'};

inline void write_checkpoint(const std::string& path, const SparseState& state) {
    const auto& table = *state.table;
    const auto& layout = table.layout;
    static_assert(sizeof(Word) == 4, "checkpoint stores 32-bit table words");

    std::string out;
    detail::put_bytes(out, kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put_le<std::uint8_t>(out, SiteLayout<Word>::word_bits);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layout.site_count()));
    for (std::uint32_t d : layout.dims) detail::put_le<std::uint32_t>(out, d);
    detail::put_le<std::uint64_t>(out, table.rows);
    for (Word w : table.words) detail::put_le<std::uint32_t>(out, w);
    for (const cplx& c : state.coeff) {
        detail::put_f64(out, c.real());
        detail::put_f64(out, c.imag());
    }
    detail::put_f64(out, state.t);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open checkpoint for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("checkpoint write failed: " + path);
}

inline SparseState read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open checkpoint: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();

    detail::ByteReader r{buf};
    r.need(sizeof(kCheckpointMagic));
    if (std::memcmp(buf.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
        throw Error("checkpoint: bad magic bytes");
    r.pos = sizeof(kCheckpointMagic);

    const auto wordsize = r.get_le<std::uint8_t>();
    if (wordsize != SiteLayout<Word>::word_bits)
        throw Error("checkpoint: unsupported wordsize " + std::to_string(int(wordsize)));
    const auto nsites = r.get_le<std::uint32_t>();
    std::vector<std::uint32_t> dims(nsites);
    for (auto& d : dims) d = r.get_le<std::uint32_t>();

    SparseState state;
    auto table = std::make_shared<PackedBasisTable<Word>>(SiteLayout<Word>(dims));
    const auto q = r.get_le<std::uint64_t>();
    table->rows = q;
    table->words.resize(q * table->layout.words_per_row);
    for (auto& w : table->words) w = r.get_le<std::uint32_t>();
    table->sorted = true;
    for (std::size_t i = 1; i < table->rows; ++i)
        if (!row_less<Word>(table->row(i - 1), table->row(i))) {
            table->sorted = false;
            break;
        }

    state.coeff.resize(q);
    for (auto& c : state.coeff) {
        const double re = r.get_f64();
        const double im = r.get_f64();
        c = {re, im};
    }
    state.t = r.get_f64();
    if (r.pos != buf.size()) throw Error("checkpoint: trailing bytes");
    state.table = std::move(table);
    return state;
}

// ---------------------------------------------------------------------------
// CSV emitters; every file carries one comment line with the resolved config
// ---------------------------------------------------------------------------

inline void write_observables_csv(const std::string& path, const std::string& provenance,
                                  const std::vector<ObservablesRow>& rows, std::size_t n_sites) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "# " << provenance << "\n";
    f << "t,norm,energy,rmsd,xbar,re_amp,im_amp";
    for (std::size_t j = 0; j < n_sites; ++j) f << ",n" << j;
    f << "\n";
    for (const auto& r : rows) {
        f << detail::fmt_double(r.t) << ',' << detail::fmt_double(r.norm) << ','
          << detail::fmt_double(r.energy) << ',' << detail::fmt_double(r.rmsd) << ','
          << detail::fmt_double(r.xbar) << ',' << detail::fmt_double(r.amp.real()) << ','
          << detail::fmt_double(r.amp.imag());
        for (double d : r.density) f << ',' << detail::fmt_double(d);
        f << "\n";
    }
    if (!f) throw Error("write failed: " + path);
}

inline void write_diagnostics_csv(const std::string& path, const std::string& provenance,
                                  const std::vector<DiagnosticsRecord>& recs) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "# " << provenance << "\n";
    f << "step,t,norm_pre,norm_post,discarded_weight,delta_norm_expmv,energy,q_true,taylor_order\n";
    for (const auto& r : recs) {
        f << r.step << ',' << detail::fmt_double(r.t) << ',' << detail::fmt_double(r.norm_pre) << ','
          << detail::fmt_double(r.norm_post) << ',' << detail::fmt_double(r.discarded_weight) << ','
          << detail::fmt_double(r.delta_norm_expmv) << ',' << detail::fmt_double(r.energy) << ','
          << r.q_true << ',' << r.taylor_order << "\n";
    }
    if (!f) throw Error("write failed: " + path);
}

inline void write_spectrum_csv(const std::string& path, const std::string& provenance,
                               const std::vector<SpectrumPoint>& points) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "# " << provenance << "\n";
    f << "omega_over_omega0,A\n";
    for (const auto& p : points)
        f << detail::fmt_double(p.omega) << ',' << detail::fmt_double(p.a) << "\n";
    if (!f) throw Error("write failed: " + path);
}

inline void write_histogram_csv(const std::string& path, const std::string& provenance, double t,
                                const WeightHistogram& h) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + path);
    f << "# " << provenance << "\n";
    f << "# t=" << detail::fmt_double(t) << " support=" << h.support << " q50=" << h.q50
      << " q90=" << h.q90 << " q99=" << h.q99 << " q99.99=" << h.q9999
      << " tail_exponent=" << detail::fmt_double(h.tail_exponent) << "\n";
    f << "rank,weight\n";
    for (std::size_t i = 0; i < h.rank.size(); ++i)
        f << h.rank[i] << ',' << detail::fmt_double(h.weight[i]) << "\n";
    if (!f) throw Error("write failed: " + path);
}

/// Reads t, re_amp, im_amp columns back from an observables CSV.
inline std::vector<SignalSample> read_observables_signal(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open observables CSV: " + path);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
        break;
    }
    auto col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("observables CSV: missing column " + name + " in " + path);
    };
    const std::size_t ct = col("t"), cre = col("re_amp"), cim = col("im_amp");

    std::vector<SignalSample> out;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
        if (vals.size() < header.size()) throw Error("observables CSV: short row in " + path);
        out.push_back({vals[ct], cplx(vals[cre], vals[cim])});
    }
    return out;
}

}  // namespace paces
