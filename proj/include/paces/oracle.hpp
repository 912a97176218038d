#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "paces/basis_codec.hpp"
#include "paces/common.hpp"
#include "paces/lattice_models.hpp"

namespace paces {

// ===========================================================================
// Dense brute-force reference: the full Hamiltonian matrix on the truncated
// product space, propagated exactly through its eigendecomposition. Used to
// verify every other module at desk scale; never on the hot path.
// ===========================================================================

/// Dense Hamiltonian over the full product basis, enumerated in packed-key
/// lexicographic order (site 0 most significant).
struct DenseSystem {
    Eigen::MatrixXd h;
    PackedBasisTable<Word> table;  ///< full enumeration, sorted
    std::size_t dimension() const { return table.rows; }
};

/// Position of an occupation vector in the lexicographic enumeration.
inline std::size_t occupation_index(const SiteLayout<Word>& layout, std::span<const std::uint32_t> occ) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < layout.site_count(); ++i) idx = idx * layout.dims[i] + occ[i];
    return idx;
}

/// Enumerates the full product space of a layout in lexicographic order.
inline PackedBasisTable<Word> enumerate_full_space(const SiteLayout<Word>& layout, std::size_t cap) {
    double dim = 1;
    for (auto d : layout.dims) dim *= double(d);
    if (dim > double(cap))
        throw Error("dense oracle: dimension " + std::to_string(dim) + " exceeds cap " + std::to_string(cap));
    const std::size_t n = static_cast<std::size_t>(dim);

    PackedBasisTable<Word> table(layout);
    require_memory(table_memory_estimate(layout, n) / 8, "dense oracle basis table");
    table.words.reserve(n * layout.words_per_row);
    std::vector<std::uint32_t> occ(layout.site_count(), 0);
    for (std::size_t r = 0; r < n; ++r) {
        table.append_occupations(occ);
        // mixed-radix increment, least significant site last
        for (std::size_t i = layout.site_count(); i-- > 0;) {
            if (++occ[i] < layout.dims[i]) break;
            occ[i] = 0;
        }
    }
    table.sorted = true;  // lexicographic by construction
    return table;
}

/// Builds the dense matrix by applying the term set to every basis key.
inline DenseSystem dense_build(const HamiltonianTermSet& terms, std::size_t cap = 20000) {
    DenseSystem sys;
    sys.table = enumerate_full_space(terms.layout, cap);
    const std::size_t n = sys.table.rows;
    require_memory(std::uint64_t(n) * n * sizeof(double), "dense oracle matrix");
    sys.h = Eigen::MatrixXd::Zero(n, n);

    NeighborBuffer nb;
    std::vector<std::uint32_t> occ(terms.layout.site_count());
    const std::uint32_t w = terms.layout.words_per_row;
    for (std::size_t col = 0; col < n; ++col) {
        nb.clear();
        apply_terms(terms, sys.table.row(col), nb);
        for (std::size_t k = 0; k < nb.size(); ++k) {
            unpack_state<Word>(terms.layout, {nb.keys.data() + k * w, w}, occ);
            sys.h(static_cast<Eigen::Index>(occupation_index(terms.layout, occ)),
                  static_cast<Eigen::Index>(col)) = nb.amps[k];
        }
    }
    const double asym = (sys.h - sys.h.transpose()).cwiseAbs().maxCoeff();
    if (asym != 0.0) throw Error("dense oracle: assembled matrix is not symmetric");
    return sys;
}

/// Cached eigendecomposition for repeated exact evolution of one system.
struct DensePropagator {
    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs;
};

inline DensePropagator dense_diagonalize(const DenseSystem& sys) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.h);
    if (es.info() != Eigen::Success) throw Error("dense oracle: eigendecomposition failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

/// psi(t) = V exp(-i Lambda t) V^T psi0.
inline Eigen::VectorXcd dense_evolve(const DensePropagator& prop, const Eigen::VectorXcd& psi0, double t) {
    Eigen::VectorXcd modal = prop.evecs.transpose() * psi0;
    for (Eigen::Index i = 0; i < modal.size(); ++i)
        modal(i) *= std::exp(cplx(0, -prop.evals(i) * t));
    return prop.evecs * modal;
}

inline Eigen::VectorXcd dense_evolve(const DenseSystem& sys, const Eigen::VectorXcd& psi0, double t) {
    if (static_cast<std::size_t>(psi0.size()) != sys.dimension())
        throw Error("dense oracle: state dimension mismatch");
    return dense_evolve(dense_diagonalize(sys), psi0, t);
}

}  // namespace paces
