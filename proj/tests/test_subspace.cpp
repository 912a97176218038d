#include "paces/subspace.hpp"

#include <gtest/gtest.h>

#include <random>

#include "paces/oracle.hpp"

using namespace paces;

namespace {

ModelSpec tb_chain(std::uint32_t n, double eps, double j) {
    ModelSpec s;
    s.kind = ModelKind::tight_binding;
    s.geometry = LatticeGeometry({n});
    s.holstein.eps = {eps};
    s.holstein.hop_j = {j};
    return s;
}

ModelSpec holstein_chain(std::uint32_t n, double eps, double j, double g, std::uint32_t d_pho) {
    ModelSpec s;
    s.kind = ModelKind::holstein;
    s.geometry = LatticeGeometry({n});
    s.holstein.eps = {eps};
    s.holstein.hop_j = {j};
    s.holstein.omega = {1.0};
    s.holstein.g = {g};
    s.holstein.d_pho = d_pho;
    return s;
}

PackedBasisTable<Word> keys_of(const HamiltonianTermSet& ts,
                               std::vector<std::vector<std::uint32_t>> occs) {
    PackedBasisTable<Word> t(ts.layout);
    for (const auto& occ : occs) t.append_occupations(occ);
    sort_and_unique(t);
    return t;
}

std::vector<std::uint32_t> exciton_sites(const PackedBasisTable<Word>& t) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < t.rows; ++i) out.push_back(get_site<Word>(t.layout, t.row(i), 0));
    return out;
}

// Dense matrix restricted to the rows/cols of `table` (oracle route).
Eigen::MatrixXd dense_restricted(const DenseSystem& sys, const PackedBasisTable<Word>& table) {
    const std::size_t q = table.rows;
    Eigen::MatrixXd out(q, q);
    std::vector<std::size_t> idx(q);
    std::vector<std::uint32_t> occ(table.layout.site_count());
    for (std::size_t i = 0; i < q; ++i) {
        unpack_state<Word>(table.layout, table.row(i), occ);
        idx[i] = occupation_index(table.layout, occ);
    }
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j) out(i, j) = sys.h(idx[i], idx[j]);
    return out;
}

Eigen::MatrixXd csr_to_dense(const CsrMatrix& m) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.n, m.n);
    for (std::int64_t i = 0; i < m.n; ++i)
        for (std::int64_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) out(i, m.col[k]) = m.val[k];
    return out;
}

}  // namespace

TEST(Subspace, TbPairGrowsToSevenSites) {
    auto ts = build_model(tb_chain(31, 0.0, 1.0));
    const std::uint32_t n = 15;
    auto seeds = keys_of(ts, {{n - 1}, {n + 1}});
    auto space = grow_subspace(seeds, ts, 2);
    ASSERT_EQ(space.q_true(), 7u);
    EXPECT_EQ(exciton_sites(*space.table),
              (std::vector<std::uint32_t>{n - 3, n - 2, n - 1, n, n + 1, n + 2, n + 3}));
    EXPECT_EQ(space.q_nom, 2u);
}

TEST(Subspace, TbPairImageSizes) {
    auto ts = build_model(tb_chain(31, 0.0, 1.0));
    auto seeds = keys_of(ts, {{14}, {16}});
    EXPECT_EQ(connectivity(seeds, ts, 0), 1.0);       // |N^(0)| = 2
    EXPECT_EQ(connectivity(seeds, ts, 1), 3.0 / 2);   // |N^(1)| = 3
    EXPECT_EQ(connectivity(seeds, ts, 2), 4.0 / 2);   // |N^(2)| = 4
}

TEST(Subspace, OrderZeroReturnsSeeds) {
    auto ts = build_model(holstein_chain(3, 0.3, 1.0, 0.7, 3));
    auto seeds = keys_of(ts, {{0, 0, 0, 0}, {2, 1, 0, 2}});
    auto space = grow_subspace(seeds, ts, 0);
    EXPECT_EQ(space.q_true(), 2u);
    EXPECT_EQ(space.table->words, seeds.words);
}

TEST(Subspace, EmptySeedsRejected) {
    auto ts = build_model(tb_chain(3, 0.0, 1.0));
    PackedBasisTable<Word> empty(ts.layout);
    empty.sorted = true;
    EXPECT_THROW(grow_subspace(empty, ts, 1), Error);
}

TEST(Subspace, DedupAdjacentSeedPair) {
    // S = {|n-1>, |n>}: both re-derive the same hopping element; it must
    // appear exactly once with value J.
    auto ts = build_model(tb_chain(21, 0.0, 0.8));
    auto seeds = keys_of(ts, {{9}, {10}});
    auto space = grow_subspace(seeds, ts, 1);
    const auto sites = exciton_sites(*space.table);
    const auto dense = csr_to_dense(space.hamiltonian);
    std::size_t i9 = 0, i10 = 0;
    for (std::size_t k = 0; k < sites.size(); ++k) {
        if (sites[k] == 9) i9 = k;
        if (sites[k] == 10) i10 = k;
    }
    EXPECT_EQ(dense(i9, i10), 0.8);
    EXPECT_EQ(dense(i10, i9), 0.8);
    // every in-span element exactly once: compare against the oracle
    auto sys = dense_build(ts);
    EXPECT_EQ((dense - dense_restricted(sys, *space.table)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Subspace, DiagonalOnlyModel) {
    ModelSpec s;
    s.kind = ModelKind::spin_lattice;
    s.geometry = LatticeGeometry({4});
    s.spin.bond_v = {0.0};
    s.spin.field = {0.3, 0.5, 0.9, 1.7};
    auto ts = build_model(s);
    auto seeds = keys_of(ts, {{0, 1, 0, 1}, {1, 1, 0, 0}});
    auto space = grow_subspace(seeds, ts, 3);
    EXPECT_EQ(space.q_true(), 2u);  // nothing to grow into
    EXPECT_EQ(space.hamiltonian.nnz(), 2u);
    const auto dense = csr_to_dense(space.hamiltonian);
    EXPECT_EQ(dense(0, 1), 0.0);
    EXPECT_NE(dense(0, 0), 0.0);
}

TEST(Subspace, FullCoverageMatchesOracleEntryForEntry) {
    auto ts = build_model(holstein_chain(2, 0.41, 0.93, 0.67, 2));
    auto seeds = keys_of(ts, {{0, 0, 0}});
    auto space = grow_subspace(seeds, ts, 12);  // covers the whole space
    auto sys = dense_build(ts);
    ASSERT_EQ(space.q_true(), sys.dimension());
    EXPECT_EQ((csr_to_dense(space.hamiltonian) - sys.h).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Subspace, HolsteinDedupVsOracleOrder3) {
    auto ts = build_model(holstein_chain(2, 0.17, 1.0, 0.83, 3));
    auto seeds = keys_of(ts, {{0, 0, 0}, {1, 1, 0}});
    auto space = grow_subspace(seeds, ts, 3);
    auto sys = dense_build(ts);
    EXPECT_EQ((csr_to_dense(space.hamiltonian) - dense_restricted(sys, *space.table)).cwiseAbs().maxCoeff(),
              0.0);
}

TEST(Subspace, HermiticityExact) {
    auto ts = build_model(holstein_chain(3, 0.29, 0.71, 1.13, 4));
    auto seeds = keys_of(ts, {{1, 0, 0, 0}});
    auto space = grow_subspace(seeds, ts, 3);
    const auto dense = csr_to_dense(space.hamiltonian);
    EXPECT_EQ((dense - dense.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Subspace, MonotoneNesting) {
    auto ts = build_model(holstein_chain(3, 0.0, 1.0, 0.9, 3));
    auto seeds = keys_of(ts, {{1, 0, 1, 0}});
    std::size_t prev = 0;
    for (int m = 0; m <= 4; ++m) {
        auto space = grow_subspace(seeds, ts, m);
        EXPECT_GE(space.q_true(), prev);
        prev = space.q_true();
        // every lower-order table row is contained in the higher-order table
        if (m > 0) {
            auto lower = grow_subspace(seeds, ts, m - 1);
            for (std::size_t i = 0; i < lower.table->rows; ++i)
                EXPECT_LT(find_row(*space.table, lower.table->row(i)), space.table->rows);
        }
    }
}

TEST(Subspace, ConnectivityIsolatedBulkSite) {
    auto ts = build_model(tb_chain(9, 0.5, 1.0));
    auto seeds = keys_of(ts, {{4}});
    EXPECT_EQ(connectivity(seeds, ts, 1), 3.0);  // degree of a bulk vertex
    EXPECT_EQ(connectivity(seeds, ts, 0), 1.0);
}

TEST(Subspace, QTrueLaw) {
    // with nonzero onsite energies every state is its own trivial neighbor,
    // so the ball equals the m-th image and q_true = kappa^(m) q_nom exactly
    auto ts = build_model(holstein_chain(3, 0.37, 0.81, 0.63, 4));
    auto seeds = keys_of(ts, {{0, 0, 0, 0}, {1, 0, 1, 2}, {2, 3, 0, 0}});
    for (int m = 0; m <= 3; ++m) {
        auto space = grow_subspace(seeds, ts, m);
        // the exact integer form of q_true = kappa^(m) q_nom
        EXPECT_EQ(space.q_true(), neighbor_image_size(seeds, ts, m)) << "m=" << m;
        EXPECT_DOUBLE_EQ(connectivity(seeds, ts, m), double(space.q_true()) / double(seeds.rows));
    }
}

TEST(Subspace, RestrictionExactness) {
    // (P_m H P_m)^l psi = H^l psi for l <= m when psi is supported on the seeds
    auto ts = build_model(holstein_chain(2, 0.23, 0.67, 0.91, 4));
    auto sys = dense_build(ts);
    std::mt19937_64 rng(31);
    auto seeds = keys_of(ts, {{0, 1, 0}, {1, 0, 2}, {1, 3, 3}});
    const int m = 3;
    auto space = grow_subspace(seeds, ts, m);

    // random state on the seeds, embedded both in the subspace and the full space
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(sys.dimension());
    std::vector<cplx> sub(space.q_true(), cplx(0, 0));
    std::vector<std::uint32_t> occ(ts.layout.site_count());
    for (std::size_t i = 0; i < seeds.rows; ++i) {
        const cplx v{std::uniform_real_distribution<>(-1, 1)(rng),
                     std::uniform_real_distribution<>(-1, 1)(rng)};
        unpack_state<Word>(ts.layout, seeds.row(i), occ);
        full[occupation_index(ts.layout, occ)] = v;
        sub[find_row(*space.table, seeds.row(i))] = v;
    }

    std::vector<cplx> tmp(sub.size());
    Eigen::VectorXcd full_pow = full;
    for (int l = 1; l <= m; ++l) {
        csr_matvec(space.hamiltonian, sub, tmp);
        sub.swap(tmp);
        full_pow = sys.h * full_pow;
        double max_err = 0;
        for (std::size_t i = 0; i < space.q_true(); ++i) {
            unpack_state<Word>(ts.layout, space.table->row(i), occ);
            max_err = std::max(max_err, std::abs(sub[i] - full_pow[occupation_index(ts.layout, occ)]));
        }
        EXPECT_LT(max_err, 1e-12) << "l=" << l;
    }
}

TEST(Subspace, SymmetryClosureSharedExcitonNumber) {
    auto ts = build_model(holstein_chain(4, 0.2, 1.0, 0.8, 3));
    auto seeds = keys_of(ts, {{2, 0, 0, 0, 0}});
    auto space = grow_subspace(seeds, ts, 4);
    for (std::size_t i = 0; i < space.table->rows; ++i) {
        auto occ = unpack_state<Word>(ts.layout, space.table->row(i));
        EXPECT_LT(occ[0], 4u);  // exactly one exciton, encoded positionally
    }
}

TEST(Subspace, RemapSupersetPreservesNorm) {
    auto ts = build_model(holstein_chain(2, 0.3, 1.0, 0.5, 3));
    auto seeds = keys_of(ts, {{0, 0, 0}, {1, 2, 1}});
    auto small = grow_subspace(seeds, ts, 1);
    auto big = grow_subspace(seeds, ts, 2);

    SparseState psi;
    psi.table = small.table;
    psi.coeff.assign(small.q_true(), cplx(0, 0));
    std::mt19937_64 rng(17);
    for (auto& c : psi.coeff)
        c = {std::uniform_real_distribution<>(-1, 1)(rng), std::uniform_real_distribution<>(-1, 1)(rng)};
    const double n0 = state_norm(psi);

    auto [mapped, discarded] = remap_state(psi, big);
    EXPECT_EQ(discarded, 0.0);
    EXPECT_DOUBLE_EQ(state_norm(mapped), n0);
}

TEST(Subspace, RemapDropsMissingKeys) {
    auto ts = build_model(tb_chain(8, 0.1, 1.0));
    auto big = grow_subspace(keys_of(ts, {{3}}), ts, 2);   // sites 1..5
    auto small = grow_subspace(keys_of(ts, {{2}}), ts, 0); // site 2 only

    SparseState psi;
    psi.table = big.table;
    psi.coeff.assign(big.q_true(), cplx(0, 0));
    // weight 0.64 on site 2 (kept), 0.36 on site 4 (dropped)
    const auto sites = exciton_sites(*big.table);
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (sites[i] == 2) psi.coeff[i] = 0.8;
        if (sites[i] == 4) psi.coeff[i] = 0.6;
    }
    auto [mapped, discarded] = remap_state(psi, small);
    EXPECT_DOUBLE_EQ(discarded, 0.36);
    EXPECT_DOUBLE_EQ(state_norm(mapped) * state_norm(mapped), 0.64);
}
