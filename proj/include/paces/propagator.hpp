#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "paces/common.hpp"
#include "paces/subspace.hpp"

namespace paces {

// ===========================================================================
// Action of exp(-i H dt / hbar) on a coefficient vector by a running-sum
// Taylor series: one sparse matrix-vector product per order and a single
// extra term vector, so the propagator matrix is never materialized.
// ===========================================================================

struct PropagatorConfig {
    double dt = 0.05;      ///< timestep in units of 1/omega0
    double rtol = 1e-15;   ///< relative termination tolerance
    int max_order = 200;
    int substeps = 1;      ///< optional splitting of dt (scaling-and-squaring style)

    void validate() const {
        if (!(dt > 0)) throw Error("propagator: dt must be > 0");
        if (!(rtol > 0) || !(rtol < 1)) throw Error("propagator: rtol must be in (0, 1)");
        if (max_order < 1) throw Error("propagator: max_order must be >= 1");
        if (substeps < 1) throw Error("propagator: substeps must be >= 1");
    }
};

struct ExpmvResult {
    int order_used = 0;          ///< highest series order evaluated
    double last_term_norm = 0;   ///< norm of the final series term
};

namespace detail {

inline double vec_norm(std::span<const cplx> v) {
    double acc = 0;
    for (const cplx& c : v) acc += std::norm(c);
    return std::sqrt(acc);
}

}  // namespace detail

/// c <- exp(-i H dt) c, terminating once two consecutive term norms fall
/// below rtol times the accumulated norm (a single small term can be an
/// odd/even cancellation artifact of the alternating series). Throws when
/// max_order is reached without convergence, which indicates a timestep too
/// large for the spectral radius of H.
inline ExpmvResult expmv(const CsrMatrix& h, std::vector<cplx>& c, const PropagatorConfig& cfg) {
    cfg.validate();
    if (static_cast<std::int64_t>(c.size()) != h.n) throw Error("expmv: dimension mismatch");
    for (const cplx& x : c)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
            throw Error("expmv: non-finite input coefficient");

    const double dt_sub = cfg.dt / cfg.substeps;
    std::vector<cplx> term(c.size()), hterm(c.size());
    ExpmvResult res;

    for (int s = 0; s < cfg.substeps; ++s) {
        term = c;  // order-0 term; c doubles as the running sum
        int small_streak = 0;
        bool converged = false;
        for (int n = 1; n <= cfg.max_order; ++n) {
            csr_matvec(h, term, hterm);
            const cplx scale(0.0, -dt_sub / double(n));
            const std::size_t len = term.size();
#pragma omp parallel for schedule(static)
            for (std::size_t i = 0; i < len; ++i) {
                term[i] = scale * hterm[i];
                c[i] += term[i];
            }
            const double tn = detail::vec_norm(term);
            const double rn = detail::vec_norm(c);
            res.order_used = std::max(res.order_used, n);
            res.last_term_norm = tn;
            small_streak = (tn <= cfg.rtol * rn) ? small_streak + 1 : 0;
            if (small_streak >= 2) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw Error("expmv: Taylor series did not converge within max_order=" +
                        std::to_string(cfg.max_order) +
                        "; reduce dt or increase substeps");
    }
    return res;
}

}  // namespace paces
