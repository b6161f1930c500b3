#ifndef DSTPROF_QSERIES_HPP
#define DSTPROF_QSERIES_HPP

#include <vector>

#include "dstprof/bigcomplex.hpp"
#include "dstprof/bigreal.hpp"
#include "dstprof/rational.hpp"

namespace dstprof::qseries {

// Q_n = prod_{1<=l<=n} (1 - 2^-l), exact.
Rat q_finite(long n);

// Q(z) = prod_{l>=1} (1 - 2^-l z), truncated once the multiplicative tail
// bound 2^{1-L}|z| drops below series_tol; certified relative error
// <= series_tol.  Exact zero is returned when a factor vanishes.
BigComplex q_product(const BigComplex& z, const PrecisionContext& ctx);
BigReal q_product(const BigReal& z, const PrecisionContext& ctx);

// log Q(-2s) through the exact identity
//   log Q(-2s) = (log s)^2/(2 log 2) + (log s)/2 + P(log2 s) - log Q(-1/s),
// valid for s off the cut (-inf, 0] with |arg s| <= pi - sector_eps.
BigComplex q_log_asymptotic(const BigComplex& s, const PrecisionContext& ctx,
                            double sector_eps = 0.1);

// Tabulated Q_n plus Q_infinity = Q(1); built once, read-only afterwards.
struct QTable {
    std::vector<Rat> qn;        // Q_0 .. Q_{n_max}
    BigReal q_infinity;
    double tail_bound = 0.0;    // relative error bound carried by q_infinity

    static QTable build(long n_max, const PrecisionContext& ctx);
};

// Shared per-precision cache of 1/Q_j values plus 1/Q_inf, the workhorse of
// every series evaluation.  Values are exact rationals rounded once.
struct QInverseCache {
    std::vector<BigReal> inv_qn;  // 1/Q_0 .. 1/Q_{jmax}
    BigReal inv_qinf;
    BigReal qinf;
    int bits;

    explicit QInverseCache(long jmax, int bits);
    const BigReal& operator[](long j) const { return inv_qn[static_cast<size_t>(j)]; }
};

}  // namespace dstprof::qseries

namespace dstprof::detail {
// The 1-periodic function
//   P(t) = log2/12 + pi^2/(6 log2) - sum_{j>=1} cos(2 pi j t)/(j sinh(2 pi^2 j / log 2)),
// shared by limit_functions (public P_eval) and q_log_asymptotic.  The real
// version reduces t to [0,1) first so that P(t+1) is bit-identical to P(t).
BigReal periodic_P(const BigReal& t, int bits);
BigComplex periodic_P(const BigComplex& t, int bits);
}  // namespace dstprof::detail

#endif
