#ifndef DSTPROF_LIMITFN_HPP
#define DSTPROF_LIMITFN_HPP

#include "dstprof/bigcomplex.hpp"
#include "dstprof/bigreal.hpp"

namespace dstprof::limitfn {

// Value with certified absolute truncation error (series tail + a rounding
// allowance); tail_bound <= ctx.series_tol on success of the adaptive path.
struct LimitFnValue {
    BigReal value;
    BigReal tail_bound;
    long terms_used = 0;
};

struct ComplexFnValue {
    BigComplex value;
    BigReal tail_bound;
    long terms_used = 0;
};

// Truncation plan of the quadruple series behind G/G_I: index caps chosen so
// that the dropped mass is a rigorous overestimate below the tolerance.
struct SeriesTruncation {
    long max_outer = 0;   // cap on j
    long max_r = 0;
    long max_h = 0;       // cap on h and l
    const char* strategy = "coefficient-tail + phi bound (x^2/2) e^{-2x}";
};

SeriesTruncation g_truncation_plan(double x, double tol, int weight /* 2 = G, 1 = G_I */);

// F^{(m)}(z) = sum_{j>=0} (-1)^j 2^{-C(j,2)} (-2^j)^m e^{-2^j z} / (Q_j Q_inf),
// Re(z) >= 0.  m = 0 gives F itself.
ComplexFnValue F_eval(const BigComplex& z, long m, const PrecisionContext& ctx);
LimitFnValue F_eval(const BigReal& x, long m, const PrecisionContext& ctx);

// F_I(x) = 1 - sum_{j>=0} (-1)^j 2^{-C(j+1,2)} e^{-2^j x} / (Q_j Q_inf);
// antiderivative of F with F_I(0) = 0.
LimitFnValue F_I_eval(const BigReal& x, const PrecisionContext& ctx);

// phi(u,v;x) = e^{-ux} int_0^x t e^{(u-v)t} dt; equality branch taken on
// exact u == v only.
BigReal phi_eval(const BigReal& u, const BigReal& v, const BigReal& x);

// G(x): the quadruple series driving Var(B_{n,k}) ~ 2^k G(2^-k n);
// G_I(x) is the internal-profile variant (exponent weight h+l instead of
// 2h+2l).  x >= 0 real; u == v index families are skipped (their
// contributions cancel exactly in pairs).
LimitFnValue G_eval(const BigReal& x, const PrecisionContext& ctx);
LimitFnValue G_I_eval(const BigReal& x, const PrecisionContext& ctx);

// 1-periodic P(t); see detail::periodic_P for the series.
LimitFnValue P_eval(const BigReal& t, const PrecisionContext& ctx);

}  // namespace dstprof::limitfn

#endif
