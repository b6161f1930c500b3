#include "dstprof/limitfn.hpp"

#include <cmath>

#include "dstprof/qseries.hpp"
#include "dstprof/rational.hpp"

namespace dstprof::limitfn {

using qseries::QInverseCache;

namespace {

// |term_j| of the F series is at most 2^{-C(j,2)+jm} e^{-2^j Re z} / Qinf^2;
// consecutive bounds shrink by a factor 2^{m-j} <= 1/2 once j >= m+1, so the
// tail past J is at most twice the bound at J+1.
double f_term_bound(long j, long m, double rez) {
    double lg = -0.5 * static_cast<double>(j) * static_cast<double>(j - 1) +
                static_cast<double>(j * m);
    double e = lg * 0.6931471805599453;
    if (rez > 0.0) {
        double p = std::ldexp(rez, static_cast<int>(std::min(j, 1000L)));
        e -= std::min(p, 1e300);
    }
    if (e < -700.0) return 0.0;
    return 12.0 * std::exp(e);  // 12 >= 1/Qinf^2
}

struct FKernelResult {
    BigComplex value;
    BigReal sum_abs;
    BigReal tail;
    long terms;
};

FKernelResult f_kernel(const BigComplex& z, long m, int bits, double tol) {
    double rez = z.re.to_double();
    if (rez < 0.0 && !(z.re.is_zero()))
        throw DomainError("F_eval: Re(z) must be >= 0");

    long J = m + 2;
    while (f_term_bound(J + 1, m, rez) > tol / 4.0 && J < 4000) ++J;

    QInverseCache invq(J + 1, bits);
    // round z to working precision
    BigComplex zw{BigReal(0.0, bits), BigReal(0.0, bits)};
    mpfr_set(zw.re.raw(), z.re.raw(), MPFR_RNDN);
    mpfr_set(zw.im.raw(), z.im.raw(), MPFR_RNDN);

    BigComplex E = exp(-zw);  // e^{-2^j z} by repeated squaring
    BigComplex acc{BigReal(0.0, bits), BigReal(0.0, bits)};
    BigReal sum_abs(0.0, bits);
    for (long j = 0; j <= J; ++j) {
        if (j > 0) E = sqr(E);
        long e2 = -choose2(j) + j * m;
        int sign = ((j + m) % 2 == 0) ? 1 : -1;  // (-1)^j (-1)^m
        BigReal coef = BigReal::pow2(e2, bits) * invq[j] * invq.inv_qinf;
        BigComplex term = coef * E;
        sum_abs += abs(term);
        if (sign > 0)
            acc += term;
        else
            acc += -term;
    }
    BigReal tail(2.0 * f_term_bound(J + 1, m, rez), 64);
    // rounding allowance: J+1 terms, each ~8 correctly rounded ops, plus the
    // squaring chain for E
    BigReal rounding = sum_abs * BigReal(static_cast<double>(8 * (J + 2) + 64), 64) *
                       BigReal::pow2(1 - bits, 64);
    return {acc, sum_abs, tail + rounding, J + 1};
}

}  // namespace

ComplexFnValue F_eval(const BigComplex& z, long m, const PrecisionContext& ctx) {
    if (m < 0) throw DomainError("F_eval: m must be >= 0");
    if (z.re.sgn() < 0) throw DomainError("F_eval: Re(z) must be >= 0");
    ComplexFnValue out;
    auto once = [&](int bits) {
        auto k = f_kernel(z, m, bits, ctx.series_tol);
        out.tail_bound = k.tail;
        out.terms_used = k.terms;
        return k.value;
    };
    out.value = adaptive_eval<BigComplex>(ctx, once, [](const BigComplex& a, const BigComplex& b) {
        return rel_abs_distance(a, b);
    });
    return out;
}

LimitFnValue F_eval(const BigReal& x, long m, const PrecisionContext& ctx) {
    ComplexFnValue c = F_eval(BigComplex(x), m, ctx);
    return {c.value.re, c.tail_bound, c.terms_used};
}

LimitFnValue F_I_eval(const BigReal& x, const PrecisionContext& ctx) {
    if (x.sgn() < 0) throw DomainError("F_I_eval: x must be >= 0");
    LimitFnValue out;
    auto once = [&](int bits) {
        double xd = x.to_double();
        long J = 2;
        while (f_term_bound(J + 1, -1, xd) > ctx.series_tol / 4.0 && J < 4000) ++J;
        QInverseCache invq(J + 1, bits);
        BigReal xw(0.0, bits);
        mpfr_set(xw.raw(), x.raw(), MPFR_RNDN);
        BigReal E = exp(-xw);
        BigReal acc(0.0, bits);
        BigReal sum_abs(0.0, bits);
        for (long j = 0; j <= J; ++j) {
            if (j > 0) E = E * E;
            BigReal term = BigReal::pow2(-choose2(j + 1), bits) * invq[j] * invq.inv_qinf * E;
            sum_abs += abs(term);
            if (j % 2 == 0)
                acc += term;
            else
                acc -= term;
        }
        BigReal tail(2.0 * f_term_bound(J + 1, -1, xd), 64);
        BigReal rounding = sum_abs * BigReal(static_cast<double>(8 * (J + 2) + 64), 64) *
                           BigReal::pow2(1 - bits, 64);
        out.tail_bound = tail + rounding;
        out.terms_used = J + 1;
        return BigReal(1.0, bits) - acc;
    };
    out.value = adaptive_eval<BigReal>(ctx, once, [](const BigReal& a, const BigReal& b) {
        return rel_abs_distance(a, b);
    });
    return out;
}

BigReal phi_eval(const BigReal& u, const BigReal& v, const BigReal& x) {
    if (u.sgn() <= 0 || v.sgn() <= 0) throw DomainError("phi_eval: u, v must be > 0");
    if (x.sgn() < 0) throw DomainError("phi_eval: x must be >= 0");
    int bits = std::max({u.prec(), v.prec(), x.prec(), 64});
    if (x.is_zero()) return BigReal(0.0, bits);
    if (u == v) {  // equality branch on exact equality only
        return x * x * exp(-(u * x)) / BigReal(2.0, bits);
    }
    BigReal c = u - v;
    BigReal cx = c * x;
    if (abs(cx) <= BigReal(1.0, 64)) {
        // e^{-ux} x^2 sum_i (cx)^i / (i! (i+2)) -- cancellation-free
        BigReal acc(0.0, bits), pw(1.0, bits);
        for (long i = 0;; ++i) {
            BigReal t = pw / BigReal(static_cast<long>(i + 2), bits);
            acc += t;
            pw = pw * cx / BigReal(static_cast<long>(i + 1), bits);
            if (abs(pw) < abs(acc) * BigReal::pow2(-bits - 4, 64) || i > 4 * bits) break;
        }
        return exp(-(u * x)) * x * x * acc;
    }
    return (exp(-(u * x)) + (cx - BigReal(1.0, bits)) * exp(-(v * x))) / (c * c);
}

namespace {

// ---------------------------------------------------------------------------
// G / G_I engine.  Quadruple sum over (j, r, h, l) with weight w on (h+l):
// w = 2 gives G, w = 1 gives G_I.  Truncation caps are chosen up front from
// rigorous coefficient tails; every dropped term has v >= 2 and u >= 2, so
// |phi| <= (x^2/2) e^{-2x} uniformly over the dropped set.
// ---------------------------------------------------------------------------

constexpr double kSR = 2.66;          // sum_r 2^{-C(r,2)}, rounded up
constexpr double kInvQinf6 = 1725.0;  // Qinf^{-6} = 1724.24.., rounded up

double coeff_row_sum(int w) { return w == 2 ? 26.2 : 6.4; }  // sum_h 2^{-C(h,2)+wh}

double phi_drop_bound(double x) {
    double e = 2.0 * std::log(x > 0 ? x : 1e-300) - 2.0 * x - 0.6931471805599453;
    return e < -700.0 ? 0.0 : std::exp(e);  // x^2 e^{-2x} / 2
}

struct GCaps {
    long jmax, rmax, hmax;
};

GCaps g_caps(double x, int w, double tol) {
    double sw = coeff_row_sum(w);
    double phib = phi_drop_bound(x);
    double base = kSR * sw * sw * kInvQinf6 * phib;
    GCaps c{1, 1, 2 * w + 2};
    // outer j: dropped mass <= 2^-J * base
    while (std::ldexp(base, static_cast<int>(-c.jmax)) > tol / 4.0 && c.jmax < 4000) ++c.jmax;
    // r: sum_{r>R} 2^{-C(r,2)} <= 2 * 2^{-C(R+1,2)}; whole-j factor sums to 2
    double r_base = 4.0 * sw * sw * kInvQinf6 * phib;
    while (r_base * std::exp2(-0.5 * static_cast<double>(c.rmax + 1) * static_cast<double>(c.rmax)) >
               tol / 4.0 &&
           c.rmax < 600)
        ++c.rmax;
    // h (or l): sum_{h>H} 2^{-C(h,2)+wh} <= 2*2^{-C(H+1,2)+w(H+1)} once H >= 2w+1
    double h_base = 16.0 * kSR * sw * kInvQinf6 * phib;
    auto h_tail = [&](long H) {
        double lg = -0.5 * static_cast<double>(H + 1) * static_cast<double>(H) +
                    static_cast<double>(w * (H + 1));
        return h_base * std::exp2(lg);
    };
    while (h_tail(c.hmax) > tol / 4.0 && c.hmax < 600) ++c.hmax;
    return c;
}

struct GKernelOut {
    BigReal value;
    BigReal tail;
    long terms;
};

GKernelOut g_kernel(const BigReal& x, int w, int bits, double tol) {
    GCaps caps = g_caps(x.to_double(), w, tol);
    long amax = caps.jmax + caps.rmax + 1;

    QInverseCache invq(std::max(caps.jmax, std::max(caps.rmax, caps.hmax)) + 1, bits);
    BigReal xw(0.0, bits);
    mpfr_set(xw.raw(), x.raw(), MPFR_RNDN);

    // E[a] = e^{-2^a x}; once it underflows to +0 the true value is below
    // 2^(-2^62) and the term is dropped exactly as zero.
    std::vector<BigReal> E;
    E.reserve(static_cast<size_t>(amax) + 1);
    E.push_back(exp(-xw));
    for (long a = 1; a <= amax; ++a) E.push_back(E.back() * E.back());

    BigReal acc(0.0, bits), sum_abs(0.0, bits);
    BigReal one(1.0, bits);
    long terms = 0;

    for (long j = 0; j <= caps.jmax; ++j) {
        long hcap = std::min(j, caps.hmax);
        for (long r = 0; r <= caps.rmax; ++r) {
            long a = r + j;
            Int u = pow2z(static_cast<unsigned long>(a));
            const BigReal& Eu = E[static_cast<size_t>(a)];
            for (long h = 0; h <= hcap; ++h) {
                for (long l = h; l <= hcap; ++l) {
                    // u == v iff h == l and r + j == h + 1; these index
                    // families cancel pairwise and are skipped.
                    if (h == l && a == h + 1) continue;
                    Int v = pow2z(static_cast<unsigned long>(h)) +
                            pow2z(static_cast<unsigned long>(l));
                    Int c = u - v;
                    BigReal cb = BigReal::from_mpz(c, bits);
                    BigReal cx = cb * xw;
                    BigReal Ev = E[static_cast<size_t>(h)] * E[static_cast<size_t>(l)];
                    BigReal ph(0.0, bits);
                    if (abs(cx) <= one) {
                        BigReal s(0.0, bits), pw(1.0, bits);
                        for (long i = 0;; ++i) {
                            s += pw / BigReal(i + 2, bits);
                            pw = pw * cx / BigReal(i + 1, bits);
                            if (abs(pw) < abs(s) * BigReal::pow2(-bits - 4, 64) || i > 4 * bits)
                                break;
                        }
                        ph = Eu * xw * xw * s;
                    } else {
                        ph = (Eu + (cx - one) * Ev) / (cb * cb);
                    }
                    long e2 = -j - choose2(r) - choose2(h) - choose2(l) + w * (h + l);
                    BigReal coef = BigReal::pow2(e2, bits) * invq.inv_qinf * invq[r] * invq[h] *
                                   invq[j - h] * invq[l] * invq[j - l];
                    BigReal term = coef * ph;
                    if (h != l) term = term * BigReal(2.0, bits);
                    sum_abs += abs(term);
                    if ((r + h + l) % 2 == 0)
                        acc += term;
                    else
                        acc -= term;
                    ++terms;
                }
            }
        }
    }

    double phib = phi_drop_bound(x.to_double());
    double sw = coeff_row_sum(w);
    double dropped = std::ldexp(kSR * sw * sw * kInvQinf6 * phib, static_cast<int>(-caps.jmax)) +
                     4.0 * sw * sw * kInvQinf6 * phib *
                         std::exp2(-0.5 * static_cast<double>(caps.rmax + 1) *
                                   static_cast<double>(caps.rmax)) +
                     16.0 * kSR * sw * kInvQinf6 * phib *
                         std::exp2(-0.5 * static_cast<double>(caps.hmax + 1) *
                                       static_cast<double>(caps.hmax) +
                                   static_cast<double>(w * (caps.hmax + 1)));
    BigReal tail(dropped, 64);
    BigReal rounding = sum_abs *
                       BigReal(static_cast<double>(16 * (terms + 16) + 8 * amax), 64) *
                       BigReal::pow2(1 - bits, 64);
    return {acc, tail + rounding, terms};
}

LimitFnValue g_eval_impl(const BigReal& x, int w, const PrecisionContext& ctx) {
    if (x.sgn() < 0) throw DomainError("G_eval: x must be >= 0");
    LimitFnValue out;
    if (x.is_zero()) {  // phi(.,.;0) = 0
        out.value = BigReal(0.0, ctx.bits);
        out.tail_bound = BigReal(0.0, 64);
        return out;
    }
    auto once = [&](int bits) {
        auto k = g_kernel(x, w, bits, ctx.series_tol);
        out.tail_bound = k.tail;
        out.terms_used = k.terms;
        return k.value;
    };
    out.value = adaptive_eval<BigReal>(ctx, once, [](const BigReal& a, const BigReal& b) {
        return rel_abs_distance(a, b);
    });
    return out;
}

}  // namespace

SeriesTruncation g_truncation_plan(double x, double tol, int weight) {
    GCaps c = g_caps(x, weight, tol);
    SeriesTruncation t;
    t.max_outer = c.jmax;
    t.max_r = c.rmax;
    t.max_h = c.hmax;
    return t;
}

LimitFnValue G_eval(const BigReal& x, const PrecisionContext& ctx) {
    return g_eval_impl(x, 2, ctx);
}

LimitFnValue G_I_eval(const BigReal& x, const PrecisionContext& ctx) {
    return g_eval_impl(x, 1, ctx);
}

LimitFnValue P_eval(const BigReal& t, const PrecisionContext& ctx) {
    LimitFnValue out;
    out.value = detail::periodic_P(t, ctx.bits);
    // coefficient decay e^{-28.47 j}: truncation sits far below the working
    // precision by construction of the term count
    out.tail_bound = BigReal::pow2(-ctx.bits, 64) * BigReal(16.0, 64);
    out.terms_used = 0;
    return out;
}

}  // namespace dstprof::limitfn
