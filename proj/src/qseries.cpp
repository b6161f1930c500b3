#include "dstprof/qseries.hpp"

#include <cmath>

namespace dstprof::qseries {

Rat q_finite(long n) {
    if (n < 0) throw DomainError("q_finite: n must be >= 0");
    Rat r(1);
    for (long l = 1; l <= n; ++l) {
        r *= Rat(pow2z(static_cast<unsigned long>(l)) - 1, pow2z(static_cast<unsigned long>(l)));
    }
    return r;
}

namespace {

// factors 1 - 2^-l z for l = 1..L with 2^-L |z| < tol/4; the dropped log-tail
// is bounded by 2^{1-L}|z| < tol/2.
long product_cutoff(double abs_z, double tol) {
    long L = 1;
    double t = abs_z / 2.0;
    while (t >= tol / 4.0 && L < 100000) {
        t /= 2.0;
        ++L;
    }
    return L;
}

template <class T>
T q_product_impl(const T& z, const PrecisionContext& ctx) {
    double az = abs(z).to_double();
    long L = product_cutoff(az, ctx.series_tol);
    int bits = std::max({ctx.bits, z.prec(), static_cast<int>(L) + 16});
    T r{BigReal(1.0, bits)};
    for (long l = 1; l <= L; ++l) {
        T f = BigReal(1.0, bits) - BigReal::pow2(-l, bits) * z;
        r = r * f;
        if (abs(r).is_zero()) return r;  // hit an exact zero of Q
    }
    return r;
}

}  // namespace

BigReal q_product(const BigReal& z, const PrecisionContext& ctx) {
    auto once = [&](int bits) { return q_product_impl(z, ctx.with_bits(bits)); };
    return adaptive_eval<BigReal>(ctx, once, [](const BigReal& a, const BigReal& b) {
        return rel_abs_distance(a, b);
    });
}

BigComplex q_product(const BigComplex& z, const PrecisionContext& ctx) {
    if (z.is_real()) return BigComplex(q_product(z.re, ctx));
    auto once = [&](int bits) { return q_product_impl(z, ctx.with_bits(bits)); };
    return adaptive_eval<BigComplex>(ctx, once, [](const BigComplex& a, const BigComplex& b) {
        return rel_abs_distance(a, b);
    });
}

BigComplex q_log_asymptotic(const BigComplex& s, const PrecisionContext& ctx,
                            double sector_eps) {
    if (s.im.is_zero() && s.re.sgn() <= 0)
        throw DomainError("q_log_asymptotic: s on the branch cut (-inf, 0]");
    double a = std::fabs(arg(s).to_double());
    double pi = 3.14159265358979323846;
    if (a > pi - sector_eps)
        throw DomainError("q_log_asymptotic: |arg s| exceeds pi - eps sector");

    auto once = [&](int bits) {
        int p = std::max(bits, s.prec());
        BigReal ln2 = BigReal::log2_const(p);
        BigComplex sp{BigReal(s.re), BigReal(s.im)};
        BigComplex ls = log(sp);
        BigComplex t = ls * (BigReal(1.0, p) / ln2);  // log2 s
        BigComplex val = sqr(ls) / (BigReal(2.0, p) * ln2) + ls / BigReal(2.0, p) +
                         detail::periodic_P(t, p);
        // exact remainder J(s) = -log Q(-1/s)
        BigComplex minus_inv = -(BigComplex(BigReal(1.0, p)) / sp);
        BigComplex q = q_product(minus_inv, ctx.with_bits(p).fixed());
        return val - log(q);
    };
    return adaptive_eval<BigComplex>(ctx, once, [](const BigComplex& a_, const BigComplex& b_) {
        return rel_abs_distance(a_, b_);
    });
}

QTable QTable::build(long n_max, const PrecisionContext& ctx) {
    if (n_max < 0) throw DomainError("QTable: n_max must be >= 0");
    QTable t;
    t.qn.reserve(static_cast<size_t>(n_max) + 1);
    Rat cur(1);
    t.qn.push_back(cur);
    for (long n = 1; n <= n_max; ++n) {
        cur *= Rat(pow2z(static_cast<unsigned long>(n)) - 1, pow2z(static_cast<unsigned long>(n)));
        t.qn.push_back(cur);
    }
    t.q_infinity = q_product(BigReal(1.0, ctx.bits), ctx);
    t.tail_bound = ctx.series_tol;
    return t;
}

QInverseCache::QInverseCache(long jmax, int bits_) : bits(bits_) {
    inv_qn.reserve(static_cast<size_t>(jmax) + 1);
    Rat cur(1);
    for (long j = 0; j <= jmax; ++j) {
        if (j > 0)
            cur *= Rat(pow2z(static_cast<unsigned long>(j)) - 1,
                       pow2z(static_cast<unsigned long>(j)));
        inv_qn.push_back(BigReal::from_mpq(Rat(1) / cur, bits));
    }
    // Q_inf to full working precision: tail past L = bits+16 factors is
    // below one ulp, independent of any double-valued tolerance.
    qinf = BigReal(1.0, bits);
    for (long l = 1; l <= bits + 16; ++l)
        qinf = qinf * (BigReal(1.0, bits) - BigReal::pow2(-l, bits));
    inv_qinf = BigReal(1.0, bits) / qinf;
}

}  // namespace dstprof::qseries

namespace dstprof::detail {

// Coefficients 1/(j sinh(2 pi^2 j / log 2)) decay like 2.1 e^{-28.47 j}.
namespace {
long p_terms_for(int bits, double extra_growth = 0.0) {
    double alpha = 2.0 * 9.869604401089358 / 0.6931471805599453 - extra_growth;
    if (alpha <= 0.5) throw DomainError("periodic_P: argument too far from the real axis");
    double need = static_cast<double>(bits) * 0.6931471805599453 + 60.0;
    return static_cast<long>(need / alpha) + 2;
}
}  // namespace

BigReal periodic_P(const BigReal& t, int bits) {
    BigReal u = frac(t);  // reduce first so P(t+1) is bit-identical to P(t)
    if (u.is_neg()) u += BigReal(1.0, u.prec());
    BigReal ln2 = BigReal::log2_const(bits);
    BigReal pi = BigReal::pi(bits);
    BigReal s = ln2 / BigReal(12.0, bits) + pi * pi / (BigReal(6.0, bits) * ln2);
    long J = p_terms_for(bits);
    BigReal two_pi_u = BigReal(2.0, bits) * pi * u;
    for (long j = 1; j <= J; ++j) {
        BigReal jr(static_cast<long>(j), bits);
        BigReal den = jr * sinh(BigReal(2.0, bits) * jr * pi * pi / ln2);
        s -= cos(jr * two_pi_u) / den;
    }
    return s;
}

BigComplex periodic_P(const BigComplex& t, int bits) {
    if (t.is_real()) return BigComplex(periodic_P(t.re, bits));
    BigReal ln2 = BigReal::log2_const(bits);
    BigReal pi = BigReal::pi(bits);
    double growth = 2.0 * 3.14159265358979323846 * std::fabs(t.im.to_double());
    long J = p_terms_for(bits, growth);
    BigComplex s{ln2 / BigReal(12.0, bits) + pi * pi / (BigReal(6.0, bits) * ln2),
                 BigReal(0.0, bits)};
    BigComplex two_pi_t = BigReal(2.0, bits) * pi * t;
    for (long j = 1; j <= J; ++j) {
        BigReal jr(static_cast<long>(j), bits);
        BigReal den = jr * sinh(BigReal(2.0, bits) * jr * pi * pi / ln2);
        BigComplex c = cos(jr * two_pi_t);
        s = s - BigComplex{c.re / den, c.im / den};
    }
    return s;
}

}  // namespace dstprof::detail
