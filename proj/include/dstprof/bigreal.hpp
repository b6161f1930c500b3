#ifndef DSTPROF_BIGREAL_HPP
#define DSTPROF_BIGREAL_HPP

#include <mpfr.h>
#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>

#include "dstprof/errors.hpp"

namespace dstprof {

// Evaluation context shared by every high-precision routine.  `bits` is the
// working mantissa size, `series_tol` the absolute truncation tolerance for
// series/products, and `adaptive` requests re-evaluation at doubled precision
// until two successive results agree to series_tol (capped at kMaxDoublings,
// after which PrecisionExhausted is thrown).
struct PrecisionContext {
    int bits = 128;
    double series_tol = 1e-30;
    bool adaptive = true;

    static constexpr int kMaxDoublings = 16;

    PrecisionContext() = default;
    PrecisionContext(int bits_, double tol_, bool adaptive_ = true)
        : bits(bits_), series_tol(tol_), adaptive(adaptive_) {
        validate();
    }

    void validate() const {
        if (bits < 53) throw DomainError("PrecisionContext: bits must be >= 53");
        if (!(series_tol > 0)) throw DomainError("PrecisionContext: series_tol must be > 0");
    }

    PrecisionContext with_bits(int b) const {
        PrecisionContext c(*this);
        c.bits = b;
        return c;
    }
    PrecisionContext with_tol(double t) const {
        PrecisionContext c(*this);
        c.series_tol = t;
        return c;
    }
    PrecisionContext fixed() const {  // adaptive off
        PrecisionContext c(*this);
        c.adaptive = false;
        return c;
    }
};

// Correctly rounded arbitrary-precision real, RAII wrapper around mpfr_t.
// All operations round to nearest at the precision of the widest operand.
class BigReal {
  public:
    BigReal() { mpfr_init2(v_, 64); mpfr_set_zero(v_, 1); }
    explicit BigReal(int prec) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
    BigReal(double x, int prec) { mpfr_init2(v_, prec); mpfr_set_d(v_, x, MPFR_RNDN); }
    BigReal(long x, int prec) { mpfr_init2(v_, prec); mpfr_set_si(v_, x, MPFR_RNDN); }

    BigReal(const BigReal& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    BigReal(BigReal&& o) noexcept {
        mpfr_init2(v_, 64);
        mpfr_swap(v_, o.v_);
    }
    BigReal& operator=(const BigReal& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    BigReal& operator=(BigReal&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~BigReal() { mpfr_clear(v_); }

    static BigReal from_mpq(const mpq_class& q, int prec) {
        BigReal r(prec);
        mpfr_set_q(r.v_, q.get_mpq_t(), MPFR_RNDN);
        return r;
    }
    static BigReal from_mpz(const mpz_class& z, int prec) {
        BigReal r(prec);
        mpfr_set_z(r.v_, z.get_mpz_t(), MPFR_RNDN);
        return r;
    }
    // 2^e, exact
    static BigReal pow2(long e, int prec) {
        BigReal r(prec);
        mpfr_set_ui_2exp(r.v_, 1, e, MPFR_RNDN);
        return r;
    }
    static BigReal pi(int prec) {
        BigReal r(prec);
        mpfr_const_pi(r.v_, MPFR_RNDN);
        return r;
    }
    static BigReal log2_const(int prec) {  // log 2
        BigReal r(prec);
        mpfr_const_log2(r.v_, MPFR_RNDN);
        return r;
    }

    int prec() const { return static_cast<int>(mpfr_get_prec(v_)); }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    bool is_neg() const { return mpfr_sgn(v_) < 0; }
    int sgn() const { return mpfr_sgn(v_); }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }

    std::string str(int digits = 20) const {
        char* s = nullptr;
        mpfr_asprintf(&s, "%.*Rg", digits, v_);
        std::string out(s);
        mpfr_free_str(s);
        return out;
    }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

  private:
    mpfr_t v_;
};

namespace detail {
inline int prec_of(const BigReal& a, const BigReal& b) {
    return std::max(a.prec(), b.prec());
}
}  // namespace detail

#define DSTPROF_BINOP(OP, FN)                                              \
    inline BigReal operator OP(const BigReal& a, const BigReal& b) {       \
        BigReal r(detail::prec_of(a, b));                                  \
        FN(r.raw(), a.raw(), b.raw(), MPFR_RNDN);                          \
        return r;                                                          \
    }                                                                      \
    inline BigReal operator OP(const BigReal& a, long b) {                 \
        BigReal r(a.prec());                                               \
        FN##_si(r.raw(), a.raw(), b, MPFR_RNDN);                           \
        return r;                                                          \
    }                                                                      \
    inline BigReal& operator OP##=(BigReal& a, const BigReal& b) {         \
        FN(a.raw(), a.raw(), b.raw(), MPFR_RNDN);                          \
        return a;                                                          \
    }

DSTPROF_BINOP(+, mpfr_add)
DSTPROF_BINOP(-, mpfr_sub)
DSTPROF_BINOP(*, mpfr_mul)
DSTPROF_BINOP(/, mpfr_div)
#undef DSTPROF_BINOP

inline BigReal operator*(long a, const BigReal& b) { return b * a; }
inline BigReal operator+(long a, const BigReal& b) { return b + a; }
inline BigReal operator-(const BigReal& a) {
    BigReal r(a.prec());
    mpfr_neg(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}
inline BigReal operator-(long a, const BigReal& b) {
    BigReal r(b.prec());
    mpfr_si_sub(r.raw(), a, b.raw(), MPFR_RNDN);
    return r;
}
inline BigReal operator/(long a, const BigReal& b) {
    BigReal r(b.prec());
    mpfr_si_div(r.raw(), a, b.raw(), MPFR_RNDN);
    return r;
}

inline bool operator<(const BigReal& a, const BigReal& b) { return mpfr_cmp(a.raw(), b.raw()) < 0; }
inline bool operator>(const BigReal& a, const BigReal& b) { return mpfr_cmp(a.raw(), b.raw()) > 0; }
inline bool operator<=(const BigReal& a, const BigReal& b) { return mpfr_cmp(a.raw(), b.raw()) <= 0; }
inline bool operator>=(const BigReal& a, const BigReal& b) { return mpfr_cmp(a.raw(), b.raw()) >= 0; }
inline bool operator==(const BigReal& a, const BigReal& b) { return mpfr_cmp(a.raw(), b.raw()) == 0; }
inline bool operator!=(const BigReal& a, const BigReal& b) { return mpfr_cmp(a.raw(), b.raw()) != 0; }
inline bool operator<(const BigReal& a, double b) { return mpfr_cmp_d(a.raw(), b) < 0; }
inline bool operator>(const BigReal& a, double b) { return mpfr_cmp_d(a.raw(), b) > 0; }
inline bool operator<=(const BigReal& a, double b) { return mpfr_cmp_d(a.raw(), b) <= 0; }
inline bool operator>=(const BigReal& a, double b) { return mpfr_cmp_d(a.raw(), b) >= 0; }

#define DSTPROF_UNFN(NAME, FN)                     \
    inline BigReal NAME(const BigReal& a) {        \
        BigReal r(a.prec());                       \
        FN(r.raw(), a.raw(), MPFR_RNDN);           \
        return r;                                  \
    }

DSTPROF_UNFN(abs, mpfr_abs)
DSTPROF_UNFN(exp, mpfr_exp)
DSTPROF_UNFN(log, mpfr_log)
DSTPROF_UNFN(log1p, mpfr_log1p)
DSTPROF_UNFN(sqrt, mpfr_sqrt)
DSTPROF_UNFN(cos, mpfr_cos)
DSTPROF_UNFN(sin, mpfr_sin)
DSTPROF_UNFN(cosh, mpfr_cosh)
DSTPROF_UNFN(sinh, mpfr_sinh)
DSTPROF_UNFN(frac, mpfr_frac)
#undef DSTPROF_UNFN

inline BigReal floor(const BigReal& a) {  // mpfr_floor is a macro
    BigReal r(a.prec());
    mpfr_rint(r.raw(), a.raw(), MPFR_RNDD);
    return r;
}

inline BigReal pow(const BigReal& a, const BigReal& b) {
    BigReal r(detail::prec_of(a, b));
    mpfr_pow(r.raw(), a.raw(), b.raw(), MPFR_RNDN);
    return r;
}
inline BigReal pow_si(const BigReal& a, long e) {
    BigReal r(a.prec());
    mpfr_pow_si(r.raw(), a.raw(), e, MPFR_RNDN);
    return r;
}
inline BigReal atan2(const BigReal& y, const BigReal& x) {
    BigReal r(detail::prec_of(y, x));
    mpfr_atan2(r.raw(), y.raw(), x.raw(), MPFR_RNDN);
    return r;
}
inline BigReal fma(const BigReal& a, const BigReal& b, const BigReal& c) {
    BigReal r(std::max(detail::prec_of(a, b), c.prec()));
    mpfr_fma(r.raw(), a.raw(), b.raw(), c.raw(), MPFR_RNDN);
    return r;
}
inline BigReal max(const BigReal& a, const BigReal& b) { return a < b ? b : a; }
inline BigReal min(const BigReal& a, const BigReal& b) { return a < b ? a : b; }

// Adaptive refinement driver: evaluates `fn` at ctx.bits, then doubled
// precisions, until two successive results agree to series_tol
// (|a-b| <= tol * max(1, |b|)); throws PrecisionExhausted past the cap.
// Distance is provided as a functor so complex values can reuse this.
template <class T, class Fn, class Dist>
T adaptive_eval(const PrecisionContext& ctx, Fn&& fn, Dist&& dist) {
    ctx.validate();
    T prev = fn(ctx.bits);
    if (!ctx.adaptive) return prev;
    int bits = ctx.bits;
    for (int round = 0; round < PrecisionContext::kMaxDoublings; ++round) {
        bits *= 2;
        T cur = fn(bits);
        if (dist(prev, cur) <= ctx.series_tol) return cur;
        prev = std::move(cur);
    }
    throw PrecisionExhausted("adaptive refinement cap reached");
}

// log2 of |a| within one unit, robust far outside double range
inline double log2_approx(const BigReal& a) {
    if (a.is_zero() || !a.is_finite()) return -1e308;
    return static_cast<double>(mpfr_get_exp(a.raw()));
}

inline double rel_abs_distance(const BigReal& a, const BigReal& b) {
    BigReal d = abs(a - b);
    BigReal scale = max(BigReal(1.0, 64), abs(b));
    return (d / scale).to_double();
}

}  // namespace dstprof

#endif
