#ifndef DSTPROF_BIGCOMPLEX_HPP
#define DSTPROF_BIGCOMPLEX_HPP

#include "dstprof/bigreal.hpp"

namespace dstprof {

// Rectangular complex on top of BigReal.  log/pow use the principal branch
// (arg in (-pi, pi]); that choice is relied on by q_log_asymptotic.
struct BigComplex {
    BigReal re, im;

    BigComplex() = default;
    explicit BigComplex(int prec) : re(prec), im(prec) {}
    BigComplex(BigReal r, BigReal i) : re(std::move(r)), im(std::move(i)) {}
    explicit BigComplex(const BigReal& r) : re(r), im(BigReal(0.0, r.prec())) {}
    BigComplex(double r, double i, int prec) : re(r, prec), im(i, prec) {}

    int prec() const { return std::max(re.prec(), im.prec()); }
    bool is_real() const { return im.is_zero(); }
};

inline BigComplex operator+(const BigComplex& a, const BigComplex& b) {
    return {a.re + b.re, a.im + b.im};
}
inline BigComplex operator-(const BigComplex& a, const BigComplex& b) {
    return {a.re - b.re, a.im - b.im};
}
inline BigComplex operator-(const BigComplex& a) { return {-a.re, -a.im}; }
inline BigComplex operator*(const BigComplex& a, const BigComplex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline BigComplex operator*(const BigReal& a, const BigComplex& b) {
    return {a * b.re, a * b.im};
}
inline BigComplex operator*(const BigComplex& a, const BigReal& b) { return b * a; }
inline BigComplex operator/(const BigComplex& a, const BigReal& b) {
    return {a.re / b, a.im / b};
}
inline BigComplex operator/(const BigComplex& a, const BigComplex& b) {
    BigReal den = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
}
inline BigComplex& operator+=(BigComplex& a, const BigComplex& b) {
    a.re += b.re;
    a.im += b.im;
    return a;
}
inline BigComplex operator+(const BigReal& a, const BigComplex& b) {
    return {a + b.re, b.im};
}
inline BigComplex operator-(const BigReal& a, const BigComplex& b) {
    return {a - b.re, -b.im};
}
inline BigComplex operator-(const BigComplex& a, const BigReal& b) {
    return {a.re - b, a.im};
}

inline BigReal abs(const BigComplex& a) {
    BigReal r(a.prec());
    mpfr_hypot(r.raw(), a.re.raw(), a.im.raw(), MPFR_RNDN);
    return r;
}
inline BigReal arg(const BigComplex& a) { return atan2(a.im, a.re); }

inline BigComplex exp(const BigComplex& a) {
    BigReal m = exp(a.re);
    if (a.im.is_zero()) return BigComplex(m);
    BigReal c(a.prec()), s(a.prec());
    mpfr_sin_cos(s.raw(), c.raw(), a.im.raw(), MPFR_RNDN);
    return {m * c, m * s};
}
inline BigComplex log(const BigComplex& a) { return {log(abs(a)), arg(a)}; }
inline BigComplex cos(const BigComplex& a) {
    // cos(x+iy) = cos x cosh y - i sin x sinh y
    if (a.im.is_zero()) return BigComplex(cos(a.re));
    BigReal c(a.prec()), s(a.prec());
    mpfr_sin_cos(s.raw(), c.raw(), a.re.raw(), MPFR_RNDN);
    return {c * cosh(a.im), -(s * sinh(a.im))};
}
inline BigComplex sqr(const BigComplex& a) { return a * a; }
// principal a^w for real exponent w
inline BigComplex pow(const BigComplex& a, const BigReal& w) {
    return exp(w * log(a));
}

inline double rel_abs_distance(const BigComplex& a, const BigComplex& b) {
    BigReal d = abs(a - b);
    BigReal scale = max(BigReal(1.0, 64), abs(b));
    return (d / scale).to_double();
}

}  // namespace dstprof

#endif
