#ifndef DSTPROF_TEST_SUPPORT_HPP
#define DSTPROF_TEST_SUPPORT_HPP

// Shared independent oracles for the test suites.  Everything here is
// deliberately simple and separate from the library's evaluation paths.

#include <cmath>
#include <cstdint>
#include <functional>

namespace testsup {

// Adaptive Simpson quadrature on [a, b]; plain doubles, independent of the
// library's series machinery.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(f, a, m, fa, flm, fm);
    double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = simpson(f, a, b, fa, fm, fb);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// Integrands concentrated near 0 need seeded breakpoints, or the first
// Simpson probe sees only zeros and accepts immediately.
inline double adaptive_simpson_segmented(const std::function<double(double)>& f,
                                         std::initializer_list<double> pts, double tol) {
    double acc = 0.0;
    const double* p = pts.begin();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        acc += adaptive_simpson(f, p[i], p[i + 1], tol / static_cast<double>(pts.size()));
    return acc;
}

// Tiny deterministic generator for property-test inputs (independent of the
// library's SplitMix64 recipe on purpose: xorshift128+).
struct XorShift {
    std::uint64_t s0, s1;
    explicit XorShift(std::uint64_t seed) : s0(seed ^ 0x123456789ABCDEFULL), s1(seed * 2862933555777941757ULL + 3037000493ULL) {
        if (s0 == 0 && s1 == 0) s1 = 1;
        next();
        next();
    }
    std::uint64_t next() {
        std::uint64_t x = s0;
        const std::uint64_t y = s1;
        s0 = y;
        x ^= x << 23;
        s1 = x ^ y ^ (x >> 17) ^ (y >> 26);
        return s1 + y;
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    long below(long m) { return static_cast<long>(next() % static_cast<std::uint64_t>(m)); }
};

}  // namespace testsup

#endif
