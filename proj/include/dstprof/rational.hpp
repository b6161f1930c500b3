#ifndef DSTPROF_RATIONAL_HPP
#define DSTPROF_RATIONAL_HPP

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

namespace dstprof {

using Rat = mpq_class;
using Int = mpz_class;

inline Int binom(unsigned long n, unsigned long k) {
    Int r;
    if (k > n) return 0;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

// C(j,2) = j(j-1)/2, as plain integer (used in q-series exponents)
inline long choose2(long j) { return j * (j - 1) / 2; }

// 2^e as exact rational, e may be negative
inline Rat pow2q(long e) {
    Rat r(1);
    if (e >= 0)
        mpz_ui_pow_ui(r.get_num_mpz_t(), 2, static_cast<unsigned long>(e));
    else
        mpz_ui_pow_ui(r.get_den_mpz_t(), 2, static_cast<unsigned long>(-e));
    return r;
}

inline Int pow2z(unsigned long e) {
    Int r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, e);
    return r;
}

inline std::string rat_str(const Rat& q) { return q.get_str(); }

}  // namespace dstprof

#endif
