#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dstprof/qseries.hpp"

using namespace dstprof;
using namespace dstprof::qseries;

namespace {
const PrecisionContext kCtx;  // 128 bits, 1e-30, adaptive

double dist(const BigComplex& a, const BigComplex& b) { return abs(a - b).to_double(); }

// Euler partial sum: sum_{0<=j<=J} (-1)^j q^{C(j,2)} z^j / ((1-q)...(1-q^j))
// at q = 1/2, the test-side oracle for prod_{l>=0} (1 - 2^-l z).
BigComplex euler_sum(const BigComplex& z, long J, int bits) {
    BigComplex acc(bits), zp{BigReal(1.0, bits), BigReal(0.0, bits)};
    Rat q(1);
    for (long j = 0; j <= J; ++j) {
        if (j > 0) {
            q *= Rat(pow2z(j) - 1, pow2z(j));
            zp = zp * z;
        }
        BigComplex term = BigReal::pow2(-choose2(j), bits) *
                          BigReal::from_mpq(Rat(1) / q, bits) * zp;
        if (j % 2)
            acc += -term;
        else
            acc += term;
    }
    return acc;
}
}  // namespace

TEST_CASE("q_finite basics") {
    CHECK(q_finite(0) == Rat(1));
    CHECK(q_finite(1) == Rat(1, 2));
    CHECK(q_finite(2) == Rat(3, 8));
    CHECK_THROWS_AS(q_finite(-1), DomainError);
    Rat prev(2);
    for (long n = 0; n <= 64; ++n) {
        Rat cur = q_finite(n);
        CHECK(cur < prev);  // strictly decreasing
        prev = cur;
    }
}

TEST_CASE("q_product values") {
    BigReal one(1.0, 128), zero(0.0, 128);
    CHECK(q_product(zero, kCtx).to_double() == 1.0);
    CHECK(q_product(BigReal(2.0, 128), kCtx).is_zero());
    BigReal qinf = q_product(one, kCtx);
    CHECK(std::fabs(qinf.to_double() - 0.288788095086602) < 1e-12);
}

TEST_CASE("QTable invariants") {
    QTable t = QTable::build(64, kCtx);
    CHECK(t.qn[0] == Rat(1));
    for (size_t n = 1; n < t.qn.size(); ++n) {
        Rat ratio(pow2z(n) - 1, pow2z(n));
        CHECK(t.qn[n] == t.qn[n - 1] * ratio);
    }
    // Q_n = Q(1)/Q(2^-n)
    for (long n : {1L, 5L, 17L, 64L}) {
        BigReal lhs = BigReal::from_mpq(t.qn[static_cast<size_t>(n)], 128) *
                      q_product(BigReal::pow2(-n, 128), kCtx);
        CHECK(abs(lhs - t.q_infinity).to_double() < 1e-28);
    }
}

TEST_CASE("q_finite(n) * q_product(2^-n) = q_product(1) up to n = 64") {
    BigReal qinf = q_product(BigReal(1.0, 128), kCtx);
    for (long n = 0; n <= 64; ++n) {
        BigReal prod = BigReal::from_mpq(q_finite(n), 128) *
                       q_product(BigReal::pow2(-n, 128), kCtx);
        CHECK(abs(prod - qinf).to_double() < 1e-28);
    }
}

TEST_CASE("Euler identity on a grid") {
    // sum converges to prod_{l>=0}(1 - 2^-l z) = (1-z) Q(z)
    const double res[][2] = {{-2.0, 0.0}, {-0.5, 0.0}, {0.25, 0.0}, {1.5, 0.0},
                             {3.0, 0.0},  {0.7, 1.3},  {-1.2, 0.4}};
    for (auto& p : res) {
        BigComplex z(p[0], p[1], 128);
        BigComplex target = (BigReal(1.0, 128) - z) * q_product(z, kCtx);
        BigComplex s = euler_sum(z, 40, 128);
        // tail of the Euler sum at J = 40: next coefficient ~ 2^-C(41,2) |z|^41
        CHECK(dist(s, target) < 1e-25);
    }
}

TEST_CASE("q_log_asymptotic identity instances") {
    // s = 1: identity equals the directly computed log Q(-2)
    BigComplex s1(1.0, 0.0, 128);
    BigComplex lhs = q_log_asymptotic(s1, kCtx);
    BigComplex direct = log(q_product(BigComplex(-2.0, 0.0, 128), kCtx));
    CHECK(dist(lhs, direct) < 1e-25);

    // s = 4 at 128 bits: both routes agree to 1e-20
    BigComplex s4(4.0, 0.0, 128);
    CHECK(dist(q_log_asymptotic(s4, kCtx),
               log(q_product(BigComplex(-8.0, 0.0, 128), kCtx))) < 1e-20);

    // complex s as well (principal logs agree off the negative axis)
    BigComplex sc(3.0, 2.0, 128);
    CHECK(dist(q_log_asymptotic(sc, kCtx),
               log(q_product(BigComplex(-6.0, -4.0, 128), kCtx))) < 1e-20);
}

TEST_CASE("q_log_asymptotic large-s remainder") {
    // J(s) = -log Q(-1/s) = O(1/s): at s = 1e6 the identity value sits within
    // 2e-6 of the three-term expansion
    int bits = 128;
    BigComplex s(1e6, 0.0, bits);
    BigComplex full = q_log_asymptotic(s, kCtx);
    BigReal ln2 = BigReal::log2_const(bits);
    BigReal ls = log(BigReal(1e6, bits));
    BigReal three = ls * ls / (BigReal(2.0, bits) * ln2) + ls / BigReal(2.0, bits) +
                    detail::periodic_P(ls / ln2, bits);
    CHECK(abs(full.re - three).to_double() < 2e-6);
    CHECK(abs(full.re - three).to_double() > 1e-7);  // the remainder is really there
}

TEST_CASE("q_log_asymptotic domain errors") {
    CHECK_THROWS_AS(q_log_asymptotic(BigComplex(-1.0, 0.0, 128), kCtx), DomainError);
    CHECK_THROWS_AS(q_log_asymptotic(BigComplex(0.0, 0.0, 128), kCtx), DomainError);
    // sector violation: arg close to pi
    CHECK_THROWS_AS(q_log_asymptotic(BigComplex(-5.0, 0.01, 128), kCtx), DomainError);
}

TEST_CASE("PrecisionContext validation") {
    CHECK_THROWS_AS(PrecisionContext(52, 1e-10), DomainError);
    CHECK_THROWS_AS(PrecisionContext(128, 0.0), DomainError);
    CHECK_NOTHROW(PrecisionContext(53, 1e-10));
}

TEST_CASE("adaptive evaluation agrees with fixed high precision") {
    BigReal a = q_product(BigReal(1.0, 128), kCtx);
    BigReal b = q_product(BigReal(1.0, 512), PrecisionContext(512, 1e-40, false));
    CHECK(abs(a - b).to_double() < 1e-29);
}
