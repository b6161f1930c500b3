#include "dstprof/moments.hpp"

#include <cmath>
#include <unordered_map>

#include "dstprof/errors.hpp"
#include "dstprof/qseries.hpp"

namespace dstprof::moments {

using qseries::QInverseCache;

namespace {
const Rat kZero(0);
}

const Rat& MomentTable::mu_at(long n, long k) const {
    if (n < 0 || n > n_max || k < 0 || k > n) return kZero;
    return mu[static_cast<size_t>(n)][static_cast<size_t>(k)];
}
const Rat& MomentTable::nu_at(long n, long k) const {
    if (n < 0 || n > n_max || k < 0 || k > n) return kZero;
    return nu[static_cast<size_t>(n)][static_cast<size_t>(k)];
}
const Rat& MomentTable::var_at(long n, long k) const {
    if (n < 0 || n > n_max || k < 0 || k > n) return kZero;
    return var[static_cast<size_t>(n)][static_cast<size_t>(k)];
}

MomentTable recurrence_tables(ProfileKind kind, long n_max, bool with_second) {
    if (n_max < 0) throw DomainError("recurrence_tables: n_max must be >= 0");
    if (n_max > kMuCap) throw CapExceeded("recurrence_tables: n_max exceeds mu cap (200)");
    if (with_second && n_max > kNuCap)
        throw CapExceeded("recurrence_tables: n_max exceeds second-moment cap (64)");

    const bool ext = kind == ProfileKind::external;
    MomentTable t;
    t.kind = kind;
    t.n_max = n_max;
    t.has_second = with_second;
    t.mu.resize(static_cast<size_t>(n_max) + 1);
    if (with_second) {
        t.nu.resize(static_cast<size_t>(n_max) + 1);
        t.var.resize(static_cast<size_t>(n_max) + 1);
    }

    // Pascal triangle rows reused across n
    std::vector<std::vector<Int>> C(static_cast<size_t>(std::max(n_max, 1L)));
    for (long n = 1; n <= n_max; ++n) {
        auto& row = C[static_cast<size_t>(n - 1)];
        row.resize(static_cast<size_t>(n));
        for (long j = 0; j < n; ++j) row[static_cast<size_t>(j)] = binom(n - 1, j);
    }

    for (long n = 0; n <= n_max; ++n) {
        auto& mrow = t.mu[static_cast<size_t>(n)];
        mrow.assign(static_cast<size_t>(n) + 1, Rat(0));
        if (n == 0) {
            mrow[0] = ext ? Rat(1) : Rat(0);  // B_{0,0} = 1; I_{0,k} = 0
        } else {
            mrow[0] = ext ? Rat(0) : Rat(1);  // B_{n,0} = 0; I_{n,0} = 1
            Rat scale = Rat(4) / Rat(pow2z(static_cast<unsigned long>(n)));
            for (long k = 1; k <= n; ++k) {
                Rat s(0);
                for (long j = 0; j < n; ++j) {
                    if (k - 1 <= j)
                        s += Rat(C[static_cast<size_t>(n - 1)][static_cast<size_t>(j)]) *
                             t.mu_at(j, k - 1);
                }
                mrow[static_cast<size_t>(k)] = scale * s;
            }
        }
    }

    if (with_second) {
        for (long n = 0; n <= n_max; ++n) {
            auto& nrow = t.nu[static_cast<size_t>(n)];
            nrow.assign(static_cast<size_t>(n) + 1, Rat(0));
            if (n == 0) {
                nrow[0] = ext ? Rat(1) : Rat(0);
            } else {
                nrow[0] = ext ? Rat(0) : Rat(1);  // I_{n,0} = 1 deterministically
                Rat scale = Rat(4) / Rat(pow2z(static_cast<unsigned long>(n)));
                for (long k = 1; k <= n; ++k) {
                    Rat s(0);
                    for (long j = 0; j < n; ++j) {
                        Rat term = t.nu_at(j, k - 1) + t.mu_at(j, k - 1) * t.mu_at(n - 1 - j, k - 1);
                        if (term != 0)
                            s += Rat(C[static_cast<size_t>(n - 1)][static_cast<size_t>(j)]) * term;
                    }
                    nrow[static_cast<size_t>(k)] = scale * s;
                }
            }
            auto& vrow = t.var[static_cast<size_t>(n)];
            vrow.assign(static_cast<size_t>(n) + 1, Rat(0));
            for (long k = 0; k <= n; ++k) {
                vrow[static_cast<size_t>(k)] =
                    t.nu_at(n, k) - t.mu_at(n, k) * t.mu_at(n, k);
                if (vrow[static_cast<size_t>(k)] < 0)
                    throw DomainError("recurrence_tables: negative variance");
            }
        }
    }
    return t;
}

Rat mean_closed_exact(long n, long k) {
    if (n < 0 || k < 0) throw DomainError("mean_closed_exact: n, k must be >= 0");
    if (n == 0) return k == 0 ? Rat(1) : Rat(0);
    if (k == 0 || k > n) return Rat(0);
    // 2^k sum_j (-1)^j 2^{-C(j,2)} ((2^k - 2^j)/2^k)^n / (Q_j Q_{k-j})
    std::vector<Rat> Q(static_cast<size_t>(k) + 1);
    Q[0] = Rat(1);
    for (long j = 1; j <= k; ++j)
        Q[static_cast<size_t>(j)] =
            Q[static_cast<size_t>(j - 1)] *
            Rat(pow2z(static_cast<unsigned long>(j)) - 1, pow2z(static_cast<unsigned long>(j)));
    Rat acc(0);
    for (long j = 0; j < k; ++j) {  // j = k term vanishes for n >= 1
        // (1 - 2^{j-k})^n = (2^{k-j}-1)^n / 2^{(k-j)n}, already in lowest terms
        Int odd = pow2z(static_cast<unsigned long>(k - j)) - 1;
        Int num;
        mpz_pow_ui(num.get_mpz_t(), odd.get_mpz_t(), static_cast<unsigned long>(n));
        Rat base(num, pow2z(static_cast<unsigned long>((k - j) * n)));
        Rat term = pow2q(k - choose2(j)) * base /
                   (Q[static_cast<size_t>(j)] * Q[static_cast<size_t>(k - j)]);
        if (j % 2 == 0)
            acc += term;
        else
            acc -= term;
    }
    acc.canonicalize();
    return acc;
}

namespace {

// (1 - 2^{j-k})^n as exp(n log1p(-2^{j-k})), the cancellation-safe route.
BigReal one_minus_pow(long j, long k, long n, int bits) {
    if (j == k) return n == 0 ? BigReal(1.0, bits) : BigReal(0.0, bits);
    BigReal b = BigReal::pow2(j - k, bits);
    return exp(BigReal(n, bits) * log1p(-b));
}

struct StableSum {
    BigReal value;
    double max_term_log2 = -1e308;  // log2 of the largest |term|
};

// Evaluate `kernel` at increasing precision until the result is stable and
// the precision exceeds 53 + log2(max_term / |result|) bits (cancellation
// guard from the design notes).
template <class Kernel>
BigReal cancellation_aware(const PrecisionContext& ctx, Kernel&& kernel) {
    int bits = ctx.bits;
    BigReal prev;
    bool have_prev = false;
    for (int round = 0; round <= PrecisionContext::kMaxDoublings; ++round) {
        StableSum s = kernel(bits);
        double res_log2 = log2_approx(s.value);
        double needed = 53.0 + (s.max_term_log2 - res_log2);
        bool precise_enough = static_cast<double>(bits) >= needed && res_log2 > -1e307;
        if (precise_enough && have_prev &&
            rel_abs_distance(prev, s.value) <= ctx.series_tol)
            return s.value;
        if (precise_enough && !ctx.adaptive) return s.value;
        prev = s.value;
        have_prev = precise_enough;
        bits *= 2;
    }
    throw PrecisionExhausted("cancellation-aware evaluation: precision cap reached");
}

}  // namespace

BigReal mean_closed(long n, long k, const PrecisionContext& ctx) {
    if (n < 0 || k < 0) throw DomainError("mean_closed: n, k must be >= 0");
    if (n == 0) return BigReal(k == 0 ? 1.0 : 0.0, ctx.bits);
    if (k == 0 || k > n) return BigReal(0.0, ctx.bits);
    return cancellation_aware(ctx, [&](int bits) {
        QInverseCache invq(k, bits);
        BigReal acc(0.0, bits);
        double maxt = -1e308;
        for (long j = 0; j < k; ++j) {
            BigReal term = BigReal::pow2(k - choose2(j), bits) * invq[j] * invq[k - j] *
                           one_minus_pow(j, k, n, bits);
            maxt = std::max(maxt, log2_approx(term));
            if (j % 2 == 0)
                acc += term;
            else
                acc -= term;
        }
        return StableSum{acc, maxt};
    });
}

BigReal second_moment_closed(long n, long k, const PrecisionContext& ctx) {
    if (n < 0 || k < 0) throw DomainError("second_moment_closed: n, k must be >= 0");
    if (k > 62) throw CapExceeded("second_moment_closed: k > 62 not supported");
    if (n == 0) return BigReal(k == 0 ? 1.0 : 0.0, ctx.bits);
    if (k == 0 || k > n) return BigReal(0.0, ctx.bits);

    return cancellation_aware(ctx, [&](int bits) {
        QInverseCache invq(k, bits);
        BigReal acc(0.0, bits);
        double maxt = -1e308;

        // powers (1 - m 2^-k)^e keyed by scaled dyadic m and the exponent
        // choice (e is n for the general branch, n-1 for the equality one)
        std::unordered_map<std::uint64_t, BigReal> pw;
        auto power = [&](std::uint64_t m, long e) -> const BigReal& {
            std::uint64_t key = (m << 1) | (e == n ? 0u : 1u);
            auto it = pw.find(key);
            if (it == pw.end()) {
                BigReal u = BigReal::from_mpz(Int(static_cast<unsigned long>(m)), bits) *
                            BigReal::pow2(-k, bits);
                BigReal val = (m == (1ULL << k))
                                  ? (e == 0 ? BigReal(1.0, bits) : BigReal(0.0, bits))
                                  : exp(BigReal(e, bits) * log1p(-u));
                it = pw.emplace(key, std::move(val)).first;
            }
            return it->second;
        };

        // mu_{n,k} term of (ex-snk)
        for (long j = 0; j < k; ++j) {
            BigReal term = BigReal::pow2(k - choose2(j), bits) * invq[j] * invq[k - j] *
                           one_minus_pow(j, k, n, bits);
            maxt = std::max(maxt, log2_approx(term));
            if (j % 2 == 0)
                acc += term;
            else
                acc -= term;
        }

        BigReal nreal(n, bits);
        for (long j = 0; j <= k - 1; ++j) {
            for (long r = 0; r <= k - 1 - j; ++r) {
                std::uint64_t us = 1ULL << static_cast<unsigned>(r + 1 + j);  // u * 2^k
                for (long h = 0; h <= j; ++h) {
                    for (long l = h; l <= j; ++l) {
                        std::uint64_t vs = (1ULL << static_cast<unsigned>(h)) +
                                           (1ULL << static_cast<unsigned>(l));
                        BigReal d(0.0, bits);
                        if (us == vs) {  // exact dyadic equality branch
                            d = nreal * power(us, n - 1);
                        } else {
                            BigReal diff =
                                BigReal(static_cast<long>(static_cast<std::int64_t>(vs) -
                                                          static_cast<std::int64_t>(us)),
                                        bits) *
                                BigReal::pow2(-k, bits);
                            d = (power(us, n) - power(vs, n)) / diff;
                        }
                        long e2 = 2 * j + 1 - choose2(r) - choose2(h) - choose2(l);
                        BigReal coef = BigReal::pow2(e2, bits) * invq[r] * invq[k - 1 - j - r] *
                                       invq[h] * invq[j - h] * invq[l] * invq[j - l];
                        BigReal term = coef * d;
                        if (h != l) term = term * BigReal(2.0, bits);
                        maxt = std::max(maxt, log2_approx(term));
                        if ((r + h + l) % 2 == 0)
                            acc += term;
                        else
                            acc -= term;
                    }
                }
            }
        }
        return StableSum{acc, maxt};
    });
}

BigReal variance_exact(long n, long k, const PrecisionContext& ctx) {
    if (n <= 2 || k > n || k <= 0)  // deterministic shapes and empty levels
        return BigReal(0.0, ctx.bits);
    // evaluate both moments at matched (already cancellation-guarded)
    // precision and difference them
    PrecisionContext c = ctx;
    BigReal nu = second_moment_closed(n, k, c);
    BigReal mu = mean_closed(n, k, c);
    BigReal var = nu - mu * mu;
    if (var.is_neg()) {
        BigReal slack = max(BigReal(1.0, 64), mu * mu) *
                        BigReal::pow2(-std::max(ctx.bits / 2, 48), 64);
        if (-var <= slack) return BigReal(0.0, ctx.bits);
        throw DomainError("variance_exact: negative variance beyond rounding slack");
    }
    return var;
}

Rat internal_mean_exact(long n, long k) {
    if (n < 0 || k < 0) throw DomainError("internal_mean_exact: n, k must be >= 0");
    if (n > kMuCap) throw CapExceeded("internal_mean_exact: n exceeds mu cap (200)");
    // iota_{n,k} = sum_{l>=1} 2^-l mu_{n,k+l}; terms vanish past k+l = n
    Rat acc(0);
    for (long l = 1; k + l <= n; ++l) acc += pow2q(-l) * mean_closed_exact(n, k + l);
    acc.canonicalize();
    return acc;
}

namespace {

template <class Scalar>
Scalar poisson_mean_impl(long k, const Scalar& z, long m, int bits, double& maxt) {
    QInverseCache invq(k, bits);
    Scalar acc{BigReal(0.0, bits)};
    maxt = -1e308;
    for (long j = 0; j <= k; ++j) {
        // (-1)^j (-2^{j-k})^m = (-1)^{j+m} 2^{(j-k)m}
        long e2 = k - choose2(j) + (j - k) * m;
        BigReal coef = BigReal::pow2(e2, bits) * invq[j] * invq[k - j];
        Scalar term = coef * exp(-(BigReal::pow2(j - k, bits) * z));
        maxt = std::max(maxt, log2_approx(abs(term)));
        if ((j + m) % 2 == 0)
            acc += term;
        else
            acc += -term;
    }
    return acc;
}

}  // namespace

BigComplex poisson_mean(long k, const BigComplex& z, long m, const PrecisionContext& ctx) {
    if (k < 0 || m < 0) throw DomainError("poisson_mean: k, m must be >= 0");
    int bits = ctx.bits;
    BigComplex prev;
    bool have_prev = false;
    for (int round = 0; round <= PrecisionContext::kMaxDoublings; ++round) {
        double maxt = 0;
        BigComplex cur = poisson_mean_impl(k, z, m, bits, maxt);
        double res = log2_approx(abs(cur));
        bool precise = static_cast<double>(bits) >= 53.0 + (maxt - res) && res > -1e307;
        if (precise && (!ctx.adaptive ||
                        (have_prev && rel_abs_distance(prev, cur) <= ctx.series_tol)))
            return cur;
        prev = cur;
        have_prev = precise;
        bits *= 2;
    }
    throw PrecisionExhausted("poisson_mean: precision cap reached");
}

BigReal poisson_mean(long k, const BigReal& z, long m, const PrecisionContext& ctx) {
    return poisson_mean(k, BigComplex(z), m, ctx).re;
}

namespace {

template <class Scalar>
Scalar phi_core(const Scalar& Eu, const Scalar& Ev, const Int& c, const Scalar& x, int bits) {
    BigReal cb = BigReal::from_mpz(c, bits);
    Scalar cx = cb * x;
    if (abs(cx).to_double() <= 1.0) {
        Scalar s{BigReal(0.0, bits)};
        Scalar pwr{BigReal(1.0, bits)};
        for (long i = 0;; ++i) {
            s += pwr / BigReal(i + 2, bits);
            pwr = pwr * cx / BigReal(i + 1, bits);
            if (abs(pwr).to_double() < std::ldexp(1.0, -bits - 4) * (abs(s).to_double() + 1e-300) ||
                i > 4 * bits)
                break;
        }
        return Eu * x * x * s;
    }
    Scalar one{BigReal(1.0, bits)};
    return (Eu + (cx - one) * Ev) / (cb * cb);
}

template <class Scalar>
Scalar poissonized_variance_impl(long k, const Scalar& z, int bits, double& maxt) {
    QInverseCache invq(k, bits);
    Scalar x = BigReal::pow2(-k, bits) * z;
    // E[a] = e^{-2^a x}
    std::vector<Scalar> E;
    E.reserve(static_cast<size_t>(2 * k) + 2);
    E.push_back(exp(-x));
    for (long a = 1; a <= 2 * k + 1; ++a) E.push_back(E.back() * E.back());

    Scalar acc{BigReal(0.0, bits)};
    maxt = -1e308;
    for (long j = 0; j <= k; ++j) {
        for (long r = 0; r <= k - j; ++r) {
            long a = r + j;
            Int u = pow2z(static_cast<unsigned long>(a));
            for (long h = 0; h <= j; ++h) {
                for (long l = h; l <= j; ++l) {
                    if (h == l && a == h + 1) continue;  // u == v families cancel
                    Int v = pow2z(static_cast<unsigned long>(h)) +
                            pow2z(static_cast<unsigned long>(l));
                    Scalar ph = phi_core(E[static_cast<size_t>(a)],
                                         E[static_cast<size_t>(h)] * E[static_cast<size_t>(l)],
                                         u - v, x, bits);
                    long e2 = k - j - choose2(r) - choose2(h) - choose2(l) + 2 * (h + l);
                    BigReal coef = BigReal::pow2(e2, bits) * invq[r] * invq[k - j - r] * invq[h] *
                                   invq[j - h] * invq[l] * invq[j - l];
                    Scalar term = coef * ph;
                    if (h != l) term = BigReal(2.0, bits) * term;
                    maxt = std::max(maxt, log2_approx(abs(term)));
                    if ((r + h + l) % 2 == 0)
                        acc += term;
                    else
                        acc += -term;
                }
            }
        }
    }
    return acc;
}

#ifndef NDEBUG
// Debug check from the design notes: including the two u == v families must
// change nothing beyond tolerance (they cancel pairwise since Q_1 = 1/2).
template <class Scalar>
Scalar poissonized_variance_families(long k, const Scalar& z, int bits) {
    QInverseCache invq(k, bits);
    Scalar x = BigReal::pow2(-k, bits) * z;
    Scalar acc{BigReal(0.0, bits)};
    for (long j = 1; j <= k; ++j) {  // family A: r = 0, h = l = j-1
        Scalar Eu = exp(-(BigReal::pow2(j, bits) * x));
        Scalar ph = BigReal(0.5, bits) * x * x * Eu;
        long e2 = k - j - 2 * choose2(j - 1) + 4 * (j - 1);
        BigReal coef = BigReal::pow2(e2, bits) * invq[0] * invq[k - j] * invq[j - 1] *
                       invq[1] * invq[j - 1] * invq[1];
        acc += coef * ph;
    }
    for (long j = 0; j < k; ++j) {  // family B: r = 1, h = l = j
        Scalar Eu = exp(-(BigReal::pow2(j + 1, bits) * x));
        Scalar ph = BigReal(0.5, bits) * x * x * Eu;
        long e2 = k - j - 2 * choose2(j) + 4 * j;
        BigReal coef = BigReal::pow2(e2, bits) * invq[1] * invq[k - j - 1] * invq[j] *
                       invq[0] * invq[j] * invq[0];
        acc += -(coef * ph);
    }
    return acc;
}
#endif

}  // namespace

BigComplex poissonized_variance(long k, const BigComplex& z, const PrecisionContext& ctx) {
    if (k < 0) throw DomainError("poissonized_variance: k must be >= 0");
    if (abs(z).is_zero()) return BigComplex(BigReal(0.0, ctx.bits));  // phi(.,.;0) = 0
    int bits = ctx.bits;
    BigComplex prev;
    bool have_prev = false;
    for (int round = 0; round <= PrecisionContext::kMaxDoublings; ++round) {
        double maxt = 0;
        BigComplex cur = poissonized_variance_impl(k, z, bits, maxt);
#ifndef NDEBUG
        BigComplex fam = poissonized_variance_families(k, z, bits);
        if (abs(fam).to_double() >
            std::max(1.0, abs(cur).to_double()) * std::max(ctx.series_tol, 1e-25))
            throw DomainError("poissonized_variance: u == v families failed to cancel");
#endif
        double res = log2_approx(abs(cur));
        bool precise = static_cast<double>(bits) >= 53.0 + (maxt - res) && res > -1e307;
        if (precise && (!ctx.adaptive ||
                        (have_prev && rel_abs_distance(prev, cur) <= ctx.series_tol)))
            return cur;
        prev = cur;
        have_prev = precise;
        bits *= 2;
    }
    throw PrecisionExhausted("poissonized_variance: precision cap reached");
}

BigReal poissonized_variance(long k, const BigReal& z, const PrecisionContext& ctx) {
    return poissonized_variance(k, BigComplex(z), ctx).re;
}

PoissonEval poisson_eval(long k, const BigComplex& z, long m_max, const PrecisionContext& ctx) {
    PoissonEval out;
    out.k = k;
    out.z = z;
    out.derivatives.reserve(static_cast<size_t>(m_max) + 1);
    for (long m = 0; m <= m_max; ++m) out.derivatives.push_back(poisson_mean(k, z, m, ctx));
    out.variance = poissonized_variance(k, z, ctx);
    return out;
}

CharlierCoeffs charlier_coeffs(long j_max, long n) {
    CharlierCoeffs c;
    c.n = n;
    c.tau.reserve(static_cast<size_t>(j_max) + 1);
    for (long j = 0; j <= j_max; ++j) c.tau.push_back(charlier_tau(j, n));
    return c;
}

Int charlier_tau(long j, long n) {
    if (j < 0 || n < 0) throw DomainError("charlier_tau: j, n must be >= 0");
    // tau_j(n) = sum_{0<=l<=j} C(j,l) (-n)^{j-l} n (n-1) ... (n-l+1)
    Int acc(0);
    Int neg_n(-n);
    for (long l = 0; l <= std::min(j, n); ++l) {  // falling factorial is 0 past l = n
        Int falling(1);
        for (long i = 0; i < l; ++i) falling *= Int(n - i);
        Int p;
        mpz_pow_ui(p.get_mpz_t(), neg_n.get_mpz_t(), static_cast<unsigned long>(j - l));
        acc += binom(j, l) * p * falling;
    }
    return acc;
}

BigReal depoissonize(long k, long n, long order, const PrecisionContext& ctx) {
    if (order < 0) throw DomainError("depoissonize: order must be >= 0");
    BigReal acc(0.0, ctx.bits);
    BigReal z(n, ctx.bits);
    Int fact(1);
    for (long j = 0; j <= order; ++j) {
        if (j > 0) fact *= j;
        Rat w(charlier_tau(j, n), fact);
        w.canonicalize();
        if (w == 0) continue;
        acc += poisson_mean(k, z, j, ctx) * BigReal::from_mpq(w, ctx.bits);
    }
    return acc;
}

}  // namespace dstprof::moments
