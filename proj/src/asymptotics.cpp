#include "dstprof/asymptotics.hpp"

#include <cmath>

#include "dstprof/errors.hpp"
#include "dstprof/moments.hpp"
#include "dstprof/qseries.hpp"

namespace dstprof::asym {

namespace {

// residual of the saddle equation: |e^R / R - X|
BigReal saddle_residual(const BigComplex& R, const BigComplex& X) {
    return abs(exp(R) / R - X);
}

}  // namespace

SaddleResult saddle_solve(const BigComplex& z, const PrecisionContext& ctx,
                          double sector_eps) {
    double az = abs(z).to_double();
    if (!(az > 0.0) || az > 1.0)
        throw DomainError("saddle_solve: need 0 < |z| <= 1");
    if (std::fabs(arg(z).to_double()) > sector_eps + 1e-15)
        throw DomainError("saddle_solve: |arg z| outside sector");
    // rho/log rho >= e on the branch |rho| > e: no solution when |X| < e
    if (1.0 / (az * 0.6931471805599453) < std::exp(1.0) * (1.0 - 1e-12))
        throw NoConvergence("saddle_solve: 1/(z log 2) below e, off the rho > e branch");

    int bits = ctx.bits;
    for (int round = 0; round <= PrecisionContext::kMaxDoublings; ++round) {
        BigReal ln2 = BigReal::log2_const(bits);
        BigComplex zw(bits);
        mpfr_set(zw.re.raw(), z.re.raw(), MPFR_RNDN);
        mpfr_set(zw.im.raw(), z.im.raw(), MPFR_RNDN);
        BigComplex X = BigComplex(BigReal(1.0, bits)) / (zw * BigComplex(ln2));
        BigComplex logX = log(X);

        // bootstrap: rho0 = X (log X + log log X); clamp near the branch
        // bottom where log log X turns negative enough to break the guess
        BigComplex R(bits);
        BigComplex inner = logX;
        if (logX.re.to_double() > 1.05) inner = logX + log(logX);
        if (inner.re.to_double() <= 0.1) {
            R = BigComplex(BigReal(1.05, bits));
        } else {
            R = logX + log(inner);
        }
        if (R.re.to_double() < 1.0) R = BigComplex(BigReal(1.05, bits));

        int iters = 0;
        BigReal res = saddle_residual(R, X);
        BigReal tol(ctx.series_tol, 64);
        const BigComplex one(BigReal(1.0, bits));
        while (res > tol && iters < 200) {
            BigComplex g = R - log(R) - logX;
            BigComplex gp = one - one / R;
            if (abs(gp).to_double() < 1e-60) break;  // stationary edge R = 1
            R = R - g / gp;
            if (R.re.to_double() < 0.5) R = BigComplex(BigReal(1.0 + 1e-8, bits));
            res = saddle_residual(R, X);
            ++iters;
        }
        if (res <= tol) {
            SaddleResult out;
            out.log_rho = R;
            out.rho = exp(R);
            out.residual = res.to_double();
            out.iterations = iters;
            return out;
        }
        bits *= 2;  // residual floor is ~|X| ulp; refine and retry
        if (!ctx.adaptive) break;
    }
    throw NoConvergence("saddle_solve: residual did not reach series_tol");
}

SaddleResult saddle_solve(const BigReal& x, const PrecisionContext& ctx) {
    return saddle_solve(BigComplex(x), ctx, 0.3);
}

BigComplex F_saddle(const BigComplex& z, long m, const PrecisionContext& ctx) {
    SaddleResult s = saddle_solve(z, ctx);
    int bits = std::max(ctx.bits, s.rho.prec());
    BigReal ln2 = BigReal::log2_const(bits);
    BigComplex log2rho = s.log_rho * BigComplex(BigReal(1.0, bits) / ln2);
    BigReal expo = BigReal(m, bits) + BigReal(0.5, bits) + BigReal(1.0, bits) / ln2;
    BigComplex p = detail::periodic_P(log2rho, bits);
    BigComplex arg_exp = -(sqr(s.log_rho) / (BigReal(2.0, bits) * ln2)) - p;
    BigComplex two_pi_l2r = BigReal(2.0, bits) * BigReal::pi(bits) * log2rho;
    // principal square root of 2 pi log2(rho)
    BigComplex root = exp(BigComplex(BigReal(0.5, bits)) * log(two_pi_l2r));
    return pow(s.rho, expo) * exp(arg_exp) / root;
}

BigReal F_saddle(const BigReal& x, long m, const PrecisionContext& ctx) {
    return F_saddle(BigComplex(x), m, ctx).re;
}

BigReal F_small_explicit(const BigReal& x, const PrecisionContext& ctx) {
    if (x.sgn() <= 0) throw DomainError("F_small_explicit: x must be > 0");
    int bits = ctx.bits;
    BigReal ln2 = BigReal::log2_const(bits);
    BigReal xw(0.0, bits);
    mpfr_set(xw.raw(), x.raw(), MPFR_RNDN);
    BigReal X = BigReal(1.0, bits) / (xw * ln2);
    BigReal lX = log(X);
    if (!(lX > 0.0)) throw DomainError("F_small_explicit: x too large (X <= 1)");
    BigReal XlX = X * lX;
    BigReal l = log(XlX);
    BigReal pi = BigReal::pi(bits);
    BigReal amp = sqrt(ln2 / (BigReal(2.0, bits) * pi));
    BigReal p = detail::periodic_P(l / ln2, bits);
    return amp * pow(X, BigReal(0.5, bits) + BigReal(1.0, bits) / ln2) *
           exp(-(l * l) / (BigReal(2.0, bits) * ln2) - p);
}

BigReal mean_elementary(long n, long k, const PrecisionContext& ctx) {
    if (n < 0 || k < 0) throw DomainError("mean_elementary: n, k must be >= 0");
    if (k == 0) return BigReal(n == 0 ? 1.0 : 0.0, ctx.bits);
    int bits = ctx.bits;
    qseries::QInverseCache invq(k, bits);
    BigReal b = BigReal::pow2(-k, bits);
    return BigReal::pow2(k, bits) * invq[k] * exp(BigReal(n, bits) * log1p(-b));
}

std::pair<double, double> central_range(long n) {
    if (n < 2) throw DomainError("central_range: n must be >= 2");
    double l2n = std::log2(static_cast<double>(n));
    double ln = std::log(static_cast<double>(n));
    double lln = std::log(ln);
    double ks = l2n - std::log2(ln) + 1.0 + std::log2(ln) / ln;
    double kh = l2n + std::sqrt(2.0 * l2n) - 0.5 * std::log2(l2n) + 1.0 / std::log(2.0) -
                3.0 * lln / (4.0 * std::sqrt(2.0 * ln * std::log(2.0)));
    return {ks, kh};
}

std::pair<long, double> predict_height_level(long n) {
    if (n < 2) throw DomainError("predict_height_level: n must be >= 2");
    double l2n = std::log2(static_cast<double>(n));
    double v = l2n + std::sqrt(2.0 * l2n) - 0.5 * std::log2(l2n) + 1.0 / std::log(2.0);
    double fl = std::floor(v);
    return {static_cast<long>(fl), v - fl};
}

long predict_saturation_level(long n) {
    if (n < 2) throw DomainError("predict_saturation_level: n must be >= 2");
    double v = std::log2(static_cast<double>(n)) -
               std::log2(std::log(static_cast<double>(n)));
    return static_cast<long>(std::ceil(v));
}

LevelPredictions predict_levels(long n) {
    LevelPredictions p;
    p.n = n;
    auto [ks, kh] = central_range(n);
    p.k_s = ks;
    p.k_h = kh;
    auto [kH, theta] = predict_height_level(n);
    p.k_H = kH;
    p.theta = theta;
    p.k_S = predict_saturation_level(n);
    return p;
}

std::pair<double, double> height_probability_bounds(long n, long k,
                                                    const PrecisionContext& ctx) {
    if (n < 0 || k < 0) throw DomainError("height_probability_bounds: n, k must be >= 0");
    if (k >= n) return {1.0, 1.0};  // H_n <= n always (paths use one bit per level)

    // lower = max(0, 1 - iota_{n,k}) from the first moment method
    double lower;
    if (n <= moments::kMuCap) {
        Rat i = moments::internal_mean_exact(n, k);
        lower = std::max(0.0, 1.0 - i.get_d());
    } else {
        BigReal acc(0.0, ctx.bits);
        for (long l = 1; k + l <= n; ++l) {
            acc += BigReal::pow2(-l, ctx.bits) * moments::mean_closed(n, k + l, ctx);
            // remaining mass <= sum_{l'>l} 2^-l' (n+1) = 2^-l (n+1)
            if (std::ldexp(static_cast<double>(n) + 1.0, static_cast<int>(-l)) < 1e-12) break;
        }
        lower = std::max(0.0, 1.0 - acc.to_double());
    }

    // upper = min(1, var_{n,k+1} / mu_{n,k+1}^2) from the second moment method
    double upper = 1.0;
    BigReal mu = moments::mean_closed(n, k + 1, ctx);
    if (mu.sgn() > 0) {
        BigReal var = moments::variance_exact(n, k + 1, ctx);
        upper = std::min(1.0, (var / (mu * mu)).to_double());
    }
    return {lower, upper};
}

}  // namespace dstprof::asym
