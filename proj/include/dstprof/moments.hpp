#ifndef DSTPROF_MOMENTS_HPP
#define DSTPROF_MOMENTS_HPP

#include <vector>

#include "dstprof/bigcomplex.hpp"
#include "dstprof/bigreal.hpp"
#include "dstprof/rational.hpp"

namespace dstprof::moments {

enum class ProfileKind { external, internal };

// Exact-rational caps (denominator growth): mu tables to n <= 200, second
// moments to n <= 64.  Beyond these only the BigReal closed forms apply.
inline constexpr long kMuCap = 200;
inline constexpr long kNuCap = 64;

// Triangular exact tables from the distributional recurrence.
// mu[n][k] = E(B_{n,k}) (or E(I_{n,k})), nu[n][k] = second moments,
// var = nu - mu^2; row n has entries k = 0..n.
struct MomentTable {
    ProfileKind kind = ProfileKind::external;
    long n_max = 0;
    bool has_second = false;
    std::vector<std::vector<Rat>> mu;
    std::vector<std::vector<Rat>> nu;
    std::vector<std::vector<Rat>> var;

    const Rat& mu_at(long n, long k) const;   // zero outside the triangle
    const Rat& nu_at(long n, long k) const;
    const Rat& var_at(long n, long k) const;
};

MomentTable recurrence_tables(ProfileKind kind, long n_max, bool with_second = true);

// Closed form (exact rational): mu_{n,k} = 2^k sum_j (-1)^j 2^{-C(j,2)}
//   (1-2^{j-k})^n / (Q_j Q_{k-j}).
Rat mean_closed_exact(long n, long k);

// Same sum in BigReal with cancellation-aware adaptive precision.
BigReal mean_closed(long n, long k, const PrecisionContext& ctx);

// Exact second moment nu_{n,k} via the quadruple sum with the two-branch
// delta(u,v;n); k <= 62 (scaled dyadic bookkeeping uses 64-bit integers).
BigReal second_moment_closed(long n, long k, const PrecisionContext& ctx);

// nu - mu^2 with nonnegativity asserted (tiny negative rounding residue is
// clamped to zero).
BigReal variance_exact(long n, long k, const PrecisionContext& ctx);

// iota_{n,k} = sum_{l>=1} 2^-l mu_{n,k+l}, exact.
Rat internal_mean_exact(long n, long k);

// m-th derivative of the Poisson generating function of the mean:
//   Mt_{k,1}^{(m)}(z) = 2^k sum_{0<=j<=k} c_j (-2^{j-k})^m e^{-2^{j-k} z}.
BigComplex poisson_mean(long k, const BigComplex& z, long m, const PrecisionContext& ctx);
BigReal poisson_mean(long k, const BigReal& z, long m, const PrecisionContext& ctx);

// Poissonized variance Vt_k(z) over the finite index set
//   {0<=j<=k, 0<=r<=k-j, 0<=h,l<=j}, u = 2^{r+j}, v = 2^h+2^l, argument
// 2^-k z; u == v families skipped (exact pairwise cancellation).
BigComplex poissonized_variance(long k, const BigComplex& z, const PrecisionContext& ctx);
BigReal poissonized_variance(long k, const BigReal& z, const PrecisionContext& ctx);

// Bundled Poisson-model evaluation at one (k, z): derivatives
// Mt_{k,1}, Mt'_{k,1}, ..., Mt^{(m_max)}_{k,1} plus Vt_k(z).
struct PoissonEval {
    long k = 0;
    BigComplex z;
    std::vector<BigComplex> derivatives;
    BigComplex variance;
};

PoissonEval poisson_eval(long k, const BigComplex& z, long m_max, const PrecisionContext& ctx);

// tau_j(n) = sum_l C(j,l) (-n)^{j-l} n!/(n-l)!, exact integer.
Int charlier_tau(long j, long n);

struct CharlierCoeffs {
    long n = 0;
    std::vector<Int> tau;  // tau_0(n) .. tau_{j_max}(n)
};

CharlierCoeffs charlier_coeffs(long j_max, long n);

// Partial Poisson-Charlier sum  sum_{j<=order} Mt^{(j)}_{k,1}(n) tau_j(n)/j!.
BigReal depoissonize(long k, long n, long order, const PrecisionContext& ctx);

}  // namespace dstprof::moments

#endif
