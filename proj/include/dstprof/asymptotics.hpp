#ifndef DSTPROF_ASYMPTOTICS_HPP
#define DSTPROF_ASYMPTOTICS_HPP

#include <utility>

#include "dstprof/bigcomplex.hpp"
#include "dstprof/bigreal.hpp"

namespace dstprof::asym {

// Solution of rho / log rho = 1/(z log 2) on the branch |rho| -> infinity
// as |z| -> 0 (so |rho| > e).
struct SaddleResult {
    BigComplex rho;
    BigComplex log_rho;
    double residual = 0.0;   // |rho/log rho - 1/(z log 2)|
    int iterations = 0;
};

// Newton iteration on log rho from the bootstrap guess X(log X + log log X),
// X = 1/(z log 2).  Pre: 0 < |z| <= 1 and |arg z| <= sector_eps.
SaddleResult saddle_solve(const BigComplex& z, const PrecisionContext& ctx,
                          double sector_eps = 0.3);
SaddleResult saddle_solve(const BigReal& x, const PrecisionContext& ctx);

// Saddle-point approximation of F^{(m)}:
//   rho^{m+1/2+1/log2} / sqrt(2 pi log2(rho)) *
//     exp(-(log rho)^2/(2 log 2) - P(log2 rho)).
BigComplex F_saddle(const BigComplex& z, long m, const PrecisionContext& ctx);
BigReal F_saddle(const BigReal& x, long m, const PrecisionContext& ctx);

// Explicit small-x form in X = 1/(x log 2):
//   sqrt(log2/(2 pi)) X^{1/2+1/log2}
//     exp(-(log(X log X))^2/(2 log 2) - P(log2(X log X))).
BigReal F_small_explicit(const BigReal& x, const PrecisionContext& ctx);

// (2^k / Q_k) (1 - 2^-k)^n, the elementary large-regime mean approximation.
BigReal mean_elementary(long n, long k, const PrecisionContext& ctx);

// Level predictors (desk-scale doubles).
struct LevelPredictions {
    long n = 0;
    double k_s = 0;
    double k_h = 0;
    long k_H = 0;
    double theta = 0;   // fractional part of the k_H expression
    long k_S = 0;
};

std::pair<double, double> central_range(long n);          // (k_s, k_h)
std::pair<long, double> predict_height_level(long n);     // (k_H, theta)
long predict_saturation_level(long n);                    // k_S
LevelPredictions predict_levels(long n);

// Moment-method bounds for P(H_n <= k):
//   lower = max(0, 1 - sum_{l>=1} 2^-l mu_{n,k+l}),
//   upper = min(1, var_{n,k+1} / mu_{n,k+1}^2)  (1 when mu_{n,k+1} = 0).
std::pair<double, double> height_probability_bounds(long n, long k,
                                                    const PrecisionContext& ctx);

}  // namespace dstprof::asym

#endif
