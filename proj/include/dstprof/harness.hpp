#ifndef DSTPROF_HARNESS_HPP
#define DSTPROF_HARNESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dstprof/bigreal.hpp"
#include "dstprof/rational.hpp"
#include "dstprof/simulator.hpp"

namespace dstprof::harness {

enum class OutputFormat { csv, json };

struct ExperimentSpec {
    std::string kind;          // simulate | clt | concentration | profile-table | limitfn | saddle | predict
    long n = 0;
    long k = -1;
    long kmin = -1, kmax = -1;
    long trials = 0;
    std::uint64_t master_seed = 0;
    int precision_bits = 128;
    double tolerance = 1e-30;
    OutputFormat format = OutputFormat::csv;
    std::string out_path;      // empty = stdout

    PrecisionContext ctx() const { return PrecisionContext(precision_bits, tolerance, true); }
};

// Standardized-profile normality report.  Standardization uses the exact
// mean and, beyond the exact caps, the Poissonized variance surrogate.
struct CltReport {
    long n = 0, k = 0, trials = 0;
    std::uint64_t seed = 0;
    double mu = 0;             // exact mean
    double sigma = 0;          // sqrt of exact variance or Vt_k(n)
    bool poissonized_variance = false;
    bool outside_central_range = false;   // warning, non-fatal
    double empirical_mean = 0;
    double empirical_variance = 0;
    double ks_distance = 0;    // vs standard normal, exact-moment standardization
    std::map<long, std::uint64_t> histogram;
};

CltReport clt_experiment(long n, long k, long trials, std::uint64_t seed,
                         const PrecisionContext& ctx, int threads = 1);

struct ConcentrationReport {
    long n = 0, trials = 0;
    std::uint64_t seed = 0;
    long k_H = 0;
    double theta = 0;
    long k_S = 0;
    double mean_height = 0;
    double mean_saturation = 0;
    double p_height_two_point = 0;     // P(H in {k_H, k_H+1})
    double p_height_three_point = 0;   // P(H in {k_H-1, k_H, k_H+1})
    double p_saturation_two_point = 0; // P(S in {k_S-1, k_S})
    std::vector<std::uint64_t> hist_height;
    std::vector<std::uint64_t> hist_saturation;  // offset: index 0 is S=-1
    // moment-method bounds for P(H_n <= k), k = k_H-2 .. k_H+1
    std::vector<std::pair<long, std::pair<double, double>>> height_bounds;
};

ConcentrationReport concentration_experiment(long n, long trials, std::uint64_t seed,
                                             const PrecisionContext& ctx, int threads = 1);

// One row of the exact/asymptotic/simulated profile table.  Exact columns
// are empty beyond the rational caps; approximation columns always fill.
struct ProfileRow {
    long n = 0, k = 0;
    std::optional<Rat> mu_exact;
    std::optional<Rat> var_exact;
    std::optional<double> mu_poisson;       // Mt_{k,1}(n)
    std::optional<double> var_poisson;      // Vt_k(n)
    std::optional<double> mean_approx_2kF;  // 2^k F(2^-k n)
    std::optional<double> var_approx_2kG;   // 2^k G(2^-k n)
    std::optional<Rat> internal_mu;
    std::optional<Rat> internal_var;
    std::optional<Rat> p_unsuccessful;      // mu_{n,k}/(n+1)
};

std::vector<ProfileRow> profile_table(long n, long kmin, long kmax,
                                      const PrecisionContext& ctx);

// Kolmogorov-Smirnov distance of a sample to the standard normal.
double ks_normal_distance(std::vector<double> standardized);
double normal_cdf(double x);

// Serialization: floats as shortest round-trip decimals, rationals verbatim
// as num/den strings; identical spec gives byte-identical output.
std::string format_double(double v);
std::string table_csv(const std::vector<ProfileRow>& rows);
std::string table_json(const std::vector<ProfileRow>& rows);
std::string clt_json(const ExperimentSpec& spec, const CltReport& r);
std::string clt_csv(const CltReport& r);
std::string concentration_json(const ExperimentSpec& spec, const ConcentrationReport& r);
std::string concentration_csv(const ConcentrationReport& r);

std::string build_describe();  // git describe of the build, for provenance

// Flat JSON config round-trip for ExperimentSpec (lossless).
std::string spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const std::string& text);

}  // namespace dstprof::harness

#endif
