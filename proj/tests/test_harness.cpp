#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dstprof/harness.hpp"
#include "dstprof/moments.hpp"
#include "test_support.hpp"

using namespace dstprof;
using namespace dstprof::harness;

namespace {
const PrecisionContext kCtx;
}

TEST_CASE("normal cdf accuracy") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(std::fabs(normal_cdf(1.959963984540054) - 0.975) < 1e-14);
    CHECK(std::fabs(normal_cdf(-1.0) - 0.15865525393145705) < 1e-14);
}

TEST_CASE("ks distance sanity") {
    // an exactly normal-quantile sample has tiny distance
    std::vector<double> s;
    const int N = 4000;
    for (int i = 0; i < N; ++i) {
        // invert the cdf by bisection on the midpoint grid
        double target = (i + 0.5) / N;
        double lo = -9, hi = 9;
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            (normal_cdf(mid) < target ? lo : hi) = mid;
        }
        s.push_back(0.5 * (lo + hi));
    }
    CHECK(ks_normal_distance(s) < 1.0 / N + 1e-9);

    // a uniform sample is far from normal
    std::vector<double> u;
    for (int i = 0; i < N; ++i) u.push_back(-1.0 + 2.0 * (i + 0.5) / N);
    CHECK(ks_normal_distance(u) > 0.1);
}

TEST_CASE("format_double is shortest round-trip") {
    for (double v : {0.1, 2.5, 1.0 / 3.0, 8.98615, 1e-30}) {
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(2.5) == "2.5");
}

TEST_CASE("clt experiment errors and flags") {
    CHECK_THROWS_AS(clt_experiment(1, 1, 100, 7, kCtx), DegenerateVariance);

    // outside the central range: warning flag set, report still produced
    PrecisionContext c(128, 1e-20, true);
    CltReport r = clt_experiment(8192, 3, 400, 11, c);
    CHECK(r.outside_central_range);
    CHECK(r.poissonized_variance);  // n beyond the exact second-moment cap
    CHECK(r.ks_distance >= 0.0);
    CHECK(r.ks_distance <= 1.0);
}

TEST_CASE("clt experiment at a mid-size level") {
    PrecisionContext c(128, 1e-20, true);
    CltReport r = clt_experiment(512, 9, 4000, 123, c);
    CHECK(!r.histogram.empty());
    // empirical variance within 6 sqrt(2/T) sigma^2 of the exact variance
    double sigma2 = r.sigma * r.sigma;
    CHECK(std::fabs(r.empirical_variance - sigma2) <=
          6.0 * std::sqrt(2.0 / 4000.0) * sigma2);
    // not a CLT assertion at this size, just the sanity of the distance
    CHECK(r.ks_distance < 0.2);
}

TEST_CASE("clt reproducibility") {
    PrecisionContext c(128, 1e-20, true);
    CltReport a = clt_experiment(256, 7, 500, 77, c);
    CltReport b = clt_experiment(256, 7, 500, 77, c, 3);
    CHECK(a.ks_distance == b.ks_distance);
    CHECK(a.empirical_mean == b.empirical_mean);
    CHECK(a.histogram == b.histogram);
    ExperimentSpec spec;
    spec.kind = "clt";
    spec.n = 256;
    spec.k = 7;
    spec.trials = 500;
    spec.master_seed = 77;
    CHECK(clt_json(spec, a) == clt_json(spec, b));
}

TEST_CASE("profile table exact columns and conservation") {
    PrecisionContext c(128, 1e-16, true);
    auto rows = profile_table(100, 0, 14, c);
    moments::MomentTable tab =
        moments::recurrence_tables(moments::ProfileKind::external, 100, false);

    Rat psum(0);
    long argmax = -1;
    Rat best(-1);
    for (const auto& r : rows) {
        REQUIRE(r.mu_exact.has_value());
        CHECK(*r.mu_exact == tab.mu_at(100, r.k));  // verbatim oracle equality
        CHECK(!r.var_exact.has_value());            // n = 100 beyond the nu cap
        REQUIRE(r.p_unsuccessful.has_value());
        psum += *r.p_unsuccessful;
        if (*r.mu_exact > best) {
            best = *r.mu_exact;
            argmax = r.k;
        }
    }
    // levels 15..100 carry the tiny remainder of the pmf
    Rat rest(0);
    for (long k = 15; k <= 100; ++k) rest += tab.mu_at(100, k) / Rat(101);
    CHECK(psum + rest == Rat(1));
    CHECK(argmax == 7);

    // Poisson and approximation columns are close to the exact mean mid-range
    for (const auto& r : rows) {
        if (r.k >= 4 && r.k <= 10) {
            double mu = r.mu_exact->get_d();
            CHECK(std::fabs(*r.mu_poisson - mu) < 1.0);
            CHECK(std::fabs(*r.mean_approx_2kF - mu) < 5.0);
        }
    }
}

TEST_CASE("profile table with exact variance columns") {
    PrecisionContext c(128, 1e-16, true);
    auto rows = profile_table(40, 0, 12, c);
    moments::MomentTable tab =
        moments::recurrence_tables(moments::ProfileKind::external, 40, true);
    moments::MomentTable itab =
        moments::recurrence_tables(moments::ProfileKind::internal, 40, true);
    for (const auto& r : rows) {
        REQUIRE(r.var_exact.has_value());
        CHECK(*r.var_exact == tab.var_at(40, r.k));
        REQUIRE(r.internal_mu.has_value());
        CHECK(*r.internal_mu == itab.mu_at(40, r.k));
        REQUIRE(r.internal_var.has_value());
        CHECK(*r.internal_var == itab.var_at(40, r.k));
        CHECK(std::fabs(*r.var_poisson - r.var_exact->get_d()) < 2.0);
    }
}

TEST_CASE("table serialization is deterministic and schema-stable") {
    PrecisionContext c(96, 1e-12, true);
    auto rows = profile_table(20, 0, 6, c);
    std::string csv1 = table_csv(rows);
    std::string csv2 = table_csv(profile_table(20, 0, 6, c));
    CHECK(csv1 == csv2);
    CHECK(csv1.rfind("n,k,mu_exact,var_exact,mu_poisson,var_poisson,mean_approx_2kF,"
                     "var_approx_2kG,internal_mu,internal_var,p_unsuccessful\n",
                     0) == 0);
    std::string js = table_json(rows);
    CHECK(js.front() == '[');
    CHECK(js.find("\"mu_exact\":\"") != std::string::npos);
    CHECK(table_json(profile_table(20, 0, 6, c)) == js);
}

TEST_CASE("experiment spec round-trips through the config json") {
    ExperimentSpec s;
    s.kind = "clt";
    s.n = 8192;
    s.k = 13;
    s.kmin = 2;
    s.kmax = 19;
    s.trials = 20000;
    s.master_seed = 424242;
    s.precision_bits = 192;
    s.tolerance = 2.5e-28;
    s.format = OutputFormat::json;
    s.out_path = "out/x.json";
    ExperimentSpec r = spec_from_json(spec_to_json(s));
    CHECK(r.kind == s.kind);
    CHECK(r.n == s.n);
    CHECK(r.k == s.k);
    CHECK(r.kmin == s.kmin);
    CHECK(r.kmax == s.kmax);
    CHECK(r.trials == s.trials);
    CHECK(r.master_seed == s.master_seed);
    CHECK(r.precision_bits == s.precision_bits);
    CHECK(r.tolerance == s.tolerance);
    CHECK(r.format == s.format);
    CHECK(r.out_path == s.out_path);
    CHECK(spec_to_json(r) == spec_to_json(s));  // byte-identical second pass
}

TEST_CASE("concentration experiment on a small case") {
    PrecisionContext c(160, 1e-20, true);
    ConcentrationReport r = concentration_experiment(100, 20000, 42, c);
    CHECK(r.k_H == 10);
    CHECK(r.k_S == 5);
    CHECK(std::fabs(r.mean_height - 8.98615) < 0.06);
    // the moment-method bounds bracket each empirical P(H <= k)
    double total = 20000.0;
    for (const auto& [k, lu] : r.height_bounds) {
        double cum = 0.0;
        for (long h = 0; h <= k && static_cast<size_t>(h) < r.hist_height.size(); ++h)
            cum += static_cast<double>(r.hist_height[static_cast<size_t>(h)]);
        double phat = cum / total;
        double mc = 4.0 * std::sqrt(0.25 / total);
        CHECK(phat >= lu.first - mc);
        CHECK(phat <= lu.second + mc);
    }
    std::string js = concentration_json(ExperimentSpec{}, r);
    CHECK(js.find("height_bounds") != std::string::npos);
}
