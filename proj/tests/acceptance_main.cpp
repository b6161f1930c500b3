// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion.  Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dstprof/asymptotics.hpp"
#include "dstprof/harness.hpp"
#include "dstprof/limitfn.hpp"
#include "dstprof/moments.hpp"
#include "dstprof/qseries.hpp"
#include "dstprof/simulator.hpp"
#include "test_support.hpp"

using namespace dstprof;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int id, bool pass, const std::string& detail, double secs) {
    std::printf("%s criterion %2d: %s  [%.2fs]\n", pass ? "PASS" : "FAIL", id,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char b[64];
    std::snprintf(b, sizeof(b), "%.6g", v);
    return b;
}

// ---------------------------------------------------------------------------

void criterion1_figure1() {
    Timer t;
    sim::DstTree tree = sim::build_tree({"10", "00", "10", "01", "11"});
    sim::ProfileSummary p = sim::profiles(tree);
    bool pass = p.external == std::vector<std::uint64_t>{0, 0, 2, 4} && p.height == 3 &&
                p.saturation == 1;
    const std::uint64_t want_I[4] = {1, 2, 2, 0};
    for (long k = 0; k < 4; ++k) pass = pass && p.internal_at(k) == want_I[k];
    report(1, pass, "figure-1 tree: B=(0,0,2,4), I=(1,2,2,0), H=3, S=1", t.seconds());
}

void criterion2_mean_oracle() {
    Timer t;
    moments::MomentTable tab =
        moments::recurrence_tables(moments::ProfileKind::external, 30, false);
    long checked = 0, bad = 0;
    for (long n = 0; n <= 30; ++n)
        for (long k = 0; k <= n; ++k) {
            ++checked;
            if (moments::mean_closed_exact(n, k) != tab.mu_at(n, k)) ++bad;
        }
    report(2, bad == 0,
           "mean closed form == recurrence, exact rationals, " + std::to_string(checked) +
               " pairs (n <= 30), mismatches " + std::to_string(bad),
           t.seconds());
}

void criterion3_second_moment_oracle() {
    Timer t;
    moments::MomentTable tab =
        moments::recurrence_tables(moments::ProfileKind::external, 25, true);
    PrecisionContext c(256, 1e-40, true);
    double worst = 0;
    for (long n = 0; n <= 25; ++n)
        for (long k = 0; k <= n; ++k) {
            BigReal closed = moments::second_moment_closed(n, k, c);
            BigReal exact = BigReal::from_mpq(tab.nu_at(n, k), 256);
            worst = std::max(worst, abs(closed - exact).to_double());
        }
    report(3, worst <= 1e-30,
           "second moment closed form vs nu recurrence (n <= 25, 256 bits): max |diff| = " +
               fmt(worst) + " <= 1e-30",
           t.seconds());
}

void criterion4_conservation() {
    Timer t;
    bool pass = true;
    for (long n = 0; n <= 30 && pass; ++n) {
        Rat s(0);
        for (long k = 0; k <= n; ++k) s += moments::mean_closed_exact(n, k);
        if (s != Rat(n + 1)) pass = false;
        Rat si(0);
        for (long k = 0; k <= n; ++k) si += moments::internal_mean_exact(n, k);
        if (si != Rat(n)) pass = false;
        for (long k = 0; k + 1 <= n && pass; ++k) {
            if (Rat(2) * moments::internal_mean_exact(n, k) !=
                moments::internal_mean_exact(n, k + 1) + moments::mean_closed_exact(n, k + 1))
                pass = false;
        }
    }
    report(4, pass, "sum mu = n+1, sum iota = n, 2 iota_k = iota_{k+1} + mu_{k+1} exact (n <= 30)",
           t.seconds());
}

void criterion5_functional_equations() {
    Timer t;
    PrecisionContext c(128, 1e-30, true);
    double worstF = 0;
    for (int i = 0; i <= 32; ++i) {
        BigReal x = pow(BigReal(2.0, 128), BigReal(-10.0 + 16.0 * i / 32.0, 128));
        BigReal resid = abs(limitfn::F_eval(x, 0, c).value + limitfn::F_eval(x, 1, c).value -
                            BigReal(2.0, 128) * limitfn::F_eval(x + x, 0, c).value);
        worstF = std::max(worstF, resid.to_double());
    }
    double worstFI = 0;
    BigReal h = BigReal::pow2(-20, 128);
    for (int i = 0; i <= 32; ++i) {
        BigReal x = pow(BigReal(2.0, 128), BigReal(-10.0 + 16.0 * i / 32.0, 128));
        BigReal fd = (limitfn::F_I_eval(x + h, c).value - limitfn::F_I_eval(x - h, c).value) /
                     (BigReal(2.0, 128) * h);
        worstFI = std::max(worstFI, abs(fd - limitfn::F_eval(x, 0, c).value).to_double());
    }
    bool pass = worstF <= 1e-20 && worstFI <= 1e-8;
    report(5, pass,
           "max |F + F' - 2F(2x)| = " + fmt(worstF) + " <= 1e-20; max |dF_I - F| = " +
               fmt(worstFI) + " <= 1e-8",
           t.seconds());
}

void criterion6_laplace() {
    Timer t;
    PrecisionContext c(96, 1e-18, false);
    double worst = 0;
    for (double s : {1.0, 2.0, 4.0}) {
        auto f = [&](double x) {
            return std::exp(-s * x) *
                   limitfn::F_eval(BigReal(x, 96), 0, c).value.to_double();
        };
        double integral =
            testsup::adaptive_simpson_segmented(f, {0.0, 0.5, 2.0, 8.0, 60.0 / s}, 1e-11);
        double target = 1.0 /
                        qseries::q_product(BigReal(-2.0 * s, 128), PrecisionContext()).to_double();
        worst = std::max(worst, std::fabs(integral - target));
    }
    report(6, worst <= 1e-8,
           "laplace identity, s in {1,2,4}: max |quad - 1/Q(-2s)| = " + fmt(worst) + " <= 1e-8",
           t.seconds());
}

void criterion7_periodic() {
    Timer t;
    PrecisionContext c(128, 1e-30, false);
    double lo = 1e9, hi = -1e9;
    bool period_exact = true;
    for (int i = 0; i < 4096; ++i) {
        BigReal u(static_cast<double>(i) / 4096.0, 128);
        BigReal v = limitfn::P_eval(u, c).value;
        double vd = v.to_double();
        lo = std::min(lo, vd);
        hi = std::max(hi, vd);
        if (i % 512 == 0) {
            if (!(limitfn::P_eval(u + BigReal(1.0, 128), c).value == v)) period_exact = false;
        }
    }
    bool pass = (hi - lo) < 1.8e-12 && period_exact;
    report(7, pass,
           "P(t): peak-to-peak = " + fmt(hi - lo) + " < 1.8e-12; period residual exactly 0",
           t.seconds());
}

void criterion8_profile_approx_boundedness() {
    Timer t;
    PrecisionContext c(192, 1e-18, false);
    double worst_mean = 0, worst_var = 0;
    std::vector<double> per_n_mean, per_n_var;
    for (int e = 8; e <= 14; ++e) {
        long n = 1L << e;
        auto [ks, kh] = asym::central_range(n);
        double wm = 0, wv = 0;
        for (long k = static_cast<long>(std::ceil(ks)); k <= static_cast<long>(std::floor(kh));
             ++k) {
            BigReal nreal(n, 192);
            BigReal x = BigReal::pow2(-k, 192) * nreal;
            double scale = std::ldexp(1.0, static_cast<int>(k));
            double mu = moments::mean_closed(n, k, c).to_double();
            double f = limitfn::F_eval(x, 0, c).value.to_double();
            wm = std::max(wm, std::fabs(mu - scale * f));
            double var = moments::poissonized_variance(k, nreal, c).to_double();
            double g = limitfn::G_eval(x, c).value.to_double();
            wv = std::max(wv, std::fabs(var - scale * g));
        }
        per_n_mean.push_back(wm);
        per_n_var.push_back(wv);
        worst_mean = std::max(worst_mean, wm);
        worst_var = std::max(worst_var, wv);
    }
    // frozen golden constant 5; non-growth: the last grid point does not
    // exceed the running maximum of the earlier ones by more than 1
    double head_mean = 0, head_var = 0;
    for (std::size_t i = 0; i + 1 < per_n_mean.size(); ++i) {
        head_mean = std::max(head_mean, per_n_mean[i]);
        head_var = std::max(head_var, per_n_var[i]);
    }
    bool pass = worst_mean <= 5.0 && worst_var <= 5.0 &&
                per_n_mean.back() <= head_mean + 1.0 && per_n_var.back() <= head_var + 1.0;
    report(8, pass,
           "max |mu - 2^k F| = " + fmt(worst_mean) + ", max |Var - 2^k G| = " + fmt(worst_var) +
               " (<= 5, non-growing across n = 2^8..2^14)",
           t.seconds());
}

void criterion9_variance_bridge() {
    Timer t;
    PrecisionContext c(320, 1e-35, true);
    BigReal vt = moments::poissonized_variance(10, BigReal(1024.0, 320), c);
    BigReal var = moments::variance_exact(1024, 10, c);
    double diff = abs(vt - var).to_double();
    report(9, diff <= 2.0,
           "|Vt_10(1024) - Var(B_{1024,10})| = " + fmt(diff) + " <= 2", t.seconds());
}

void criterion10_saddle() {
    Timer t;
    PrecisionContext c(256, 1e-60, false);  // F(2^-14) ~ 6e-42 needs deep tails
    bool pass = true;
    double prev = 1.0;
    std::string detail = "rel err of F_saddle vs F_eval:";
    for (int e : {-6, -8, -10, -12, -14}) {
        BigReal x = BigReal::pow2(e, 192);
        double fs = asym::F_saddle(x, 0, c).to_double();
        double fe = limitfn::F_eval(x, 0, c).value.to_double();
        double logrho = asym::saddle_solve(x, c).log_rho.re.to_double();
        double rel = std::fabs(fs / fe - 1.0);
        if (rel > 5.0 / logrho || rel >= prev) pass = false;
        prev = rel;
        detail += " " + fmt(rel);
    }
    report(10, pass, detail + " (each <= 5/log rho, decreasing)", t.seconds());
}

void criterion11_mean_height() {
    Timer t;
    sim::TrialConfig cfg;
    cfg.n = 100;
    cfg.trials = 100000;
    cfg.master_seed = 42;
    cfg.stats = {false, true, true, false};
    sim::EmpiricalMoments m = sim::run_trials(cfg);
    double mh = m.mean_height();
    bool pass = std::fabs(mh - 8.986) <= 0.03;
    report(11, pass, "mean H_100 over 1e5 trials (seed 42) = " + fmt(mh) + " in 8.986 +- 0.03",
           t.seconds());

    // reused by criterion 13: empirical P(H_100 <= 9)
    double cum = 0;
    for (long h = 0; h <= 9 && static_cast<size_t>(h) < m.hist_height.size(); ++h)
        cum += static_cast<double>(m.hist_height[static_cast<size_t>(h)]);
    double phat = cum / static_cast<double>(cfg.trials);
    PrecisionContext c(160, 1e-25, true);
    auto [lo, up] = asym::height_probability_bounds(100, 9, c);
    bool bracket = lo <= phat && phat <= up;
    report(13, bracket,
           "moment-method bounds bracket empirical P(H_100 <= 9): " + fmt(lo) + " <= " + fmt(phat) +
               " <= " + fmt(up) + " (part 1/2)",
           t.seconds());
}

void criterion12_clt() {
    Timer t;
    PrecisionContext c(160, 1e-20, true);
    harness::CltReport r = harness::clt_experiment(8192, 13, 20000, 1, c, 4);
    report(12, r.ks_distance < 0.03,
           "CLT n=8192, k=13, 2e4 trials: KS = " + fmt(r.ks_distance) + " < 0.03", t.seconds());
}

void criterion13_concentration() {
    Timer t;
    PrecisionContext c(160, 1e-20, true);
    harness::ConcentrationReport r = harness::concentration_experiment(1L << 15, 2000, 7, c, 4);
    double h3 = r.p_height_three_point;
    double s2 = r.p_saturation_two_point;
    bool pass = h3 >= 0.9 && s2 >= 0.9;
    report(13, pass,
           "n=2^15: P(H in {k_H-1..k_H+1}) = " + fmt(h3) + " >= 0.9, P(S in {k_S-1,k_S}) = " +
               fmt(s2) + " >= 0.9 (part 2/2)",
           t.seconds());
}

}  // namespace

int main() {
    Timer total;
    criterion1_figure1();
    criterion2_mean_oracle();
    criterion3_second_moment_oracle();
    criterion4_conservation();
    criterion5_functional_equations();
    criterion6_laplace();
    criterion7_periodic();
    criterion8_profile_approx_boundedness();
    criterion9_variance_bridge();
    criterion10_saddle();
    criterion11_mean_height();
    criterion12_clt();
    criterion13_concentration();
    std::printf("%s: %d failure(s) in %.1fs\n", g_failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE OK",
                g_failures, total.seconds());
    return g_failures ? 1 : 0;
}
