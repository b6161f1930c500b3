#include "dstprof/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dstprof/asymptotics.hpp"
#include "dstprof/errors.hpp"
#include "dstprof/limitfn.hpp"
#include "dstprof/moments.hpp"
#include "dstprof/qseries.hpp"

#ifndef DSTPROF_GIT_DESCRIBE
#define DSTPROF_GIT_DESCRIBE "unknown"
#endif

namespace dstprof::harness {

std::string build_describe() { return DSTPROF_GIT_DESCRIBE; }

std::string spec_to_json(const ExperimentSpec& s) {
    nlohmann::json j;
    j["kind"] = s.kind;
    j["n"] = s.n;
    j["k"] = s.k;
    j["kmin"] = s.kmin;
    j["kmax"] = s.kmax;
    j["trials"] = s.trials;
    j["seed"] = s.master_seed;
    j["prec"] = s.precision_bits;
    j["tol"] = s.tolerance;
    j["format"] = s.format == OutputFormat::json ? "json" : "csv";
    j["out"] = s.out_path;
    return j.dump();
}

ExperimentSpec spec_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ExperimentSpec s;
    s.kind = j.at("kind").get<std::string>();
    s.n = j.at("n").get<long>();
    s.k = j.at("k").get<long>();
    s.kmin = j.at("kmin").get<long>();
    s.kmax = j.at("kmax").get<long>();
    s.trials = j.at("trials").get<long>();
    s.master_seed = j.at("seed").get<std::uint64_t>();
    s.precision_bits = j.at("prec").get<int>();
    s.tolerance = j.at("tol").get<double>();
    s.format = j.at("format").get<std::string>() == "json" ? OutputFormat::json
                                                           : OutputFormat::csv;
    s.out_path = j.at("out").get<std::string>();
    return s;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_normal_distance(std::vector<double> s) {
    if (s.empty()) throw DomainError("ks_normal_distance: empty sample");
    std::sort(s.begin(), s.end());
    double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double c = normal_cdf(s[i]);
        d = std::max(d, std::fabs(c - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - c));
    }
    return d;
}

namespace {

// per-trial value of B_{n,k}, in trial order (deterministic across threads)
std::vector<std::uint32_t> simulate_level_counts(long n, long k, long trials,
                                                 std::uint64_t seed, int threads) {
    std::vector<std::uint32_t> values(static_cast<size_t>(trials), 0);
    auto worker = [&](long lo, long hi) {
        sim::DstTree tree;
        for (long t = lo; t < hi; ++t) {
            tree.nodes.clear();
            tree.nodes.reserve(static_cast<size_t>(n));
            for (long r = 0; r < n; ++r) {
                sim::StreamBits src(seed, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(r));
                tree.insert_record(src);
            }
            sim::ProfileSummary p = sim::profiles(tree);
            values[static_cast<size_t>(t)] =
                static_cast<size_t>(k) < p.external.size()
                    ? static_cast<std::uint32_t>(p.external[static_cast<size_t>(k)])
                    : 0;
        }
    };
    threads = std::max(1, threads);
    if (threads == 1 || trials < 2 * threads) {
        worker(0, trials);
    } else {
        std::vector<std::thread> pool;
        long chunk = (trials + threads - 1) / threads;
        for (int i = 0; i < threads; ++i) {
            long lo = i * chunk, hi = std::min<long>(trials, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return values;
}

}  // namespace

CltReport clt_experiment(long n, long k, long trials, std::uint64_t seed,
                         const PrecisionContext& ctx, int threads) {
    if (trials < 2) throw DomainError("clt_experiment: trials must be >= 2");
    CltReport rep;
    rep.n = n;
    rep.k = k;
    rep.trials = trials;
    rep.seed = seed;

    BigReal mu = moments::mean_closed(n, k, ctx);
    BigReal var(0.0, ctx.bits);
    if (n <= moments::kNuCap) {
        var = moments::variance_exact(n, k, ctx);
    } else {
        var = moments::poissonized_variance(k, BigReal(n, ctx.bits), ctx);
        rep.poissonized_variance = true;
    }
    // degenerate only when the variance is exactly zero (deterministic
    // shapes); far-out levels have tiny positive variance and still report
    if (var.sgn() <= 0)
        throw DegenerateVariance("clt_experiment: Var(B_{n,k}) = 0");
    BigReal sigma = sqrt(var);
    rep.mu = mu.to_double();
    rep.sigma = sigma.to_double();

    if (n >= 2) {
        auto [ks, kh] = asym::central_range(n);
        rep.outside_central_range = (static_cast<double>(k) < ks || static_cast<double>(k) > kh);
    }

    std::vector<std::uint32_t> values = simulate_level_counts(n, k, trials, seed, threads);
    std::vector<double> standardized(values.size());
    double acc = 0.0, acc2 = 0.0;
    int bits = ctx.bits;
    for (std::size_t i = 0; i < values.size(); ++i) {
        double b = static_cast<double>(values[i]);
        acc += b;
        // standardize at working precision: sigma may underflow a double
        standardized[i] = ((BigReal(b, bits) - mu) / sigma).to_double();
        ++rep.histogram[static_cast<long>(values[i])];
    }
    double emean = acc / static_cast<double>(trials);
    for (std::size_t i = 0; i < values.size(); ++i) {
        double d = static_cast<double>(values[i]) - emean;
        acc2 += d * d;
    }
    rep.empirical_mean = emean;
    rep.empirical_variance = acc2 / static_cast<double>(trials - 1);
    rep.ks_distance = ks_normal_distance(std::move(standardized));

    // sanity gate: empirical mean within 6 sigma / sqrt(trials) of exact
    BigReal gate = BigReal(6.0, bits) * sigma /
                   sqrt(BigReal(static_cast<double>(trials), bits));
    if (abs(BigReal(emean, bits) - mu) > gate)
        throw DomainError("clt_experiment: empirical mean outside the 6-sigma sanity gate");
    return rep;
}

ConcentrationReport concentration_experiment(long n, long trials, std::uint64_t seed,
                                             const PrecisionContext& ctx, int threads) {
    ConcentrationReport rep;
    rep.n = n;
    rep.trials = trials;
    rep.seed = seed;
    auto [kH, theta] = asym::predict_height_level(n);
    rep.k_H = kH;
    rep.theta = theta;
    rep.k_S = asym::predict_saturation_level(n);

    sim::TrialConfig cfg;
    cfg.n = n;
    cfg.trials = trials;
    cfg.master_seed = seed;
    cfg.threads = threads;
    cfg.stats.profile = false;
    cfg.stats.depth = false;
    sim::EmpiricalMoments m = sim::run_trials(cfg);
    rep.hist_height = m.hist_height;
    rep.hist_saturation = m.hist_saturation;
    rep.mean_height = m.mean_of(m.hist_height, 0);
    rep.mean_saturation = m.mean_of(m.hist_saturation, -1);

    auto hmass = [&](long k) -> double {
        if (k < 0 || static_cast<size_t>(k) >= m.hist_height.size()) return 0.0;
        return static_cast<double>(m.hist_height[static_cast<size_t>(k)]) /
               static_cast<double>(trials);
    };
    auto smass = [&](long k) -> double {
        long slot = k + 1;
        if (slot < 0 || static_cast<size_t>(slot) >= m.hist_saturation.size()) return 0.0;
        return static_cast<double>(m.hist_saturation[static_cast<size_t>(slot)]) /
               static_cast<double>(trials);
    };
    rep.p_height_two_point = hmass(kH) + hmass(kH + 1);
    rep.p_height_three_point = rep.p_height_two_point + hmass(kH - 1);
    rep.p_saturation_two_point = smass(rep.k_S - 1) + smass(rep.k_S);

    for (long k = kH - 2; k <= kH + 1; ++k) {
        if (k < 0) continue;
        rep.height_bounds.emplace_back(k, asym::height_probability_bounds(n, k, ctx));
    }
    return rep;
}

std::vector<ProfileRow> profile_table(long n, long kmin, long kmax,
                                      const PrecisionContext& ctx) {
    if (n < 0) throw DomainError("profile_table: n must be >= 0");
    if (kmin < 0) kmin = 0;
    if (kmax < 0) kmax = std::min<long>(n, 62);
    if (kmax < kmin) throw DomainError("profile_table: kmax < kmin");

    bool exact_mu = n <= moments::kMuCap;
    bool exact_nu = n <= moments::kNuCap && kmax <= 62;
    moments::MomentTable ext, internal;
    if (exact_mu) {
        ext = moments::recurrence_tables(moments::ProfileKind::external, n, exact_nu);
        internal = moments::recurrence_tables(moments::ProfileKind::internal, n, exact_nu);
    }

    std::vector<ProfileRow> rows;
    BigReal nreal(n, ctx.bits);
    for (long k = kmin; k <= kmax; ++k) {
        ProfileRow row;
        row.n = n;
        row.k = k;
        if (exact_mu) {
            row.mu_exact = ext.mu_at(n, k);
            row.internal_mu = internal.mu_at(n, k);
            Rat p = ext.mu_at(n, k) / Rat(n + 1);
            p.canonicalize();
            row.p_unsuccessful = p;
            if (exact_nu) {
                row.var_exact = ext.var_at(n, k);
                row.internal_var = internal.var_at(n, k);
            }
        }
        if (k <= 62) {
            row.mu_poisson = moments::poisson_mean(k, nreal, 0, ctx).to_double();
            row.var_poisson = moments::poissonized_variance(k, nreal, ctx).to_double();
            BigReal x = BigReal::pow2(-k, ctx.bits) * nreal;
            double scale = std::ldexp(1.0, static_cast<int>(k));
            row.mean_approx_2kF = scale * limitfn::F_eval(x, 0, ctx).value.to_double();
            row.var_approx_2kG = scale * limitfn::G_eval(x, ctx).value.to_double();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {
std::string rat_or_empty(const std::optional<Rat>& r) {
    return r ? r->get_str() : std::string();
}
std::string dbl_or_empty(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}
void json_dbl(std::ostringstream& os, const char* key, const std::optional<double>& v) {
    os << "\"" << key << "\":";
    if (v)
        os << format_double(*v);
    else
        os << "null";
}
void json_rat(std::ostringstream& os, const char* key, const std::optional<Rat>& r) {
    os << "\"" << key << "\":";
    if (r)
        os << "\"" << r->get_str() << "\"";
    else
        os << "null";
}
}  // namespace

std::string table_csv(const std::vector<ProfileRow>& rows) {
    std::ostringstream os;
    os << "n,k,mu_exact,var_exact,mu_poisson,var_poisson,mean_approx_2kF,var_approx_2kG,"
          "internal_mu,internal_var,p_unsuccessful\n";
    for (const auto& r : rows) {
        os << r.n << ',' << r.k << ',' << rat_or_empty(r.mu_exact) << ','
           << rat_or_empty(r.var_exact) << ',' << dbl_or_empty(r.mu_poisson) << ','
           << dbl_or_empty(r.var_poisson) << ',' << dbl_or_empty(r.mean_approx_2kF) << ','
           << dbl_or_empty(r.var_approx_2kG) << ',' << rat_or_empty(r.internal_mu) << ','
           << rat_or_empty(r.internal_var) << ',' << rat_or_empty(r.p_unsuccessful) << '\n';
    }
    return os.str();
}

std::string table_json(const std::vector<ProfileRow>& rows) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (i) os << ",";
        os << "{\"n\":" << r.n << ",\"k\":" << r.k << ",";
        json_rat(os, "mu_exact", r.mu_exact);
        os << ",";
        json_rat(os, "var_exact", r.var_exact);
        os << ",";
        json_dbl(os, "mu_poisson", r.mu_poisson);
        os << ",";
        json_dbl(os, "var_poisson", r.var_poisson);
        os << ",";
        json_dbl(os, "mean_approx_2kF", r.mean_approx_2kF);
        os << ",";
        json_dbl(os, "var_approx_2kG", r.var_approx_2kG);
        os << ",";
        json_rat(os, "internal_mu", r.internal_mu);
        os << ",";
        json_rat(os, "internal_var", r.internal_var);
        os << ",";
        json_rat(os, "p_unsuccessful", r.p_unsuccessful);
        os << "}";
    }
    os << "]";
    return os.str();
}

namespace {
void spec_provenance_json(std::ostringstream& os, const ExperimentSpec& spec) {
    os << "\"spec\":{\"kind\":\"" << spec.kind << "\",\"n\":" << spec.n << ",\"k\":" << spec.k
       << ",\"trials\":" << spec.trials << ",\"seed\":" << spec.master_seed
       << ",\"precision_bits\":" << spec.precision_bits
       << ",\"tolerance\":" << format_double(spec.tolerance) << "},"
       << "\"provenance\":{\"seed\":" << spec.master_seed
       << ",\"precision\":" << spec.precision_bits << ",\"build\":\"" << build_describe()
       << "\"}";
}
}  // namespace

std::string clt_json(const ExperimentSpec& spec, const CltReport& r) {
    std::ostringstream os;
    os << "{";
    spec_provenance_json(os, spec);
    os << ",\"results\":{\"mu\":" << format_double(r.mu) << ",\"sigma\":" << format_double(r.sigma)
       << ",\"poissonized_variance\":" << (r.poissonized_variance ? "true" : "false")
       << ",\"outside_central_range\":" << (r.outside_central_range ? "true" : "false")
       << ",\"empirical_mean\":" << format_double(r.empirical_mean)
       << ",\"empirical_variance\":" << format_double(r.empirical_variance)
       << ",\"ks_distance\":" << format_double(r.ks_distance) << ",\"histogram\":{";
    bool first = true;
    for (const auto& [v, c] : r.histogram) {
        if (!first) os << ",";
        first = false;
        os << "\"" << v << "\":" << c;
    }
    os << "}}}";
    return os.str();
}

std::string clt_csv(const CltReport& r) {
    std::ostringstream os;
    os << "n,k,trials,seed,mu,sigma,poissonized,outside_central_range,empirical_mean,"
          "empirical_variance,ks_distance\n";
    os << r.n << ',' << r.k << ',' << r.trials << ',' << r.seed << ',' << format_double(r.mu)
       << ',' << format_double(r.sigma) << ',' << (r.poissonized_variance ? 1 : 0) << ','
       << (r.outside_central_range ? 1 : 0) << ',' << format_double(r.empirical_mean) << ','
       << format_double(r.empirical_variance) << ',' << format_double(r.ks_distance) << '\n';
    return os.str();
}

std::string concentration_json(const ExperimentSpec& spec, const ConcentrationReport& r) {
    std::ostringstream os;
    os << "{";
    spec_provenance_json(os, spec);
    os << ",\"results\":{\"k_H\":" << r.k_H << ",\"theta\":" << format_double(r.theta)
       << ",\"k_S\":" << r.k_S << ",\"mean_height\":" << format_double(r.mean_height)
       << ",\"mean_saturation\":" << format_double(r.mean_saturation)
       << ",\"p_height_two_point\":" << format_double(r.p_height_two_point)
       << ",\"p_height_three_point\":" << format_double(r.p_height_three_point)
       << ",\"p_saturation_two_point\":" << format_double(r.p_saturation_two_point)
       << ",\"hist_height\":[";
    for (std::size_t i = 0; i < r.hist_height.size(); ++i) {
        if (i) os << ",";
        os << r.hist_height[i];
    }
    os << "],\"hist_saturation\":[";
    for (std::size_t i = 0; i < r.hist_saturation.size(); ++i) {
        if (i) os << ",";
        os << r.hist_saturation[i];
    }
    os << "],\"height_bounds\":[";
    for (std::size_t i = 0; i < r.height_bounds.size(); ++i) {
        if (i) os << ",";
        os << "{\"k\":" << r.height_bounds[i].first
           << ",\"lower\":" << format_double(r.height_bounds[i].second.first)
           << ",\"upper\":" << format_double(r.height_bounds[i].second.second) << "}";
    }
    os << "]}}";
    return os.str();
}

std::string concentration_csv(const ConcentrationReport& r) {
    std::ostringstream os;
    os << "n,trials,seed,k_H,theta,k_S,mean_height,mean_saturation,p_height_two_point,"
          "p_height_three_point,p_saturation_two_point\n";
    os << r.n << ',' << r.trials << ',' << r.seed << ',' << r.k_H << ','
       << format_double(r.theta) << ',' << r.k_S << ',' << format_double(r.mean_height) << ','
       << format_double(r.mean_saturation) << ',' << format_double(r.p_height_two_point) << ','
       << format_double(r.p_height_three_point) << ','
       << format_double(r.p_saturation_two_point) << '\n';
    return os.str();
}

}  // namespace dstprof::harness
