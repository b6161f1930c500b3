// dstprof: exact, asymptotic and simulated statistics of node profiles of
// random symmetric digital search trees.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "dstprof/asymptotics.hpp"
#include "dstprof/harness.hpp"
#include "dstprof/limitfn.hpp"
#include "dstprof/moments.hpp"
#include "dstprof/qseries.hpp"
#include "dstprof/simulator.hpp"

using nlohmann::json;
namespace hn = dstprof::harness;

namespace {

struct GlobalOpts {
    std::string format = "csv";
    std::string out;
    std::string config;
    int prec = 128;
    double tol = 1e-30;
    int threads = 1;

    dstprof::PrecisionContext ctx() const { return {prec, tol, true}; }
};

void emit(const GlobalOpts& g, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
    } else {
        std::ofstream f(g.out, std::ios::binary);
        if (!f) throw dstprof::DomainError("cannot open output path: " + g.out);
        f << text;
        if (!text.empty() && text.back() != '\n') f << '\n';
    }
}

// Flat key/value config mirroring the CLI flags; CLI values override it.
json load_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            std::ifstream f(argv[i + 1]);
            if (!f) throw dstprof::DomainError(std::string("cannot read config: ") + argv[i + 1]);
            json j;
            f >> j;
            if (!j.is_object()) throw dstprof::DomainError("config must be a JSON object");
            return j;
        }
    }
    return json::object();
}

template <class T>
void from_config(const json& cfg, const char* key, T& target) {
    if (cfg.contains(key)) target = cfg.at(key).get<T>();
}

std::string scalar_out(const GlobalOpts& g, const std::string& name,
                       const std::vector<std::pair<std::string, std::string>>& fields) {
    std::ostringstream os;
    if (g.format == "json") {
        os << "{\"kind\":\"" << name << "\"";
        for (const auto& [k, v] : fields) os << ",\"" << k << "\":" << v;
        os << ",\"provenance\":{\"precision\":" << g.prec << ",\"build\":\""
           << hn::build_describe() << "\"}}";
    } else {
        for (std::size_t i = 0; i < fields.size(); ++i)
            os << (i ? "," : "") << fields[i].first;
        os << '\n';
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::string v = fields[i].second;
            if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
                v = v.substr(1, v.size() - 2);
            os << (i ? "," : "") << v;
        }
        os << '\n';
    }
    return os.str();
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"node-profile statistics of random symmetric digital search trees"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags are accepted after the subcommand too

    GlobalOpts g;
    json cfg;
    try {
        cfg = load_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    from_config(cfg, "format", g.format);
    from_config(cfg, "out", g.out);
    from_config(cfg, "prec", g.prec);
    from_config(cfg, "tol", g.tol);
    from_config(cfg, "threads", g.threads);

    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", g.out, "output path (default: stdout)");
    std::string config_path;  // consumed in load_config; registered so CLI11 accepts it
    app.add_option("--config", config_path, "JSON config file mirroring the flags");
    app.add_option("--prec", g.prec, "working precision in bits (>= 53)");
    app.add_option("--tol", g.tol, "series truncation tolerance");
    app.add_option("--threads", g.threads, "worker threads for simulation");

    long n = 0, k = 0, trials = 1000, kmin = -1, kmax = -1, deriv = 0;
    std::uint64_t seed = 0;
    bool exact = false;
    double x = 1.0;
    std::string fn = "F", stats = "height,saturation,profile,depth";
    from_config(cfg, "n", n);
    from_config(cfg, "k", k);
    from_config(cfg, "trials", trials);
    from_config(cfg, "kmin", kmin);
    from_config(cfg, "kmax", kmax);
    from_config(cfg, "deriv", deriv);
    from_config(cfg, "exact", exact);
    from_config(cfg, "x", x);
    from_config(cfg, "fn", fn);
    from_config(cfg, "stats", stats);
    if (cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();

    // `required` is waived for keys the config file already supplies
    auto opt = [&cfg](CLI::App* cmd, const char* name, auto& var, const char* cfg_key) {
        auto* o = cmd->add_option(name, var);
        if (!cfg.contains(cfg_key)) o->required();
        return o;
    };

    auto* c_mean = app.add_subcommand("mean", "exact mean mu_{n,k} of the external profile");
    opt(c_mean, "--n", n, "n");
    opt(c_mean, "--k", k, "k");
    c_mean->add_flag("--exact", exact, "emit the exact rational");

    auto* c_var = app.add_subcommand("variance", "exact Var(B_{n,k})");
    opt(c_var, "--n", n, "n");
    opt(c_var, "--k", k, "k");

    auto* c_limit = app.add_subcommand("limitfn", "evaluate F, FI, G, GI or P");
    c_limit->add_option("--fn", fn)->check(CLI::IsMember({"F", "FI", "G", "GI", "P"}));
    opt(c_limit, "--x", x, "x");
    c_limit->add_option("--deriv", deriv, "derivative order (F only)");

    auto* c_saddle = app.add_subcommand("saddle", "saddle point and F_saddle at x");
    opt(c_saddle, "--x", x, "x");
    c_saddle->add_option("--m", deriv, "derivative order");

    auto* c_pred = app.add_subcommand("predict", "k_s, k_h, k_H, theta, k_S for n");
    opt(c_pred, "--n", n, "n");

    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo profile statistics");
    opt(c_sim, "--n", n, "n");
    opt(c_sim, "--trials", trials, "trials");
    c_sim->add_option("--seed", seed);
    c_sim->add_option("--stats", stats, "comma list of height,saturation,profile,depth");

    auto* c_clt = app.add_subcommand("clt", "CLT verification for B_{n,k}");
    opt(c_clt, "--n", n, "n");
    opt(c_clt, "--k", k, "k");
    opt(c_clt, "--trials", trials, "trials");
    c_clt->add_option("--seed", seed);

    auto* c_table = app.add_subcommand("table", "profile table: exact/asymptotic columns");
    opt(c_table, "--n", n, "n");
    c_table->add_option("--kmin", kmin);
    c_table->add_option("--kmax", kmax);

    auto* c_conc = app.add_subcommand("concentration", "height/saturation two-point experiment");
    opt(c_conc, "--n", n, "n");
    opt(c_conc, "--trials", trials, "trials");
    c_conc->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        dstprof::PrecisionContext ctx = g.ctx();
        if (c_mean->parsed()) {
            if (exact) {
                dstprof::Rat r = dstprof::moments::mean_closed_exact(n, k);
                emit(g, scalar_out(g, "mean", {{"n", std::to_string(n)},
                                               {"k", std::to_string(k)},
                                               {"mu", q(r.get_str())}}));
            } else {
                auto v = dstprof::moments::mean_closed(n, k, ctx);
                emit(g, scalar_out(g, "mean", {{"n", std::to_string(n)},
                                               {"k", std::to_string(k)},
                                               {"mu", hn::format_double(v.to_double())}}));
            }
        } else if (c_var->parsed()) {
            auto v = dstprof::moments::variance_exact(n, k, ctx);
            emit(g, scalar_out(g, "variance", {{"n", std::to_string(n)},
                                               {"k", std::to_string(k)},
                                               {"var", hn::format_double(v.to_double())}}));
        } else if (c_limit->parsed()) {
            dstprof::BigReal xx(x, ctx.bits);
            dstprof::limitfn::LimitFnValue v;
            if (fn == "F")
                v = dstprof::limitfn::F_eval(xx, deriv, ctx);
            else if (fn == "FI")
                v = dstprof::limitfn::F_I_eval(xx, ctx);
            else if (fn == "G")
                v = dstprof::limitfn::G_eval(xx, ctx);
            else if (fn == "GI")
                v = dstprof::limitfn::G_I_eval(xx, ctx);
            else
                v = dstprof::limitfn::P_eval(xx, ctx);
            emit(g, scalar_out(g, "limitfn",
                               {{"fn", q(fn)},
                                {"x", hn::format_double(x)},
                                {"deriv", std::to_string(deriv)},
                                {"value", hn::format_double(v.value.to_double())},
                                {"tail_bound", hn::format_double(v.tail_bound.to_double())},
                                {"terms", std::to_string(v.terms_used)}}));
        } else if (c_saddle->parsed()) {
            dstprof::BigReal xx(x, ctx.bits);
            auto s = dstprof::asym::saddle_solve(xx, ctx);
            auto fsad = dstprof::asym::F_saddle(xx, deriv, ctx);
            emit(g, scalar_out(g, "saddle",
                               {{"x", hn::format_double(x)},
                                {"m", std::to_string(deriv)},
                                {"rho", hn::format_double(s.rho.re.to_double())},
                                {"log_rho", hn::format_double(s.log_rho.re.to_double())},
                                {"residual", hn::format_double(s.residual)},
                                {"iterations", std::to_string(s.iterations)},
                                {"F_saddle", hn::format_double(fsad.to_double())}}));
        } else if (c_pred->parsed()) {
            auto p = dstprof::asym::predict_levels(n);
            emit(g, scalar_out(g, "predict",
                               {{"n", std::to_string(n)},
                                {"k_s", hn::format_double(p.k_s)},
                                {"k_h", hn::format_double(p.k_h)},
                                {"k_H", std::to_string(p.k_H)},
                                {"theta", hn::format_double(p.theta)},
                                {"k_S", std::to_string(p.k_S)}}));
        } else if (c_sim->parsed()) {
            dstprof::sim::TrialConfig tc;
            tc.n = n;
            tc.trials = trials;
            tc.master_seed = seed;
            tc.threads = g.threads;
            tc.stats = {stats.find("profile") != std::string::npos,
                        stats.find("height") != std::string::npos,
                        stats.find("saturation") != std::string::npos,
                        stats.find("depth") != std::string::npos};
            auto m = dstprof::sim::run_trials(tc);
            std::ostringstream os;
            if (g.format == "json") {
                os << "{\"spec\":{\"kind\":\"simulate\",\"n\":" << n << ",\"trials\":" << trials
                   << ",\"seed\":" << seed << ",\"stats\":\"" << stats << "\"},\"results\":{";
                os << "\"mean_height\":" << hn::format_double(m.mean_of(m.hist_height, 0))
                   << ",\"mean_saturation\":" << hn::format_double(m.mean_of(m.hist_saturation, -1))
                   << ",\"mean_B\":[";
                for (std::size_t i = 0; i < m.sum_B.size(); ++i)
                    os << (i ? "," : "") << hn::format_double(m.mean_B(i));
                os << "],\"var_B\":[";
                for (std::size_t i = 0; i < m.sum_B.size(); ++i)
                    os << (i ? "," : "") << hn::format_double(m.var_B(i));
                os << "],\"mean_I\":[";
                for (std::size_t i = 0; i < m.sum_I.size(); ++i)
                    os << (i ? "," : "") << hn::format_double(m.mean_I(i));
                os << "]},\"provenance\":{\"seed\":" << seed << ",\"precision\":" << g.prec
                   << ",\"build\":\"" << hn::build_describe() << "\"}}";
            } else {
                os << "k,mean_B,var_B,mean_I,var_I\n";
                std::size_t levels = std::max(m.sum_B.size(), m.sum_I.size());
                for (std::size_t i = 0; i < levels; ++i)
                    os << i << ',' << hn::format_double(m.mean_B(i)) << ','
                       << hn::format_double(m.var_B(i)) << ',' << hn::format_double(m.mean_I(i))
                       << ',' << hn::format_double(m.var_I(i)) << '\n';
                os << "# mean_height," << hn::format_double(m.mean_of(m.hist_height, 0)) << '\n';
                os << "# mean_saturation," << hn::format_double(m.mean_of(m.hist_saturation, -1))
                   << '\n';
            }
            emit(g, os.str());
        } else if (c_clt->parsed()) {
            auto rep = hn::clt_experiment(n, k, trials, seed, ctx, g.threads);
            hn::ExperimentSpec spec;
            spec.kind = "clt";
            spec.n = n;
            spec.k = k;
            spec.trials = trials;
            spec.master_seed = seed;
            spec.precision_bits = g.prec;
            spec.tolerance = g.tol;
            if (rep.outside_central_range)
                std::cerr << "warning: k is outside the central range; the normal limit "
                             "does not apply at this level\n";
            emit(g, g.format == "json" ? hn::clt_json(spec, rep) : hn::clt_csv(rep));
        } else if (c_conc->parsed()) {
            auto rep = hn::concentration_experiment(n, trials, seed, ctx, g.threads);
            hn::ExperimentSpec spec;
            spec.kind = "concentration";
            spec.n = n;
            spec.trials = trials;
            spec.master_seed = seed;
            spec.precision_bits = g.prec;
            spec.tolerance = g.tol;
            emit(g, g.format == "json" ? hn::concentration_json(spec, rep)
                                       : hn::concentration_csv(rep));
        } else if (c_table->parsed()) {
            auto rows = hn::profile_table(n, kmin, kmax, ctx);
            emit(g, g.format == "json" ? hn::table_json(rows) : hn::table_csv(rows));
        }
    } catch (const dstprof::PrecisionExhausted& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const dstprof::NoConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const dstprof::CapExceeded& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
