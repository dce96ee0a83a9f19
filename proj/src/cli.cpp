#include "tkl/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tkl/config.hpp"
#include "tkl/ensemble.hpp"
#include "tkl/propcheck.hpp"

namespace tkl {

namespace {

struct CommonOpts {
    std::string config;
    std::string out = ".";
    long seed = -1;     // -1: keep the config's seed
    int threads = -1;   // -1: TKL_THREADS env or library default
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required = true) {
    auto* c = cmd->add_option("--config", o.config, "experiment config file");
    if (config_required) c->required();
    cmd->add_option("--out", o.out, "output directory for CSV reports");
    cmd->add_option("--seed", o.seed, "override the config seed");
    cmd->add_option("--threads", o.threads,
                    "ensemble threads (1 = serial reference, 0 = all)");
}

void apply_threads(const CommonOpts& o) {
    int n = o.threads;
    if (n < 0) {
        if (const char* env = std::getenv("TKL_THREADS")) n = std::atoi(env);
    }
    if (n >= 0) set_ensemble_threads(n);
}

ResolvedExperiment load(const CommonOpts& o, const std::string& want_suite) {
    ExperimentConfig cfg = load_config_file(o.config);
    if (cfg.suite != want_suite)
        throw ConfigError(o.config + ": suite=" + cfg.suite +
                          " but this subcommand runs suite '" + want_suite + "'");
    if (o.seed >= 0) cfg.seed = uint64_t(o.seed);
    return resolve_experiment(cfg);
}

void echo_derived(const ResolvedExperiment& rx) {
    const SchemeParams& sp = rx.sp;
    std::printf("potential=%s c=%.17g dim=%d scheme=%s\n", rx.pot.name.c_str(),
                rx.cfg.c, rx.cfg.dim, scheme_name(rx.cfg.scheme));
    std::printf("lambda=%.17g gamma=%.17g%s M_lambda=%.17g%s\n", sp.lambda,
                sp.gamma, rx.cfg.gamma_auto ? " (auto)" : "", sp.M_lambda,
                sp.m_lambda_overridden ? " (global Lipschitz)" : "");
    std::printf("r_lambda=%.17g R_lambda=%.17g m=%.17g\n", rx.td.r_lambda(),
                rx.td.R_lambda(), rx.td.m());
    std::printf("psi=(%.17g, %.17g, %.17g)\n", sp.psi0, sp.psi1, sp.psi2);
    std::printf("C=(%.17g, %.17g, %.17g)\n", sp.c11, sp.c12, sp.c22);
    std::printf("a=%.17g b=%.17g f_lambda=%.17g kappa=%.17g\n", sp.a, sp.b,
                sp.f_lambda, sp.kappa);
}

int finish(const SuiteReport& rep, const CommonOpts& o) {
    std::filesystem::create_directories(o.out);
    std::string path = o.out + "/" + rep.suite + ".csv";
    write_report_csv(rep, path);
    print_summary(rep, std::cout);
    std::cout << "wrote " << path << "\n";
    return rep.pass() ? 0 : 1;
}

int run_sample(const CommonOpts& o) {
    ResolvedExperiment rx = load(o, "sample");
    echo_derived(rx);
    int d = rx.cfg.dim;
    PhaseState z0;
    z0.x.assign(d, rx.cfg.start_x);
    z0.v.assign(d, 0.0);
    NoiseStream ns(rx.cfg.seed, stream_id(domain::kSample, 0));
    RunRecord rec = run_chain(z0, rx.td, rx.sp, rx.cfg.scheme, rx.cfg.n_steps,
                              ns, rx.cfg.thin);

    SuiteReport rep;
    rep.suite = "sample";
    rep.header.emplace_back("potential", rx.pot.name);
    rep.header.emplace_back("scheme", scheme_name(rx.cfg.scheme));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", rx.sp.lambda);
    rep.header.emplace_back("lambda", buf);
    std::snprintf(buf, sizeof buf, "%.17g", rx.sp.gamma);
    rep.header.emplace_back("gamma", buf);
    rep.columns.push_back("step");
    for (int j = 0; j < d; ++j) rep.columns.push_back("x" + std::to_string(j));
    for (int j = 0; j < d; ++j) rep.columns.push_back("v" + std::to_string(j));
    size_t n_rec = rec.steps.size();
    for (size_t k = 0; k < n_rec; ++k) {
        std::vector<double> row;
        row.push_back(double(rec.steps[k]));
        for (int j = 0; j < d; ++j) row.push_back(rec.x[k * d + j]);
        for (int j = 0; j < d; ++j) row.push_back(rec.v[k * d + j]);
        rep.rows.push_back(std::move(row));
    }
    rep.cases = long(n_rec);

    // second-moment sanity on the trailing half of the recorded positions
    std::vector<std::vector<double>> tail;
    for (size_t k = n_rec / 2; k < n_rec; ++k)
        tail.emplace_back(rec.x.begin() + k * d, rec.x.begin() + (k + 1) * d);
    MomentBoundReport mb = moment_bound_check(tail, rx.pot);
    rep.stats.emplace_back("second_moment", mb.empirical);
    rep.stats.emplace_back("second_moment_se", mb.std_error);
    rep.stats.emplace_back("second_moment_bound", mb.bound);
    if (mb.violated)
        rep.failures.push_back({0, "second_moment_bound", mb.empirical, mb.bound,
                                "E|Y|^2 <= (2/m)(u(0)+d) + 3 SE"});
    return finish(rep, o);
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"tamed kinetic Langevin sampling and verification"};
    app.require_subcommand(1);

    CommonOpts o_taming, o_contr, o_w2, o_lsi, o_eta, o_order, o_sample;
    auto* c_taming = app.add_subcommand("check-taming", "tamed drift properties");
    add_common(c_taming, o_taming);
    auto* c_contr =
        app.add_subcommand("check-contraction", "synchronous-coupling contraction");
    add_common(c_contr, o_contr);
    auto* c_w2 = app.add_subcommand("check-w2", "W2 convergence to the target");
    add_common(c_w2, o_w2);
    auto* c_lsi =
        app.add_subcommand("check-lsi-proxy", "log-Sobolev proxy inequalities");
    add_common(c_lsi, o_lsi);
    auto* c_eta = app.add_subcommand("check-eta", "relaxation factor bounds");
    add_common(c_eta, o_eta);
    auto* c_order = app.add_subcommand("check-order", "Verlet integrator order");
    add_common(c_order, o_order);
    auto* c_sample = app.add_subcommand("sample", "run one chain and record it");
    add_common(c_sample, o_sample);

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (c_taming->parsed()) {
            apply_threads(o_taming);
            ResolvedExperiment rx = load(o_taming, "taming");
            echo_derived(rx);
            return finish(suite_taming(rx.td, rx.cfg.n, rx.cfg.seed), o_taming);
        }
        if (c_contr->parsed()) {
            apply_threads(o_contr);
            ResolvedExperiment rx = load(o_contr, "contraction");
            echo_derived(rx);
            std::printf("regime checked: %s\n",
                        rx.cfg.scheme == Scheme::Exponential
                            ? "gamma >= 5 sqrt(M_lambda), lambda <= 1/(2 gamma)"
                            : "gamma >= 2 sqrt(M_lambda), lambda <= m/(33 gamma^3)");
            return finish(suite_contraction(rx.cfg.scheme, rx.td, rx.sp,
                                            rx.cfg.n_pairs, rx.cfg.n_steps,
                                            rx.cfg.seed),
                          o_contr);
        }
        if (c_w2->parsed()) {
            apply_threads(o_w2);
            ResolvedExperiment rx = load(o_w2, "w2");
            echo_derived(rx);
            W2SuiteConfig wc;
            wc.scheme = rx.cfg.scheme;
            wc.d = rx.cfg.dim;
            wc.lambda = rx.cfg.lambda;
            wc.gamma_auto = rx.cfg.gamma_auto;
            wc.gamma = rx.cfg.gamma_resolved;
            wc.m_override = rx.cfg.m_lambda_override;
            wc.n_chains = rx.cfg.n_chains;
            wc.n_steps = rx.cfg.n_steps;
            wc.stride = rx.cfg.thin;
            wc.eps = rx.cfg.eps;
            wc.start_x = rx.cfg.start_x;
            wc.seed = rx.cfg.seed;
            wc.oracle = rx.pot.kind == PotentialKind::Quadratic
                            ? W2SuiteConfig::Oracle::Gaussian
                            : W2SuiteConfig::Oracle::FineStep;
            wc.fine_factor = rx.cfg.fine_factor;
            wc.n_steps_stationary =
                std::max(rx.cfg.thin, rx.cfg.n_steps / 3);
            return finish(suite_w2_convergence(rx.pot, wc), o_w2);
        }
        if (c_lsi->parsed()) {
            apply_threads(o_lsi);
            ResolvedExperiment rx = load(o_lsi, "lsi");
            echo_derived(rx);
            std::printf("regime checked: gamma >= 2 sqrt(M_lambda), lambda <= 1/(2 gamma)\n");
            return finish(suite_lsi_proxies(rx.td, rx.sp, rx.cfg.n_points,
                                            rx.cfg.seed),
                          o_lsi);
        }
        if (c_eta->parsed()) {
            apply_threads(o_eta);
            // the relaxation-factor inequalities involve no taming, so resolve
            // only (lambda, gamma) and leave the drift untouched
            ExperimentConfig cfg = load_config_file(o_eta.config);
            if (cfg.suite != "eta")
                throw ConfigError(o_eta.config + ": suite=" + cfg.suite +
                                  " but this subcommand runs suite 'eta'");
            if (o_eta.seed >= 0) cfg.seed = uint64_t(o_eta.seed);
            PotentialSpec pot = builtin_potential(cfg.potential, cfg.c, cfg.dim);
            if (cfg.m_lambda_override && !pot.global_lipschitz)
                throw ConfigError("m_lambda=global_lipschitz: potential '" +
                                  cfg.potential + "' has no global Lipschitz constant");
            double M = cfg.m_lambda_override ? *pot.global_lipschitz
                                             : effective_lipschitz(cfg.lambda);
            double gamma = cfg.gamma_auto ? auto_gamma(cfg.scheme, M) : cfg.gamma;
            std::printf("lambda=%.17g gamma=%.17g%s\n", cfg.lambda, gamma,
                        cfg.gamma_auto ? " (auto)" : "");
            std::vector<std::pair<double, double>> grid;
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 4; ++j) {
                    double l = cfg.lambda * std::pow(0.5, i);
                    double g = gamma * std::pow(0.5, j);
                    if (l * g <= 0.5) grid.emplace_back(l, g);
                }
            if (grid.empty())
                throw ConfigError(
                    "check-eta: lambda*gamma > 1/2 across the whole derived grid");
            return finish(suite_eta_bounds(grid), o_eta);
        }
        if (c_order->parsed()) {
            apply_threads(o_order);
            ResolvedExperiment rx = load(o_order, "order");
            echo_derived(rx);
            std::vector<double> lambdas = {0.02, 0.01, 0.005, 0.0025};
            return finish(
                suite_verlet_order(rx.pot, lambdas, rx.cfg.n_chains, rx.cfg.seed),
                o_order);
        }
        if (c_sample->parsed()) {
            apply_threads(o_sample);
            return run_sample(o_sample);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const RegimeError& e) {
        std::cerr << "regime error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error at step " << e.step << ": " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace tkl
