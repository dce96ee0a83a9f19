// End-to-end acceptance: eleven numbered criteria, one verdict line each.
// Every criterion states its budgeted wall time; a criterion fails on a
// violated bound, a thrown error, or a blown budget. The process exits
// nonzero if any criterion fails.
//
// Criteria 1 and 9 check displayed constants of the underlying construction
// literally. Two of those constants are exceeded by the construction itself
// (the envelope certificates all hold; the measured ratios are printed), so
// these criteria are expected to report FAIL with the measured values.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tkl/cli.hpp"
#include "tkl/ensemble.hpp"
#include "tkl/metrics.hpp"
#include "tkl/potential.hpp"
#include "tkl/propcheck.hpp"
#include "tkl/rng.hpp"
#include "tkl/schemes.hpp"
#include "tkl/taming.hpp"

using namespace tkl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

double stat(const SuiteReport& r, const std::string& name, double fallback = 0) {
    for (const auto& s : r.stats)
        if (s.first == name) return s.second;
    return fallback;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string failure_brief(const SuiteReport& r) {
    std::string out;
    for (size_t i = 0; i < r.failures.size() && i < 3; ++i) {
        const auto& f = r.failures[i];
        out += (out.empty() ? "" : "; ") + f.name + " " + fmt(f.observed) +
               " vs " + fmt(f.bound);
    }
    if (r.failures.size() > 3)
        out += "; +" + std::to_string(r.failures.size() - 3) + " more";
    return out;
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int n) {
    double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// 1: drift properties at the pinned step sizes, 1e5 stratified pairs each.
// The four properties are checked with the constants as displayed: growth
// (2/sqrt(lambda))(1+|x|) and Lipschitz 1/sqrt(lambda), slack 1e-9.
Verdict criterion_taming() {
    Verdict v;
    struct Case {
        const char* name;
        PotentialSpec p;
        double lambda;
    };
    std::vector<Case> cases = {
        {"double_well(1)@1e-8", double_well_potential(1.0, 1), 1e-8},
        {"quadratic(1)@1e-4", quadratic_potential(1.0, 1), 1e-4}};
    for (const auto& c : cases) {
        TamedDrift td = TamedDrift::make(c.p, c.lambda);
        SuiteReport rep = suite_taming(td, 100000, 1);
        bool core = rep.pass();
        double glem = stat(rep, "growth_lemma_ratio_max");
        double llem = stat(rep, "lip_lemma_ratio_max");
        bool displayed = glem <= 1.0 + 1e-9 && llem <= 1.0 + 1e-9;
        if (!core) {
            v.pass = false;
            v.detail += std::string(c.name) + " core: " + failure_brief(rep) + "  ";
        }
        if (!displayed) {
            v.pass = false;
            std::string which;
            if (glem > 1.0 + 1e-9) which += "growth x" + fmt(glem);
            if (llem > 1.0 + 1e-9)
                which += (which.empty() ? "" : ", ") + std::string("lipschitz x") +
                         fmt(llem);
            v.detail += std::string(c.name) + " displayed constants exceeded: " +
                        which + " (agreement/monotonicity/certificates all hold)  ";
        }
    }
    if (v.pass) v.detail = "all four properties within slack on both targets";
    return v;
}

// 2: noise covariance closed forms vs quadrature (15-point grid, 1e-10) and
// vs 1e6 sampled pairs (5 standard errors).
Verdict criterion_covariance() {
    Verdict v;
    double worst = 0;
    for (double lambda : {1e-3, 1e-2, 1e-1}) {
        for (double gamma : {0.5, 1.0, 2.0, 5.0, 28.117}) {
            Cov2 c = noise_covariance(lambda, gamma);
            auto i11 = [gamma](double u) { return std::exp(-2 * gamma * u); };
            auto i12 = [gamma](double u) {
                return std::exp(-gamma * u) * -std::expm1(-gamma * u) / gamma;
            };
            auto i22 = [gamma](double u) {
                double w = -std::expm1(-gamma * u) / gamma;
                return w * w;
            };
            double e11 = std::abs(c.c11 - simpson(i11, 0, lambda, 4096)) / c.c11;
            double e12 = std::abs(c.c12 - simpson(i12, 0, lambda, 4096)) / c.c12;
            double e22 = std::abs(c.c22 - simpson(i22, 0, lambda, 4096)) / c.c22;
            worst = std::max({worst, e11, e12, e22});
        }
    }
    if (worst > 1e-10) {
        v.pass = false;
        v.detail = "quadrature mismatch " + fmt(worst);
        return v;
    }

    SchemeParams sp = SchemeParams::make(0.1, 2.0, 1.0, 0.5);
    NoiseStream ns(2, stream_id(domain::kNoiseMC, 0));
    const long n = 1000000;
    double s11 = 0, s12 = 0, s22 = 0, xi, xp;
    for (long i = 0; i < n; ++i) {
        sample_noise_pair(ns, sp, 1, &xi, &xp);
        s11 += xi * xi;
        s12 += xi * xp;
        s22 += xp * xp;
    }
    s11 /= n;
    s12 /= n;
    s22 /= n;
    double z11 = std::abs(s11 - sp.c11) / (std::sqrt(2.0 / n) * sp.c11);
    double z22 = std::abs(s22 - sp.c22) / (std::sqrt(2.0 / n) * sp.c22);
    double z12 = std::abs(s12 - sp.c12) /
                 std::sqrt((sp.c11 * sp.c22 + sp.c12 * sp.c12) / n);
    double zmax = std::max({z11, z12, z22});
    v.pass = zmax < 5.0;
    v.detail = "quadrature max rel err " + fmt(worst) + ", sampling max |z| " +
               fmt(zmax);
    return v;
}

// 3: exponential-scheme contraction on the double well, d in {1,2}.
Verdict criterion_contraction_exponential() {
    Verdict v;
    for (int d : {1, 2}) {
        PotentialSpec p = double_well_potential(1.0, d);
        TamedDrift td = TamedDrift::make(p, 1e-3);
        double gamma = auto_gamma(Scheme::Exponential, td.M_lambda());
        SchemeParams sp = SchemeParams::make(1e-3, gamma, td.M_lambda(), p.m);
        SuiteReport rep =
            suite_contraction(Scheme::Exponential, td, sp, 100, 10000, 3);
        if (!rep.pass()) {
            v.pass = false;
            v.detail += "d=" + std::to_string(d) + ": " + failure_brief(rep) + "  ";
        } else {
            double margin = 1.0 - std::sqrt(stat(rep, "worst_ratio_sq"));
            v.detail += "d=" + std::to_string(d) + " worst step contracts by " +
                        fmt(margin) + " >= required " + fmt(sp.f_lambda) + "  ";
        }
    }
    return v;
}

// 4: OBABO contraction in the overridden-Lipschitz regime, plus plain
// non-expansion where the default constants push the rate under epsilon.
Verdict criterion_contraction_obabo() {
    Verdict v;
    PotentialSpec q = quadratic_potential(1.0, 1);
    TamedDrift tdq = TamedDrift::make(q, 1.8e-3);
    SchemeParams spq = SchemeParams::make(1.8e-3, 2.0, 1.0, q.m, true);
    SuiteReport rq = suite_contraction(Scheme::Obabo, tdq, spq, 100, 10000, 4);
    if (!rq.pass()) {
        v.pass = false;
        v.detail += "override: " + failure_brief(rq) + "  ";
    } else {
        double margin = 1.0 - std::sqrt(stat(rq, "worst_ratio_sq"));
        v.detail += "override worst step contracts by " + fmt(margin) +
                    " >= required " + fmt(spq.lambda * spq.kappa) + "  ";
    }

    PotentialSpec dw = double_well_potential(1.0, 1);
    TamedDrift tdd = TamedDrift::make(dw, 1e-11);
    double gamma = 2.0 * std::sqrt(tdd.M_lambda());
    SchemeParams spd = SchemeParams::make(1e-11, gamma, tdd.M_lambda(), dw.m);
    SuiteReport rd = suite_contraction(Scheme::Obabo, tdd, spd, 100, 10000, 5);
    if (!rd.pass()) {
        v.pass = false;
        v.detail += "default regime: " + failure_brief(rd);
    } else {
        double excess = std::sqrt(stat(rd, "worst_ratio_sq")) - 1.0;
        v.detail += "default regime non-expansive, worst ratio - 1 = " +
                    fmt(excess);
    }
    return v;
}

// 5: W2 decay to the exact Gaussian marginal, 1e4 replicas; monotone decay,
// plateau, strict improvement at lambda/2, stationarity run pinned at 0.
Verdict criterion_w2_gaussian() {
    Verdict v;
    PotentialSpec q = quadratic_potential(1.0, 1);
    W2SuiteConfig cfg;
    cfg.scheme = Scheme::Exponential;
    cfg.d = 1;
    cfg.lambda = 1e-3;
    cfg.m_override = true;  // h = x is globally Lipschitz
    cfg.n_chains = 10000;
    cfg.n_steps = 60000;
    cfg.stride = 1000;
    cfg.eps = 0.05;
    cfg.start_x = 3.0;
    cfg.seed = 42;
    cfg.oracle = W2SuiteConfig::Oracle::Gaussian;
    cfg.n_steps_stationary = 20000;
    SuiteReport rep = suite_w2_convergence(q, cfg);
    v.pass = rep.pass();
    v.detail = "plateau " + fmt(stat(rep, "plateau")) + ", at lambda/2 " +
               fmt(stat(rep, "plateau_half")) + ", noise floor sigma " +
               fmt(stat(rep, "sigma_null"));
    if (!rep.pass()) v.detail += "; " + failure_brief(rep);
    return v;
}

// 6: W2 plateau for the double well vs a 100x finer reference chain.
Verdict criterion_w2_double_well() {
    Verdict v;
    PotentialSpec dw = double_well_potential(1.0, 1);
    W2SuiteConfig cfg;
    cfg.scheme = Scheme::Obabo;
    cfg.d = 1;
    cfg.lambda = 1e-2;
    cfg.gamma_auto = false;
    cfg.gamma = 2.0;
    cfg.n_chains = 4096;
    cfg.n_steps = 20000;
    cfg.stride = 500;
    cfg.eps = 0.1;
    cfg.start_x = 3.0;
    cfg.seed = 42;
    cfg.oracle = W2SuiteConfig::Oracle::FineStep;
    cfg.fine_factor = 100;
    SuiteReport rep = suite_w2_convergence(dw, cfg);
    v.pass = rep.pass();
    v.detail = "plateau " + fmt(stat(rep, "plateau")) + " vs reference " +
               fmt(stat(rep, "ref_plateau")) + ", sigma " +
               fmt(stat(rep, "sigma_null"));
    if (!rep.pass()) v.detail += "; " + failure_brief(rep);
    return v;
}

// 7: Verlet order against the Hamiltonian flow of the same drift.
Verdict criterion_verlet_order() {
    Verdict v;
    PotentialSpec dw = double_well_potential(1.0, 1);
    SuiteReport rep =
        suite_verlet_order(dw, {0.02, 0.01, 0.005, 0.0025}, 1000, 7);
    v.pass = rep.pass();
    v.detail = "horizon-1 slope " + fmt(stat(rep, "global_order_slope")) +
               " in [1.9, 2.3]; literal one-step slope " +
               fmt(stat(rep, "one_step_order_slope")) + " (local, order three)";
    if (!rep.pass()) v.detail += "; " + failure_brief(rep);
    return v;
}

// 8: relaxation-factor bounds on a 100-point grid with lambda*gamma <= 1/2.
Verdict criterion_eta_bounds() {
    Verdict v;
    std::vector<std::pair<double, double>> grid;
    for (int i = 0; i < 10; ++i) {
        double lambda = 1e-4 * std::pow(0.05 / 1e-4, i / 9.0);
        for (int j = 0; j < 10; ++j) {
            double gamma = 0.1 * std::pow(10.0 / 0.1, j / 9.0);
            grid.push_back({lambda, gamma});
        }
    }
    SuiteReport rep = suite_eta_bounds(grid);
    v.pass = rep.pass() && rep.rows.size() == 100;
    v.detail = "100 points; 1-eta inside [lg/2, lg], tightness " +
               fmt(stat(rep, "min_ratio_to_lower")) + " / " +
               fmt(stat(rep, "max_ratio_to_upper"));
    if (!rep.pass()) v.detail += "; " + failure_brief(rep);
    return v;
}

// 9: log-Sobolev proxies at gamma=2, overridden M=1, d=2. The mean-map and
// noise-map checks run at lambda=1e-3, inside the step-size window
// lambda <= m/(33 gamma^3) where the contraction claim applies; 1e3 points.
// The noise-map norm is compared against the displayed per-row constant
// (1+lambda+lambda^2 M/2) sqrt(1-eta_half^2) literally. The covariance
// ratio to 4 lambda / gamma is evaluated in closed form on the lambda grid
// {1e-2, 1e-3, 1e-4}.
Verdict criterion_lsi_proxies() {
    Verdict v;
    PotentialSpec q = quadratic_potential(1.0, 2);
    const double lambda = 1e-3, gamma = 2.0;
    TamedDrift td = TamedDrift::make(q, lambda);
    SchemeParams sp = SchemeParams::make(lambda, gamma, 1.0, q.m, true);
    SuiteReport rep = suite_lsi_proxies(td, sp, 1000, 9);
    if (!rep.pass()) {
        v.pass = false;
        v.detail += failure_brief(rep) + "  ";
    }
    double fbar_max = stat(rep, "fbar_opnorm_max");
    double theta_over_row = stat(rep, "theta_over_row_formula");
    if (fbar_max >= 1.0) {
        v.pass = false;
        v.detail += "mean-map norm " + fmt(fbar_max) + " !< 1  ";
    }

    double sig_lo = 2, sig_hi = 0;
    for (double l : {1e-2, 1e-3, 1e-4}) {
        double ratio = sym2_opnorm(sigma_bar(l, gamma)) / (4.0 * l / gamma);
        sig_lo = std::min(sig_lo, ratio);
        sig_hi = std::max(sig_hi, ratio);
    }
    if (sig_lo < 0.9 || sig_hi > 1.1) {
        v.pass = false;
        v.detail += "covariance ratio [" + fmt(sig_lo) + ", " + fmt(sig_hi) +
                    "] outside [0.9, 1.1]  ";
    }

    if (theta_over_row > 1.0 + 1e-6) {
        v.pass = false;
        v.detail += "noise-map norm exceeds the displayed per-row constant by x" +
                    fmt(theta_over_row) +
                    " (l2 operator norm ~ sqrt(2) x the row bound; the envelope "
                    "2 sqrt(1-eta_half^2) holds). mean-map norm " +
                    fmt(fbar_max) + " < 1 and covariance ratio [" + fmt(sig_lo) +
                    ", " + fmt(sig_hi) + "] pass";
    }
    if (v.pass)
        v.detail = "mean-map norm " + fmt(fbar_max) + ", covariance ratio [" +
                   fmt(sig_lo) + ", " + fmt(sig_hi) + "]";
    return v;
}

// 10: stationary second-moment bound for both built-ins, and the check's
// sensitivity to an inflated cloud.
Verdict criterion_moment_bound() {
    Verdict v;

    PotentialSpec q = quadratic_potential(1.0, 1);
    TamedDrift tdq = TamedDrift::make(q, 1e-3);
    SchemeParams spq = SchemeParams::make(1e-3, 5.0, 1.0, q.m, true);
    EnsembleSpec esq;
    esq.scheme = Scheme::Exponential;
    esq.n_steps = 2000;
    esq.checkpoints = {2000};
    esq.seed = 10;
    esq.domain = domain::kMoments;
    long nq = 2000;
    std::vector<double> sx = gaussian_starts(nq, 1, 0.0, 1.0, 10, domain::kStarts);
    std::vector<double> sv = gaussian_starts(nq, 1, 0.0, 1.0, 11, domain::kStarts);
    EnsembleResult rq = run_ensemble(tdq, spq, esq, sx, sv, 1);
    std::vector<std::vector<double>> cloud_q(nq, std::vector<double>(1));
    for (long i = 0; i < nq; ++i) cloud_q[i][0] = rq.x_at.back()[i];
    MomentBoundReport mq = moment_bound_check(cloud_q, q);
    if (mq.violated) {
        v.pass = false;
        v.detail += "quadratic " + fmt(mq.empirical) + " > " + fmt(mq.bound) + "  ";
    } else {
        v.detail += "quadratic " + fmt(mq.empirical) + " <= " + fmt(mq.bound) + "  ";
    }

    PotentialSpec dw = double_well_potential(1.0, 2);
    TamedDrift tdd = TamedDrift::make(dw, 1e-2);
    SchemeParams spd =
        SchemeParams::make(1e-2, 2.0, tdd.M_lambda(), dw.m);
    EnsembleSpec esd;
    esd.scheme = Scheme::Obabo;
    esd.n_steps = 1500;
    esd.checkpoints = {1500};
    esd.seed = 12;
    esd.domain = domain::kMoments;
    long nd = 4000;
    std::vector<double> dx = gaussian_starts(nd, 2, 0.0, 0.8, 12, domain::kStarts);
    std::vector<double> dv = gaussian_starts(nd, 2, 0.0, 1.0, 13, domain::kStarts);
    EnsembleResult rd = run_ensemble(tdd, spd, esd, dx, dv, 2);
    std::vector<std::vector<double>> cloud_d(nd, std::vector<double>(2));
    for (long i = 0; i < nd; ++i) {
        cloud_d[i][0] = rd.x_at.back()[2 * i];
        cloud_d[i][1] = rd.x_at.back()[2 * i + 1];
    }
    MomentBoundReport md = moment_bound_check(cloud_d, dw);
    if (md.violated) {
        v.pass = false;
        v.detail += "double_well " + fmt(md.empirical) + " > " + fmt(md.bound) + "  ";
    } else {
        v.detail += "double_well " + fmt(md.empirical) + " <= " + fmt(md.bound) + "  ";
    }

    // a tenfold-inflated cloud must trip the same check
    for (auto& row : cloud_d) {
        row[0] *= 10.0;
        row[1] *= 10.0;
    }
    MomentBoundReport fault = moment_bound_check(cloud_d, dw);
    if (!fault.violated) {
        v.pass = false;
        v.detail += "inflated cloud not flagged  ";
    } else {
        v.detail += "(inflated cloud flagged)";
    }
    return v;
}

// 11: identical invocations, including different thread counts, produce
// byte-identical CSV reports.
Verdict criterion_reproducibility() {
    Verdict v;
    fs::path root = "tkl_acceptance_scratch";
    fs::remove_all(root);
    fs::create_directories(root);
    fs::path cfg = root / "taming.cfg";
    {
        std::ofstream out(cfg);
        out << "suite = taming\npotential = double_well\nc = 1\ndim = 2\n"
               "lambda = 1e-6\nn = 2000\nseed = 7\n";
    }
    auto run = [&](const std::string& out_dir,
                   const std::string& threads) -> int {
        std::vector<std::string> args = {"check-taming", "--config",
                                         cfg.string(), "--out",
                                         (root / out_dir).string()};
        if (!threads.empty()) {
            args.push_back("--threads");
            args.push_back(threads);
        }
        std::vector<const char*> argv;
        argv.push_back("tkl");
        for (const auto& a : args) argv.push_back(a.c_str());
        // the run's console summary is noise here; only the CSV bytes matter
        std::fflush(stdout);
        int saved = dup(fileno(stdout));
        FILE* sink = std::freopen("/dev/null", "w", stdout);
        int rc = cli_main(int(argv.size()), argv.data());
        std::fflush(stdout);
        if (sink) {
            dup2(saved, fileno(stdout));
        }
        close(saved);
        return rc;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    int r1 = run("a", "");
    int r2 = run("b", "");
    int r3 = run("c", "1");
    int r4 = run("d", "4");
    std::string a = slurp(root / "a" / "taming.csv");
    std::string b = slurp(root / "b" / "taming.csv");
    std::string c = slurp(root / "c" / "taming.csv");
    std::string d = slurp(root / "d" / "taming.csv");
    if (r1 != 0 || r2 != 0 || r3 != 0 || r4 != 0) {
        v.pass = false;
        v.detail = "suite run failed";
    } else if (a.empty() || a != b || a != c || a != d) {
        v.pass = false;
        v.detail = "reports differ across reruns or thread counts";
    } else {
        v.detail = "4 runs, " + std::to_string(a.size()) + " bytes each, identical";
    }
    fs::remove_all(root);
    return v;
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        double budget_s;
        Verdict (*fn)();
    };
    const Entry entries[] = {
        {"tamed drift properties", 30, criterion_taming},
        {"noise covariance closed forms", 60, criterion_covariance},
        {"exponential-scheme contraction", 120, criterion_contraction_exponential},
        {"OBABO contraction", 120, criterion_contraction_obabo},
        {"W2 convergence, Gaussian target", 600, criterion_w2_gaussian},
        {"W2 convergence, double-well target", 600, criterion_w2_double_well},
        {"Verlet integrator order", 60, criterion_verlet_order},
        {"relaxation-factor bounds", 1, criterion_eta_bounds},
        {"log-Sobolev proxy inequalities", 60, criterion_lsi_proxies},
        {"stationary second-moment bound", 60, criterion_moment_bound},
        {"bitwise reproducibility", 60, criterion_reproducibility},
    };

    int n_fail = 0;
    int k = 0;
    for (const auto& e : entries) {
        ++k;
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = e.fn();
        } catch (const std::exception& ex) {
            v.pass = false;
            v.detail = std::string("exception: ") + ex.what();
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (secs > e.budget_s) {
            v.pass = false;
            v.detail += " [over budget " + fmt(e.budget_s) + "s]";
        }
        if (!v.pass) ++n_fail;
        std::printf("[%2d/11] %-36s %s (%.1fs) %s\n", k, e.name,
                    v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/11 criteria pass\n", 11 - n_fail);
    return n_fail == 0 ? 0 : 1;
}
