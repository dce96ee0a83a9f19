#include "tkl/propcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tkl {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct WallTimer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

void add_kv(SuiteReport& r, const std::string& k, double v) {
    r.header.emplace_back(k, fmt17(v));
}

void add_failure(SuiteReport& r, long index, const std::string& name,
                 double observed, double bound, const std::string& relation) {
    r.failures.push_back({index, name, observed, bound, relation});
}

double norm2(const std::vector<double>& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// seeds for derived streams that must not collide with the primary domains
constexpr uint64_t kSeedHalfRun = 0x9E3779B97F4A7C15ull;
constexpr uint64_t kSeedStationary = 0xC2B2AE3D27D4EB4Full;
constexpr uint64_t kSeedFine1 = 0x165667B19E3779F9ull;
constexpr uint64_t kSeedFine2 = 0x27D4EB2F165667C5ull;

}  // namespace

std::string report_csv_string(const SuiteReport& r) {
    std::ostringstream os;
    os << "schema=1\n";
    os << "# suite=" << r.suite << "\n";
    for (const auto& [k, v] : r.header) os << "# " << k << "=" << v << "\n";
    os << "# cases=" << r.cases << "\n";
    os << "# failures=" << r.failures.size() << "\n";
    for (const auto& f : r.failures)
        os << "# failure: index=" << f.index << " name=" << f.name
           << " observed=" << fmt17(f.observed) << " bound=" << fmt17(f.bound)
           << " relation=" << f.relation << "\n";
    for (const auto& [k, v] : r.stats) os << "# stat:" << k << "=" << fmt17(v) << "\n";
    for (const auto& n : r.notes) os << "# note: " << n << "\n";
    for (size_t i = 0; i < r.columns.size(); ++i)
        os << (i ? "," : "") << r.columns[i];
    os << "\n";
    for (const auto& row : r.rows) {
        if (row.size() != r.columns.size())
            throw std::logic_error("report_csv_string: row width mismatch");
        for (size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << fmt17(row[i]);
        os << "\n";
    }
    return os.str();
}

void write_report_csv(const SuiteReport& r, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_report_csv: cannot open " + path);
    f << report_csv_string(r);
    if (!f) throw std::runtime_error("write_report_csv: write failed: " + path);
}

void print_summary(const SuiteReport& r, std::ostream& os) {
    os << "[" << r.suite << "] " << (r.pass() ? "PASS" : "FAIL") << " cases="
       << r.cases << " failures=" << r.failures.size();
    char buf[48];
    std::snprintf(buf, sizeof buf, " wall=%.2fs", r.wall_seconds);
    os << buf << "\n";
    size_t shown = 0;
    for (const auto& f : r.failures) {
        if (++shown > 5) {
            os << "  ... " << r.failures.size() - 5 << " more failures\n";
            break;
        }
        os << "  violated at case " << f.index << " [" << f.name
           << "]: " << f.relation << " (observed " << fmt6(f.observed)
           << ", bound " << fmt6(f.bound) << ")\n";
    }
    for (const auto& [k, v] : r.stats) os << "  " << k << " = " << fmt6(v) << "\n";
    for (const auto& n : r.notes) os << "  note: " << n << "\n";
}

// ---------------------------------------------------------------- taming ---

SuiteReport suite_taming(const TamedDrift& td, long n, uint64_t seed) {
    if (n < 17) throw std::invalid_argument("suite_taming: n >= 17");
    WallTimer wt;
    const PotentialSpec& p = td.potential();
    const int d = p.dim;
    const double r = td.r_lambda(), R = td.R_lambda(), M = td.M_lambda();
    const double m = td.m(), lambda = td.lambda();
    const double growth_cert = td.growth_certificate();
    const double lip_cert = td.lipschitz_certificate();
    const double growth_lemma = 2.0 / std::sqrt(lambda);

    SuiteReport rep;
    rep.suite = "taming";
    rep.header.emplace_back("potential", p.name);
    add_kv(rep, "dim", d);
    add_kv(rep, "lambda", lambda);
    add_kv(rep, "r_lambda", r);
    add_kv(rep, "R_lambda", R);
    add_kv(rep, "M_lambda", M);
    add_kv(rep, "growth_certificate", growth_cert);
    add_kv(rep, "lipschitz_certificate", lip_cert);
    rep.columns = {"stratum",          "n_cases",        "agreement_bad",
                   "mono_ratio_min",   "growth_cert_max", "lip_cert_max",
                   "growth_lemma_max", "lip_lemma_max"};

    // strata 0..15: region pairs over {core, inner shell, outer shell, cap};
    // stratum 16: same-direction pairs straddling a weight breakpoint
    const double lo[4] = {0.0, r - 2.0, r - 1.0, r};
    const double hi[4] = {r - 2.0, r - 1.0, r, 3.0 * r};
    struct Acc {
        long cases = 0, agree_bad = 0;
        double mono_min = std::numeric_limits<double>::infinity();
        double gcert = 0, lcert = 0, glem = 0, llem = 0;
    } acc[17];

    NoiseStream ns(seed, stream_id(domain::kTaming, 1));
    std::vector<double> x(d), y(d), hx(d), hy(d), raw(d), probe(d), hprobe(d);

    auto draw_dir = [&](std::vector<double>& out) {
        double nsq;
        do {
            nsq = 0;
            for (int j = 0; j < d; ++j) {
                out[j] = ns.normal();
                nsq += out[j] * out[j];
            }
        } while (nsq == 0);
        double inv = 1.0 / std::sqrt(nsq);
        for (int j = 0; j < d; ++j) out[j] *= inv;
    };
    auto draw_in_region = [&](int reg, std::vector<double>& out) {
        draw_dir(out);
        double rad = lo[reg] + (hi[reg] - lo[reg]) * ns.uniform01();
        for (int j = 0; j < d; ++j) out[j] *= rad;
    };

    for (long i = 0; i < n; ++i) {
        int stratum = int(i % 17);
        if (stratum < 16) {
            draw_in_region(stratum / 4, x);
            draw_in_region(stratum % 4, y);
        } else {
            draw_dir(x);
            double rb = (i / 17) % 3 == 0 ? r - 2.0 : ((i / 17) % 3 == 1 ? r - 1.0 : r);
            for (int j = 0; j < d; ++j) {
                y[j] = x[j] * rb * (1.0 + 1e-12);
                x[j] = x[j] * rb * (1.0 - 1e-12);
            }
        }
        Acc& a = acc[stratum];
        ++a.cases;

        td.eval(x, hx);
        td.eval(y, hy);
        double nx = norm2(x), ny_ = norm2(y);
        double hxn = norm2(hx), hyn = norm2(hy);

        // growth: certificate is hard, displayed lemma constant is measured
        for (int side = 0; side < 2; ++side) {
            double pn = side ? ny_ : nx, hn = side ? hyn : hxn;
            double cert_ratio = hn / (growth_cert * (1.0 + pn));
            double lem_ratio = hn / (growth_lemma * (1.0 + pn));
            a.gcert = std::max(a.gcert, cert_ratio);
            a.glem = std::max(a.glem, lem_ratio);
            if (cert_ratio > 1.0 + 1e-9)
                add_failure(rep, i, "growth_certificate", hn,
                            growth_cert * (1.0 + pn),
                            "|h_l(x)| <= (R_l+m)(1+|x|)");
        }

        // agreement on the core: the tamed drift must return h exactly
        if (nx <= r - 2.0) {
            p.h(x, raw);
            for (int j = 0; j < d; ++j)
                if (raw[j] != hx[j]) {
                    ++a.agree_bad;
                    add_failure(rep, i, "agreement", hx[j], raw[j],
                                "h_l == h on |x| <= r_l - 2");
                    break;
                }
        }

        // pair checks
        double dsq = 0, dot = 0, dhsq = 0;
        for (int j = 0; j < d; ++j) {
            double dx = x[j] - y[j], dh = hx[j] - hy[j];
            dsq += dx * dx;
            dot += dh * dx;
            dhsq += dh * dh;
        }
        if (dsq > 0) {
            double dxn = std::sqrt(dsq), dhn = std::sqrt(dhsq);
            double tol_fp = 1e-14 * (1.0 + hxn + hyn) * dxn;
            if (dot < m * dsq * (1.0 - 1e-9) - tol_fp)
                add_failure(rep, i, "monotonicity", dot, m * dsq,
                            "<h_l(x)-h_l(y), x-y> >= m|x-y|^2");
            a.mono_min = std::min(a.mono_min, dot / (m * dsq));
            double lim = lip_cert * dxn;
            if (dhn > lim * (1.0 + 1e-9) + 1e-14 * (1.0 + hxn + hyn))
                add_failure(rep, i, "lipschitz_certificate", dhn, lim,
                            "|h_l(x)-h_l(y)| <= (L(1+2r)^l + R(r+2) + 2m)|x-y|");
            a.lcert = std::max(a.lcert, dhn / lim);
            a.llem = std::max(a.llem, dhn / (M * dxn));
        }

        // local slope probe at x, the sharpest Lipschitz measurement
        if (stratum < 16) {
            draw_dir(probe);
            double delta = 1e-7 * (1.0 + nx);
            for (int j = 0; j < d; ++j) probe[j] = x[j] + delta * probe[j];
            td.eval(probe, hprobe);
            double sl = 0;
            for (int j = 0; j < d; ++j) {
                double t = hprobe[j] - hx[j];
                sl += t * t;
            }
            sl = std::sqrt(sl) / delta;
            if (sl > lip_cert * (1.0 + 1e-6) + 1e-9 * (1.0 + hxn))
                add_failure(rep, i, "lipschitz_certificate", sl, lip_cert,
                            "local slope <= L(1+2r)^l + R(r+2) + 2m");
            a.lcert = std::max(a.lcert, sl / lip_cert);
            a.llem = std::max(a.llem, sl / M);
        }
    }

    double gcert = 0, lcert = 0, glem = 0, llem = 0, mono = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 17; ++s) {
        const Acc& a = acc[s];
        rep.rows.push_back({double(s), double(a.cases), double(a.agree_bad),
                            a.mono_min, a.gcert, a.lcert, a.glem, a.llem});
        gcert = std::max(gcert, a.gcert);
        lcert = std::max(lcert, a.lcert);
        glem = std::max(glem, a.glem);
        llem = std::max(llem, a.llem);
        mono = std::min(mono, a.mono_min);
    }
    rep.cases = n;
    rep.stats.emplace_back("growth_cert_ratio_max", gcert);
    rep.stats.emplace_back("lip_cert_ratio_max", lcert);
    rep.stats.emplace_back("growth_lemma_ratio_max", glem);
    rep.stats.emplace_back("lip_lemma_ratio_max", llem);
    rep.stats.emplace_back("mono_ratio_min", mono);
    if (glem > 1.0)
        rep.notes.push_back(
            "displayed growth constant 2/sqrt(lambda) exceeded: max |h_l(x)| / "
            "((2/sqrt(lambda))(1+|x|)) = " + fmt6(glem) +
            "; the certificate (R_l+m)(1+|x|) holds (max ratio " + fmt6(gcert) + ")");
    if (llem > 1.0)
        rep.notes.push_back(
            "displayed Lipschitz constant M_lambda = 1/sqrt(lambda) exceeded: max "
            "measured slope / M_lambda = " + fmt6(llem) +
            "; the certificate L(1+2r_l)^l + R_l(r_l+2) + 2m holds (max ratio " +
            fmt6(lcert) + ")");
    std::sort(rep.failures.begin(), rep.failures.end(),
              [](const CaseFailure& a, const CaseFailure& b) { return a.index < b.index; });
    rep.wall_seconds = wt.seconds();
    return rep;
}

// ----------------------------------------------------------- contraction ---

SuiteReport suite_contraction(Scheme scheme, const TamedDrift& td,
                              const SchemeParams& sp, long n_pairs,
                              long n_steps, uint64_t seed) {
    if (n_pairs < 1 || n_steps < 1)
        throw std::invalid_argument("suite_contraction: n_pairs, n_steps >= 1");
    if (scheme == Scheme::Exponential)
        require_exponential_regime(sp);
    else
        require_obabo_regime(sp);

    WallTimer wt;
    const int d = td.potential().dim;
    double rate = scheme == Scheme::Exponential ? sp.f_lambda : sp.lambda * sp.kappa;
    bool eps_regime = rate < 64.0 * std::numeric_limits<double>::epsilon();
    double bound_sq = eps_regime ? 1.0 + 1e-12
                                 : (1.0 - rate) * (1.0 - rate) * (1.0 + 1e-12);

    SuiteReport rep;
    rep.suite = "contraction";
    rep.header.emplace_back("scheme", scheme_name(scheme));
    rep.header.emplace_back("potential", td.potential().name);
    add_kv(rep, "dim", d);
    add_kv(rep, "lambda", sp.lambda);
    add_kv(rep, "gamma", sp.gamma);
    add_kv(rep, "M_lambda", sp.M_lambda);
    add_kv(rep, "m", sp.m);
    add_kv(rep, "a", sp.a);
    add_kv(rep, "b", sp.b);
    add_kv(rep, "rate_bound", rate);
    add_kv(rep, "epsilon_regime", eps_regime ? 1 : 0);
    add_kv(rep, "n_steps", double(n_steps));
    rep.columns = {"pair",     "initial_sq", "final_sq",     "worst_ratio_sq",
                   "bound_sq", "worst_step", "n_below_floor"};

    double worst = 0, best = std::numeric_limits<double>::infinity();
    double sum_log = 0;
    long n_log = 0, below = 0;
    for (long pr = 0; pr < n_pairs; ++pr) {
        NoiseStream ns(seed, stream_id(domain::kContraction, uint64_t(pr)));
        PhaseState za, zb;
        za.x.resize(d);
        za.v.resize(d);
        zb.x.resize(d);
        zb.v.resize(d);
        for (int j = 0; j < d; ++j) za.x[j] = 0.8 * ns.normal();
        for (int j = 0; j < d; ++j) za.v[j] = ns.normal();
        for (int j = 0; j < d; ++j) zb.x[j] = 0.8 * ns.normal();
        for (int j = 0; j < d; ++j) zb.v[j] = ns.normal();
        CoupledRecord rec = run_coupled(za, zb, td, sp, scheme, n_steps, ns);
        rep.rows.push_back({double(pr), rec.initial_sq, rec.final_sq,
                            rec.max_ratio, bound_sq, double(rec.worst_step),
                            double(rec.n_below_floor)});
        if (rec.n_ratios > 0 && rec.max_ratio > bound_sq)
            add_failure(rep, pr, "per_step_contraction", rec.max_ratio, bound_sq,
                        eps_regime
                            ? "|dz'|^2_{a,b} / |dz|^2_{a,b} <= 1 + 1e-12"
                            : "|dz'|^2_{a,b} / |dz|^2_{a,b} <= (1 - rate)^2");
        if (rec.n_ratios > 0) {
            worst = std::max(worst, rec.max_ratio);
            best = std::min(best, rec.min_ratio);
            sum_log += rec.mean_log_ratio * rec.n_ratios;
            n_log += rec.n_ratios;
        }
        below += rec.n_below_floor;
    }
    rep.cases = n_pairs;
    rep.stats.emplace_back("worst_ratio_sq", worst);
    rep.stats.emplace_back("best_ratio_sq", best);
    double mean_rate = n_log > 0 ? 1.0 - std::exp(0.5 * sum_log / double(n_log)) : 0.0;
    rep.stats.emplace_back("measured_mean_rate", mean_rate);
    rep.stats.emplace_back("measured_worst_rate", 1.0 - std::sqrt(worst));
    rep.stats.emplace_back("n_below_floor", double(below));
    if (eps_regime)
        rep.notes.push_back(
            "rate bound " + fmt6(rate) +
            " is below 64 machine epsilons; asserting non-expansion and recording "
            "the measured mean per-step rate " + fmt6(mean_rate));
    rep.wall_seconds = wt.seconds();
    return rep;
}

// -------------------------------------------------------- W2 convergence ---

namespace {

std::vector<double> quantile_cloud(long n, double scale) {
    std::vector<double> q(n);
    for (long i = 0; i < n; ++i)
        q[i] = scale * normal_quantile((double(i) + 0.5) / double(n));
    return q;
}

std::vector<long> make_checkpoints(long n_steps, long stride) {
    std::vector<long> cps;
    cps.push_back(0);
    for (long s = stride; s <= n_steps; s += stride) cps.push_back(s);
    if (cps.back() != n_steps) cps.push_back(n_steps);
    return cps;
}

double mean_tail(const std::vector<double>& v, size_t quarter_from_end) {
    // mean of the quarter-th trailing quarter (1 = last quarter, 2 = previous)
    size_t n = v.size();
    size_t q = std::max<size_t>(1, n / 4);
    size_t end = n - (quarter_from_end - 1) * q;
    size_t begin = end >= q ? end - q : 0;
    double acc = 0;
    for (size_t i = begin; i < end; ++i) acc += v[i];
    return acc / double(end - begin);
}

}  // namespace

SuiteReport suite_w2_convergence(const PotentialSpec& target,
                                 const W2SuiteConfig& cfg) {
    if (cfg.d != 1)
        throw std::invalid_argument("suite_w2_convergence: only d = 1 is supported");
    if (cfg.n_chains < 16 || cfg.n_steps < cfg.stride || cfg.stride < 1)
        throw std::invalid_argument("suite_w2_convergence: bad sizes");
    if (cfg.oracle == W2SuiteConfig::Oracle::Gaussian &&
        target.kind != PotentialKind::Quadratic)
        throw std::invalid_argument(
            "suite_w2_convergence: the Gaussian oracle needs the quadratic target");
    if (cfg.m_override && !target.global_lipschitz)
        throw std::invalid_argument(
            "suite_w2_convergence: M_lambda override needs a global Lipschitz constant");

    WallTimer wt;
    const long N = cfg.n_chains;
    auto resolve = [&](double lambda) {
        double M = cfg.m_override ? *target.global_lipschitz : effective_lipschitz(lambda);
        double gamma = cfg.gamma_auto ? auto_gamma(cfg.scheme, M) : cfg.gamma;
        return SchemeParams::make(lambda, gamma, M, target.m);
    };
    const double lambda = cfg.lambda;
    TamedDrift td_a = TamedDrift::make(target, lambda);
    SchemeParams sp_a = resolve(lambda);
    TamedDrift td_b = TamedDrift::make(target, lambda / 2);
    SchemeParams sp_b = resolve(lambda / 2);
    long n_half = cfg.n_steps_half > 0 ? cfg.n_steps_half : (7 * cfg.n_steps) / 3;

    SuiteReport rep;
    rep.suite = "w2_convergence";
    rep.header.emplace_back("scheme", scheme_name(cfg.scheme));
    rep.header.emplace_back("potential", target.name);
    rep.header.emplace_back(
        "oracle", cfg.oracle == W2SuiteConfig::Oracle::Gaussian ? "gaussian" : "fine_step");
    add_kv(rep, "lambda", lambda);
    add_kv(rep, "gamma", sp_a.gamma);
    add_kv(rep, "gamma_half", sp_b.gamma);
    add_kv(rep, "M_lambda", sp_a.M_lambda);
    add_kv(rep, "r_lambda", td_a.r_lambda());
    add_kv(rep, "R_lambda", td_a.R_lambda());
    add_kv(rep, "n_chains", double(N));
    add_kv(rep, "n_steps", double(cfg.n_steps));
    add_kv(rep, "n_steps_half", double(n_half));
    add_kv(rep, "stride", double(cfg.stride));
    add_kv(rep, "eps", cfg.eps);
    add_kv(rep, "start_x", cfg.start_x);
    add_kv(rep, "seed", double(cfg.seed));
    rep.columns = {"phase", "step", "w2"};

    auto run_to_w2 = [&](const TamedDrift& td, const SchemeParams& sp,
                         long n_steps, long stride, uint64_t seed,
                         const std::vector<double>& sx,
                         const std::vector<double>& sv,
                         std::vector<long>& cps_out) {
        EnsembleSpec es;
        es.scheme = cfg.scheme;
        es.n_steps = n_steps;
        es.checkpoints = make_checkpoints(n_steps, stride);
        es.seed = seed;
        es.domain = domain::kW2Chains;
        cps_out = es.checkpoints;
        return run_ensemble(td, sp, es, sx, sv, 1);
    };

    long n_checks = 0;
    auto fail = [&](const std::string& name, double obs, double bnd,
                    const std::string& rel) {
        add_failure(rep, n_checks, name, obs, bnd, rel);
    };

    std::vector<double> sx = fixed_starts(N, 1, cfg.start_x);
    std::vector<double> sv = fixed_starts(N, 1, 0.0);
    std::vector<long> cps_a, cps_b;
    EnsembleResult run_a =
        run_to_w2(td_a, sp_a, cfg.n_steps, cfg.stride, cfg.seed, sx, sv, cps_a);
    long k_a = long(cps_a.size()) - 1;  // positive-step checkpoints
    long stride_b = std::max<long>(1, n_half / std::max<long>(1, k_a));
    EnsembleResult run_b = run_to_w2(td_b, sp_b, n_half, stride_b,
                                     cfg.seed ^ kSeedHalfRun, sx, sv, cps_b);

    std::vector<double> w2_a, w2_b;
    double sigma_null = 0, plateau_a = 0, plateau_b = 0;

    if (cfg.oracle == W2SuiteConfig::Oracle::Gaussian) {
        double scale = 1.0 / std::sqrt(target.c);
        std::vector<double> oracle = quantile_cloud(N, scale);
        // sampling floor: RMS W2 of freshly drawn stationary clouds vs oracle
        double acc = 0;
        for (int k = 0; k < cfg.calib_clouds; ++k) {
            NoiseStream ns(cfg.seed, stream_id(domain::kW2Calibration, uint64_t(k)));
            std::vector<double> cloud(N);
            for (long i = 0; i < N; ++i) cloud[i] = scale * ns.normal();
            double w = w2_1d(cloud, oracle);
            acc += w * w;
        }
        sigma_null = std::sqrt(acc / cfg.calib_clouds);

        for (size_t k = 0; k < cps_a.size(); ++k) {
            w2_a.push_back(w2_1d(run_a.x_at[k], oracle));
            rep.rows.push_back({0.0, double(cps_a[k]), w2_a.back()});
        }
        for (size_t k = 0; k < cps_b.size(); ++k) {
            w2_b.push_back(w2_1d(run_b.x_at[k], oracle));
            rep.rows.push_back({1.0, double(cps_b[k]), w2_b.back()});
        }

        // stationary start: exact quantile positions, independent velocities
        std::vector<double> stat_v =
            gaussian_starts(N, 1, 0.0, 1.0, cfg.seed ^ kSeedStationary, domain::kStarts);
        std::vector<long> cps_s;
        EnsembleResult run_s =
            run_to_w2(td_a, sp_a, cfg.n_steps_stationary, cfg.stride,
                      cfg.seed ^ kSeedStationary, oracle, stat_v, cps_s);
        for (size_t k = 1; k < cps_s.size(); ++k) {
            double w = w2_1d(run_s.x_at[k], oracle);
            rep.rows.push_back({2.0, double(cps_s[k]), w});
            ++n_checks;
            if (w > 3.0 * sigma_null)
                fail("stationarity", w, 3.0 * sigma_null,
                     "W2 from a stationary start stays within 3 sigma of the "
                     "sampling floor");
        }
    } else {
        // fine-step oracle: a lambda/fine_factor chain continued long past the
        // coarse horizon; its final cloud approximates the invariant law
        double lambda_f = lambda / cfg.fine_factor;
        TamedDrift td_f = TamedDrift::make(target, lambda_f);
        double M_f =
            cfg.m_override ? *target.global_lipschitz : effective_lipschitz(lambda_f);
        SchemeParams sp_f =
            SchemeParams::make(lambda_f, cfg.gamma_auto ? sp_a.gamma : cfg.gamma,
                               M_f, target.m);
        long n_fine = 10 * cfg.n_steps;
        EnsembleSpec ef;
        ef.scheme = cfg.scheme;
        ef.n_steps = n_fine;
        ef.checkpoints = {n_fine};
        ef.seed = cfg.seed ^ kSeedFine1;
        ef.domain = domain::kW2Chains;
        EnsembleResult fine1 = run_ensemble(
            td_f, sp_f, ef, run_b.x_at.back(), run_b.v_at.back(), 1);
        std::vector<double> o1 = fine1.x_at[0];
        ef.seed = cfg.seed ^ kSeedFine2;
        ef.checkpoints = {n_fine / 4, n_fine / 2, (3 * n_fine) / 4, n_fine};
        EnsembleResult fine2 =
            run_ensemble(td_f, sp_f, ef, fine1.x_at[0], fine1.v_at[0], 1);
        std::vector<double> oracle = fine2.x_at[3];

        // null spread between successive stationary snapshots of the fine chain
        double acc = 0;
        const std::vector<double>* prev = &o1;
        for (int k = 0; k < 4; ++k) {
            double w = w2_1d(*prev, fine2.x_at[k]);
            acc += w * w;
            rep.rows.push_back({2.0, double((k + 1) * (n_fine / 4)), w});
            prev = &fine2.x_at[k];
        }
        sigma_null = std::sqrt(2.0) * std::sqrt(acc / 4.0);
        double ref_plateau = w2_1d(o1, oracle);
        rep.rows.push_back({3.0, 0.0, ref_plateau});

        for (size_t k = 0; k < cps_a.size(); ++k) {
            w2_a.push_back(w2_1d(run_a.x_at[k], oracle));
            rep.rows.push_back({0.0, double(cps_a[k]), w2_a.back()});
        }
        for (size_t k = 0; k < cps_b.size(); ++k) {
            w2_b.push_back(w2_1d(run_b.x_at[k], oracle));
            rep.rows.push_back({1.0, double(cps_b[k]), w2_b.back()});
        }
        plateau_a = mean_tail(w2_a, 1);
        ++n_checks;
        if (std::abs(plateau_a - ref_plateau) > 3.0 * sigma_null)
            fail("plateau_matches_reference", plateau_a, ref_plateau,
                 "coarse plateau agrees with the fine-chain floor within 3 "
                 "sigma of the snapshot spread");
        rep.stats.emplace_back("ref_plateau", ref_plateau);
    }

    // (i) monotone decay up to noise
    for (size_t k = 1; k < w2_a.size(); ++k) {
        ++n_checks;
        if (w2_a[k] > w2_a[k - 1] + 3.0 * sigma_null)
            fail("monotone_decay", w2_a[k], w2_a[k - 1] + 3.0 * sigma_null,
                 "W2 decays along the run up to 3 sigma of the sampling floor");
    }
    // (ii) plateau level and flatness
    plateau_a = mean_tail(w2_a, 1);
    plateau_b = mean_tail(w2_b, 1);
    ++n_checks;
    if (plateau_a > cfg.eps)
        fail("plateau_level", plateau_a, cfg.eps, "trailing-quarter mean W2 <= eps");
    double flat = std::abs(mean_tail(w2_a, 1) - mean_tail(w2_a, 2));
    ++n_checks;
    if (flat > 3.0 * sigma_null)
        fail("plateau_flatness", flat, 3.0 * sigma_null,
             "last two quarter means differ by at most 3 sigma");
    // (iii) halving the step lowers the plateau
    ++n_checks;
    if (!(plateau_b < plateau_a))
        fail("half_step_improvement", plateau_b, plateau_a,
             "plateau at lambda/2 is strictly below plateau at lambda");

    rep.cases = n_checks;
    rep.stats.emplace_back("sigma_null", sigma_null);
    rep.stats.emplace_back("plateau", plateau_a);
    rep.stats.emplace_back("plateau_half", plateau_b);
    rep.stats.emplace_back("w2_initial", w2_a.empty() ? 0.0 : w2_a.front());
    std::sort(rep.failures.begin(), rep.failures.end(),
              [](const CaseFailure& a, const CaseFailure& b) { return a.index < b.index; });
    rep.wall_seconds = wt.seconds();
    return rep;
}

// ------------------------------------------------------------ LSI proxies --

SuiteReport suite_lsi_proxies(const TamedDrift& td, const SchemeParams& sp,
                              long n_points, uint64_t seed) {
    if (n_points < 1) throw std::invalid_argument("suite_lsi_proxies: n_points >= 1");
    char msg[160];
    double need = 2.0 * std::sqrt(sp.M_lambda);
    if (sp.gamma < need * (1.0 - 1e-12)) {
        std::snprintf(msg, sizeof msg,
                      "lsi regime violated: gamma=%.6g < 2*sqrt(M_lambda)=%.6g",
                      sp.gamma, need);
        throw RegimeError(msg);
    }
    if (sp.lambda > (1.0 + 1e-12) / (2.0 * sp.gamma)) {
        std::snprintf(msg, sizeof msg,
                      "lsi regime violated: lambda=%.6g > 1/(2*gamma)=%.6g",
                      sp.lambda, 1.0 / (2.0 * sp.gamma));
        throw RegimeError(msg);
    }

    WallTimer wt;
    const int d = td.potential().dim;
    SuiteReport rep;
    rep.suite = "lsi_proxies";
    rep.header.emplace_back("potential", td.potential().name);
    add_kv(rep, "dim", d);
    add_kv(rep, "lambda", sp.lambda);
    add_kv(rep, "gamma", sp.gamma);
    add_kv(rep, "M_lambda", sp.M_lambda);
    add_kv(rep, "a", sp.a);
    add_kv(rep, "b", sp.b);
    rep.columns = {"kind", "index", "observed", "bound", "ratio"};

    double theta_claim = 2.0 * sp.ou_half * (1.0 + 1e-6);
    double theta_row = (1.0 + sp.lambda + sp.lambda * sp.lambda * sp.M_lambda / 2.0) *
                       sp.ou_half;
    double max_fbar = 0, max_theta = 0;
    long case_idx = 0;

    for (long i = 0; i < n_points; ++i) {
        NoiseStream ns(seed, stream_id(domain::kLsiPoints, uint64_t(i)));
        // mean-map contraction at a Gaussian cloud of pair points
        std::vector<double> point(2 * d);
        for (int j = 0; j < 2 * d; ++j) point[j] = std::sqrt(2.0) * ns.normal();
        auto fbar = [&](const std::vector<double>& in) {
            VecPair w;
            w.first.assign(in.begin(), in.begin() + d);
            w.second.assign(in.begin() + d, in.end());
            VecPair out = mean_map_Fbar(w, td, sp);
            std::vector<double> flat(2 * d);
            std::copy(out.first.begin(), out.first.end(), flat.begin());
            std::copy(out.second.begin(), out.second.end(), flat.begin() + d);
            return flat;
        };
        double sig = jacobian_opnorm_fd(fbar, point, fd_default_step(norm2(point)));
        rep.rows.push_back({0.0, double(i), sig, 1.0, sig});
        max_fbar = std::max(max_fbar, sig);
        if (sig >= 1.0)
            add_failure(rep, case_idx, "fbar_contraction", sig, 1.0,
                        "FD Jacobian operator norm of the mean map < 1");
        ++case_idx;

        // noise-to-state Lipschitz constant of one OBABO step, state fixed
        PhaseState z;
        z.x.resize(d);
        z.v.resize(d);
        for (int j = 0; j < d; ++j) z.x[j] = ns.normal();
        for (int j = 0; j < d; ++j) z.v[j] = ns.normal();
        auto theta = [&](const std::vector<double>& gg) {
            std::vector<double> g(gg.begin(), gg.begin() + d);
            std::vector<double> gp(gg.begin() + d, gg.end());
            PhaseState out = obabo_theta(z, td, sp, g, gp);
            std::vector<double> flat(2 * d);
            std::copy(out.x.begin(), out.x.end(), flat.begin());
            std::copy(out.v.begin(), out.v.end(), flat.begin() + d);
            return flat;
        };
        for (int rep_noise = 0; rep_noise < 2; ++rep_noise) {
            std::vector<double> gg(2 * d, 0.0);
            if (rep_noise == 1)
                for (int j = 0; j < 2 * d; ++j) gg[j] = ns.normal();
            double tsig = jacobian_opnorm_fd(theta, gg, fd_default_step(norm2(gg)));
            rep.rows.push_back({1.0, double(i), tsig, theta_claim, tsig / theta_claim});
            max_theta = std::max(max_theta, tsig);
            if (tsig > theta_claim)
                add_failure(rep, case_idx, "theta_lipschitz", tsig, theta_claim,
                            "noise-map Lipschitz constant <= 2 sqrt(1 - eta_half^2)");
            ++case_idx;
        }
    }

    // closed-form accumulated covariance tracks 4 lambda / gamma
    double num = 0, den = 0, ratio_max = 0, ratio_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        double lam = sp.lambda * std::pow(0.1, k);
        double lead = 4.0 * lam / sp.gamma;
        double obs = sym2_opnorm(sigma_bar(lam, sp.gamma));
        double ratio = obs / lead;
        rep.rows.push_back({2.0, double(k), obs, lead, ratio});
        ratio_max = std::max(ratio_max, ratio);
        ratio_min = std::min(ratio_min, ratio);
        if (ratio < 0.9 || ratio > 1.1)
            add_failure(rep, case_idx, "sigma_bar_leading_order", ratio, 1.1,
                        "opnorm(Sigma_bar) / (4 lambda / gamma) within 10%");
        ++case_idx;
        num += (obs - lead) * lam * lam;
        den += lam * lam * lam * lam;
    }

    rep.cases = case_idx;
    rep.stats.emplace_back("fbar_opnorm_max", max_fbar);
    rep.stats.emplace_back("theta_opnorm_max", max_theta);
    rep.stats.emplace_back("theta_claim_bound", theta_claim);
    rep.stats.emplace_back("theta_row_formula", theta_row);
    rep.stats.emplace_back("theta_over_row_formula", max_theta / theta_row);
    rep.stats.emplace_back("sigma_ratio_max", ratio_max);
    rep.stats.emplace_back("sigma_ratio_min", ratio_min);
    rep.stats.emplace_back("sigma_quadratic_coeff", den > 0 ? num / den : 0.0);
    if (max_theta > theta_row)
        rep.notes.push_back(
            "per-row factor (1 + lambda + lambda^2 M_lambda / 2) sqrt(1 - eta_half^2) "
            "= " + fmt6(theta_row) + " is exceeded by the measured constant " +
            fmt6(max_theta) + "; the stated bound 2 sqrt(1 - eta_half^2) = " +
            fmt6(theta_claim) + " holds");
    rep.wall_seconds = wt.seconds();
    return rep;
}

// -------------------------------------------------------------- eta bounds -

SuiteReport suite_eta_bounds(const std::vector<std::pair<double, double>>& grid) {
    if (grid.empty()) throw std::invalid_argument("suite_eta_bounds: empty grid");
    WallTimer wt;
    SuiteReport rep;
    rep.suite = "eta_bounds";
    rep.columns = {"lambda", "gamma", "one_minus_eta", "lower", "upper", "pass"};
    double worst_low = std::numeric_limits<double>::infinity();
    double worst_high = 0, worst_q = 0;
    long idx = 0;
    for (const auto& [lambda, gamma] : grid) {
        if (lambda <= 0 || gamma <= 0)
            throw std::invalid_argument("suite_eta_bounds: lambda, gamma > 0");
        double x = lambda * gamma;
        if (x > 0.5 * (1.0 + 1e-12))
            throw std::invalid_argument(
                "suite_eta_bounds: grid requires lambda*gamma <= 1/2");
        double om = -std::expm1(-x);      // 1 - eta
        double q = x + std::expm1(-x);    // -1 + eta + lambda gamma
        double lower = 0.5 * x, upper = x;
        bool ok = om >= lower * (1.0 - 1e-12) && om <= upper * (1.0 + 1e-12) &&
                  q >= -1e-18 && q <= 0.5 * x * x * (1.0 + 1e-12);
        rep.rows.push_back({lambda, gamma, om, lower, upper, ok ? 1.0 : 0.0});
        if (!ok)
            add_failure(rep, idx, "eta_bounds", om, upper,
                        "lg/2 <= 1-eta <= lg and 0 <= -1+eta+lg <= (lg)^2/2");
        worst_low = std::min(worst_low, om / lower);
        worst_high = std::max(worst_high, om / upper);
        worst_q = std::max(worst_q, q / (0.5 * x * x));
        ++idx;
    }
    rep.cases = idx;
    rep.stats.emplace_back("min_ratio_to_lower", worst_low);
    rep.stats.emplace_back("max_ratio_to_upper", worst_high);
    rep.stats.emplace_back("max_ratio_second_upper", worst_q);
    rep.wall_seconds = wt.seconds();
    return rep;
}

// ------------------------------------------------------------ Verlet order -

SuiteReport suite_verlet_order(const PotentialSpec& p,
                               const std::vector<double>& lambdas,
                               long n_starts, uint64_t seed) {
    if (lambdas.size() < 2)
        throw std::invalid_argument("suite_verlet_order: >= 2 step sizes");
    if (n_starts < 1) throw std::invalid_argument("suite_verlet_order: n_starts >= 1");
    WallTimer wt;
    const int d = p.dim;
    const double T = 1.0;

    // The drifts of the grid only agree on the intersection of their cores,
    // B(0, min r_lambda - 2); the slope fit is meaningful only if every
    // trajectory sees the same field at every step size. Clamped, scaled
    // starts keep the energy surface inside that ball for all draws.
    double r_common = std::numeric_limits<double>::infinity();
    for (double lambda : lambdas)
        r_common = std::min(
            r_common, taming_radius(lambda, p.L, p.m, p.l) - 2.0);
    const double start_scale = r_common / 5.0;

    SuiteReport rep;
    rep.suite = "verlet_order";
    rep.header.emplace_back("potential", p.name);
    add_kv(rep, "dim", d);
    add_kv(rep, "horizon", T);
    add_kv(rep, "n_starts", double(n_starts));
    add_kv(rep, "start_scale", start_scale);
    rep.columns = {"lambda", "n_steps", "rms_velocity_error", "one_step_rms_error"};

    std::vector<double> errs, one_errs;
    for (double lambda : lambdas) {
        double n_real = T / lambda;
        long n = std::lround(n_real);
        if (std::abs(n_real - double(n)) > 1e-9)
            throw std::invalid_argument(
                "suite_verlet_order: every lambda must divide the horizon T = 1");
        TamedDrift td = TamedDrift::make(p, lambda);
        double acc = 0, acc1 = 0;
        for (long i = 0; i < n_starts; ++i) {
            NoiseStream ns(seed, stream_id(domain::kOrderStarts, uint64_t(i)));
            PhaseState z;
            z.x.resize(d);
            z.v.resize(d);
            auto draw = [&] {
                return start_scale * std::clamp(ns.normal(), -3.0, 3.0);
            };
            for (int j = 0; j < d; ++j) z.x[j] = draw();
            for (int j = 0; j < d; ++j) z.v[j] = draw();
            PhaseState zv = z;
            for (long s = 0; s < n; ++s) zv = verlet_map(zv, td, lambda);
            for (double t : zv.v)
                if (!std::isfinite(t))
                    throw NumericalError("suite_verlet_order: non-finite state", n);
            PhaseState zr = hamiltonian_reference_tamed(z, td, T, 4000);
            double dsq = 0;
            for (int j = 0; j < d; ++j) {
                double dv = zv.v[j] - zr.v[j];
                dsq += dv * dv;
            }
            acc += dsq;
            PhaseState z1 = verlet_map(z, td, lambda);
            PhaseState zr1 = hamiltonian_reference_tamed(z, td, lambda, 200);
            dsq = 0;
            for (int j = 0; j < d; ++j) {
                double dv = z1.v[j] - zr1.v[j];
                dsq += dv * dv;
            }
            acc1 += dsq;
        }
        errs.push_back(std::sqrt(acc / double(n_starts)));
        one_errs.push_back(std::sqrt(acc1 / double(n_starts)));
        rep.rows.push_back({lambda, double(n), errs.back(), one_errs.back()});
    }
    double slope = order_fit(lambdas, errs);
    double slope1 = order_fit(lambdas, one_errs);
    rep.cases = long(lambdas.size());
    rep.stats.emplace_back("global_order_slope", slope);
    rep.stats.emplace_back("one_step_order_slope", slope1);
    if (slope < 1.9 || slope > 2.3)
        add_failure(rep, 0, "global_order_slope", slope, 2.0,
                    "log-log slope of the horizon-T velocity error in [1.9, 2.3]");
    rep.wall_seconds = wt.seconds();
    return rep;
}

}  // namespace tkl
