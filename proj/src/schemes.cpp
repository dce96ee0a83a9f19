#include "tkl/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace tkl {

const char* scheme_name(Scheme s) {
    return s == Scheme::Exponential ? "exponential" : "obabo";
}

Psi psi_coefficients(double lambda, double gamma) {
    if (lambda < 0 || gamma <= 0)
        throw std::invalid_argument("psi_coefficients: lambda >= 0, gamma > 0");
    double x = lambda * gamma;
    Psi p;
    p.psi0 = std::exp(-x);
    p.psi1 = -std::expm1(-x) / gamma;
    // x + e^{-x} - 1 is O(x^2) out of O(x) terms; expm1 keeps it accurate
    p.psi2 = (x + std::expm1(-x)) / (gamma * gamma);
    return p;
}

Cov2 noise_covariance(double lambda, double gamma) {
    if (lambda < 0 || gamma <= 0)
        throw std::invalid_argument("noise_covariance: lambda >= 0, gamma > 0");
    double x = lambda * gamma;
    double em1 = -std::expm1(-x);   // 1 - e^{-x}
    double em2 = -std::expm1(-2 * x);
    Cov2 c;
    c.c11 = em2 / (2.0 * gamma);
    c.c12 = em1 * em1 / (2.0 * gamma * gamma);
    double g3 = gamma * gamma * gamma;
    if (x < 0.01) {
        // lambda - 2(1-e^{-x})/gamma + (1-e^{-2x})/(2 gamma) loses all digits
        // below x ~ 1e-3; its Taylor series in x = lambda*gamma:
        double x2 = x * x;
        c.c22 = x2 * x *
                (1.0 / 3.0 +
                 x * (-0.25 + x * (7.0 / 60.0 + x * (-1.0 / 24.0 + x * (31.0 / 2520.0))))) /
                g3;
    } else {
        c.c22 = (x - 2.0 * em1 + 0.5 * em2) / g3;
    }
    return c;
}

SchemeParams SchemeParams::make(double lambda, double gamma, double M_lambda,
                                double m, bool m_lambda_overridden) {
    if (lambda <= 0 || gamma <= 0 || M_lambda <= 0 || m <= 0)
        throw std::invalid_argument("SchemeParams: all of lambda, gamma, M_lambda, m must be > 0");
    SchemeParams sp;
    sp.lambda = lambda;
    sp.gamma = gamma;
    sp.m = m;
    sp.M_lambda = M_lambda;
    sp.m_lambda_overridden = m_lambda_overridden;
    sp.eta = std::exp(-lambda * gamma);
    sp.eta_half = std::exp(-0.5 * lambda * gamma);
    Psi p = psi_coefficients(lambda, gamma);
    sp.psi0 = p.psi0;
    sp.psi1 = p.psi1;
    sp.psi2 = p.psi2;
    Cov2 c = noise_covariance(lambda, gamma);
    sp.c11 = c.c11;
    sp.c12 = c.c12;
    sp.c22 = c.c22;
    // lower-triangular factor; C is a Gram matrix, so the conditional
    // variance is positive up to rounding
    sp.chol11 = std::sqrt(c.c11);
    sp.chol21 = sp.chol11 > 0 ? c.c12 / sp.chol11 : 0.0;
    double cond = c.c22 - sp.chol21 * sp.chol21;
    if (cond < -1e-18 * c.c22)
        throw std::logic_error("noise covariance not PSD: coefficient bug");
    sp.chol22 = std::sqrt(std::max(cond, 0.0));
    sp.sqrt_2gamma = std::sqrt(2.0 * gamma);
    double om = -std::expm1(-lambda * gamma);  // 1 - eta
    sp.ou_half = std::sqrt(om > 0 ? 1.0 - sp.eta_half * sp.eta_half : 0.0);
    sp.a = 1.0 / M_lambda;
    sp.b = 1.0 / gamma;
    sp.f_lambda = m * lambda / (4.0 * gamma);
    sp.kappa = m / (3.0 * gamma);
    return sp;
}

void require_exponential_regime(const SchemeParams& sp) {
    double need = 5.0 * std::sqrt(sp.M_lambda);
    char msg[180];
    if (sp.gamma < need * (1.0 - 1e-12)) {
        std::snprintf(msg, sizeof msg,
                      "exponential regime violated: gamma=%.6g < 5*sqrt(M_lambda)=%.6g",
                      sp.gamma, need);
        throw RegimeError(msg);
    }
    if (sp.lambda > (1.0 + 1e-12) / (2.0 * sp.gamma)) {
        std::snprintf(msg, sizeof msg,
                      "exponential regime violated: lambda=%.6g > 1/(2*gamma)=%.6g",
                      sp.lambda, 1.0 / (2.0 * sp.gamma));
        throw RegimeError(msg);
    }
}

void require_obabo_regime(const SchemeParams& sp) {
    double need = 2.0 * std::sqrt(sp.M_lambda);
    char msg[180];
    if (sp.gamma < need * (1.0 - 1e-12)) {
        std::snprintf(msg, sizeof msg,
                      "obabo regime violated: gamma=%.6g < 2*sqrt(M_lambda)=%.6g",
                      sp.gamma, need);
        throw RegimeError(msg);
    }
    double cap = sp.m / (33.0 * sp.gamma * sp.gamma * sp.gamma);
    if (sp.lambda > cap * (1.0 + 1e-12)) {
        std::snprintf(msg, sizeof msg,
                      "obabo regime violated: lambda=%.6g > m/(33*gamma^3)=%.6g",
                      sp.lambda, cap);
        throw RegimeError(msg);
    }
}

double auto_gamma(Scheme s, double M_lambda) {
    double root = std::sqrt(M_lambda);
    return s == Scheme::Exponential ? 5.0 * root : 2.0 * root;
}

void sample_noise_pair(NoiseStream& ns, const SchemeParams& sp, int dim,
                       double* xi, double* xi_prime) {
    for (int j = 0; j < dim; ++j) {
        auto [z1, z2] = ns.normal_pair();
        xi[j] = sp.chol11 * z1;
        xi_prime[j] = sp.chol21 * z1 + sp.chol22 * z2;
    }
}

namespace {

void check_finite(const PhaseState& z, long step, const char* where) {
    for (double t : z.x)
        if (!std::isfinite(t)) throw NumericalError(std::string(where) + ": non-finite position", step);
    for (double t : z.v)
        if (!std::isfinite(t)) throw NumericalError(std::string(where) + ": non-finite velocity", step);
}

}  // namespace

PhaseState exp_step(const PhaseState& z, const TamedDrift& td,
                    const SchemeParams& sp, const std::vector<double>& xi,
                    const std::vector<double>& xi_prime) {
    PhaseState out = z;
    std::vector<double> hbuf(z.x.size());
    kernel::exp_step(out.x.data(), out.v.data(), z.dim(), td, sp, xi.data(),
                     xi_prime.data(), hbuf.data());
    check_finite(out, 0, "exp_step");
    return out;
}

PhaseState obabo_step(const PhaseState& z, const TamedDrift& td,
                      const SchemeParams& sp, const std::vector<double>& g,
                      const std::vector<double>& g_prime) {
    PhaseState out = z;
    std::vector<double> hbuf(z.x.size());
    kernel::obabo_step(out.x.data(), out.v.data(), z.dim(), td, sp, g.data(),
                       g_prime.data(), hbuf.data());
    check_finite(out, 0, "obabo_step");
    return out;
}

PhaseState obabo_closed_form(const PhaseState& z, const TamedDrift& td,
                             const SchemeParams& sp,
                             const std::vector<double>& g,
                             const std::vector<double>& g_prime) {
    int d = z.dim();
    PhaseState out;
    out.x.resize(d);
    out.v.resize(d);
    std::vector<double> h0(d), h1(d);
    td.eval(z.x, h0);
    double eh = sp.eta_half, se = sp.ou_half, lam = sp.lambda;
    for (int j = 0; j < d; ++j)
        out.x[j] = z.x[j] + lam * (eh * z.v[j] + se * g[j]) - 0.5 * lam * lam * h0[j];
    td.eval(out.x, h1);
    for (int j = 0; j < d; ++j)
        out.v[j] = eh * eh * z.v[j] - 0.5 * lam * eh * (h0[j] + h1[j]) +
                   se * (eh * g[j] + g_prime[j]);
    return out;
}

PhaseState verlet_map(const PhaseState& z, const TamedDrift& td, double lambda) {
    if (lambda <= 0) throw std::invalid_argument("verlet_map: lambda > 0");
    int d = z.dim();
    PhaseState out;
    out.x.resize(d);
    out.v.resize(d);
    std::vector<double> h0(d), h1(d);
    td.eval(z.x, h0);
    for (int j = 0; j < d; ++j)
        out.x[j] = z.x[j] + lambda * z.v[j] - 0.5 * lambda * lambda * h0[j];
    td.eval(out.x, h1);
    for (int j = 0; j < d; ++j)
        out.v[j] = z.v[j] - 0.5 * lambda * (h0[j] + h1[j]);
    return out;
}

double hamiltonian_energy(const PhaseState& z, const PotentialSpec& p) {
    double k = 0;
    for (double vj : z.v) k += vj * vj;
    return 0.5 * k + p.u(z.x);
}

namespace {

// RK4 on x' = v, v' = -drift(x)
template <typename Drift>
PhaseState rk4_flow(const PhaseState& z0, Drift&& drift, double t, int substeps) {
    if (substeps < 1) throw std::invalid_argument("reference flow: substeps >= 1");
    int d = z0.dim();
    double h = t / substeps;
    PhaseState z = z0;
    std::vector<double> k1x(d), k1v(d), k2x(d), k2v(d), k3x(d), k3v(d), k4x(d),
        k4v(d), tmp(d);
    for (int s = 0; s < substeps; ++s) {
        drift(z.x.data(), k1v.data());
        for (int j = 0; j < d; ++j) k1x[j] = z.v[j];
        for (int j = 0; j < d; ++j) tmp[j] = z.x[j] + 0.5 * h * k1x[j];
        drift(tmp.data(), k2v.data());
        for (int j = 0; j < d; ++j) k2x[j] = z.v[j] - 0.5 * h * k1v[j];
        for (int j = 0; j < d; ++j) tmp[j] = z.x[j] + 0.5 * h * k2x[j];
        drift(tmp.data(), k3v.data());
        for (int j = 0; j < d; ++j) k3x[j] = z.v[j] - 0.5 * h * k2v[j];
        for (int j = 0; j < d; ++j) tmp[j] = z.x[j] + h * k3x[j];
        drift(tmp.data(), k4v.data());
        for (int j = 0; j < d; ++j) k4x[j] = z.v[j] - h * k3v[j];
        for (int j = 0; j < d; ++j) {
            z.x[j] += h / 6.0 * (k1x[j] + 2 * k2x[j] + 2 * k3x[j] + k4x[j]);
            z.v[j] -= h / 6.0 * (k1v[j] + 2 * k2v[j] + 2 * k3v[j] + k4v[j]);
        }
    }
    return z;
}

}  // namespace

PhaseState hamiltonian_reference(const PhaseState& z, const PotentialSpec& p,
                                 double t, int substeps) {
    int d = z.dim();
    return rk4_flow(
        z,
        [&p, d](const double* x, double* out) {
            p.h({x, size_t(d)}, {out, size_t(d)});
        },
        t, substeps);
}

PhaseState hamiltonian_reference_tamed(const PhaseState& z,
                                       const TamedDrift& td, double t,
                                       int substeps) {
    int d = z.dim();
    return rk4_flow(
        z,
        [&td, d](const double* x, double* out) {
            td.eval({x, size_t(d)}, {out, size_t(d)});
        },
        t, substeps);
}

VecPair coord_map_M(const PhaseState& z, double gamma) {
    if (gamma <= 0) throw std::invalid_argument("coord_map_M: gamma > 0");
    int d = z.dim();
    VecPair w;
    w.first = z.x;
    w.second.resize(d);
    for (int j = 0; j < d; ++j) w.second[j] = z.x[j] + 2.0 * z.v[j] / gamma;
    return w;
}

PhaseState coord_map_M_inverse(const VecPair& w, double gamma) {
    if (gamma <= 0) throw std::invalid_argument("coord_map_M_inverse: gamma > 0");
    int d = int(w.first.size());
    PhaseState z;
    z.x = w.first;
    z.v.resize(d);
    for (int j = 0; j < d; ++j) z.v[j] = 0.5 * gamma * (w.second[j] - w.first[j]);
    return z;
}

VecPair coord_map_S(const PhaseState& z, double a, double b) {
    if (a <= b * b) throw std::invalid_argument("coord_map_S: need a > b^2");
    int d = z.dim();
    double root = std::sqrt(a - b * b);
    VecPair w;
    w.first.resize(d);
    w.second.resize(d);
    for (int j = 0; j < d; ++j) {
        w.first[j] = z.x[j] + b * z.v[j];
        w.second[j] = root * z.v[j];
    }
    return w;
}

PhaseState coord_map_S_inverse(const VecPair& w, double a, double b) {
    if (a <= b * b) throw std::invalid_argument("coord_map_S_inverse: need a > b^2");
    int d = int(w.first.size());
    double root = std::sqrt(a - b * b);
    PhaseState z;
    z.x.resize(d);
    z.v.resize(d);
    for (int j = 0; j < d; ++j) {
        z.v[j] = w.second[j] / root;
        z.x[j] = w.first[j] - b * z.v[j];
    }
    return z;
}

VecPair mean_map_Fbar(const VecPair& phi_psi, const TamedDrift& td,
                      const SchemeParams& sp) {
    int d = int(phi_psi.first.size());
    std::vector<double> hphi(d);
    td.eval(phi_psi.first, hphi);
    double om = 1.0 - sp.eta;
    double c_minus = (sp.lambda - om / sp.gamma) / sp.gamma;
    double c_plus = (sp.lambda + om / sp.gamma) / sp.gamma;
    VecPair out;
    out.first.resize(d);
    out.second.resize(d);
    for (int j = 0; j < d; ++j) {
        double phi = phi_psi.first[j], psi = phi_psi.second[j];
        out.first[j] = phi + 0.5 * om * (psi - phi) - c_minus * hphi[j];
        out.second[j] = phi + 0.5 * (1.0 + sp.eta) * (psi - phi) - c_plus * hphi[j];
    }
    return out;
}

PhaseState obabo_theta(const PhaseState& z, const TamedDrift& td,
                       const SchemeParams& sp, const std::vector<double>& g,
                       const std::vector<double>& g_prime) {
    return obabo_step(z, td, sp, g, g_prime);
}

Sym2 sigma_bar(double lambda, double gamma) {
    if (lambda <= 0 || gamma <= 0)
        throw std::invalid_argument("sigma_bar: lambda, gamma > 0");
    double g2 = gamma * gamma;
    double e1 = std::exp(-gamma * lambda);
    double e2 = std::exp(-2.0 * gamma * lambda);
    Sym2 s;
    s.s11 = 2.0 * lambda / gamma - 3.0 / g2 + 4.0 * e1 / g2 - e2 / g2;
    s.s12 = 2.0 * lambda / gamma - 1.0 / g2 + e2 / g2;
    s.s22 = 2.0 * lambda / gamma + 5.0 / g2 - 8.0 * e1 / g2 + 3.0 * e2 / g2;
    return s;
}

double sym2_opnorm(const Sym2& s) {
    double tr = s.s11 + s.s22;
    double disc = std::sqrt((s.s11 - s.s22) * (s.s11 - s.s22) + 4.0 * s.s12 * s.s12);
    return std::max(std::abs(0.5 * (tr + disc)), std::abs(0.5 * (tr - disc)));
}

RunRecord run_chain(const PhaseState& z0, const TamedDrift& td,
                    const SchemeParams& sp, Scheme scheme, long n_steps,
                    NoiseStream& ns, long thin) {
    if (n_steps < 1 || thin < 1)
        throw std::invalid_argument("run_chain: n_steps >= 1, thin >= 1");
    int d = z0.dim();
    RunRecord rec;
    rec.d = d;
    PhaseState z = z0;
    std::vector<double> hbuf(d), n1(d), n2(d);
    auto record = [&](long step) {
        rec.steps.push_back(step);
        rec.x.insert(rec.x.end(), z.x.begin(), z.x.end());
        rec.v.insert(rec.v.end(), z.v.begin(), z.v.end());
    };
    record(0);
    for (long s = 0; s < n_steps; ++s) {
        if (scheme == Scheme::Exponential) {
            sample_noise_pair(ns, sp, d, n1.data(), n2.data());
            kernel::exp_step(z.x.data(), z.v.data(), d, td, sp, n1.data(),
                             n2.data(), hbuf.data());
        } else {
            for (int j = 0; j < d; ++j) {
                auto [a, bb] = ns.normal_pair();
                n1[j] = a;
                n2[j] = bb;
            }
            kernel::obabo_step(z.x.data(), z.v.data(), d, td, sp, n1.data(),
                               n2.data(), hbuf.data());
        }
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(z.x[j]) || !std::isfinite(z.v[j]))
                throw NumericalError("run_chain: non-finite state", s + 1);
        if ((s + 1) % thin == 0 || s + 1 == n_steps) record(s + 1);
    }
    rec.final_state = z;
    return rec;
}

CoupledRecord run_coupled(const PhaseState& z0, const PhaseState& z0_tilde,
                          const TamedDrift& td, const SchemeParams& sp,
                          Scheme scheme, long n_steps, NoiseStream& ns,
                          bool record_all) {
    if (z0.dim() != z0_tilde.dim())
        throw std::invalid_argument("run_coupled: dimension mismatch");
    int d = z0.dim();
    CoupledRecord rec;
    rec.n_steps = n_steps;
    rec.max_ratio = -std::numeric_limits<double>::infinity();
    rec.min_ratio = std::numeric_limits<double>::infinity();
    PhaseState za = z0, zb = z0_tilde;
    std::vector<double> hbuf(d), n1(d), n2(d), dx(d), dv(d);
    auto diff_sq = [&]() {
        for (int j = 0; j < d; ++j) {
            dx[j] = za.x[j] - zb.x[j];
            dv[j] = za.v[j] - zb.v[j];
        }
        return weighted_sq(dx.data(), dv.data(), d, sp.a, sp.b);
    };
    double prev = diff_sq();
    rec.initial_sq = prev;
    double sum_log = 0;
    for (long s = 0; s < n_steps; ++s) {
        if (scheme == Scheme::Exponential) {
            sample_noise_pair(ns, sp, d, n1.data(), n2.data());
            kernel::exp_step(za.x.data(), za.v.data(), d, td, sp, n1.data(),
                             n2.data(), hbuf.data());
            kernel::exp_step(zb.x.data(), zb.v.data(), d, td, sp, n1.data(),
                             n2.data(), hbuf.data());
        } else {
            for (int j = 0; j < d; ++j) {
                auto [a, bb] = ns.normal_pair();
                n1[j] = a;
                n2[j] = bb;
            }
            kernel::obabo_step(za.x.data(), za.v.data(), d, td, sp, n1.data(),
                               n2.data(), hbuf.data());
            kernel::obabo_step(zb.x.data(), zb.v.data(), d, td, sp, n1.data(),
                               n2.data(), hbuf.data());
        }
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(za.x[j]) || !std::isfinite(za.v[j]) ||
                !std::isfinite(zb.x[j]) || !std::isfinite(zb.v[j]))
                throw NumericalError("run_coupled: non-finite state", s + 1);
        double cur = diff_sq();
        if (prev > 1e-300) {
            double ratio = cur / prev;
            if (ratio > rec.max_ratio) {
                rec.max_ratio = ratio;
                rec.worst_step = s + 1;
            }
            rec.min_ratio = std::min(rec.min_ratio, ratio);
            sum_log += std::log(ratio);
            ++rec.n_ratios;
            if (record_all) rec.ratios.push_back(ratio);
        } else {
            ++rec.n_below_floor;  // chains numerically merged
        }
        prev = cur;
    }
    rec.final_sq = prev;
    rec.mean_log_ratio = rec.n_ratios > 0 ? sum_log / rec.n_ratios : 0.0;
    return rec;
}

}  // namespace tkl
