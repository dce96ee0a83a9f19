#pragma once
// Discretizations of the kinetic Langevin SDE
//   dV_t = -gamma V_t dt - h(theta_t) dt + sqrt(2 gamma) dB_t,
//   dtheta_t = V_t dt,
// run with the tamed drift h_l in place of h:
//  - stochastic exponential scheme: the velocity's Ornstein-Uhlenbeck part is
//    integrated exactly; the residual Gaussian pair (Xi, Xi') per coordinate
//    has the closed-form covariance C below;
//  - OBABO: palindromic O-B-A-B-O splitting (half Ornstein-Uhlenbeck, half
//    kick, full drift, half kick, half Ornstein-Uhlenbeck) whose
//    deterministic core BAB is the Verlet map.
// Also: a Hamiltonian reference flow, the coordinate maps and mean map used
// by the log-Sobolev arguments, and (coupled) chain drivers.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tkl/rng.hpp"
#include "tkl/taming.hpp"

namespace tkl {

struct PhaseState {
    std::vector<double> x, v;
    int dim() const { return int(x.size()); }
};

struct NumericalError : std::runtime_error {
    NumericalError(const std::string& what, long at_step)
        : std::runtime_error(what), step(at_step) {}
    long step;
};

enum class Scheme { Exponential, Obabo };
const char* scheme_name(Scheme s);

struct Psi {
    double psi0, psi1, psi2;
};
// psi0 = e^{-gamma lambda}, psi1 = (1-e^{-gamma lambda})/gamma,
// psi2 = (lambda gamma + e^{-gamma lambda} - 1)/gamma^2 (via expm1: the
// numerator is a second-order difference and cancels catastrophically
// otherwise).
Psi psi_coefficients(double lambda, double gamma);

struct Cov2 {
    double c11, c12, c22;
};
// C = int_0^lambda [psi0(t), psi1(t)]^T [psi0(t), psi1(t)] dt, closed forms:
//   C11 = (1-e^{-2gl})/(2g)
//   C12 = (1-e^{-gl})^2/(2g^2)       (equivalent to the textbook difference
//                                     form, but free of cancellation)
//   C22 = (l - 2(1-e^{-gl})/g + (1-e^{-2gl})/(2g))/g^2, series for small gl.
Cov2 noise_covariance(double lambda, double gamma);

struct SchemeParams {
    double lambda = 0, gamma = 0;
    double m = 0, M_lambda = 1;
    bool m_lambda_overridden = false;
    double eta = 1, eta_half = 1;  // e^{-gl}, e^{-gl/2}
    double psi0 = 1, psi1 = 0, psi2 = 0;
    double c11 = 0, c12 = 0, c22 = 0;
    double chol11 = 0, chol21 = 0, chol22 = 0;  // lower factor of C
    double sqrt_2gamma = 0;
    double ou_half = 0;      // sqrt(1 - eta_half^2), OBABO O-substep noise scale
    double a = 1, b = 0;     // weighted norm: 1/M_lambda, 1/gamma
    double f_lambda = 0;     // m lambda / (4 gamma)
    double kappa = 0;        // m / (3 gamma)

    static SchemeParams make(double lambda, double gamma, double M_lambda,
                             double m, bool m_lambda_overridden = false);
};

// Friction regimes of the contraction statements; violations are reported
// with the failed inequality spelled out.
void require_exponential_regime(const SchemeParams& sp);  // g >= 5 sqrt(M), l <= 1/(2g)
void require_obabo_regime(const SchemeParams& sp);        // g >= 2 sqrt(M), l <= m/(33 g^3)
double auto_gamma(Scheme s, double M_lambda);             // the regime minimum

// Per coordinate j: (Xi_j, Xi'_j) centered Gaussian with covariance C,
// via the lower-triangular factor; coordinates independent.
void sample_noise_pair(NoiseStream& ns, const SchemeParams& sp, int dim,
                       double* xi, double* xi_prime);

// One-step kernels, in place, noise supplied by the caller (so coupled chains
// can share draws). hbuf is scratch of size dim.
namespace kernel {

inline void exp_step(double* x, double* v, int d, const TamedDrift& td,
                     const SchemeParams& sp, const double* xi,
                     const double* xi_prime, double* hbuf) {
    td.eval({x, size_t(d)}, {hbuf, size_t(d)});
    for (int j = 0; j < d; ++j) {
        double vn = sp.psi0 * v[j] - sp.psi1 * hbuf[j] + sp.sqrt_2gamma * xi[j];
        x[j] += sp.psi1 * v[j] - sp.psi2 * hbuf[j] + sp.sqrt_2gamma * xi_prime[j];
        v[j] = vn;
    }
}

inline void obabo_step(double* x, double* v, int d, const TamedDrift& td,
                       const SchemeParams& sp, const double* g,
                       const double* g_prime, double* hbuf) {
    double half = 0.5 * sp.lambda;
    td.eval({x, size_t(d)}, {hbuf, size_t(d)});
    for (int j = 0; j < d; ++j) {
        double vh = sp.eta_half * v[j] + sp.ou_half * g[j];  // O
        vh -= half * hbuf[j];                                // B
        x[j] += sp.lambda * vh;                              // A
        v[j] = vh;
    }
    td.eval({x, size_t(d)}, {hbuf, size_t(d)});
    for (int j = 0; j < d; ++j) {
        double vh = v[j] - half * hbuf[j];                   // B
        v[j] = sp.eta_half * vh + sp.ou_half * g_prime[j];   // O
    }
}

}  // namespace kernel

// PhaseState wrappers around the kernels. Noise vectors have length dim.
PhaseState exp_step(const PhaseState& z, const TamedDrift& td,
                    const SchemeParams& sp, const std::vector<double>& xi,
                    const std::vector<double>& xi_prime);
PhaseState obabo_step(const PhaseState& z, const TamedDrift& td,
                      const SchemeParams& sp, const std::vector<double>& g,
                      const std::vector<double>& g_prime);
// Single-formula evaluation of the same OBABO step (no substep composition);
// the two must agree to near machine precision.
PhaseState obabo_closed_form(const PhaseState& z, const TamedDrift& td,
                             const SchemeParams& sp,
                             const std::vector<double>& g,
                             const std::vector<double>& g_prime);

PhaseState verlet_map(const PhaseState& z, const TamedDrift& td, double lambda);

// H(x,v) = |v|^2/2 + u(x)
double hamiltonian_energy(const PhaseState& z, const PotentialSpec& p);

// Classical RK4 on (x' = v, v' = -h(x)); the order/flow oracle.
PhaseState hamiltonian_reference(const PhaseState& z, const PotentialSpec& p,
                                 double t, int substeps);
// Same flow but driven by the tamed drift, so Verlet-vs-flow comparisons use
// one and the same vector field.
PhaseState hamiltonian_reference_tamed(const PhaseState& z,
                                       const TamedDrift& td, double t,
                                       int substeps);

struct VecPair {
    std::vector<double> first, second;
};

VecPair coord_map_M(const PhaseState& z, double gamma);  // (x, x + 2v/g)
PhaseState coord_map_M_inverse(const VecPair& w, double gamma);
VecPair coord_map_S(const PhaseState& z, double a, double b);  // (x+bv, sqrt(a-b^2) v)
PhaseState coord_map_S_inverse(const VecPair& w, double a, double b);

// Conditional-mean map of the OBABO pair chain in (phi, psi) coordinates:
//   F1 = phi + (1-eta)/2 (psi-phi) - c_minus h_l(phi)
//   F2 = phi + (1+eta)/2 (psi-phi) - c_plus  h_l(phi)
// with c_-/+ = (lambda -/+ (1-eta)/gamma)/gamma.
VecPair mean_map_Fbar(const VecPair& phi_psi, const TamedDrift& td,
                      const SchemeParams& sp);

// OBABO one step as a function of the noise only, state held fixed; the
// log-Sobolev argument needs its Lipschitz constant in (G, G').
PhaseState obabo_theta(const PhaseState& z, const TamedDrift& td,
                       const SchemeParams& sp, const std::vector<double>& g,
                       const std::vector<double>& g_prime);

struct Sym2 {
    double s11, s12, s22;
};
// Accumulated noise covariance of the exponential scheme in M-coordinates
// (closed forms from the log-Sobolev proof).
Sym2 sigma_bar(double lambda, double gamma);
double sym2_opnorm(const Sym2& s);

// |z|^2_{a,b} = |x|^2 + 2b<x,v> + a|v|^2 on raw arrays (metrics module wraps
// the PhaseState version).
inline double weighted_sq(const double* x, const double* v, int d, double a,
                          double b) {
    double xx = 0, xv = 0, vv = 0;
    for (int j = 0; j < d; ++j) {
        xx += x[j] * x[j];
        xv += x[j] * v[j];
        vv += v[j] * v[j];
    }
    return xx + 2.0 * b * xv + a * vv;
}

struct RunRecord {
    int d = 0;
    std::vector<long> steps;    // recorded step indices (0, thin, ..., n)
    std::vector<double> x, v;   // row k = state at steps[k], flattened
    PhaseState final_state;
};
RunRecord run_chain(const PhaseState& z0, const TamedDrift& td,
                    const SchemeParams& sp, Scheme scheme, long n_steps,
                    NoiseStream& ns, long thin);

struct CoupledRecord {
    long n_steps = 0;
    double initial_sq = 0, final_sq = 0;
    double max_ratio = 0, min_ratio = 0;  // over recorded per-step ratios
    long worst_step = -1;
    double mean_log_ratio = 0;
    long n_ratios = 0;
    long n_below_floor = 0;  // steps skipped: denominator <= 1e-300 (merged)
    std::vector<double> ratios;  // filled only when record_all
};
// Synchronous coupling: both chains consume identical draws; records the
// per-step weighted-norm-squared ratio of the difference process.
CoupledRecord run_coupled(const PhaseState& z0, const PhaseState& z0_tilde,
                          const TamedDrift& td, const SchemeParams& sp,
                          Scheme scheme, long n_steps, NoiseStream& ns,
                          bool record_all = false);

}  // namespace tkl
