#pragma once
// Weighted norms, empirical Wasserstein-2 estimators, finite-difference
// Jacobian operator norms, log-log order fitting, and the invariant-measure
// second-moment check.

#include <cstdint>
#include <functional>
#include <vector>

#include "tkl/potential.hpp"
#include "tkl/schemes.hpp"

namespace tkl {

struct WeightedNormParams {
    double a, b;  // valid equivalence display needs b^2 < a/4
};

double weighted_norm_sq(const PhaseState& z, const WeightedNormParams& w);

// Exact 1-d W2: sorted matching is the optimal coupling. Equal sizes only.
double w2_1d(const std::vector<double>& s1, const std::vector<double>& s2);

// Exact empirical W2 in any dimension via optimal assignment on squared
// distances (Jonker-Volkenant shortest augmenting path); n <= 256.
double w2_exact_smalln(const std::vector<std::vector<double>>& s1,
                       const std::vector<std::vector<double>>& s2);

// Closed-form W2 between isotropic Gaussians N(m1, s1^2 I), N(m2, s2^2 I):
// sqrt(|m1-m2|^2 + d (s1-s2)^2).
double gaussian_w2(const std::vector<double>& m1, double s1,
                   const std::vector<double>& m2, double s2);

// Largest singular value of the central finite-difference Jacobian at
// `point`, step h, via power iteration on J^T J (50 iterations, tol 1e-10,
// fixed deterministic start). Throws on non-finite map output.
double jacobian_opnorm_fd(
    const std::function<std::vector<double>(const std::vector<double>&)>& map,
    const std::vector<double>& point, double h);

inline double fd_default_step(double point_norm) {
    return 1e-5 * (1.0 + point_norm);
}

// Least-squares slope of log(error) against log(lambda).
double order_fit(const std::vector<double>& lambdas,
                 const std::vector<double>& errors);

struct MomentBoundReport {
    double empirical = 0;  // mean |Y|^2 over the cloud
    double std_error = 0;
    double bound = 0;      // (2/m)(u(0) + d)
    bool violated = false; // empirical > bound + 3 SE
};
// Invariant-measure second-moment bound E|Y|^2 <= (2/m)(u(0)+d); samples are
// positions from a stationary-phase run, treated as decorrelated.
MomentBoundReport moment_bound_check(const std::vector<std::vector<double>>& samples,
                                     const PotentialSpec& p);

}  // namespace tkl
