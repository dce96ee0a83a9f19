#pragma once
// Target potentials u with gradient h = grad u, together with the constants
// the samplers and verification suites rely on:
//   strong monotonicity   <h(x)-h(y), x-y> >= 2m |x-y|^2,
//   local Lipschitz bound |h(x)-h(y)| <= L (1+|x|+|y|)^l |x-y|.
// The double_well gradient grows cubically, which is exactly the superlinear
// case the taming construction exists for.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

namespace tkl {

enum class PotentialKind { Quadratic, DoubleWell, Custom };

struct PotentialSpec {
    PotentialKind kind = PotentialKind::Custom;
    std::string name = "custom";
    int dim = 1;
    double c = 1.0;  // builtin strength parameter
    double m = 0.0;
    double L = 1.0;
    double l = 0.0;
    std::optional<double> global_lipschitz;
    std::function<double(std::span<const double>)> u_fn;
    std::function<void(std::span<const double>, std::span<double>)> h_fn;

    double u(std::span<const double> x) const;
    void h(std::span<const double> x, std::span<double> out) const;
    double h_origin_norm() const;
};

// quadratic(c):  u = c|x|^2/2            h = c x        m=c/2, L=c,   l=0
// double_well(c): u = |x|^4/4 + c|x|^2/2  h = (|x|^2+c)x m=c/2, L=1+c, l=2
PotentialSpec quadratic_potential(double c, int dim);
PotentialSpec double_well_potential(double c, int dim);
PotentialSpec builtin_potential(const std::string& name, double c, int dim);

struct AssumptionsReport {
    long n_pairs = 0;
    long a1_violations = 0;
    long a2_violations = 0;
    double worst_a1_margin = 0.0;    // min over pairs of <dh,dx> - 2m|dx|^2
    double grad_mismatch_max = 0.0;  // max |fd grad u - h| / (1 + |h|)
    double lipschitz_on_ball = 0.0;  // L (1+2r)^l for the audited ball
    bool gradient_flagged() const { return grad_mismatch_max > 0.1; }
    bool pass() const {
        return a1_violations == 0 && a2_violations == 0 && !gradient_flagged();
    }
};

// Monte Carlo audit of the declared constants: random pairs in B(0, radius)
// against the A1/A2 inequalities with tolerance 1e-9*(1+|x|+|y|), plus a
// central finite-difference check that h really is the gradient of u.
AssumptionsReport check_assumptions(const PotentialSpec& p, double radius,
                                    long n_pairs, uint64_t seed);

}  // namespace tkl
