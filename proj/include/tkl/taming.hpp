#pragma once
// Step-size-dependent drift taming. Split h(x) = g(x) + m x and replace
//   h_l(x) = t(x) g(x) + R_l s(x) x + m x
// with radial weights (rho = |x|, r = r_lambda):
//   t: 1 on [0, r-1], r-rho on (r-1, r), 0 from r on
//   s: 0 on [0, r-2], rho-(r-2) on (r-2, r-1), 1 on [r-1, r], r/rho beyond r.
// Inside B(0, r-2) the drift is the untouched gradient; outside B(0, r) it is
// the capped radial field R_l r x/|x| + m x. The radius grows as the step
// size shrinks, r_l = (L+m) lambda^{-1/(2(l+2))}, so taming vanishes in the
// limit while every fixed step size sees a globally Lipschitz, strongly
// monotone drift.

#include <cstdint>
#include <span>
#include <stdexcept>

#include "tkl/potential.hpp"

namespace tkl {

struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double weight_t(double norm_x, double r_lambda);
double weight_s(double norm_x, double r_lambda);

// (L+m) lambda^{-1/(2(l+2))}; throws RegimeError below the floor r >= 3,
// where the untouched ball B(0, r-2) would degenerate.
double taming_radius(double lambda, double L, double m, double l);

// Closed-form cap (L+|h(0)|) r^(l+1) >= sup_{B(0,r)} |g|, kept closed-form
// rather than a numerical supremum so runs are deterministic.
double taming_cap(const PotentialSpec& p, double r_lambda);

// Default Lipschitz parameter M_lambda = lambda^{-1/2}; feeds the weighted
// norm (a = 1/M_lambda) and the friction regimes.
double effective_lipschitz(double lambda);

class TamedDrift {
public:
    static TamedDrift make(const PotentialSpec& p, double lambda);
    // Explicit radius/cap/Lipschitz values; used by fault-injection tests and
    // pinned hand examples. No consistency with `lambda` is enforced.
    static TamedDrift with_radii(const PotentialSpec& p, double lambda,
                                 double r_lambda, double R_lambda,
                                 double M_lambda);

    void eval(std::span<const double> x, std::span<double> out) const;
    double eval1(double x) const;

    const PotentialSpec& potential() const { return p_; }
    double lambda() const { return lambda_; }
    double r_lambda() const { return r_; }
    double R_lambda() const { return R_; }
    double M_lambda() const { return M_; }
    double m() const { return p_.m; }

    // Provable global bounds for this construction (region-by-region maxima):
    //   |h_l(x)| <= (R_l + m)(1 + |x|)
    //   Lip(h_l) <= L(1+2r)^l + R_l(r+2) + 2m
    double growth_certificate() const { return R_ + p_.m; }
    double lipschitz_certificate() const;

private:
    TamedDrift(const PotentialSpec& p, double lambda, double r, double R,
               double M)
        : p_(p), lambda_(lambda), r_(r), R_(R), M_(M) {}

    PotentialSpec p_;
    double lambda_, r_, R_, M_;
};

inline void tamed_eval(const TamedDrift& td, std::span<const double> x,
                       std::span<double> out) {
    td.eval(x, out);
}

}  // namespace tkl
