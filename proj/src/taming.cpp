#include "tkl/taming.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

namespace tkl {

double weight_t(double norm_x, double r_lambda) {
    if (norm_x <= r_lambda - 1.0) return 1.0;
    if (norm_x >= r_lambda) return 0.0;
    return r_lambda - norm_x;
}

double weight_s(double norm_x, double r_lambda) {
    if (norm_x <= r_lambda - 2.0) return 0.0;
    if (norm_x < r_lambda - 1.0) return norm_x - (r_lambda - 2.0);
    if (norm_x <= r_lambda) return 1.0;
    return r_lambda / norm_x;
}

double taming_radius(double lambda, double L, double m, double l) {
    if (lambda <= 0 || L <= 0 || m <= 0 || l < 0)
        throw std::invalid_argument("taming_radius: need lambda, L, m > 0, l >= 0");
    double r = (L + m) * std::pow(lambda, -1.0 / (2.0 * (l + 2.0)));
    if (r < 3.0) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "taming radius %.6g below floor 3: lambda=%.6g too large "
                      "for (L=%.6g, m=%.6g, l=%.6g)",
                      r, lambda, L, m, l);
        throw RegimeError(msg);
    }
    return r;
}

double taming_cap(const PotentialSpec& p, double r_lambda) {
    if (r_lambda <= 0) throw std::invalid_argument("taming_cap: r_lambda > 0");
    return (p.L + p.h_origin_norm()) * std::pow(r_lambda, p.l + 1.0);
}

double effective_lipschitz(double lambda) {
    if (lambda <= 0) throw std::invalid_argument("effective_lipschitz: lambda > 0");
    return 1.0 / std::sqrt(lambda);
}

TamedDrift TamedDrift::make(const PotentialSpec& p, double lambda) {
    double r = taming_radius(lambda, p.L, p.m, p.l);
    double R = taming_cap(p, r);
    return TamedDrift(p, lambda, r, R, effective_lipschitz(lambda));
}

TamedDrift TamedDrift::with_radii(const PotentialSpec& p, double lambda,
                                  double r_lambda, double R_lambda,
                                  double M_lambda) {
    return TamedDrift(p, lambda, r_lambda, R_lambda, M_lambda);
}

double TamedDrift::lipschitz_certificate() const {
    return p_.L * std::pow(1.0 + 2.0 * r_, p_.l) + R_ * (r_ + 2.0) + 2.0 * p_.m;
}

void TamedDrift::eval(std::span<const double> x, std::span<double> out) const {
    double nsq = 0;
    for (double xi : x) nsq += xi * xi;
    double nx = std::sqrt(nsq);
    if (nx <= r_ - 2.0) {  // untouched gradient, identical code path to h
        p_.h(x, out);
        return;
    }
    if (nx >= r_) {  // capped radial field; h is never evaluated out here
        double coef = R_ * r_ / nx + p_.m;
        for (size_t i = 0; i < x.size(); ++i) out[i] = coef * x[i];
        return;
    }
    p_.h(x, out);
    double t = weight_t(nx, r_);
    double sw = weight_s(nx, r_);
    double coef = R_ * sw + p_.m * (1.0 - t);
    for (size_t i = 0; i < x.size(); ++i) out[i] = t * out[i] + coef * x[i];
}

double TamedDrift::eval1(double x) const {
    double out;
    eval({&x, 1}, {&out, 1});
    return out;
}

}  // namespace tkl
