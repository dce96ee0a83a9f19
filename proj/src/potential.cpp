#include "tkl/potential.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tkl/rng.hpp"

namespace tkl {

namespace {

double norm_sq(std::span<const double> x) {
    double s = 0;
    for (double xi : x) s += xi * xi;
    return s;
}

}  // namespace

double PotentialSpec::u(std::span<const double> x) const {
    switch (kind) {
        case PotentialKind::Quadratic:
            return 0.5 * c * norm_sq(x);
        case PotentialKind::DoubleWell: {
            double q = norm_sq(x);
            return 0.25 * q * q + 0.5 * c * q;
        }
        case PotentialKind::Custom:
            if (!u_fn) throw std::logic_error("custom potential lacks u_fn");
            return u_fn(x);
    }
    throw std::logic_error("unreachable");
}

void PotentialSpec::h(std::span<const double> x, std::span<double> out) const {
    switch (kind) {
        case PotentialKind::Quadratic:
            for (size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
            return;
        case PotentialKind::DoubleWell: {
            double q = norm_sq(x);
            for (size_t i = 0; i < x.size(); ++i) out[i] = (q + c) * x[i];
            return;
        }
        case PotentialKind::Custom:
            if (!h_fn) throw std::logic_error("custom potential lacks h_fn");
            h_fn(x, out);
            return;
    }
}

double PotentialSpec::h_origin_norm() const {
    std::vector<double> zero(dim, 0.0), hz(dim, 0.0);
    h(zero, hz);
    return std::sqrt(norm_sq(hz));
}

PotentialSpec quadratic_potential(double c, int dim) {
    if (c <= 0 || dim < 1)
        throw std::invalid_argument("quadratic_potential: need c > 0, dim >= 1");
    PotentialSpec p;
    p.kind = PotentialKind::Quadratic;
    p.name = "quadratic";
    p.dim = dim;
    p.c = c;
    p.m = 0.5 * c;
    p.L = c;
    p.l = 0.0;
    p.global_lipschitz = c;
    return p;
}

PotentialSpec double_well_potential(double c, int dim) {
    if (c <= 0 || dim < 1)
        throw std::invalid_argument("double_well_potential: need c > 0, dim >= 1");
    PotentialSpec p;
    p.kind = PotentialKind::DoubleWell;
    p.name = "double_well";
    p.dim = dim;
    p.c = c;
    p.m = 0.5 * c;
    p.L = 1.0 + c;
    p.l = 2.0;
    return p;
}

PotentialSpec builtin_potential(const std::string& name, double c, int dim) {
    if (name == "quadratic") return quadratic_potential(c, dim);
    if (name == "double_well") return double_well_potential(c, dim);
    throw std::invalid_argument("unknown potential '" + name +
                                "' (expected quadratic or double_well)");
}

AssumptionsReport check_assumptions(const PotentialSpec& p, double radius,
                                    long n_pairs, uint64_t seed) {
    if (radius <= 0 || n_pairs < 1)
        throw std::invalid_argument("check_assumptions: radius > 0, n_pairs >= 1");
    const int d = p.dim;
    AssumptionsReport rep;
    rep.n_pairs = n_pairs;
    rep.lipschitz_on_ball = p.L * std::pow(1.0 + 2.0 * radius, p.l);
    rep.worst_a1_margin = std::numeric_limits<double>::infinity();

    NoiseStream ns(seed, stream_id(domain::kTaming, 0));
    std::vector<double> x(d), y(d), hx(d), hy(d), work(d);

    auto draw_in_ball = [&](std::vector<double>& out) {
        // isotropic direction, radius with density ~ rho^{d-1}
        double nrm = 0;
        for (int i = 0; i < d; ++i) {
            out[i] = ns.normal();
            nrm += out[i] * out[i];
        }
        nrm = std::sqrt(nrm);
        double rho = radius * std::pow(ns.uniform01(), 1.0 / d);
        double scale = (nrm > 0) ? rho / nrm : 0.0;
        for (int i = 0; i < d; ++i) out[i] *= scale;
    };

    const long fd_checks = std::min<long>(n_pairs, 200);
    for (long k = 0; k < n_pairs; ++k) {
        draw_in_ball(x);
        draw_in_ball(y);
        p.h(x, hx);
        p.h(y, hy);
        double nx = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
        double ny = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
        double dot = 0, dsq = 0, dhsq = 0;
        for (int i = 0; i < d; ++i) {
            double dx = x[i] - y[i], dh = hx[i] - hy[i];
            dot += dh * dx;
            dsq += dx * dx;
            dhsq += dh * dh;
        }
        double tol = 1e-9 * (1.0 + nx + ny);
        double margin = dot - 2.0 * p.m * dsq;
        if (margin < rep.worst_a1_margin) rep.worst_a1_margin = margin;
        if (margin < -tol) ++rep.a1_violations;
        double a2_rhs = p.L * std::pow(1.0 + nx + ny, p.l) * std::sqrt(dsq);
        if (std::sqrt(dhsq) > a2_rhs + tol) ++rep.a2_violations;

        if (k < fd_checks) {
            // central difference of u against the declared gradient
            double hh = 0;
            for (int i = 0; i < d; ++i) hh += hx[i] * hx[i];
            hh = std::sqrt(hh);
            double err = 0;
            for (int i = 0; i < d; ++i) {
                double step = 1e-6 * (1.0 + std::abs(x[i]));
                double keep = x[i];
                x[i] = keep + step;
                double up = p.u(x);
                x[i] = keep - step;
                double um = p.u(x);
                x[i] = keep;
                double g = (up - um) / (2.0 * step);
                err += (g - hx[i]) * (g - hx[i]);
            }
            double rel = std::sqrt(err) / (1.0 + hh);
            if (rel > rep.grad_mismatch_max) rep.grad_mismatch_max = rel;
        }
    }
    return rep;
}

}  // namespace tkl
