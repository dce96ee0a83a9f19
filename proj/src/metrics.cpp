#include "tkl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tkl {

double weighted_norm_sq(const PhaseState& z, const WeightedNormParams& w) {
    return weighted_sq(z.x.data(), z.v.data(), z.dim(), w.a, w.b);
}

double w2_1d(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || a.size() != b.size())
        throw std::invalid_argument("w2_1d: equal nonzero sizes required");
    std::vector<double> sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    double acc = 0;
    for (size_t i = 0; i < sa.size(); ++i) {
        double d = sa[i] - sb[i];
        acc += d * d;
    }
    return std::sqrt(acc / double(sa.size()));
}

// exact squared-cost assignment via shortest augmenting paths
double w2_exact_smalln(const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b) {
    size_t n = a.size();
    if (n == 0 || b.size() != n)
        throw std::invalid_argument("w2_exact_smalln: equal nonzero sizes required");
    if (n > 256)
        throw std::invalid_argument("w2_exact_smalln: n > 256; use a 1-d or sampled metric");
    size_t d = a[0].size();
    for (const auto& r : a)
        if (r.size() != d) throw std::invalid_argument("w2_exact_smalln: ragged input");
    for (const auto& r : b)
        if (r.size() != d) throw std::invalid_argument("w2_exact_smalln: ragged input");

    auto cost = [&](size_t i, size_t j) {
        double acc = 0;
        for (size_t k = 0; k < d; ++k) {
            double t = a[i][k] - b[j][k];
            acc += t * t;
        }
        return acc;
    };

    const double inf = std::numeric_limits<double>::infinity();
    // Jonker-Volgenant with 1-based sentinel column 0
    std::vector<double> u(n + 1, 0), v(n + 1, 0);
    std::vector<size_t> match_col(n + 1, 0);  // column -> row
    for (size_t i = 1; i <= n; ++i) {
        std::vector<double> minv(n + 1, inf);
        std::vector<size_t> way(n + 1, 0);
        std::vector<char> used(n + 1, 0);
        size_t j0 = 0;
        match_col[0] = i;
        do {
            used[j0] = 1;
            size_t i0 = match_col[j0], j1 = 0;
            double delta = inf;
            for (size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            size_t j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0;
    for (size_t j = 1; j <= n; ++j) total += cost(match_col[j] - 1, j - 1);
    return std::sqrt(total / double(n));
}

double gaussian_w2(const std::vector<double>& m1, double s1,
                   const std::vector<double>& m2, double s2) {
    if (m1.empty() || m1.size() != m2.size())
        throw std::invalid_argument("gaussian_w2: equal nonzero dimensions required");
    if (s1 < 0 || s2 < 0) throw std::invalid_argument("gaussian_w2: sd >= 0");
    double dmsq = 0;
    for (size_t i = 0; i < m1.size(); ++i) {
        double t = m1[i] - m2[i];
        dmsq += t * t;
    }
    double ds = s1 - s2;
    return std::sqrt(dmsq + double(m1.size()) * ds * ds);
}

double jacobian_opnorm_fd(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& point, double h) {
    if (h <= 0) throw std::invalid_argument("jacobian_opnorm_fd: h > 0");
    size_t n = point.size();
    std::vector<double> f0 = f(point);
    size_t m = f0.size();
    std::vector<std::vector<double>> J(m, std::vector<double>(n));
    std::vector<double> xp = point, xm = point;
    for (size_t j = 0; j < n; ++j) {
        xp[j] = point[j] + h;
        xm[j] = point[j] - h;
        std::vector<double> fp = f(xp), fm = f(xm);
        if (fp.size() != m || fm.size() != m)
            throw std::invalid_argument("jacobian_opnorm_fd: output size changed");
        for (size_t i = 0; i < m; ++i) {
            double val = (fp[i] - fm[i]) / (2.0 * h);
            if (!std::isfinite(val))
                throw std::runtime_error("jacobian_opnorm_fd: non-finite derivative");
            J[i][j] = val;
        }
        xp[j] = point[j];
        xm[j] = point[j];
    }
    // power iteration on J^T J with a deterministic start
    std::vector<double> w(n), Jw(m), back(n);
    for (size_t j = 0; j < n; ++j) w[j] = 1.0 / std::sqrt(double(n)) * (1.0 + 0.01 * double(j));
    double nw = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    for (auto& t : w) t /= nw;
    double sigma = 0;
    for (int it = 0; it < 50; ++it) {
        for (size_t i = 0; i < m; ++i)
            Jw[i] = std::inner_product(J[i].begin(), J[i].end(), w.begin(), 0.0);
        for (size_t j = 0; j < n; ++j) {
            double acc = 0;
            for (size_t i = 0; i < m; ++i) acc += J[i][j] * Jw[i];
            back[j] = acc;
        }
        double nb = std::sqrt(std::inner_product(back.begin(), back.end(), back.begin(), 0.0));
        if (nb == 0) return 0.0;
        for (size_t j = 0; j < n; ++j) w[j] = back[j] / nb;
        double next = std::sqrt(nb);
        if (std::abs(next - sigma) <= 1e-10 * std::max(1.0, next)) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

double order_fit(const std::vector<double>& lambdas,
                 const std::vector<double>& errors) {
    size_t n = lambdas.size();
    if (n < 2 || errors.size() != n)
        throw std::invalid_argument("order_fit: need >= 2 matched points");
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        if (lambdas[i] <= 0 || errors[i] <= 0)
            throw std::invalid_argument("order_fit: positive inputs required");
        lx[i] = std::log(lambdas[i]);
        ly[i] = std::log(errors[i]);
    }
    double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / double(n);
    double my = std::accumulate(ly.begin(), ly.end(), 0.0) / double(n);
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0) throw std::invalid_argument("order_fit: identical lambdas");
    return sxy / sxx;
}

MomentBoundReport moment_bound_check(
    const std::vector<std::vector<double>>& samples, const PotentialSpec& p) {
    if (samples.empty()) throw std::invalid_argument("moment_bound_check: empty sample");
    size_t n = samples.size();
    double mean = 0, mean_sq = 0;
    for (const auto& s : samples) {
        double nsq = 0;
        for (double t : s) nsq += t * t;
        mean += nsq;
        mean_sq += nsq * nsq;
    }
    mean /= double(n);
    mean_sq /= double(n);
    double var = std::max(mean_sq - mean * mean, 0.0);
    MomentBoundReport rep;
    rep.empirical = mean;
    rep.std_error = std::sqrt(var / double(n));
    std::vector<double> origin(samples[0].size(), 0.0);
    rep.bound = 2.0 / p.m * (p.u(origin) + double(samples[0].size()));
    rep.violated = rep.empirical > rep.bound + 3.0 * rep.std_error;
    return rep;
}

}  // namespace tkl
