#include "tkl/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tkl {

namespace {

std::atomic<int> g_threads{0};

void validate(const EnsembleSpec& spec, const std::vector<double>& sx,
              const std::vector<double>& sv, int d) {
    if (d < 1) throw std::invalid_argument("run_ensemble: d >= 1");
    if (sx.empty() || sx.size() != sv.size() || sx.size() % size_t(d) != 0)
        throw std::invalid_argument("run_ensemble: starts must be n_chains*d doubles");
    if (spec.n_steps < 0) throw std::invalid_argument("run_ensemble: n_steps >= 0");
    long prev = -1;
    for (long c : spec.checkpoints) {
        if (c < 0 || c > spec.n_steps || c <= prev)
            throw std::invalid_argument(
                "run_ensemble: checkpoints must ascend within [0, n_steps]");
        prev = c;
    }
}

// One chain start-to-finish, writing its slice of every checkpoint row.
void advance_chain(long chain, const TamedDrift& td, const SchemeParams& sp,
                   const EnsembleSpec& spec, const std::vector<double>& sx,
                   const std::vector<double>& sv, int d, EnsembleResult& out) {
    NoiseStream ns(spec.seed, stream_id(spec.domain, uint64_t(chain)));
    std::vector<double> x(sx.begin() + chain * d, sx.begin() + (chain + 1) * d);
    std::vector<double> v(sv.begin() + chain * d, sv.begin() + (chain + 1) * d);
    std::vector<double> hbuf(d), n1(d), n2(d);
    size_t next_cp = 0;
    auto record = [&](long step) {
        while (next_cp < spec.checkpoints.size() && spec.checkpoints[next_cp] == step) {
            std::copy(x.begin(), x.end(), out.x_at[next_cp].begin() + chain * d);
            std::copy(v.begin(), v.end(), out.v_at[next_cp].begin() + chain * d);
            ++next_cp;
        }
    };
    record(0);
    for (long s = 0; s < spec.n_steps; ++s) {
        if (spec.scheme == Scheme::Exponential) {
            sample_noise_pair(ns, sp, d, n1.data(), n2.data());
            kernel::exp_step(x.data(), v.data(), d, td, sp, n1.data(), n2.data(),
                             hbuf.data());
        } else {
            for (int j = 0; j < d; ++j) {
                auto [a, b] = ns.normal_pair();
                n1[j] = a;
                n2[j] = b;
            }
            kernel::obabo_step(x.data(), v.data(), d, td, sp, n1.data(),
                               n2.data(), hbuf.data());
        }
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(x[j]) || !std::isfinite(v[j]))
                throw NumericalError("run_ensemble: non-finite state", s + 1);
        record(s + 1);
    }
}

EnsembleResult make_result(const EnsembleSpec& spec, long n_chains, int d) {
    EnsembleResult out;
    out.d = d;
    out.n_chains = n_chains;
    out.checkpoints = spec.checkpoints;
    out.x_at.assign(spec.checkpoints.size(),
                    std::vector<double>(size_t(n_chains) * d));
    out.v_at.assign(spec.checkpoints.size(),
                    std::vector<double>(size_t(n_chains) * d));
    return out;
}

}  // namespace

EnsembleResult run_ensemble_serial(const TamedDrift& td, const SchemeParams& sp,
                                   const EnsembleSpec& spec,
                                   const std::vector<double>& starts_x,
                                   const std::vector<double>& starts_v, int d) {
    validate(spec, starts_x, starts_v, d);
    long n_chains = long(starts_x.size()) / d;
    EnsembleResult out = make_result(spec, n_chains, d);
    for (long c = 0; c < n_chains; ++c)
        advance_chain(c, td, sp, spec, starts_x, starts_v, d, out);
    return out;
}

EnsembleResult run_ensemble_parallel(const TamedDrift& td,
                                     const SchemeParams& sp,
                                     const EnsembleSpec& spec,
                                     const std::vector<double>& starts_x,
                                     const std::vector<double>& starts_v,
                                     int d) {
    validate(spec, starts_x, starts_v, d);
    long n_chains = long(starts_x.size()) / d;
    EnsembleResult out = make_result(spec, n_chains, d);
    // chains are independent and write disjoint slices; exceptions must not
    // escape the parallel region
    std::atomic<long> failed_step{-1};
    int want = g_threads.load();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(want > 0 ? want : omp_get_max_threads())
#endif
    for (long c = 0; c < n_chains; ++c) {
        if (failed_step.load(std::memory_order_relaxed) >= 0) continue;
        try {
            advance_chain(c, td, sp, spec, starts_x, starts_v, d, out);
        } catch (const NumericalError& e) {
            failed_step.store(e.step);
        }
    }
    long fs = failed_step.load();
    if (fs >= 0) throw NumericalError("run_ensemble: non-finite state", fs);
    return out;
}

EnsembleResult run_ensemble(const TamedDrift& td, const SchemeParams& sp,
                            const EnsembleSpec& spec,
                            const std::vector<double>& starts_x,
                            const std::vector<double>& starts_v, int d) {
    if (g_threads.load() == 1)
        return run_ensemble_serial(td, sp, spec, starts_x, starts_v, d);
    return run_ensemble_parallel(td, sp, spec, starts_x, starts_v, d);
}

void set_ensemble_threads(int n) {
    if (n < 0) throw std::invalid_argument("set_ensemble_threads: n >= 0");
    g_threads.store(n);
}

int ensemble_threads() { return g_threads.load(); }

std::vector<double> fixed_starts(long n_chains, int d, double value) {
    if (n_chains < 1 || d < 1)
        throw std::invalid_argument("fixed_starts: n_chains, d >= 1");
    return std::vector<double>(size_t(n_chains) * d, value);
}

std::vector<double> gaussian_starts(long n_chains, int d, double mean,
                                    double sd, uint64_t seed, uint64_t domain) {
    if (n_chains < 1 || d < 1)
        throw std::invalid_argument("gaussian_starts: n_chains, d >= 1");
    if (sd < 0) throw std::invalid_argument("gaussian_starts: sd >= 0");
    std::vector<double> out(size_t(n_chains) * d);
    for (long c = 0; c < n_chains; ++c) {
        NoiseStream ns(seed, stream_id(domain, uint64_t(c)));
        for (int j = 0; j < d; ++j) out[size_t(c) * d + j] = mean + sd * ns.normal();
    }
    return out;
}

}  // namespace tkl
