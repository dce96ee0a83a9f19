#pragma once
// Drivers for many independent chains. The parallel driver distributes chains
// across OpenMP threads; every chain derives its own noise stream from
// (seed, domain, chain index), so results are identical for any thread count.
// A plain serial driver is kept as the reference implementation; the two must
// produce bitwise-equal output.

#include <cstdint>
#include <vector>

#include "tkl/schemes.hpp"

namespace tkl {

struct EnsembleSpec {
    Scheme scheme = Scheme::Obabo;
    long n_steps = 0;
    std::vector<long> checkpoints;  // ascending step indices to record at
    uint64_t seed = 0;
    uint64_t domain = 0;  // stream-id namespace, see rng.hpp
};

struct EnsembleResult {
    int d = 0;
    long n_chains = 0;
    std::vector<long> checkpoints;
    // row k = all chains' states at checkpoints[k], chain-major, length n*d
    std::vector<std::vector<double>> x_at, v_at;
};

// starts_x/starts_v are flattened [chain][coordinate], length n_chains*d.
EnsembleResult run_ensemble_serial(const TamedDrift& td, const SchemeParams& sp,
                                   const EnsembleSpec& spec,
                                   const std::vector<double>& starts_x,
                                   const std::vector<double>& starts_v, int d);
EnsembleResult run_ensemble_parallel(const TamedDrift& td,
                                     const SchemeParams& sp,
                                     const EnsembleSpec& spec,
                                     const std::vector<double>& starts_x,
                                     const std::vector<double>& starts_v,
                                     int d);
// Dispatches on the configured thread count (ensemble_threads below).
EnsembleResult run_ensemble(const TamedDrift& td, const SchemeParams& sp,
                            const EnsembleSpec& spec,
                            const std::vector<double>& starts_x,
                            const std::vector<double>& starts_v, int d);

// 0 = library default (all OpenMP threads); 1 = serial reference path.
void set_ensemble_threads(int n);
int ensemble_threads();

// Start helpers. Gaussian starts draw per chain from stream (seed, domain,
// chain), coordinates via consecutive normal pairs.
std::vector<double> fixed_starts(long n_chains, int d, double value);
std::vector<double> gaussian_starts(long n_chains, int d, double mean,
                                    double sd, uint64_t seed, uint64_t domain);

}  // namespace tkl
