#pragma once
// Flat key=value experiment configuration. Comments start with '#'; keys are
// validated (unknown or duplicate keys are errors with line numbers); gamma
// may be the literal "auto", resolving to the regime minimum for the chosen
// scheme. Loading re-validates the regime inequalities relevant to the
// requested suite and names the violated one.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "tkl/propcheck.hpp"

namespace tkl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string suite;  // taming|contraction|w2|lsi|eta|order|sample
    std::string potential = "quadratic";
    double c = 1.0;
    int dim = 1;
    Scheme scheme = Scheme::Obabo;
    double lambda = 1e-3;
    bool gamma_auto = true;
    double gamma = 0.0;
    bool m_lambda_override = false;  // M_lambda := potential global Lipschitz
    long n_steps = 10000;
    long n_chains = 1000;
    long n_pairs = 100;
    long n_points = 1000;
    long n = 100000;  // taming pair count
    long thin = 100;
    uint64_t seed = 42;
    double eps = 0.05;
    double start_x = 3.0;
    int fine_factor = 100;

    // Derived on resolve():
    double M_lambda = 0.0;
    double gamma_resolved = 0.0;
};

// Parses the document; `filename` only decorates error messages.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& filename);
ExperimentConfig load_config_file(const std::string& path);

// Builds the potential/taming/scheme objects and enforces the suite-relevant
// regime inequalities (contraction and lsi enforce their friction regimes;
// the exponential scheme always requires lambda <= 1/(2 gamma)).
struct ResolvedExperiment {
    ExperimentConfig cfg;
    PotentialSpec pot;
    TamedDrift td;
    SchemeParams sp;
};
ResolvedExperiment resolve_experiment(const ExperimentConfig& cfg);

}  // namespace tkl
