#include "tkl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace tkl {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bail(const std::string& file, int line, const std::string& msg) {
    throw ConfigError(file + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& file, int line, const std::string& key,
                    const std::string& val) {
    try {
        size_t idx = 0;
        double v = std::stod(val, &idx);
        if (idx != val.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        bail(file, line, key + ": not a number: '" + val + "'");
    }
}

long parse_long(const std::string& file, int line, const std::string& key,
                const std::string& val) {
    try {
        size_t idx = 0;
        long v = std::stol(val, &idx);
        if (idx != val.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        bail(file, line, key + ": not an integer: '" + val + "'");
    }
}

uint64_t parse_u64(const std::string& file, int line, const std::string& key,
                   const std::string& val) {
    try {
        size_t idx = 0;
        unsigned long long v = std::stoull(val, &idx);
        if (idx != val.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        bail(file, line, key + ": not an unsigned integer: '" + val + "'");
    }
}

const std::set<std::string>& known_suites() {
    static const std::set<std::string> s = {"taming", "contraction", "w2",
                                            "lsi",    "eta",         "order",
                                            "sample"};
    return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              const std::string& filename) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = raw;
        size_t hash = s.find('#');
        if (hash != std::string::npos) s.erase(hash);
        s = trim(s);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos) bail(filename, line, "expected key=value: '" + s + "'");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) bail(filename, line, "empty key");
        if (val.empty()) bail(filename, line, key + ": empty value");
        if (!seen.insert(key).second) bail(filename, line, "duplicate key: " + key);

        if (key == "suite") {
            if (!known_suites().count(val))
                bail(filename, line, "unknown suite: '" + val + "'");
            cfg.suite = val;
        } else if (key == "potential") {
            if (val != "quadratic" && val != "double_well")
                bail(filename, line, "unknown potential: '" + val + "'");
            cfg.potential = val;
        } else if (key == "c") {
            cfg.c = parse_double(filename, line, key, val);
            if (cfg.c <= 0) bail(filename, line, "c must be > 0");
        } else if (key == "dim") {
            cfg.dim = int(parse_long(filename, line, key, val));
            if (cfg.dim < 1) bail(filename, line, "dim must be >= 1");
        } else if (key == "scheme") {
            if (val == "exponential")
                cfg.scheme = Scheme::Exponential;
            else if (val == "obabo")
                cfg.scheme = Scheme::Obabo;
            else
                bail(filename, line, "unknown scheme: '" + val + "'");
        } else if (key == "lambda") {
            cfg.lambda = parse_double(filename, line, key, val);
            if (cfg.lambda <= 0) bail(filename, line, "lambda must be > 0");
        } else if (key == "gamma") {
            if (val == "auto") {
                cfg.gamma_auto = true;
            } else {
                cfg.gamma_auto = false;
                cfg.gamma = parse_double(filename, line, key, val);
                if (cfg.gamma <= 0) bail(filename, line, "gamma must be > 0 or 'auto'");
            }
        } else if (key == "m_lambda") {
            if (val == "default")
                cfg.m_lambda_override = false;
            else if (val == "global_lipschitz")
                cfg.m_lambda_override = true;
            else
                bail(filename, line, "m_lambda must be 'default' or 'global_lipschitz'");
        } else if (key == "n_steps") {
            cfg.n_steps = parse_long(filename, line, key, val);
            if (cfg.n_steps < 1) bail(filename, line, "n_steps must be >= 1");
        } else if (key == "n_chains") {
            cfg.n_chains = parse_long(filename, line, key, val);
            if (cfg.n_chains < 1) bail(filename, line, "n_chains must be >= 1");
        } else if (key == "n_pairs") {
            cfg.n_pairs = parse_long(filename, line, key, val);
            if (cfg.n_pairs < 1) bail(filename, line, "n_pairs must be >= 1");
        } else if (key == "n_points") {
            cfg.n_points = parse_long(filename, line, key, val);
            if (cfg.n_points < 1) bail(filename, line, "n_points must be >= 1");
        } else if (key == "n") {
            cfg.n = parse_long(filename, line, key, val);
            if (cfg.n < 1) bail(filename, line, "n must be >= 1");
        } else if (key == "thin") {
            cfg.thin = parse_long(filename, line, key, val);
            if (cfg.thin < 1) bail(filename, line, "thin must be >= 1");
        } else if (key == "seed") {
            cfg.seed = parse_u64(filename, line, key, val);
        } else if (key == "eps") {
            cfg.eps = parse_double(filename, line, key, val);
            if (cfg.eps <= 0) bail(filename, line, "eps must be > 0");
        } else if (key == "start_x") {
            cfg.start_x = parse_double(filename, line, key, val);
        } else if (key == "fine_factor") {
            cfg.fine_factor = int(parse_long(filename, line, key, val));
            if (cfg.fine_factor < 2) bail(filename, line, "fine_factor must be >= 2");
        } else {
            bail(filename, line, "unknown key: '" + key + "'");
        }
    }
    if (cfg.suite.empty())
        throw ConfigError(filename + ": missing required key 'suite'");
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config(os.str(), path);
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& in) {
    ExperimentConfig cfg = in;
    PotentialSpec pot = builtin_potential(cfg.potential, cfg.c, cfg.dim);
    if (cfg.m_lambda_override && !pot.global_lipschitz)
        throw ConfigError("m_lambda=global_lipschitz: potential '" + cfg.potential +
                          "' has no global Lipschitz constant");
    cfg.M_lambda = cfg.m_lambda_override ? *pot.global_lipschitz
                                         : effective_lipschitz(cfg.lambda);
    cfg.gamma_resolved =
        cfg.gamma_auto ? auto_gamma(cfg.scheme, cfg.M_lambda) : cfg.gamma;

    TamedDrift td = TamedDrift::make(pot, cfg.lambda);
    SchemeParams sp = SchemeParams::make(cfg.lambda, cfg.gamma_resolved,
                                         cfg.M_lambda, pot.m,
                                         cfg.m_lambda_override);

    // the exponential update itself assumes a sub-relaxation step everywhere
    if (cfg.scheme == Scheme::Exponential &&
        cfg.lambda > (1.0 + 1e-12) / (2.0 * cfg.gamma_resolved)) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "exponential scheme requires lambda <= 1/(2*gamma): "
                      "lambda=%.6g, 1/(2*gamma)=%.6g",
                      cfg.lambda, 1.0 / (2.0 * cfg.gamma_resolved));
        throw RegimeError(msg);
    }
    if (cfg.suite == "contraction") {
        if (cfg.scheme == Scheme::Exponential)
            require_exponential_regime(sp);
        else
            require_obabo_regime(sp);
    } else if (cfg.suite == "lsi") {
        char msg[160];
        double need = 2.0 * std::sqrt(sp.M_lambda);
        if (sp.gamma < need * (1.0 - 1e-12)) {
            std::snprintf(msg, sizeof msg,
                          "lsi regime violated: gamma=%.6g < 2*sqrt(M_lambda)=%.6g",
                          sp.gamma, need);
            throw RegimeError(msg);
        }
        if (sp.lambda > (1.0 + 1e-12) / (2.0 * sp.gamma)) {
            std::snprintf(msg, sizeof msg,
                          "lsi regime violated: lambda=%.6g > 1/(2*gamma)=%.6g",
                          sp.lambda, 1.0 / (2.0 * sp.gamma));
            throw RegimeError(msg);
        }
    }
    return ResolvedExperiment{cfg, pot, td, sp};
}

}  // namespace tkl
