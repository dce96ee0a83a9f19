#include <doctest.h>

#include <cmath>
#include <string>

#include "tkl/config.hpp"

using namespace tkl;

namespace {

std::string base_doc() {
    return "suite = contraction\n"
           "potential = quadratic\n"
           "c = 1\n"
           "dim = 2\n"
           "scheme = obabo\n"
           "lambda = 1e-3\n"
           "gamma = auto\n"
           "m_lambda = global_lipschitz\n"
           "n_pairs = 8\n"
           "seed = 7\n";
}

}  // namespace

TEST_CASE("a full document parses with comments and blank lines") {
    std::string doc =
        "# experiment\n"
        "\n"
        "suite = taming   # trailing comment\n"
        "potential = double_well\n"
        "c = 0.5\n"
        "dim = 3\n"
        "lambda = 1e-8\n"
        "n = 4000\n";
    ExperimentConfig cfg = parse_config(doc, "inline");
    CHECK(cfg.suite == "taming");
    CHECK(cfg.potential == "double_well");
    CHECK(cfg.c == 0.5);
    CHECK(cfg.dim == 3);
    CHECK(cfg.lambda == 1e-8);
    CHECK(cfg.n == 4000);
    CHECK(cfg.gamma_auto);  // untouched default
}

TEST_CASE("parse errors name the file and line") {
    auto expect_error = [](const std::string& doc, const std::string& frag) {
        try {
            (void)parse_config(doc, "bad.cfg");
            FAIL_CHECK("expected ConfigError for: ", frag);
        } catch (const ConfigError& e) {
            std::string msg = e.what();
            CHECK(msg.find("bad.cfg") != std::string::npos);
            CHECK(msg.find(frag) != std::string::npos);
        }
    };
    expect_error("suite = taming\nlambda = 1e-3\nlambda = 1e-4\n", "duplicate");
    expect_error("suite = taming\nwobble = 3\n", "unknown");
    expect_error("suite = taming\nlambda = fast\n", "lambda");
    expect_error("suite = taming\ndim = 2.5\n", "dim");
    expect_error("suite = nonsense\n", "suite");
    expect_error("lambda = 1e-3\n", "suite");          // suite is required
    expect_error("suite = taming\nlambda 1e-3\n", "=");  // missing separator

    // line number of the offending line is part of the message
    try {
        (void)parse_config("suite = taming\n\nwobble = 3\n", "bad.cfg");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.cfg:3") != std::string::npos);
    }
}

TEST_CASE("resolution derives the regime-minimum friction") {
    ExperimentConfig cfg = parse_config(base_doc(), "inline");
    ResolvedExperiment rx = resolve_experiment(cfg);
    // global Lipschitz override: M = c = 1, OBABO floor gamma = 2
    CHECK(rx.cfg.M_lambda == doctest::Approx(1.0));
    CHECK(rx.cfg.gamma_resolved == doctest::Approx(2.0));
    CHECK(rx.sp.m_lambda_overridden);
    CHECK(rx.sp.gamma == doctest::Approx(2.0));
    CHECK(rx.pot.name == "quadratic");
    // the override is scheme-level; the drift keeps the taming constant
    CHECK(rx.sp.M_lambda == doctest::Approx(1.0));
    CHECK(rx.td.M_lambda() == doctest::Approx(1.0 / std::sqrt(1e-3)));

    // without the override the taming Lipschitz constant applies; the
    // self-consistent obabo window then needs lambda <= (m/264)^4
    std::string doc2 = base_doc();
    doc2.replace(doc2.find("m_lambda = global_lipschitz\n"),
                 std::string("m_lambda = global_lipschitz\n").size(), "");
    doc2.replace(doc2.find("lambda = 1e-3"), std::string("lambda = 1e-3").size(),
                 "lambda = 1e-11");
    ExperimentConfig cfg2 = parse_config(doc2, "inline");
    ResolvedExperiment rx2 = resolve_experiment(cfg2);
    CHECK(rx2.cfg.M_lambda == doctest::Approx(1.0 / std::sqrt(1e-11)));
    CHECK(rx2.cfg.gamma_resolved ==
          doctest::Approx(2.0 * std::sqrt(rx2.cfg.M_lambda)));
}

TEST_CASE("suite-relevant regimes are enforced at resolution") {
    // contraction + explicit gamma below the OBABO floor
    std::string doc = base_doc();
    doc.replace(doc.find("gamma = auto"), std::string("gamma = auto").size(),
                "gamma = 1.5");
    ExperimentConfig cfg = parse_config(doc, "inline");
    try {
        (void)resolve_experiment(cfg);
        FAIL("expected RegimeError");
    } catch (const RegimeError& e) {
        CHECK(std::string(e.what()).find("2*sqrt(M_lambda)") !=
              std::string::npos);
    }

    // the exponential scheme caps the step at 1/(2 gamma) for every suite;
    // lambda stays below the taming radius floor so only the cap can trip
    std::string doc2 =
        "suite = sample\n"
        "potential = quadratic\n"
        "scheme = exponential\n"
        "lambda = 0.06\n"
        "gamma = 10\n"
        "m_lambda = global_lipschitz\n";
    try {
        (void)resolve_experiment(parse_config(doc2, "inline"));
        FAIL("expected RegimeError");
    } catch (const RegimeError& e) {
        CHECK(std::string(e.what()).find("1/(2*gamma)") != std::string::npos);
    }

    // same document at an admissible step resolves cleanly
    std::string doc3 = doc2;
    doc3.replace(doc3.find("lambda = 0.06"), std::string("lambda = 0.06").size(),
                 "lambda = 0.04");
    CHECK_NOTHROW((void)resolve_experiment(parse_config(doc3, "inline")));
}

TEST_CASE("the Lipschitz override demands a globally Lipschitz gradient") {
    std::string doc =
        "suite = sample\n"
        "potential = double_well\n"
        "lambda = 1e-4\n"
        "m_lambda = global_lipschitz\n";
    CHECK_THROWS_AS((void)resolve_experiment(parse_config(doc, "inline")),
                    ConfigError);
}

TEST_CASE("taming radius floor surfaces as a regime error on resolve") {
    std::string doc =
        "suite = sample\n"
        "potential = quadratic\n"
        "lambda = 0.1\n";  // radius 2.667 below the floor of 3
    CHECK_THROWS_AS((void)resolve_experiment(parse_config(doc, "inline")),
                    RegimeError);
}

TEST_CASE("m_lambda accepts only its two spellings") {
    CHECK_THROWS_AS(
        (void)parse_config("suite = sample\nm_lambda = tight\n", "inline"),
        ConfigError);
    ExperimentConfig cfg =
        parse_config("suite = sample\nm_lambda = default\n", "inline");
    CHECK(!cfg.m_lambda_override);
}
