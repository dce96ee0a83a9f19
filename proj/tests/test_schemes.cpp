#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tkl/schemes.hpp"

using namespace tkl;

namespace {

// quadratic(1) with the taming regions pushed far out, so small states see
// the raw gradient
TamedDrift plain_quadratic_drift() {
    static PotentialSpec q = quadratic_potential(1.0, 1);
    return TamedDrift::with_radii(q, 0.1, 100.0, 100.0, 1.0);
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int n_intervals) {
    double h = (b - a) / n_intervals;
    double acc = f(a) + f(b);
    for (int i = 1; i < n_intervals; ++i)
        acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

TEST_CASE("psi coefficients at the pinned example") {
    Psi p = psi_coefficients(0.1, 2.0);
    // six-figure pins, then full precision
    CHECK(std::abs(p.psi0 - 0.818731) < 1e-6);
    CHECK(std::abs(p.psi1 - 0.0906346) < 1e-6);
    CHECK(std::abs(p.psi2 - 0.00468276) < 1e-6);
    CHECK(p.psi0 == doctest::Approx(0.8187307530779818).epsilon(1e-15));
    CHECK(p.psi1 == doctest::Approx(0.090634623461009077).epsilon(1e-15));
    CHECK(p.psi2 == doctest::Approx(0.0046826882694954629).epsilon(1e-13));
    // psi1, psi2 collapse to lambda, lambda^2/2 as gamma*lambda -> 0
    Psi t = psi_coefficients(1e-8, 1.0);
    CHECK(t.psi1 == doctest::Approx(1e-8).epsilon(1e-9));
    CHECK(t.psi2 == doctest::Approx(0.5e-16).epsilon(1e-7));
}

TEST_CASE("noise covariance at the pinned example") {
    Cov2 c = noise_covariance(0.1, 2.0);
    // six-figure pins; the quadrature suite below is the precise check
    CHECK(std::abs(c.c11 - 0.0824200) < 1e-6);
    CHECK(std::abs(c.c12 - 0.0041073) < 1e-6);
    CHECK(std::abs(c.c22 - 0.00028775) < 1e-6);
    CHECK(c.c11 == doctest::Approx(0.082419988491090196).epsilon(1e-14));
    CHECK(c.c12 == doctest::Approx(0.0041073174849594494).epsilon(1e-13));
    CHECK(c.c22 == doctest::Approx(0.0002876853922680056).epsilon(1e-12));
}

TEST_CASE("covariance closed forms match quadrature across the grid") {
    for (double lambda : {1e-3, 1e-2, 1e-1}) {
        for (double gamma : {0.5, 1.0, 2.0, 5.0, 28.117}) {
            Cov2 c = noise_covariance(lambda, gamma);
            auto i11 = [gamma](double u) { return std::exp(-2.0 * gamma * u); };
            auto i12 = [gamma](double u) {
                return std::exp(-gamma * u) * -std::expm1(-gamma * u) / gamma;
            };
            auto i22 = [gamma](double u) {
                double w = -std::expm1(-gamma * u) / gamma;
                return w * w;
            };
            double q11 = simpson(i11, 0.0, lambda, 4096);
            double q12 = simpson(i12, 0.0, lambda, 4096);
            double q22 = simpson(i22, 0.0, lambda, 4096);
            CHECK(c.c11 == doctest::Approx(q11).epsilon(1e-10));
            CHECK(c.c12 == doctest::Approx(q12).epsilon(1e-10));
            CHECK(c.c22 == doctest::Approx(q22).epsilon(1e-10));
        }
    }
}

TEST_CASE("C12 product form equals the textbook difference form") {
    for (double lambda : {1e-2, 1e-1, 0.25}) {
        for (double gamma : {0.5, 2.0, 5.0}) {
            Cov2 c = noise_covariance(lambda, gamma);
            double eta = std::exp(-lambda * gamma);
            double diff_form = (1.0 - eta) / (gamma * gamma) -
                               (1.0 - eta * eta) / (2.0 * gamma * gamma);
            CHECK(c.c12 == doctest::Approx(diff_form).epsilon(1e-14));
        }
    }
}

TEST_CASE("C22 series and direct branches agree at the crossover") {
    // x = lambda*gamma near 0.01 evaluates on both sides of the branch
    double below = noise_covariance(0.00999 / 2.0, 2.0).c22;
    double above = noise_covariance(0.01001 / 2.0, 2.0).c22;
    auto i22 = [](double u) {
        double w = -std::expm1(-2.0 * u) / 2.0;
        return w * w;
    };
    CHECK(below == doctest::Approx(simpson(i22, 0.0, 0.00999 / 2.0, 4096)).epsilon(1e-12));
    CHECK(above == doctest::Approx(simpson(i22, 0.0, 0.01001 / 2.0, 4096)).epsilon(1e-12));
}

TEST_CASE("scheme parameters wire the Cholesky factor and derived constants") {
    SchemeParams sp = SchemeParams::make(0.1, 2.0, 1.0, 0.5);
    CHECK(sp.chol11 * sp.chol11 == doctest::Approx(sp.c11).epsilon(1e-15));
    CHECK(sp.chol11 * sp.chol21 == doctest::Approx(sp.c12).epsilon(1e-15));
    CHECK(sp.chol21 * sp.chol21 + sp.chol22 * sp.chol22 ==
          doctest::Approx(sp.c22).epsilon(1e-13));
    CHECK(sp.eta == doctest::Approx(std::exp(-0.2)).epsilon(1e-15));
    CHECK(sp.eta_half == doctest::Approx(std::exp(-0.1)).epsilon(1e-15));
    CHECK(sp.ou_half ==
          doctest::Approx(std::sqrt(1.0 - std::exp(-0.2))).epsilon(1e-14));
    CHECK(sp.sqrt_2gamma == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(sp.a == doctest::Approx(1.0));
    CHECK(sp.b == doctest::Approx(0.5));
    CHECK(sp.f_lambda == doctest::Approx(0.5 * 0.1 / 8.0).epsilon(1e-15));
    CHECK(sp.kappa == doctest::Approx(0.5 / 6.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)SchemeParams::make(0.0, 1.0, 1.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)SchemeParams::make(0.1, -1.0, 1.0, 0.5),
                    std::invalid_argument);
}

TEST_CASE("sampled noise pairs reproduce the covariance") {
    SchemeParams sp = SchemeParams::make(0.1, 2.0, 1.0, 0.5);
    NoiseStream ns(7, stream_id(domain::kNoiseMC, 1));
    const long n = 1000000;
    double s11 = 0, s12 = 0, s22 = 0;
    double xi, xp;
    for (long i = 0; i < n; ++i) {
        sample_noise_pair(ns, sp, 1, &xi, &xp);
        s11 += xi * xi;
        s12 += xi * xp;
        s22 += xp * xp;
    }
    s11 /= n;
    s12 /= n;
    s22 /= n;
    double se11 = std::sqrt(2.0 / n) * sp.c11;
    double se22 = std::sqrt(2.0 / n) * sp.c22;
    double se12 = std::sqrt((sp.c11 * sp.c22 + sp.c12 * sp.c12) / n);
    CHECK(std::abs(s11 - sp.c11) < 5.0 * se11);
    CHECK(std::abs(s12 - sp.c12) < 5.0 * se12);
    CHECK(std::abs(s22 - sp.c22) < 5.0 * se22);
}

TEST_CASE("friction regimes and auto gamma") {
    CHECK(auto_gamma(Scheme::Exponential, 4.0) == doctest::Approx(10.0));
    CHECK(auto_gamma(Scheme::Obabo, 4.0) == doctest::Approx(4.0));
    SchemeParams ok = SchemeParams::make(1e-3, 10.0, 4.0, 0.5);
    CHECK_NOTHROW(require_exponential_regime(ok));
    SchemeParams weak = SchemeParams::make(1e-3, 9.0, 4.0, 0.5);
    CHECK_THROWS_AS(require_exponential_regime(weak), RegimeError);
    SchemeParams coarse = SchemeParams::make(0.06, 10.0, 4.0, 0.5);
    CHECK_THROWS_AS(require_exponential_regime(coarse), RegimeError);

    SchemeParams ob = SchemeParams::make(1e-5, 4.0, 4.0, 0.5);
    CHECK_NOTHROW(require_obabo_regime(ob));
    // m/(33 gamma^3) = 0.5/2112 = 2.367e-4
    SchemeParams ob_coarse = SchemeParams::make(3e-4, 4.0, 4.0, 0.5);
    CHECK_THROWS_AS(require_obabo_regime(ob_coarse), RegimeError);
    SchemeParams ob_weak = SchemeParams::make(1e-5, 3.9, 4.0, 0.5);
    CHECK_THROWS_AS(require_obabo_regime(ob_weak), RegimeError);
    // the named inequality appears in the message
    try {
        require_obabo_regime(ob_weak);
    } catch (const RegimeError& e) {
        CHECK(std::string(e.what()).find("2*sqrt(M_lambda)") != std::string::npos);
    }
}

TEST_CASE("exponential step drains energy deterministically") {
    TamedDrift td = plain_quadratic_drift();
    SchemeParams sp = SchemeParams::make(0.1, 2.0, 1.0, 0.5);
    PhaseState z{{1.0}, {0.0}};
    std::vector<double> zero = {0.0};
    PhaseState z1 = exp_step(z, td, sp, zero, zero);
    CHECK(z1.x[0] == doctest::Approx(0.9953173117305045).epsilon(1e-15));
    CHECK(z1.v[0] == doctest::Approx(-0.090634623461009).epsilon(1e-12));
}

TEST_CASE("exponential step with zero drift is exact OU free motion") {
    PotentialSpec flat;
    flat.kind = PotentialKind::Custom;
    flat.name = "flat";
    flat.dim = 1;
    flat.m = 0.0;
    flat.L = 1.0;
    flat.u_fn = [](std::span<const double>) { return 0.0; };
    flat.h_fn = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    TamedDrift td = TamedDrift::with_radii(flat, 0.1, 1e9, 1.0, 1.0);
    SchemeParams sp = SchemeParams::make(0.1, 2.0, 1.0, 0.5);
    PhaseState z{{0.7}, {-1.3}};
    std::vector<double> zero = {0.0};
    PhaseState z1 = exp_step(z, td, sp, zero, zero);
    CHECK(z1.v[0] == doctest::Approx(-1.3 * sp.psi0).epsilon(1e-15));
    CHECK(z1.x[0] == doctest::Approx(0.7 - 1.3 * sp.psi1).epsilon(1e-15));
}

TEST_CASE("obabo step at the pinned example") {
    TamedDrift td = plain_quadratic_drift();
    SchemeParams sp = SchemeParams::make(0.1, 2.0, 1.0, 0.5);
    PhaseState z{{1.0}, {0.0}};
    std::vector<double> zero = {0.0};
    PhaseState z1 = obabo_step(z, td, sp, zero, zero);
    CHECK(z1.x[0] == doctest::Approx(0.995).epsilon(1e-15));
    CHECK(z1.v[0] == doctest::Approx(-0.090257532449087).epsilon(1e-12));
}

TEST_CASE("obabo substeps equal the closed form") {
    TamedDrift td = plain_quadratic_drift();
    SchemeParams sp = SchemeParams::make(0.1, 2.0, 1.0, 0.5);
    NoiseStream ns(31, 0);
    for (int i = 0; i < 10000; ++i) {
        PhaseState z{{3.0 * ns.normal()}, {ns.normal()}};
        std::vector<double> g = {ns.normal()}, gp = {ns.normal()};
        PhaseState a = obabo_step(z, td, sp, g, gp);
        PhaseState b = obabo_closed_form(z, td, sp, g, gp);
        REQUIRE(a.x[0] == doctest::Approx(b.x[0]).epsilon(1e-12));
        REQUIRE(a.v[0] == doctest::Approx(b.v[0]).epsilon(1e-12));
    }
}

TEST_CASE("verlet map: pinned example, energy bound, and the gamma->0 limit") {
    TamedDrift td = plain_quadratic_drift();
    PhaseState z{{1.0}, {0.0}};
    PhaseState z1 = verlet_map(z, td, 0.1);
    CHECK(z1.x[0] == 0.995);
    CHECK(z1.v[0] == -0.09975);

    // symplectic: energy error stays bounded over many periods
    PhaseState w{{1.0}, {0.0}};
    double e0 = hamiltonian_energy(w, td.potential());
    double worst = 0;
    for (int i = 0; i < 2000; ++i) {
        w = verlet_map(w, td, 0.05);
        worst = std::max(worst, std::abs(hamiltonian_energy(w, td.potential()) - e0));
    }
    CHECK(worst < 1e-3);

    // OBABO with eta_half = 1 (no friction) and zero noise is exactly Verlet
    SchemeParams frictionless{};
    frictionless.lambda = 0.1;
    frictionless.eta_half = 1.0;
    frictionless.ou_half = 0.0;
    PhaseState z0{{0.37}, {-0.9}};
    std::vector<double> zero = {0.0};
    // same map, different association of the lambda factors, so compare to
    // roundoff rather than bitwise
    PhaseState a = obabo_step(z0, td, frictionless, zero, zero);
    PhaseState b = verlet_map(z0, td, 0.1);
    CHECK(a.x[0] == doctest::Approx(b.x[0]).epsilon(1e-14));
    CHECK(a.v[0] == doctest::Approx(b.v[0]).epsilon(1e-14));
}

TEST_CASE("hamiltonian reference flow on the harmonic oscillator") {
    PotentialSpec q = quadratic_potential(1.0, 1);
    PhaseState z{{1.0}, {0.0}};
    double quarter = 1.5707963267948966;
    PhaseState zq = hamiltonian_reference(z, q, quarter, 2000);
    CHECK(zq.x[0] == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(std::abs(zq.x[0]) < 1e-8);
    CHECK(zq.v[0] == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(hamiltonian_energy(zq, q) == doctest::Approx(0.5).epsilon(1e-10));

    // tamed variant with far-out radii is the same flow on the core
    TamedDrift td = plain_quadratic_drift();
    PhaseState zt = hamiltonian_reference_tamed(z, td, quarter, 2000);
    CHECK(zt.x[0] == doctest::Approx(zq.x[0]).epsilon(1e-13));
    CHECK(zt.v[0] == doctest::Approx(zq.v[0]).epsilon(1e-13));
}

TEST_CASE("coordinate maps: pinned values and round trips") {
    PhaseState z{{1.0}, {3.0}};
    VecPair m = coord_map_M(z, 2.0);
    CHECK(m.first[0] == 1.0);
    CHECK(m.second[0] == 4.0);
    PhaseState zm = coord_map_M_inverse(m, 2.0);
    CHECK(zm.x[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(zm.v[0] == doctest::Approx(3.0).epsilon(1e-15));

    PhaseState s{{0.0}, {1.0}};
    VecPair w = coord_map_S(s, 4.0, 1.0);
    CHECK(w.first[0] == doctest::Approx(1.0));
    CHECK(w.second[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK_THROWS_AS((void)coord_map_S(s, 1.0, 1.0), std::invalid_argument);

    NoiseStream ns(3, 0);
    for (int i = 0; i < 1000; ++i) {
        PhaseState r{{ns.normal(), ns.normal()}, {ns.normal(), ns.normal()}};
        PhaseState rm = coord_map_M_inverse(coord_map_M(r, 3.7), 3.7);
        PhaseState rs = coord_map_S_inverse(coord_map_S(r, 2.0, 0.6), 2.0, 0.6);
        for (int j = 0; j < 2; ++j) {
            REQUIRE(rm.x[j] == doctest::Approx(r.x[j]).epsilon(1e-14));
            REQUIRE(rm.v[j] == doctest::Approx(r.v[j]).epsilon(1e-14));
            REQUIRE(rs.x[j] == doctest::Approx(r.x[j]).epsilon(1e-14));
            REQUIRE(rs.v[j] == doctest::Approx(r.v[j]).epsilon(1e-14));
        }
    }
}

TEST_CASE("mean map: drift-free form, fixed point, and linear case") {
    SchemeParams sp = SchemeParams::make(0.1, 2.0, 1.0, 0.5);

    PotentialSpec flat;
    flat.kind = PotentialKind::Custom;
    flat.name = "flat";
    flat.dim = 1;
    flat.m = 0.0;
    flat.L = 1.0;
    flat.u_fn = [](std::span<const double>) { return 0.0; };
    flat.h_fn = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    TamedDrift zero_drift = TamedDrift::with_radii(flat, 0.1, 1e9, 1.0, 1.0);
    VecPair in{{0.3}, {-0.7}};
    VecPair out = mean_map_Fbar(in, zero_drift, sp);
    double om = 1.0 - sp.eta;
    CHECK(out.first[0] ==
          doctest::Approx(0.3 + 0.5 * om * (-1.0)).epsilon(1e-15));
    CHECK(out.second[0] ==
          doctest::Approx(0.3 + 0.5 * (1.0 + sp.eta) * (-1.0)).epsilon(1e-15));

    TamedDrift td = plain_quadratic_drift();
    VecPair fo = mean_map_Fbar({{0.0}, {0.0}}, td, sp);
    CHECK(fo.first[0] == 0.0);
    CHECK(fo.second[0] == 0.0);

    // linear target: phi-derivatives carry the c-minus/c-plus split
    double c_minus = (sp.lambda - om / sp.gamma) / sp.gamma;
    double c_plus = (sp.lambda + om / sp.gamma) / sp.gamma;
    VecPair e1 = mean_map_Fbar({{1.0}, {0.0}}, td, sp);
    CHECK(e1.first[0] ==
          doctest::Approx(1.0 - 0.5 * om - c_minus).epsilon(1e-14));
    CHECK(e1.second[0] ==
          doctest::Approx(1.0 - 0.5 * (1.0 + sp.eta) - c_plus).epsilon(1e-14));
}

TEST_CASE("sigma bar entries follow their small-step expansions") {
    double lambda = 1e-3, gamma = 2.0;
    Sym2 s = sigma_bar(lambda, gamma);
    CHECK(s.s11 == doctest::Approx(2.0 / 3.0 * gamma * std::pow(lambda, 3)).epsilon(5e-3));
    CHECK(s.s12 == doctest::Approx(2.0 * lambda * lambda).epsilon(5e-3));
    CHECK(s.s22 ==
          doctest::Approx(4.0 * lambda / gamma + 2.0 * lambda * lambda).epsilon(5e-3));
    double ratio = sym2_opnorm(sigma_bar(1e-2, 2.0)) / (4.0 * 1e-2 / 2.0);
    CHECK(ratio == doctest::Approx(1.0098).epsilon(2e-3));

    Sym2 diag{3.0, 0.0, -5.0};
    CHECK(sym2_opnorm(diag) == doctest::Approx(5.0).epsilon(1e-15));
    Sym2 offd{0.0, 2.0, 0.0};
    CHECK(sym2_opnorm(offd) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("run_chain records at the thinning stride and stays replayable") {
    TamedDrift td = plain_quadratic_drift();
    SchemeParams sp = SchemeParams::make(0.01, 2.0, 1.0, 0.5);
    PhaseState z{{2.0}, {0.0}};
    NoiseStream ns(11, stream_id(domain::kSample, 0));
    RunRecord rec = run_chain(z, td, sp, Scheme::Obabo, 105, ns, 20);
    CHECK(rec.steps == std::vector<long>{0, 20, 40, 60, 80, 100, 105});
    CHECK(rec.x.size() == rec.steps.size());
    CHECK(rec.x[0] == 2.0);
    CHECK(rec.final_state.x[0] == rec.x.back());

    NoiseStream ns2(11, stream_id(domain::kSample, 0));
    RunRecord rec2 = run_chain(z, td, sp, Scheme::Obabo, 105, ns2, 20);
    CHECK(rec2.final_state.x[0] == rec.final_state.x[0]);
    CHECK(rec2.final_state.v[0] == rec.final_state.v[0]);
}

TEST_CASE("run_chain reports the step of a numerical blowup") {
    PotentialSpec evil;
    evil.kind = PotentialKind::Custom;
    evil.name = "evil";
    evil.dim = 1;
    evil.m = 0.5;
    evil.L = 1.0;
    evil.u_fn = [](std::span<const double>) { return 0.0; };
    evil.h_fn = [](std::span<const double>, std::span<double> out) {
        out[0] = std::numeric_limits<double>::quiet_NaN();
    };
    TamedDrift td = TamedDrift::with_radii(evil, 0.01, 1e9, 1.0, 1.0);
    SchemeParams sp = SchemeParams::make(0.01, 2.0, 1.0, 0.5);
    PhaseState z{{1.0}, {0.0}};
    NoiseStream ns(1, 0);
    try {
        (void)run_chain(z, td, sp, Scheme::Exponential, 10, ns, 1);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(e.step == 1);
    }
}

TEST_CASE("coupled run with identical starts never separates") {
    TamedDrift td = plain_quadratic_drift();
    SchemeParams sp = SchemeParams::make(0.01, 2.0, 1.0, 0.5);
    PhaseState z{{1.5}, {-0.5}};
    NoiseStream ns(13, stream_id(domain::kContraction, 0));
    CoupledRecord rec = run_coupled(z, z, td, sp, Scheme::Exponential, 200, ns);
    CHECK(rec.initial_sq == 0.0);
    CHECK(rec.final_sq == 0.0);
    CHECK(rec.n_ratios == 0);
    CHECK(rec.n_below_floor == 200);
}

TEST_CASE("coupled run under synchronous noise contracts the quadratic pair") {
    TamedDrift td = plain_quadratic_drift();
    SchemeParams sp = SchemeParams::make(0.01, 10.0, 1.0, 0.5);
    PhaseState za{{2.0}, {1.0}}, zb{{-1.0}, {0.5}};
    NoiseStream ns(13, stream_id(domain::kContraction, 1));
    CoupledRecord rec =
        run_coupled(za, zb, td, sp, Scheme::Exponential, 2000, ns, true);
    CHECK(rec.final_sq < rec.initial_sq);
    CHECK(rec.ratios.size() == 2000);
    CHECK(rec.max_ratio < 1.0);
    CHECK(rec.worst_step >= 1);
    CHECK(rec.mean_log_ratio < 0.0);
}
