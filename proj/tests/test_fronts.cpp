#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stefan/fronts.hpp"

using namespace stefan;

namespace {

FrontSystem aluminium_system() { return make_front_system(build_transformed_problem(oracle::aluminium())); }

// Nested bisection on case 1: for each ω1, ω2 from the Stefan condition, then
// bisection of the evaporation condition over ω1.
std::pair<double, double> bisection_ex1(const TransformedProblem& p) {
    using ld = long double;
    const ld a = p.a, b = p.b;
    auto c1_of = [&](ld w1, ld w2) {
        return a / oracle::kSqrtPi * (p.U2 - p.U1) / (oracle::erf_series(a * w2 / 2) - oracle::erf_series(a * w1 / 2));
    };
    auto stefan_eq = [&](ld w1, ld w2) {
        const ld c3 = b / oracle::kSqrtPi * (p.V2 - p.V0) / (-oracle::erfc_series(b * w2 / 2));
        return c1_of(w1, w2) * std::exp(-a * a * w2 * w2 / 4) + w2 * p.Hm / 2 - c3 * std::exp(-b * b * w2 * w2 / 4);
    };
    auto w2_of = [&](ld w1) {
        ld hi = 2 * w1;
        while (stefan_eq(w1, hi) < 0) hi *= 2;
        return oracle::bisect([&](ld w2) { return stefan_eq(w1, w2); }, w1 * (1 + 1e-12L), hi);
    };
    auto evap_eq = [&](ld w1) {
        const ld w2 = w2_of(w1);
        return c1_of(w1, w2) * std::exp(-a * a * w1 * w1 / 4) - (w1 * p.Hv / 2 - p.q0);
    };
    const ld w1 = oracle::bisect(evap_eq, 1e-9L * p.q0 / p.Hv, 2.0L * p.q0 / p.Hv);
    return {static_cast<double>(w1), static_cast<double>(w2_of(w1))};
}

}  // namespace

TEST_CASE("case detection follows the diffusivity kinds") {
    TransformedProblem p;
    CHECK(detect_case(p) == FrontCase::ex1_const_const);
    p.liquid_kind = p.solid_kind = DiffusivityKind::inverse_square;
    CHECK(detect_case(p) == FrontCase::ex2_invsq_invsq);
    p.liquid_kind = DiffusivityKind::constant;
    p.solid_kind = DiffusivityKind::exponential;
    CHECK(detect_case(p) == FrontCase::ex3_const_exp);
    p.liquid_kind = DiffusivityKind::exponential;
    CHECK_THROWS_AS(detect_case(p), UnsupportedDiffusivity);
    CHECK(parse_front_case("invsq_invsq") == FrontCase::ex2_invsq_invsq);
    CHECK_THROWS_AS(parse_front_case("bogus"), ValidationError);
}

TEST_CASE("aluminium residuals at the rounded published fronts are small") {
    const auto sys = aluminium_system();
    const auto r = residual_ex1(sys.problem, 0.0127, 0.0202);
    CHECK(r.max_scaled() < 0.05);
}

TEST_CASE("degenerate case 1: equal solid data leaves only the latent term") {
    TransformedProblem p;
    p.a = p.b = 1.0;
    p.U1 = p.U2 = p.V2 = p.V0 = 1.0;
    p.Hv = 2.0;
    p.Hm = 3.0;
    p.q0 = 0.5;
    const auto r = residual_ex1(p, 0.2, 0.4);
    CHECK(r.raw[0] == doctest::Approx(-(0.2 * 2.0 / 2 - 0.5)).epsilon(1e-14));
    CHECK(r.raw[1] == doctest::Approx(0.4 * 3.0 / 2).epsilon(1e-14));
}

TEST_CASE("aluminium solve matches nested bisection") {
    const auto sys = aluminium_system();
    const auto res = solve_fronts(sys);
    const auto [w1, w2] = bisection_ex1(sys.problem);
    CHECK(res.omega1 == doctest::Approx(w1).epsilon(1e-9));
    CHECK(res.omega2 == doctest::Approx(w2).epsilon(1e-9));
    CHECK(std::abs(res.omega1 - 0.0127) < 5e-4);
    CHECK(std::abs(res.omega2 - 0.0202) < 5e-4);
    CHECK(res.residual_norm < 1e-10);
    CHECK(res.used_scan);

    const auto ext = evaluate_residuals_extended(sys, res.unknowns);
    CHECK(ext.max_scaled() < 1e-9);
}

TEST_CASE("scan lands near the converged aluminium fronts") {
    const auto sys = aluminium_system();
    const auto scan = bracket_scan(sys);
    const auto res = solve_fronts(sys);
    REQUIRE(scan.guess.size() == 2);
    CHECK(std::abs(scan.guess[0] / res.omega1 - 1) < 0.2);
    CHECK(std::abs(scan.guess[1] / res.omega2 - 1) < 0.2);
    CHECK(scan.sign_change_cells >= 1);
}

TEST_CASE("manufactured case 1 roots are recovered") {
    const auto m = oracle::manufactured_ex1(1.3, 0.8, 5.0, 2.0, 2.0, 0.5, 4.0, 0.3, 0.9);
    REQUIRE(m.p.q0 > 0);
    REQUIRE(m.p.Hm > 0);
    const auto res = solve_fronts(make_front_system(m.p));
    CHECK(res.omega1 == doctest::Approx(double(m.omega1)).epsilon(1e-9));
    CHECK(res.omega2 == doctest::Approx(double(m.omega2)).epsilon(1e-9));
}

TEST_CASE("manufactured case 2 roots are recovered") {
    const auto m = oracle::manufactured_ex2(1.0, 3.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.5, 1.0);
    REQUIRE(m.p.q0 >= 0);
    REQUIRE(m.p.Hm > 0);
    REQUIRE(m.p.b > 0);
    const auto sys = make_front_system(m.p);
    const auto r = residual_ex2(m.p, double(m.tau1), double(m.tau2), double(m.nu2));
    CHECK(r.max_scaled() < 1e-13);
    const auto res = solve_fronts(sys, std::vector<double>{0.9, 1.6, 1.1});
    CHECK(res.unknowns[0] == doctest::Approx(double(m.tau1)).epsilon(1e-9));
    CHECK(res.unknowns[1] == doctest::Approx(double(m.tau2)).epsilon(1e-9));
    CHECK(res.unknowns[2] == doctest::Approx(double(m.nu2)).epsilon(1e-9));
    CHECK(res.omega1 == doctest::Approx(double(m.omega1)).epsilon(1e-9));
    CHECK(res.omega2 == doctest::Approx(double(m.omega2)).epsilon(1e-9));
    const auto scanned = solve_fronts(sys);
    CHECK(scanned.omega2 == doctest::Approx(double(m.omega2)).epsilon(1e-8));
    const auto sol = assemble_solution(sys, res);
    CHECK(sol.omega1 == doctest::Approx(double(m.omega1)).epsilon(1e-9));
}

TEST_CASE("manufactured case 3 roots are recovered") {
    const auto m = oracle::manufactured_ex3(1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 3.0, 0.5, 1.5);
    CHECK(m.p.V0 == doctest::Approx(0.388).epsilon(2e-3));
    const auto r = residual_ex3(m.p, 0.5, 1.5);
    CHECK(r.max_scaled() < 1e-9);
    REQUIRE(r.g2);
    CHECK(*r.g2 == doctest::Approx(double(m.g2)).epsilon(1e-12));
    const auto sys = make_front_system(m.p);
    const auto res = solve_fronts(sys);
    CHECK(res.unknowns[0] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(res.unknowns[1] == doctest::Approx(1.5).epsilon(1e-7));
    const auto sol = assemble_solution(sys, res);
    CHECK(sol.omega2 == doctest::Approx(double(m.omega2)).epsilon(1e-7));
}

TEST_CASE("assembled aluminium solution satisfies every boundary condition") {
    const auto sys = aluminium_system();
    const auto sol = assemble_solution(sys, solve_fronts(sys));
    for (const auto& c : boundary_residuals(sol)) {
        INFO(c.name);
        CHECK(c.scaled_residual < 1e-8);
    }
}

TEST_CASE("perturbed aluminium parameters still converge from the scan") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> f(0.7, 1.3);
    const auto base = build_transformed_problem(oracle::aluminium());
    for (int k = 0; k < 20; ++k) {
        auto p = base;
        p.q0 *= f(rng);
        p.Hv *= f(rng);
        p.Hm *= f(rng);
        p.a *= f(rng);
        p.b *= f(rng);
        const auto res = solve_fronts(make_front_system(p));
        CHECK(res.residual_norm < 1e-10);
        CHECK(res.omega2 > res.omega1);
    }
}

TEST_CASE("no flux leaves no admissible evaporation front") {
    auto p = build_transformed_problem(oracle::aluminium());
    p.q0 = 0.0;
    try {
        solve_fronts(make_front_system(p));
        FAIL("expected SolverFailure");
    } catch (const SolverFailure& e) {
        CHECK(e.kind() == SolverFailure::Kind::no_bracket);
    }
}

TEST_CASE("an inadmissible guess is reported, not silently fixed") {
    const auto sys = aluminium_system();
    CHECK_THROWS_AS(solve_fronts(sys, std::vector<double>{0.02, 0.01}), SolverFailure);
}
