#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "stefan/quadrature.hpp"
#include "stefan/special.hpp"

using namespace stefan;

TEST_CASE("finite intervals against closed forms") {
    CHECK(integrate<double>([](double x) { return x * x; }, 0.0, 3.0).value == doctest::Approx(9.0).epsilon(1e-14));
    CHECK(integrate<double>([](double x) { return std::exp(-x * x); }, 0.0, 2.0).value ==
          doctest::Approx(sqrt_pi_v<double> / 2 * std::erf(2.0)).epsilon(1e-13));
    // An endpoint singularity forces many bisections.
    const auto r = integrate<double>([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.evaluations > 15);
    CHECK(integrate<double>([](double) { return 1.0; }, 2.0, 2.0).value == 0.0);
}

TEST_CASE("finite intervals against Romberg") {
    auto f = [](long double x) { return std::exp(-x) * std::cos(3 * x) / (1 + x * x); };
    const long double ref = oracle::romberg(f, 0.0L, 4.0L, 18);
    const auto r = integrate<long double>(f, 0.0L, 4.0L, {1e-16L, 1e-15L, 4000});
    CHECK(std::fabs(r.value - ref) < 1e-14L);
    const auto rd = integrate<double>([&](double x) { return static_cast<double>(f(x)); }, 0.0, 4.0);
    CHECK(std::abs(rd.value - static_cast<double>(ref)) < 1e-11);
    CHECK(rd.error < 1e-10);
}

TEST_CASE("semi-infinite integrals") {
    const auto g = integrate_to_infinity<double>([](double x) { return std::exp(-x * x); }, 0.0, 1.0);
    CHECK(g.value == doctest::Approx(sqrt_pi_v<double> / 2).epsilon(1e-13));
    CHECK(g.truncated_at > 3.0);
    CHECK(g.truncation_bound < 1e-12);

    const auto e = integrate_to_infinity<double>([](double x) { return std::exp(-0.01 * x); }, 5.0, 0.5);
    CHECK(e.value == doctest::Approx(100.0 * std::exp(-0.05)).epsilon(1e-11));

    auto f = [](long double x) { return std::exp(-x * x / 2) * (1 + x); };
    const long double ref = oracle::romberg(f, 1.0L, 5.0L, 18) + oracle::romberg(f, 5.0L, 12.0L, 18);
    const auto r = integrate_to_infinity<long double>(f, 1.0L, 0.25L, {1e-18L, 1e-16L, 4000}, 1e-17L);
    CHECK(std::fabs(r.value - ref) < 1e-15L);
}

TEST_CASE("failure modes") {
    QuadratureOptions<double> tight{1e-300, 1e-300, 16};
    CHECK_THROWS_AS(integrate<double>([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, tight), QuadratureError);
    CHECK_THROWS_AS(integrate_to_infinity<double>([](double) { return 1.0; }, 0.0, 1.0, {}, 1e-14, 20),
                    QuadratureError);
}
