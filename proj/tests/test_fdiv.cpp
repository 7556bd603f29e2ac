#include "armor/fdiv.hpp"

#include "armor/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace armor;

namespace {

DivergenceSpec a2() { return DivergenceSpec::alpha_div(2.0); }

double f2(double x) { return f_eval(DivergenceSpec::alpha_div(2.0), x); }

}  // namespace

TEST_CASE("f_eval pointwise values") {
    CHECK(f_eval(DivergenceSpec::kl(), 1.0) == 0.0);
    CHECK(f_eval(a2(), 1.0) == 0.0);
    CHECK(f_eval(DivergenceSpec::kl(), -0.5) == kInf);
    CHECK(f_eval(a2(), -1e-9) == kInf);

    // Value at z = 0 is the z -> 0+ limit of (z^a - 1)/(a(a-1)).
    double limit = 0.0;
    for (double z = 1e-6; z >= 1e-9; z /= 10.0) limit = (z * z - 1.0) / 2.0;
    CHECK(f_eval(a2(), 0.0) == doctest::Approx(limit).epsilon(1e-9));
    CHECK(f_eval(a2(), 0.0) == doctest::Approx(-0.5));
    CHECK(f_eval(DivergenceSpec::kl(), 0.0) == 0.0);

    // BetaMix: beta f((z - 1 + beta)/beta).
    const DivergenceSpec mix = DivergenceSpec::beta_mix(a2(), 0.5);
    CHECK(f_eval(mix, 1.0) == doctest::Approx(0.0));
    CHECK(f_eval(mix, 2.0) == doctest::Approx(0.5 * f2(3.0)));
    CHECK(f_eval(mix, 0.2) == kInf);  // domain floor at 1 - beta
}

TEST_CASE("f_eval rejects the indicator kind and bad parameters") {
    CHECK_THROWS_AS(f_eval(DivergenceSpec::indicator(), 1.0), UnsupportedDivergenceOp);
    CHECK_THROWS_AS(DivergenceSpec::alpha_div(1.0), std::invalid_argument);
    CHECK_THROWS_AS(DivergenceSpec::alpha_div(0.5), std::invalid_argument);
    CHECK_THROWS_AS(DivergenceSpec::beta_mix(a2(), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(DivergenceSpec::beta_mix(a2(), 1.5), std::invalid_argument);
}

TEST_CASE("f_star matches the grid-search oracle") {
    const double oracle_1 = oracles::legendre_sup(f2, 1.0, 0.0, 10.0, 1e-4);
    CHECK(f_star(a2(), 1.0) == doctest::Approx(1.0));
    CHECK(f_star(a2(), 1.0) == doctest::Approx(oracle_1).epsilon(1e-6));

    const double oracle_neg = oracles::legendre_sup(f2, -3.0, 0.0, 10.0, 1e-4);
    CHECK(f_star(a2(), -3.0) == doctest::Approx(0.5));
    CHECK(f_star(a2(), -3.0) == doctest::Approx(oracle_neg).epsilon(1e-6));

    // Mixture formula composed with the oracle value f*_2(2) = 2.5.
    const DivergenceSpec mix = DivergenceSpec::beta_mix(a2(), 0.5);
    const double f2star_2 = oracles::legendre_sup(f2, 2.0, 0.0, 10.0, 1e-4);
    CHECK(f2star_2 == doctest::Approx(2.5).epsilon(1e-6));
    CHECK(f_star(mix, 2.0) == doctest::Approx(0.5 * 2.5 + 0.5 * 2.0));

    CHECK_THROWS_AS(f_star(DivergenceSpec::kl(), 1.0), UnsupportedDivergenceOp);
    CHECK_THROWS_AS(f_star(DivergenceSpec::indicator(), 1.0), UnsupportedDivergenceOp);
}

TEST_CASE("f_star_prime: finite differences, kink and mixture floor") {
    const double h = 1e-6;
    const double fd = (f_star(a2(), 1.5 + h) - f_star(a2(), 1.5 - h)) / (2.0 * h);
    CHECK(f_star_prime(a2(), 1.5) == doctest::Approx(1.5));
    CHECK(f_star_prime(a2(), 1.5) == doctest::Approx(fd).epsilon(1e-7));

    CHECK(f_star_prime(a2(), -1.0) == 0.0);
    CHECK(f_star_prime(a2(), 0.0) == 0.0);  // right derivative at the kink

    const DivergenceSpec mix = DivergenceSpec::beta_mix(a2(), 0.25);
    CHECK(f_star_prime(mix, -1.0) == doctest::Approx(0.75));
}

TEST_CASE("d_f examples") {
    Vec q(2), p(2);
    q << 0.5, 0.5;
    p << 0.25, 0.75;
    // 0.5 ln(4/3), summed at 50-digit precision.
    CHECK(d_f(DivergenceSpec::kl(), q, p) ==
          doctest::Approx(0.14384103622589046).epsilon(1e-12));

    Vec u(3);
    u << 0.2, 0.3, 0.5;
    CHECK(d_f(a2(), u, u) == 0.0);

    Vec q2(2), p2(2);
    q2 << 0.0, 1.0;
    p2 << 1.0, 0.0;
    CHECK(d_f(DivergenceSpec::kl(), q2, p2) == kInf);

    Vec bad(3);
    CHECK_THROWS_AS(d_f(DivergenceSpec::kl(), q, bad), std::invalid_argument);

    CHECK(d_f(DivergenceSpec::indicator(), u, u) == 0.0);
    Vec v = u;
    v[0] += 1e-6;
    v[1] -= 1e-6;
    CHECK(d_f(DivergenceSpec::indicator(), v, u) == kInf);
}

TEST_CASE("Fenchel-Young inequality on grids") {
    for (const DivergenceSpec& spec :
         {a2(), DivergenceSpec::alpha_div(3.0), DivergenceSpec::beta_mix(a2(), 0.5)}) {
        for (double z = -3.0; z <= 3.0; z += 0.25)
            for (double x = 0.0; x <= 5.0; x += 0.125) {
                const double fx = f_eval(spec, x);
                if (!std::isfinite(fx)) continue;
                CHECK(fx + f_star(spec, z) >= x * z - 1e-9);
            }
    }
}

TEST_CASE("f_star is nondecreasing, convex, and dominates z") {
    for (const DivergenceSpec& spec :
         {a2(), DivergenceSpec::alpha_div(2.5), DivergenceSpec::beta_mix(a2(), 0.3)}) {
        double prev = -kInf;
        for (double z = -4.0; z <= 4.0; z += 0.05) {
            const double v = f_star(spec, z);
            CHECK(v >= prev - 1e-12);
            CHECK(v >= z - 1e-12);  // since f(1) = 0
            prev = v;
        }
        for (double z = -3.9; z <= 3.9; z += 0.05) {
            const double mid = f_star(spec, z);
            const double chord = 0.5 * (f_star(spec, z - 0.05) + f_star(spec, z + 0.05));
            CHECK(mid <= chord + 1e-12);
        }
    }
}

TEST_CASE("d_f nonnegativity with equality only at q = p") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.index(3));
        Vec p(n), q(n);
        for (int i = 0; i < n; ++i) {
            p[i] = 0.05 + rng.uniform();
            q[i] = rng.uniform();
        }
        p /= p.sum();
        q /= q.sum();
        for (const DivergenceSpec& spec : {DivergenceSpec::kl(), a2()}) {
            CHECK(d_f(spec, q, p) >= 0.0);
            CHECK(d_f(spec, p, p) == doctest::Approx(0.0).epsilon(1e-15));
            if ((q - p).lpNorm<1>() > 1e-3) CHECK(d_f(spec, q, p) > 0.0);
        }
    }
}

TEST_CASE("beta = 1 mixture matches the base divergence pointwise") {
    const DivergenceSpec mix = DivergenceSpec::beta_mix(a2(), 1.0);
    for (double z = 0.0; z <= 4.0; z += 0.1)
        CHECK(std::abs(f_eval(mix, z) - f_eval(a2(), z)) <= 1e-12);
    for (double z = -2.0; z <= 2.0; z += 0.1) {
        CHECK(std::abs(f_star(mix, z) - f_star(a2(), z)) <= 1e-12);
        CHECK(std::abs(f_star_prime(mix, z) - f_star_prime(a2(), z)) <= 1e-12);
    }
}
