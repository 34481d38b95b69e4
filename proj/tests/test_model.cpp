#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "shellflow/model.hpp"

using namespace shellflow;

namespace {

// Inviscid fixed point alpha^0_j = 2^{c/6 - cj/3} f0^{1/2}.
ShellState inviscid_fixed_point(double c, double f0, int n) {
    ShellState s;
    s.a.resize(n + 1);
    for (int j = 0; j <= n; ++j)
        s.a[j] = std::exp2(c / 6.0 - c * j / 3.0) * std::sqrt(f0);
    return s;
}

ShellState random_state(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ShellState s;
    s.a.resize(n + 1);
    for (double& v : s.a) v = u(gen);
    return s;
}

}  // namespace

TEST_CASE("parameter validation") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.f0 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.f0 = 1.0;
    p.nu = -1e-3;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.nu = 0.0;
    p.n_shells = 1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.n_shells = 8;
    p.c = 0.9;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.c = 2.6;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.c = 1.0;
    CHECK_NOTHROW(p.validate());
    CHECK_FALSE(p.c_in_proven_range());
    p.c = 2.0;
    CHECK(p.c_in_proven_range());
}

TEST_CASE("rhs: zero state moves only the forced shell") {
    ModelParams p;
    p.c = 2.0;
    p.nu = 0.1;
    p.f0 = 1.0;
    ShellState s;
    s.a.assign(9, 0.0);
    const auto d = rhs(p, s);
    CHECK(d[0] == 1.0);
    for (size_t j = 1; j < d.size(); ++j) CHECK(d[j] == 0.0);
}

TEST_CASE("rhs: hand evaluation with a single nonzero a_1") {
    // nu = 1, c = 2, f0 = 1, a_1 = 1:
    //   da_0/dt = f0 = 1 (back transfer from a_0^2 is zero, a_0 a_1 term zero)
    //   da_1/dt = -nu 2^2 a_1 = -4
    //   da_2/dt = 2^{c(2-1)} a_1^2 = 4
    ModelParams p;
    p.c = 2.0;
    p.nu = 1.0;
    p.f0 = 1.0;
    ShellState s;
    s.a.assign(9, 0.0);
    s.a[1] = 1.0;
    const auto d = rhs(p, s);
    CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d[1] == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(d[2] == doctest::Approx(4.0).epsilon(1e-15));
    for (size_t j = 3; j < d.size(); ++j) CHECK(d[j] == 0.0);
}

TEST_CASE("rhs: inviscid fixed point is stationary on interior shells") {
    ModelParams p;
    p.c = 2.0;
    p.nu = 0.0;
    p.f0 = 1.0;
    const int n = 16;
    ShellState s = inviscid_fixed_point(p.c, p.f0, n);
    const auto d = rhs(p, s);
    // Interior shells cancel exactly; the last shell feels the truncation.
    // The individual transfer terms grow like 2^{cj/3}, so compare relative
    // to the local term magnitude.
    for (int j = 0; j < n; ++j) {
        const double scale = std::exp2(p.c * j) * s.a[j] * s.a[j + 1] + p.f0;
        CHECK(std::fabs(d[j]) < 1e-14 * scale);
    }
}

TEST_CASE("rhs rejects non-finite input naming the shell") {
    ModelParams p;
    ShellState s;
    s.a.assign(6, 0.5);
    s.a[3] = std::numeric_limits<double>::quiet_NaN();
    try {
        rhs(p, s);
        FAIL("expected domain_error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
}

TEST_CASE("flux: direct arithmetic and truncation") {
    ModelParams p;
    p.c = 2.0;
    ShellState s;
    s.a.assign(8, 0.0);
    SUBCASE("zero state") {
        for (int j = 0; j <= 7; ++j) CHECK(flux(p, s, j) == 0.0);
    }
    SUBCASE("c = 2, a_3 = 2, a_4 = 1 gives Pi_3 = 2^6 * 4 * 1 = 256") {
        s.a[3] = 2.0;
        s.a[4] = 1.0;
        CHECK(flux(p, s, 3) == doctest::Approx(256.0).epsilon(1e-15));
    }
    SUBCASE("Pi_N = 0 under truncation") {
        for (double& v : s.a) v = 1.0;
        CHECK(flux(p, s, 7) == 0.0);
    }
    SUBCASE("index out of range") {
        CHECK_THROWS_AS(flux(p, s, -1), std::out_of_range);
        CHECK_THROWS_AS(flux(p, s, 8), std::out_of_range);
    }
}

TEST_CASE("flux is constant 2^{c/6} f0^{3/2} on the inviscid fixed point") {
    for (double c : {1.6, 2.0, 2.5}) {
        for (double f0 : {0.5, 1.0, 2.0}) {
            ModelParams p;
            p.c = c;
            p.f0 = f0;
            const int n = 12;
            ShellState s = inviscid_fixed_point(c, f0, n);
            const double want = std::exp2(c / 6.0) * std::pow(f0, 1.5);
            for (int j = 0; j < n; ++j)
                CHECK(flux(p, s, j) == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("energy and Sobolev norms") {
    ShellState s;
    s.a = {1.0, 0.0, 0.0};
    CHECK(energy(s) == 0.5);
    CHECK(hs_norm_sq(s, 1.0) == 1.0);

    s.a = {1.0, 1.0, 0.0};
    CHECK(hs_norm_sq(s, 1.0) == 5.0);
    CHECK(hs_norm_sq(s, 0.0) == 2.0 * energy(s));
}

TEST_CASE("energy of the inviscid fixed point matches the geometric series") {
    // E = (1/2) sum 2^{c/3} 2^{-2cj/3} = (1/2) 2^{c/3} / (1 - 2^{-2c/3}).
    const double c = 2.0;
    ShellState s = inviscid_fixed_point(c, 1.0, 60);
    const double want = 0.5 * std::exp2(c / 3.0) / (1.0 - std::exp2(-2.0 * c / 3.0));
    CHECK(energy(s) == doctest::Approx(want).epsilon(1e-13));
    CHECK(energy(s) == doctest::Approx(1.3159261743550057).epsilon(1e-13));
}

TEST_CASE("hs_norm_sq monotone in s for states dominated by shell >= 0") {
    ShellState s = random_state(10, 42);
    double prev = hs_norm_sq(s, 0.0);
    for (double sob : {0.5, 1.0, 1.5, 2.0}) {
        const double cur = hs_norm_sq(s, sob);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("telescoping energy balance vanishes on random states") {
    ModelParams p;
    p.c = 2.0;
    p.nu = 0.1;
    p.f0 = 1.0;
    for (unsigned seed = 0; seed < 20; ++seed) {
        ShellState s = random_state(7, seed);
        CHECK(std::fabs(energy_balance_residual(p, s)) < 1e-12);
    }
}

TEST_CASE("shell-wise balance: (1/2) d(a_j^2)/dt = Pi_{j-1} - Pi_j - nu 4^j a_j^2 + f_j a_j") {
    ModelParams p;
    p.c = 1.7;
    p.nu = 0.3;
    p.f0 = 2.0;
    ShellState s = random_state(9, 7);
    const auto d = rhs(p, s);
    for (int j = 0; j <= 9; ++j) {
        const double lhs = s.a[j] * d[j];
        const double pi_prev = (j > 0) ? flux(p, s, j - 1) : 0.0;
        const double fj = (j == 0) ? p.f0 : 0.0;
        const double rhs_j = pi_prev - flux(p, s, j) -
                             p.nu * std::exp2(2.0 * j) * s.a[j] * s.a[j] +
                             fj * s.a[j];
        CHECK(lhs == doctest::Approx(rhs_j).epsilon(1e-12));
    }
}

TEST_CASE("partial energy balance through each shell j") {
    // d/dt (1/2) sum_{i<=j} a_i^2 = injection - Pi_j - nu sum_{i<=j} 4^i a_i^2
    ModelParams p;
    p.c = 2.0;
    p.nu = 0.1;
    p.f0 = 1.0;
    ShellState s = random_state(8, 11);
    const auto d = rhs(p, s);
    double acc = 0.0, diss = 0.0;
    for (int j = 0; j <= 8; ++j) {
        acc += s.a[j] * d[j];
        diss += p.nu * std::exp2(2.0 * j) * s.a[j] * s.a[j];
        const double want = p.f0 * s.a[0] - flux(p, s, j) - diss;
        CHECK(acc == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("nonlinear part of rhs is quadratic") {
    ModelParams p;
    p.c = 2.0;
    p.nu = 0.0;
    p.f0 = 1.0;
    RhsOptions opt;
    ShellState s = random_state(8, 3);
    const auto d1 = rhs(p, s, opt);
    ShellState s2 = s;
    for (double& v : s2.a) v *= 2.0;
    const auto d2 = rhs(p, s2, opt);
    // With nu = 0, rhs - f is purely quadratic: N(2a) = 4 N(a).
    for (int j = 0; j <= 8; ++j) {
        const double fj = (j == 0) ? p.f0 : 0.0;
        CHECK(d2[j] - fj == doctest::Approx(4.0 * (d1[j] - fj)).epsilon(1e-12));
    }
}

TEST_CASE("flux-exponent perturbation breaks the telescoping (test hook)") {
    ModelParams p;
    p.c = 2.0;
    p.nu = 0.1;
    p.f0 = 1.0;
    ShellState s = random_state(7, 5);
    RhsOptions tampered;
    tampered.flux_exponent_shift = 0.01;
    CHECK(std::fabs(energy_balance_residual(p, s, tampered)) > 1e-6);
}

TEST_CASE("nonlinear switch-off leaves only forcing and dissipation") {
    ModelParams p;
    p.c = 2.0;
    p.nu = 0.5;
    p.f0 = 1.0;
    ShellState s = random_state(6, 9);
    RhsOptions lin;
    lin.nonlinear = false;
    const auto d = rhs(p, s, lin);
    for (int j = 0; j <= 6; ++j) {
        const double fj = (j == 0) ? p.f0 : 0.0;
        CHECK(d[j] == doctest::Approx(fj - p.nu * std::exp2(2.0 * j) * s.a[j])
                          .epsilon(1e-15));
    }
}
