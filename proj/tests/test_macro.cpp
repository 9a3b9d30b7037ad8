#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/functionals.hpp"
#include "bdssep/heat.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"

using namespace bdssep;

namespace {

DensityProfile make_bump(int mesh, double base, double amp, double center, double width) {
    DensityProfile g(mesh, base);
    for (int j = 0; j <= mesh; ++j) {
        const double t = (g.x(j) - center) / width;
        g.values[j] = base + amp * std::exp(-t * t);
    }
    return g;
}

// Stationary profile plus an interior hump that vanishes at both ends, so
// pinning the boundary columns introduces no jump (pure Crank-Nicolson
// oscillates out of [0,1] on boundary-incompatible data).
DensityProfile make_pinned_bump(int mesh, const ModelParams& p, double amp) {
    DensityProfile g = stationary_profile(p, mesh);
    for (int j = 0; j <= mesh; ++j) {
        const double s = std::sin(std::numbers::pi * g.x(j));
        g.values[j] += amp * s * s;
    }
    return g;
}

}  // namespace

TEST_CASE("heat flow fixes the linear stationary profile") {
    const ModelParams p{8, 0.2, 0.8};
    const DensityProfile rho = stationary_profile(p, 100);
    const SpaceTimePath u = heat_solve(rho, p, 1.0, 50, 100);
    for (int n = 0; n <= u.steps; ++n)
        for (int j = 0; j <= u.mesh; ++j)
            REQUIRE(u.at(n, j) == Catch::Approx(rho.values[j]).margin(1e-12));
    REQUIRE(u.boundary_pinned());
}

TEST_CASE("heat flow relaxes any start to the stationary profile") {
    const ModelParams p{8, 0.2, 0.8};
    const DensityProfile one(200, 1.0);
    const SpaceTimePath u = heat_solve(one, p, 2.0, 200, 200);
    const DensityProfile rho = stationary_profile(p, 200);
    double sup = 0.0;
    for (int j = 0; j <= 200; ++j) sup = std::max(sup, std::abs(u.at(200, j) - rho.values[j]));
    REQUIRE(sup <= 1e-3);
}

TEST_CASE("heat solution respects the range of its data") {
    const ModelParams p{16, 0.2, 0.8};
    // Worst case: alternating step data from a checkerboard configuration.
    Configuration eta = Configuration::empty(15);
    for (int s = 1; s <= 15; s += 2) eta.flip(s);
    const DensityProfile gamma = empirical_profile(eta, p, 128);
    const SpaceTimePath u = heat_solve(gamma, p, 0.01, 4, 128);
    for (double v : u.values) {
        REQUIRE(v >= -1e-6);
        REQUIRE(v <= 1.0 + 1e-6);
    }
}

TEST_CASE("path containers reverse and slice correctly") {
    const ModelParams p{8, 0.3, 0.5};
    const DensityProfile g = make_bump(40, 0.3, 0.2, 0.4, 0.1);
    const SpaceTimePath u = heat_solve(g, p, 0.5, 20, 40);
    const SpaceTimePath w = u.time_reversed();
    for (int n = 0; n <= 20; ++n)
        for (int j = 0; j <= 40; ++j) REQUIRE(w.at(n, j) == u.at(20 - n, j));
    const DensityProfile s0 = u.slice(0);
    REQUIRE(s0.values[0] == p.alpha);
    REQUIRE(s0.values[40] == p.beta);
    for (int j = 1; j < 40; ++j) REQUIRE(s0.values[j] == g.values[j]);
    REQUIRE_THROWS_AS(u.slice(21), error);

    TestField f(4, 8);
    f.at(2, 0) = 0.1;
    REQUIRE_THROWS_AS(f.check_pinned(), error);
}

TEST_CASE("heat solver validates its inputs") {
    const ModelParams p{8, 0.2, 0.8};
    REQUIRE_THROWS_AS(heat_solve(DensityProfile(50, 0.5), p, 1.0, 10, 60), error);
    HeatOptions opts;
    opts.damped_start_steps = 11;
    REQUIRE_THROWS_AS(heat_solve(DensityProfile(60, 0.5), p, 1.0, 10, 60, opts), error);
    REQUIRE_THROWS_AS(heat_solve(DensityProfile(60, 1.5), p, 1.0, 10, 60), error);
}

TEST_CASE("energy of the constant stationary path has the closed form") {
    const ModelParams p{8, 0.2, 0.8};
    const double T = 0.7;
    const SpaceTimePath u = SpaceTimePath::constant(stationary_profile(p, 200), T, 5, p.alpha, p.beta);
    // (1/2) grad^2 int dx/chi = 0.18 * (2 ln 4)/0.6 per unit time.
    const double expect = T * 0.18 * (2.0 * std::log(4.0) / 0.6);
    const EnergyResult q = energy(u);
    REQUIRE(q.finite);
    REQUIRE(q.value == Catch::Approx(expect).epsilon(1e-3));
}

TEST_CASE("energy vanishes only on flat profiles and flags degenerate cells") {
    const SpaceTimePath flat = SpaceTimePath::constant(DensityProfile(50, 0.4), 1.0, 4, 0.4, 0.4);
    const EnergyResult q0 = energy(flat);
    REQUIRE(q0.finite);
    REQUIRE(q0.value == 0.0);

    // A vanishing-mobility cell against a genuine gradient is infinite.
    SpaceTimePath u(1.0, 1, 1000, 0.2, 0.8);
    u.at(0, 5) = 2e-12;
    u.at(1, 5) = 2e-12;
    const EnergyResult qi = energy(u);
    REQUIRE_FALSE(qi.finite);
    REQUIRE(std::isinf(qi.value));
}

TEST_CASE("weak-form functional vanishes on the zero field and is concave") {
    const ModelParams p{8, 0.2, 0.8};
    const DensityProfile g = make_bump(60, 0.3, 0.3, 0.5, 0.12);
    const SpaceTimePath u = heat_solve(g, p, 0.5, 30, 60);

    TestField zero(30, 60);
    REQUIRE(j_functional(u, u.slice(0), zero, p) == 0.0);

    TestField h1(30, 60), h2(30, 60), mid(30, 60);
    for (int n = 0; n <= 30; ++n)
        for (int j = 1; j < 60; ++j) {
            const double x = j / 60.0, t = n / 30.0;
            h1.at(n, j) = 0.3 * std::sin(std::numbers::pi * x) * (1.0 + t);
            h2.at(n, j) = 0.2 * std::sin(2 * std::numbers::pi * x) * std::cos(t);
            mid.at(n, j) = 0.5 * (h1.at(n, j) + h2.at(n, j));
        }
    const double j1 = j_functional(u, u.slice(0), h1, p);
    const double j2 = j_functional(u, u.slice(0), h2, p);
    const double jm = j_functional(u, u.slice(0), mid, p);
    REQUIRE(jm >= 0.5 * (j1 + j2) - 1e-12);
}

TEST_CASE("undamped relaxation paths cost exactly nothing") {
    const ModelParams p{16, 0.2, 0.8};
    const DensityProfile g = make_pinned_bump(100, p, 0.15);
    HeatOptions opts;
    opts.damped_start_steps = 0;
    const SpaceTimePath u = heat_solve(g, p, 1.0, 100, 100, opts);
    const RateFunctionalResult r = rate_functional(u, u.slice(0), p);
    REQUIRE(r.finite);
    REQUIRE(r.value <= 1e-12);
    REQUIRE(r.value >= 0.0);
    REQUIRE(std::abs(r.certificate_gap) <= 1e-10);
    REQUIRE(r.slice_cost.size() == 100);
}

TEST_CASE("certificate field attains the rate value and is optimal") {
    const ModelParams p{16, 0.2, 0.8};
    const DensityProfile g = make_bump(80, 0.25, 0.4, 0.45, 0.15);
    HeatOptions opts;
    opts.damped_start_steps = 0;
    SpaceTimePath u = heat_solve(g, p, 0.8, 64, 80, opts);

    // Push the path off the heat flow so the rate is genuinely positive.
    for (int n = 1; n <= u.steps; ++n)
        for (int j = 1; j < u.mesh; ++j) {
            const double v = u.at(n, j) +
                             0.05 * std::sin(std::numbers::pi * j / double(u.mesh)) *
                                 std::sin(std::numbers::pi * n / double(u.steps));
            u.at(n, j) = std::min(0.99, std::max(0.01, v));
        }

    const RateFunctionalResult r = rate_functional(u, u.slice(0), p);
    REQUIRE(r.finite);
    REQUIRE(r.value > 1e-4);
    REQUIRE(std::abs(r.certificate_gap) <= 1e-8 * std::max(1.0, r.value));

    const double at_cert = j_functional(u, u.slice(0), r.certificate, p);
    REQUIRE(at_cert == Catch::Approx(r.value).margin(1e-8));

    // Any perturbation of the certificate can only lower the functional.
    TestField bent = r.certificate;
    for (int n = 0; n <= bent.steps; ++n)
        for (int j = 1; j < bent.mesh; ++j)
            bent.at(n, j) += 0.01 * std::sin(2 * std::numbers::pi * j / double(bent.mesh));
    REQUIRE(j_functional(u, u.slice(0), bent, p) <= r.value + 1e-8);
}

TEST_CASE("reversed relaxation costs the forward dissipation when reversible") {
    const ModelParams p{16, 0.3, 0.3};
    const DensityProfile g = make_bump(200, 0.3, 0.4, 0.5, 0.15);
    HeatOptions opts;
    opts.damped_start_steps = 0;
    const SpaceTimePath u = heat_solve(g, p, 1.0, 200, 200, opts);
    const SpaceTimePath w = u.time_reversed();
    const RateFunctionalResult r = rate_functional(w, w.slice(0), p);
    const EnergyResult q = energy(u);
    REQUIRE(r.finite);
    REQUIRE(q.finite);
    REQUIRE(r.value == Catch::Approx(q.value).epsilon(2e-3));
}

TEST_CASE("reversed relaxation is strictly cheaper out of equilibrium") {
    const ModelParams p{16, 0.2, 0.8};
    const DensityProfile g = make_pinned_bump(200, p, 0.2);
    HeatOptions opts;
    opts.damped_start_steps = 0;
    const SpaceTimePath u = heat_solve(g, p, 1.0, 200, 200, opts);
    const SpaceTimePath w = u.time_reversed();
    const RateFunctionalResult r = rate_functional(w, w.slice(0), p);
    const EnergyResult q = energy(w);
    REQUIRE(r.finite);
    REQUIRE(r.value <= q.value + 1e-9);
    REQUIRE(r.value < 0.7 * q.value);
}

TEST_CASE("rate functional rejects malformed paths") {
    const ModelParams p{8, 0.2, 0.8};
    const DensityProfile g = make_bump(40, 0.3, 0.3, 0.5, 0.1);

    // Boundary columns not pinned at the reservoir densities.
    const SpaceTimePath bad = SpaceTimePath::constant(g, 1.0, 10, p.alpha, p.beta);
    REQUIRE_THROWS_AS(rate_functional(bad, g, p), error);

    // Start slice disagrees with the declared initial profile.
    const SpaceTimePath u = heat_solve(g, p, 1.0, 10, 40);
    DensityProfile other = g;
    other.values[20] += 0.2;
    REQUIRE_THROWS_AS(rate_functional(u, other, p), error);

    // Values outside the unit interval.
    SpaceTimePath wild = u;
    wild.at(5, 20) = 1.5;
    REQUIRE_THROWS_AS(rate_functional(wild, u.slice(0), p), error);
}

TEST_CASE("rate functional is stable under grid refinement") {
    const ModelParams p{16, 0.3, 0.3};
    HeatOptions opts;
    opts.damped_start_steps = 0;

    auto reversed_rate = [&](int steps, int mesh) {
        const DensityProfile g = make_bump(mesh, 0.3, 0.4, 0.5, 0.15);
        const SpaceTimePath u = heat_solve(g, p, 1.0, steps, mesh, opts);
        const SpaceTimePath w = u.time_reversed();
        return rate_functional(w, w.slice(0), p).value;
    };
    const double coarse = reversed_rate(100, 100);
    const double fine = reversed_rate(200, 200);
    REQUIRE(coarse == Catch::Approx(fine).epsilon(0.05));
}
