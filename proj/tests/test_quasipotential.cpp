#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/heat.hpp"
#include "bdssep/metric.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"
#include "bdssep/quasipotential.hpp"

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

}  // namespace

TEST_CASE("lower bound is the boundary-relative entropy") {
    const ModelParams p{6, 0.3, 0.3};
    REQUIRE(quasipotential_lower_bound(stationary_profile(p, 100), p) == 0.0);

    // Flat one-half profile against flat 0.3: the Bernoulli divergence.
    const double expect = 0.5 * std::log(0.5 / 0.3) + 0.5 * std::log(0.5 / 0.7);
    REQUIRE(quasipotential_lower_bound(DensityProfile(200, 0.5), p) ==
            Catch::Approx(expect).margin(1e-12));
    REQUIRE(expect == Catch::Approx(0.0871766).margin(1e-6));
}

TEST_CASE("lower bound dominates the quadratic distance and handles extremes") {
    const ModelParams p{8, 0.2, 0.8};
    const DensityProfile rho = stationary_profile(p, 160);
    const DensityProfile g = make_bump(160, 0.3, 0.45, 0.4, 0.2);
    double quad = 0.0;
    for (int j = 0; j <= 160; ++j) {
        const double d = g.values[j] - rho.values[j];
        quad += quad_weight(j, 160) * d * d;
    }
    REQUIRE(quasipotential_lower_bound(g, p) >= 2.0 * quad - 1e-12);

    // Zero-one valued profiles are fine: 0 log 0 counts as zero.
    const DensityProfile hard = empirical_profile(Configuration::from_occupancy({1, 0, 1, 0, 1, 0, 1}), p, 160);
    const double v = quasipotential_lower_bound(hard, p);
    REQUIRE(std::isfinite(v));
    REQUIRE(v > 0.0);
}

TEST_CASE("estimate at the stationary profile is zero") {
    const ModelParams p{8, 0.2, 0.8};
    const QuasipotentialResult r = quasipotential_estimate(stationary_profile(p, 200), p, 1.0, 50, 200);
    REQUIRE(r.converged);
    REQUIRE(r.value <= 1e-10);
    REQUIRE(r.path.steps == 50);
    REQUIRE(r.path.boundary_pinned(1e-12));
}

TEST_CASE("reversible estimate brackets the entropy value from above") {
    const ModelParams p{6, 0.3, 0.3};
    const DensityProfile g(200, 0.5);
    const double entropy = quasipotential_lower_bound(g, p);
    const QuasipotentialResult r = quasipotential_estimate(g, p, 2.0, 100, 200);
    REQUIRE(r.value >= entropy - 2e-3);
    REQUIRE(r.value <= entropy + 5e-2);

    // The optimizing path starts at the stationary profile and ends at g.
    const DensityProfile rho = stationary_profile(p, 200);
    for (int j = 1; j < 200; ++j) {
        REQUIRE(r.path.at(0, j) == rho.values[j]);
        REQUIRE(r.path.at(100, j) == g.values[j]);
    }
}

TEST_CASE("horizon ladder keeps the cheapest rung") {
    const ModelParams p{6, 0.3, 0.3};
    const DensityProfile g = make_bump(60, 0.3, 0.25, 0.5, 0.15);
    const QuasipotentialResult a = quasipotential_estimate(g, p, 0.5, 25, 60);
    const QuasipotentialResult b = quasipotential_estimate(g, p, 2.0, 100, 60);
    const QuasipotentialResult best = quasipotential_over_ladder(g, p, {0.5, 2.0}, 50, 60);
    REQUIRE(best.value == std::min(a.value, b.value));
    REQUIRE_THROWS_AS(quasipotential_over_ladder(g, p, {}, 50, 60), error);
}

TEST_CASE("descent options are validated and honored") {
    const ModelParams tight{6, 1e-5, 0.5};
    REQUIRE_THROWS_AS(quasipotential_estimate(DensityProfile(40, 0.4), tight, 1.0, 20, 40), error);

    const ModelParams p{6, 0.3, 0.3};
    const DensityProfile g = make_bump(40, 0.3, 0.25, 0.5, 0.15);
    DescentOptions opts;
    opts.max_iters = 0;
    const QuasipotentialResult frozen = quasipotential_estimate(g, p, 0.5, 20, 40, opts);
    REQUIRE(frozen.iterations == 0);
    REQUIRE_FALSE(frozen.converged);

    opts.max_iters = 2;
    const QuasipotentialResult two = quasipotential_estimate(g, p, 0.5, 20, 40, opts);
    REQUIRE(two.iterations <= 2);
    REQUIRE(two.value <= frozen.value + 1e-12);
}

TEST_CASE("descent gradient matches finite differences of the objective") {
    const ModelParams p{16, 0.3, 0.5};
    const DensityProfile g = make_bump(12, 0.35, 0.3, 0.5, 0.2);
    SpaceTimePath u = heat_solve(g, p, 0.5, 6, 12);
    for (int n = 1; n <= u.steps; ++n)
        for (int j = 1; j < u.mesh; ++j) {
            const double v = u.at(n, j) + 0.05 * std::sin(2.1 * n + 1.3 * j);
            u.at(n, j) = std::min(0.95, std::max(0.05, v));
        }
    // The perturbed path is a generic descent candidate, not a solver orbit.
    u.damped_prefix = 0;

    std::vector<std::vector<double>> gbars;
    detail::descent_objective(u, gbars);
    std::vector<double> grad;
    detail::descent_gradient(u, gbars, grad);
    REQUIRE(grad.size() == std::size_t(u.steps - 1) * (u.mesh - 1));

    const double eps = 1e-5;
    double worst = 0.0;
    for (int m = 1; m < u.steps; ++m)
        for (int j = 1; j < u.mesh; ++j) {
            SpaceTimePath up = u, dn = u;
            up.at(m, j) += eps;
            dn.at(m, j) -= eps;
            std::vector<std::vector<double>> tmp;
            const double f_up = detail::descent_objective(up, tmp);
            const double f_dn = detail::descent_objective(dn, tmp);
            const double numeric = (f_up - f_dn) / (2 * eps);
            const double analytic = grad[std::size_t(m - 1) * (u.mesh - 1) + (j - 1)];
            worst = std::max(worst, std::abs(analytic - numeric) / (1.0 + std::abs(numeric)));
        }
    REQUIRE(worst <= 1e-4);
}

TEST_CASE("profile samples stay inside the set and are deterministic") {
    const ModelParams p{6, 0.3, 0.3};
    ProfileSet s;
    s.center = make_bump(60, 0.3, 0.25, 0.5, 0.15);
    s.radius = 0.06;

    const auto a = sample_profiles_in_set(s, 60, 6, 2024);
    const auto b = sample_profiles_in_set(s, 60, 6, 2024);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() >= 2);  // center plus at least one perturbation
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].values == b[i].values);
        REQUIRE(in_set(a[i], s));
        for (double v : a[i].values) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
    for (int j = 0; j <= 60; ++j) REQUIRE(a[0].values[j] == s.center.values[j]);
}

TEST_CASE("pathspace lower bound holds for a reversed relaxation candidate") {
    const ModelParams p{6, 0.3, 0.3};
    const DensityProfile g = make_bump(60, 0.3, 0.25, 0.5, 0.15);
    HeatOptions hopts;
    hopts.damped_start_steps = 0;
    const SpaceTimePath u = heat_solve(g, p, 1.0, 40, 60, hopts);
    const SpaceTimePath w = u.time_reversed();

    ProfileSet s;
    s.center = w.slice(w.steps);
    s.radius = 0.05;

    const PathCheckReport report = pathspace_infimum_check(s, p, {w}, 1.0, 40, 5e-3, 4, 7);
    REQUIRE(report.rows.size() == 1);
    REQUIRE(report.rows[0].touches);
    REQUIRE(report.rows[0].rate_finite);
    REQUIRE(report.all_hold);
    REQUIRE(report.sampled >= 1);
    REQUIRE(std::isfinite(report.rhs));
}
