#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/exact.hpp"
#include "bdssep/metric.hpp"
#include "bdssep/model.hpp"
#include "bdssep/rate_matrix.hpp"

using namespace bdssep;

namespace {

RateMatrix two_state(double a, double b) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.emplace_back(0, 1, a);
    trip.emplace_back(1, 0, b);
    return RateMatrix::from_offdiagonal_triplets(2, trip);
}

StateSet singleton(std::int64_t dim, std::int64_t i) {
    StateSet s(dim, "singleton");
    s.insert(i);
    return s;
}

}  // namespace

TEST_CASE("stationary law of the three-site chain matches the hand solution") {
    // N = 3, alpha = 0.2, beta = 0.8. Balance equations solved by hand give
    // nu(00) = nu(11) = 0.22, nu(10) = 0.18, nu(01) = 0.38 with the state
    // index equal to the occupancy bits (site 1 = lowest bit).
    const ModelParams p{3, 0.2, 0.8};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    REQUIRE(nu.weights.size() == 4);
    REQUIRE(nu.weights(0) == Catch::Approx(0.22).margin(1e-12));
    REQUIRE(nu.weights(1) == Catch::Approx(0.18).margin(1e-12));
    REQUIRE(nu.weights(2) == Catch::Approx(0.38).margin(1e-12));
    REQUIRE(nu.weights(3) == Catch::Approx(0.22).margin(1e-12));
    REQUIRE(nu.residual <= 1e-12);
    REQUIRE(nu.weights.sum() == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(nu.weights.minCoeff() > 0.0);
}

TEST_CASE("equal reservoir densities give the product Bernoulli law") {
    const ModelParams p{5, 0.3, 0.3};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    for (std::int64_t i = 0; i < q.dim(); ++i) {
        const Configuration eta = state_configuration(i, p);
        const int k = eta.particle_count();
        const double expect = std::pow(0.3, k) * std::pow(0.7, p.sites() - k);
        REQUIRE(nu.weights(i) == Catch::Approx(expect).margin(1e-13));
    }
    REQUIRE(detailed_balance_gap(q, nu) <= 1e-13);
}

TEST_CASE("unequal reservoirs break detailed balance") {
    const ModelParams p{4, 0.2, 0.8};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    REQUIRE(detailed_balance_gap(q, nu) > 1e-3);
}

TEST_CASE("adjoint chain keeps the stationary law and reverses twice to itself") {
    const ModelParams p{4, 0.25, 0.75};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    const RateMatrix adj = adjoint_rates(q, nu);

    // nu is stationary for the adjoint as well.
    Eigen::VectorXd res = adj.matrix().transpose() * nu.weights;
    REQUIRE(res.lpNorm<Eigen::Infinity>() <= 1e-13);

    const RateMatrix back = adjoint_rates(adj, nu);
    const Eigen::SparseMatrix<double> diff = back.matrix() - q.matrix();
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()));
    REQUIRE(worst <= 1e-13);
}

TEST_CASE("reversible chain equals its adjoint") {
    const ModelParams p{4, 0.4, 0.4};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    const RateMatrix adj = adjoint_rates(q, nu);
    const Eigen::SparseMatrix<double> diff = adj.matrix() - q.matrix();
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()));
    REQUIRE(worst <= 1e-12);
}

TEST_CASE("two-state chain reproduces its closed forms") {
    const double a = 0.3, b = 0.7;
    const RateMatrix q = two_state(a, b);
    const StationaryDistribution nu = solve_stationary(q);
    REQUIRE(nu.weights(0) == Catch::Approx(b / (a + b)).margin(1e-14));
    REQUIRE(nu.weights(1) == Catch::Approx(a / (a + b)).margin(1e-14));

    const StateSet A = singleton(2, 0), B = singleton(2, 1);
    const Eigen::VectorXd u = mean_hitting_times(q, B);
    REQUIRE(u(0) == Catch::Approx(1.0 / a).margin(1e-12));
    REQUIRE(u(1) == 0.0);

    // h = P[H_B < H_A]: zero on A, one on B.
    const Eigen::VectorXd h = equilibrium_potential(q, A, B);
    REQUIRE(h(0) == 0.0);
    REQUIRE(h(1) == 1.0);

    REQUIRE(capacity(q, nu, A, B) == Catch::Approx(a * b / (a + b)).margin(1e-14));
    REQUIRE(capacity(q, nu, B, A) == Catch::Approx(a * b / (a + b)).margin(1e-14));

    // r(A^c, A) with A = {1}: from state 0 the jump rate into A is a.
    REQUIRE(average_jump_rate(q, nu, B) == Catch::Approx(a).margin(1e-14));

    const RateMatrix adj = adjoint_rates(q, nu);
    const double mean_nu = nu.weights(0) * u(0);
    REQUIRE(mean_hitting_via_capacities(q, adj, nu, B) == Catch::Approx(mean_nu).margin(1e-12));
}

TEST_CASE("single-site chain fills at the combined reservoir rate") {
    const ModelParams p{2, 0.3, 0.7};
    const RateMatrix q = build_generator(p);
    const StateSet full = singleton(2, 1);
    const Eigen::VectorXd u = mean_hitting_times(q, full);
    REQUIRE(u(0) == Catch::Approx(2.0 / (p.alpha + p.beta)).margin(1e-12));
}

TEST_CASE("capacity route to the mean hitting time agrees with the direct solve") {
    const ModelParams p{6, 0.2, 0.8};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    const RateMatrix adj = adjoint_rates(q, nu);
    const StateSet A = singleton(q.dim(), Configuration::full(p.sites()).bits());

    const Eigen::VectorXd u = mean_hitting_times(q, A);
    const double direct = nu.weights.dot(u);
    const double via_cap = mean_hitting_via_capacities(q, adj, nu, A);
    REQUIRE(std::abs(via_cap - direct) <= 1e-8 * std::max(1.0, std::abs(direct)));
}

TEST_CASE("conditioned distribution renormalizes on the set") {
    const ModelParams p{4, 0.2, 0.8};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    StateSet b(q.dim(), "half");
    b.insert(0);
    b.insert(3);
    const Eigen::VectorXd mu = conditioned_distribution(nu.weights, b);
    REQUIRE(mu.sum() == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(mu(1) == 0.0);
    REQUIRE(mu(2) == 0.0);
    REQUIRE(mu(0) / mu(3) == Catch::Approx(nu.weights(0) / nu.weights(3)).margin(1e-12));

    StateSet none(q.dim(), "empty");
    REQUIRE_THROWS_AS(conditioned_distribution(nu.weights, none), error);
}

TEST_CASE("doubled chain preserves stationarity of the duplicated law") {
    const ModelParams p{4, 0.2, 0.6};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    const EnlargedChain big = enlarge(q, nu, 0.37);
    REQUIRE(big.base_dim == q.dim());
    REQUIRE(big.generator.dim() == 2 * q.dim());
    REQUIRE(big.star_of(3) == 3 + q.dim());
    REQUIRE(big.stationary.sum() == Catch::Approx(1.0).margin(1e-13));
    for (std::int64_t i = 0; i < q.dim(); ++i)
        REQUIRE(big.stationary(i) == Catch::Approx(nu.weights(i) / 2).margin(1e-15));
    const Eigen::VectorXd res = big.generator.matrix().transpose() * big.stationary;
    REQUIRE(res.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("degenerate inputs are rejected") {
    const RateMatrix q = two_state(0.3, 0.7);
    const StateSet A = singleton(2, 0), B = singleton(2, 1);
    StateSet both(2, "both");
    both.insert(0);
    both.insert(1);
    REQUIRE_THROWS_AS(equilibrium_potential(q, both, B), error);
    REQUIRE_THROWS_AS(mean_hitting_times(q, StateSet(2, "empty")), error);

    // A chain with unreachable states has no strictly positive stationary law.
    std::vector<Eigen::Triplet<double>> trip;
    trip.emplace_back(0, 1, 1.0);
    trip.emplace_back(1, 0, 1.0);
    trip.emplace_back(2, 3, 1.0);
    trip.emplace_back(3, 2, 1.0);
    const RateMatrix split = RateMatrix::from_offdiagonal_triplets(4, trip);
    REQUIRE_THROWS_AS(solve_stationary(split), error);

    REQUIRE_THROWS_AS((build_generator(ModelParams{30, 0.2, 0.8}, 1 << 20)), error);
    try {
        build_generator(ModelParams{30, 0.2, 0.8}, 1 << 20);
    } catch (const error& e) {
        REQUIRE(e.kind() == errc::capacity);
    }
}

TEST_CASE("profile ball states and their outer boundary make sense at small size") {
    const ModelParams p{8, 0.2, 0.8};
    ProfileSet s;
    s.center = stationary_profile(p, 120);
    s.radius = 0.2;
    const StateSet inside = states_in_profile_set(s, p);
    REQUIRE(inside.count() > 0);
    REQUIRE(inside.count() < inside.dim());
    const RateMatrix q = build_generator(p);
    const StateSet rim = outer_boundary(q, inside);
    REQUIRE(rim.count() > 0);
    for (std::int64_t i : rim.indices()) REQUIRE_FALSE(inside.contains(i));
}
