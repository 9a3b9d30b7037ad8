#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/exact.hpp"
#include "bdssep/rate_matrix.hpp"
#include "bdssep/transient.hpp"

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

TEST_CASE("two-state hitting distribution is exponential") {
    const double a = 0.3;
    const RateMatrix q = two_state(a, 0.7);
    const StateSet target = singleton(2, 1);
    Eigen::VectorXd init(2);
    init << 1.0, 0.0;

    const std::vector<double> ts = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
    const std::vector<double> cdf = hitting_cdf_exact(q, target, init, ts);
    REQUIRE(cdf.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        REQUIRE(cdf[i] == Catch::Approx(1.0 - std::exp(-a * ts[i])).margin(1e-10));

    REQUIRE(quantile_time(q, target, init) == Catch::Approx(1.0 / a).epsilon(1e-5));
    REQUIRE(worst_case_quantile_time(q, target) == Catch::Approx(1.0 / a).epsilon(1e-5));
}

TEST_CASE("initial mass on the target counts immediately") {
    const RateMatrix q = two_state(0.3, 0.7);
    const StateSet target = singleton(2, 1);
    Eigen::VectorXd init(2);
    init << 0.25, 0.75;
    const std::vector<double> cdf = hitting_cdf_exact(q, target, init, {0.0});
    REQUIRE(cdf[0] == Catch::Approx(0.75).margin(1e-14));
}

TEST_CASE("hitting cdf is monotone on the exclusion chain") {
    const ModelParams p{5, 0.2, 0.8};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    const StateSet target = singleton(q.dim(), Configuration::full(p.sites()).bits());
    const Eigen::VectorXd means = mean_hitting_times(q, target);
    double mean_from_nu = 0.0;
    for (int i = 0; i < q.dim(); ++i) mean_from_nu += nu.weights[i] * means[i];
    std::vector<double> ts;
    for (int i = 0; i <= 40; ++i) ts.push_back(3.0 * mean_from_nu * i / 40.0);
    const std::vector<double> cdf = hitting_cdf_exact(q, target, nu.weights, ts);
    for (std::size_t i = 1; i < cdf.size(); ++i) REQUIRE(cdf[i] >= cdf[i - 1] - 1e-12);
    REQUIRE(cdf.front() == Catch::Approx(nu.mass(target)).margin(1e-10));
    // Markov's inequality: P(H > 3 E[H]) <= 1/3, so the cdf must clear 2/3.
    REQUIRE(cdf.back() > 2.0 / 3.0);
}

TEST_CASE("worst-case quantile dominates the stationary-start quantile") {
    const ModelParams p{5, 0.2, 0.8};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    const StateSet target = singleton(q.dim(), Configuration::full(p.sites()).bits());
    const double theta_nu = quantile_time(q, target, nu.weights);
    const double theta_worst = worst_case_quantile_time(q, target);
    REQUIRE(theta_worst >= theta_nu * (1.0 - 1e-6));
}

TEST_CASE("uniformized semigroup rows are probability vectors") {
    const ModelParams p{4, 0.25, 0.75};
    const RateMatrix q = build_generator(p);
    const auto u = detail::uniformize(q.matrix(), q.max_exit_rate());
    const Eigen::MatrixXd m = detail::exp_dense(u, 0.7);
    REQUIRE(m.rows() == q.dim());
    for (std::int64_t i = 0; i < m.rows(); ++i) {
        REQUIRE(m.row(i).sum() == Catch::Approx(1.0).margin(1e-11));
        REQUIRE(m.row(i).minCoeff() >= -1e-13);
    }

    // Semigroup property: P_{0.7} * P_{0.7} = P_{1.4}.
    const Eigen::MatrixXd m2 = detail::exp_dense(u, 1.4);
    REQUIRE((m * m - m2).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("symmetric two-state mixing time is half log two") {
    const RateMatrix q = two_state(1.0, 1.0);
    StationaryDistribution nu;
    nu.weights = Eigen::VectorXd::Constant(2, 0.5);
    const MixingResult r = mixing_time(q, nu);
    REQUIRE(r.t_mix == Catch::Approx(0.5 * std::log(2.0)).epsilon(2e-3));
    REQUIRE_FALSE(r.trace.empty());

    // Worst-case TV distance decays along increasing probe times.
    std::vector<std::pair<double, double>> tr = r.trace;
    std::sort(tr.begin(), tr.end());
    for (std::size_t i = 1; i < tr.size(); ++i) REQUIRE(tr[i].second <= tr[i - 1].second + 1e-9);
}

TEST_CASE("two-state relaxation time is the inverse total rate") {
    const RateMatrix q = two_state(0.3, 0.7);
    const StationaryDistribution nu = solve_stationary(q);
    REQUIRE(relaxation_time(q, nu) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("exclusion chain mixing and relaxation are finite and ordered") {
    const ModelParams p{5, 0.2, 0.8};
    const RateMatrix q = build_generator(p);
    const StationaryDistribution nu = solve_stationary(q);
    const MixingResult r = mixing_time(q, nu);
    const double trel = relaxation_time(q, nu);
    REQUIRE(r.t_mix > 0.0);
    REQUIRE(trel > 0.0);
    // At threshold 1/4 the mixing time dominates ln(2) * relaxation time is
    // not guaranteed, but both must sit well below the cube of N here.
    REQUIRE(r.t_mix < p.N * p.N * p.N / 2.0);
}

TEST_CASE("size and argument guards fire") {
    const RateMatrix q = two_state(0.3, 0.7);
    Eigen::VectorXd init(2);
    init << 1.0, 0.0;
    REQUIRE_THROWS_AS(hitting_cdf_exact(q, StateSet(2, "empty"), init, {1.0}), error);
    REQUIRE_THROWS_AS((hitting_cdf_exact(q, singleton(2, 1), init, {2.0, 1.0})), error);
    REQUIRE_THROWS_AS(quantile_time(q, singleton(2, 1), Eigen::VectorXd::Ones(3)), error);
    const StationaryDistribution nu = solve_stationary(q);
    REQUIRE_THROWS_AS(mixing_time(q, nu, 0.25, 1e-3, 1), error);
}
