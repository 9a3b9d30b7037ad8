#pragma once

// The acceptance battery: fourteen checks spanning exact finite-size
// identities, closed-form bounds, simulation statistics, and macroscopic
// functionals.  Every tolerance is pinned here.  Seeds are fixed constants
// so the battery is deterministic for any worker count; the emitted JSON
// carries no timings and is byte-stable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bdssep/conditions.hpp"
#include "bdssep/coupling.hpp"
#include "bdssep/exact.hpp"
#include "bdssep/experiments.hpp"
#include "bdssep/functionals.hpp"
#include "bdssep/heat.hpp"
#include "bdssep/kmc.hpp"
#include "bdssep/metric.hpp"
#include "bdssep/observables.hpp"
#include "bdssep/quasipotential.hpp"
#include "bdssep/report.hpp"
#include "bdssep/transient.hpp"

namespace bdssep {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceSummary {
    std::vector<CriterionResult> results;

    [[nodiscard]] bool all_pass() const {
        for (const auto& r : results)
            if (!r.pass) return false;
        return true;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json out;
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : results)
            rows.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        out["criteria"] = rows;
        out["all_pass"] = all_pass();
        out["version"] = std::string(kLibraryVersion);
        return out;
    }
};

namespace accept {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Fixed rare ball for the growth-rate extrapolation: a constant plateau well
// separated from the flat stationary profile at alpha = beta = 0.3, on a
// mesh divisible by every swept system size.
inline ProfileSet scaling_ball() {
    ProfileSet s;
    s.center = DensityProfile(120, 0.65);
    s.radius = 0.12;
    s.basis = TestBasis{};
    return s;
}

// Fixed rare ball for the rate-mean product trend: a jammed plateau whose
// margins sit between the coverage edges of the swept sizes. Within radius
// 0.035 the only empirical profile at n = 6..12 is the fully occupied
// configuration (nearest distances 0.030 in, 0.041 out), so the preimage
// stays a single state across the sweep instead of picking up one-hole
// shells size by size.
inline ProfileSet jump_ball() {
    ProfileSet s;
    s.center = DensityProfile(120, 0.0);
    for (int j = 0; j <= 120; ++j) {
        const double x = s.center.x(j);
        s.center.values[static_cast<std::size_t>(j)] = (x >= 0.06 && x <= 0.94) ? 1.0 : 0.0;
    }
    s.radius = 0.035;
    s.basis = TestBasis{};
    return s;
}

struct TrendPoint {
    int n = 0;
    double mean_h = 0.0;
    double rate = 0.0;
    std::int64_t states = 0;
};

inline std::vector<TrendPoint> trend_sweep(const ProfileSet& set, double alpha, double beta,
                                           const std::vector<int>& ns, std::int64_t cap) {
    std::vector<TrendPoint> out;
    for (int n : ns) {
        ModelParams p{n, alpha, beta};
        const RateMatrix q = build_generator(p, cap);
        const StationaryDistribution nu = solve_stationary(q);
        const StateSet a = states_in_profile_set(set, p, cap);
        require(a.count() >= 1, errc::validation,
                "trend ball has an empty preimage at n = " + std::to_string(n));
        const Eigen::VectorXd u = mean_hitting_times(q, a);
        TrendPoint t;
        t.n = n;
        t.mean_h = nu.weights.dot(u);
        t.rate = average_jump_rate(q, nu, a);
        t.states = a.count();
        out.push_back(t);
    }
    return out;
}

// Exact state shared between the exponentiality and quantile criteria.
struct RareInstance {
    ModelParams p;
    ProfileSet set;
    RateMatrix q;
    StationaryDistribution nu;
    StateSet a;
    double mean_h = 0.0;
    double center = 0.0;
};

// Scans plateau heights for a radius-0.05 ball at distance >= 0.15 from the
// stationary profile whose exact mean hitting time lands in a simulation
// friendly window inside [1e3, 1e5].
inline RareInstance tune_rare_instance(std::int64_t cap) {
    const ModelParams p{10, 0.3, 0.3};
    const RateMatrix q = build_generator(p, cap);
    const StationaryDistribution nu = solve_stationary(q);
    const DensityProfile bar = stationary_profile(p, 120);

    std::optional<RareInstance> fallback;
    for (double c : {0.65, 0.7, 0.75, 0.8, 0.6}) {
        ProfileSet s;
        s.center = DensityProfile(120, c);
        s.radius = 0.05;
        s.basis = TestBasis{};
        if (profile_distance(s.center, bar, s.basis) < 0.15 - 1e-12) continue;
        const StateSet a = states_in_profile_set(s, p, cap);
        if (a.count() == 0 || a.count() == a.dim()) continue;
        const Eigen::VectorXd u = mean_hitting_times(q, a);
        const double mean_h = nu.weights.dot(u);
        if (mean_h < 1e3 || mean_h > 1e5) continue;
        RareInstance inst{p, s, q, nu, a, mean_h, c};
        if (mean_h >= 3e3) return inst;
        if (!fallback) fallback = std::move(inst);
    }
    require(fallback.has_value(), errc::numerical,
            "no plateau height produced a mean hitting time inside [1e3, 1e5]");
    return *fallback;
}

}  // namespace accept

inline AcceptanceSummary run_acceptance(std::ostream& log, const RunOptions& opts = {}) {
    AcceptanceSummary summary;
    std::optional<accept::RareInstance> rare;       // criteria 7 and 8

    auto run = [&](int id, const std::string& name, auto&& body) {
        CriterionResult r;
        r.id = id;
        r.name = name;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r.pass = body(r.detail);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char line[512];
        std::snprintf(line, sizeof line, "criterion %02d %s  %s: %s  [%.1f s]\n", r.id,
                      r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
        log << line << std::flush;
        summary.results.push_back(std::move(r));
    };

    run(1, "equilibrium product law", [&](std::string& d) {
        double worst = 0.0;
        for (int n : {5, 8, 12}) {
            ModelParams p{n, 0.3, 0.3};
            const RateMatrix q = build_generator(p, opts.cap);
            const StationaryDistribution nu = solve_stationary(q);
            for (std::int64_t i = 0; i < q.dim(); ++i) {
                const Configuration eta = state_configuration(i, p);
                double prod = 1.0;
                for (int s = 1; s <= p.sites(); ++s) prod *= eta.occupied(s) ? 0.3 : 0.7;
                worst = std::max(worst, std::abs(nu.weights(i) - prod));
            }
        }
        d = "max entrywise gap " + accept::fmt(worst) + " (tol 1e-12)";
        return worst <= 1e-12;
    });

    run(2, "absorbed walk mean identity", [&](std::string& d) {
        double worst = 0.0;
        for (int span = 2; span <= 64; ++span)
            for (int j = 0; j <= span; ++j)
                worst = std::max(worst,
                                 std::abs(absorbed_walk_mean(span, j) - 0.5 * j * (span - j)));
        d = "max gap to j(n-j)/2 over n<=64 is " + accept::fmt(worst) + " (tol 1e-9)";
        return worst <= 1e-9;
    });

    run(3, "mixing time cube bound", [&](std::string& d) {
        bool ok = true;
        std::string parts;
        for (int n : {5, 6, 8}) {
            ModelParams p{n, 0.2, 0.8};
            const RateMatrix q = build_generator(p, opts.cap);
            const StationaryDistribution nu = solve_stationary(q);
            const double t_mix = mixing_time(q, nu).t_mix;
            const double limit = 0.5 * n * n * n;
            ok = ok && t_mix <= limit;
            parts += "exact n=" + std::to_string(n) + ": " + accept::fmt(t_mix) + "/" +
                     accept::fmt(limit) + "; ";
        }
        for (int n : {12, 16}) {
            ModelParams p{n, 0.2, 0.8};
            const double limit = 0.5 * n * n * n;
            std::vector<double> grid(64);
            for (int i = 0; i < 64; ++i) grid[static_cast<std::size_t>(i)] = limit * (i + 1) / 64;
            const CouplingBound cb = coupling_mixing_bound(p, grid, 600, 20240311, 0.25, 0.05,
                                                           opts.workers);
            ok = ok && cb.bound_time <= limit;
            parts += "coupled n=" + std::to_string(n) + ": " + accept::fmt(cb.bound_time) + "/" +
                     accept::fmt(limit) + "; ";
        }
        d = parts + "all below the cube bound: " + (ok ? "yes" : "no");
        return ok;
    });

    run(4, "capacity route identity", [&](std::string& d) {
        double worst = 0.0;
        for (int n : {5, 6, 8}) {
            ModelParams p{n, 0.2, 0.8};
            const RateMatrix q = build_generator(p, opts.cap);
            const StationaryDistribution nu = solve_stationary(q);
            const RateMatrix adj = adjoint_rates(q, nu);

            std::vector<StateSet> targets;
            StateSet single(q.dim(), "occupied corner");
            single.insert(static_cast<std::int64_t>(Configuration::full(p.sites()).bits()));
            targets.push_back(single);

            ProfileSet ball;
            ball.center = stationary_profile(p, 120);
            ball.radius = 0.2;
            ball.basis = TestBasis{};
            targets.push_back(states_in_profile_set(ball, p, opts.cap));

            StateSet edges(q.dim(), "boundary-occupied");
            for (std::int64_t i = 0; i < q.dim(); ++i) {
                const Configuration eta = state_configuration(i, p);
                if (eta.occupied(1) && eta.occupied(p.sites())) edges.insert(i);
            }
            targets.push_back(edges);

            for (const StateSet& a : targets) {
                require(a.count() >= 1 && a.count() < a.dim(), errc::validation,
                        "degenerate target in the capacity check");
                const Eigen::VectorXd u = mean_hitting_times(q, a);
                const double direct = nu.weights.dot(u);
                const double via = mean_hitting_via_capacities(q, adj, nu, a);
                worst = std::max(worst, std::abs(via - direct) / direct);
            }
        }
        d = "worst relative gap " + accept::fmt(worst) + " over 9 instances (tol 1e-8)";
        return worst <= 1e-8;
    });

    run(5, "hitting law linear bound", [&](std::string& d) {
        ModelParams p{8, 0.2, 0.8};
        const RateMatrix q = build_generator(p, opts.cap);
        const StationaryDistribution nu = solve_stationary(q);
        StateSet a(q.dim(), "occupied corner");
        a.insert(static_cast<std::int64_t>(Configuration::full(p.sites()).bits()));
        const Eigen::VectorXd u = mean_hitting_times(q, a);
        const double mean_h = nu.weights.dot(u);
        const double rate = average_jump_rate(q, nu, a);
        const double nu_a = nu.mass(a);
        std::vector<double> ts(50);
        for (int i = 0; i < 50; ++i) ts[static_cast<std::size_t>(i)] = 3.0 * mean_h * (i + 1) / 50;
        const std::vector<double> cdf = hitting_cdf_exact(q, a, nu.weights, ts, opts.cap);
        double margin = 1.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double bound = std::min(1.0, nu_a + ts[i] * (1.0 - nu_a) * rate);
            margin = std::min(margin, bound - cdf[i]);
        }
        d = "min(bound - cdf) over the 50-point grid is " + accept::fmt(margin) + " (needs >= -1e-12)";
        return margin >= -1e-12;
    });

    run(6, "rate-mean product trend", [&](std::string& d) {
        // Driven reservoirs with a weak left source make the exit from the
        // jammed state nearly irreversible (hole creation at 0.45 against
        // refill at 0.05), so recrossings stay bounded over the sweep.
        const auto sweep =
            accept::trend_sweep(accept::jump_ball(), 0.1, 0.5, {6, 8, 10, 12}, opts.cap);
        const double gap_first = std::abs(sweep.front().rate * sweep.front().mean_h - 1.0);
        const double gap_last = std::abs(sweep.back().rate * sweep.back().mean_h - 1.0);
        const double prod_last = sweep.back().rate * sweep.back().mean_h;
        const bool ok = gap_last <= gap_first && prod_last >= 0.5 && prod_last <= 2.0;
        d = "|rE-1| moves " + accept::fmt(gap_first) + " -> " + accept::fmt(gap_last) +
            ", final product " + accept::fmt(prod_last) + " (needs shrink and [0.5, 2])";
        return ok;
    });

    run(7, "hitting exponentiality", [&](std::string& d) {
        rare.emplace(accept::tune_rare_instance(opts.cap));
        const accept::RareInstance& ri = *rare;
        const double horizon = 1e4 * ri.mean_h;
        const MembershipTable table(ri.set, ri.p, opts.cap);

        const HittingSampleSet stat =
            sample_many(ri.p, table, ri.nu.weights, horizon, 2000, 771177, opts.workers);
        std::vector<double> done;
        for (const auto& s : stat.samples)
            if (!s.timed_out) done.push_back(s.time);
        const double ks_stat = ks_exponential(done, ri.mean_h);

        ProfileSet around_bar;
        around_bar.center = stationary_profile(ri.p, 120);
        around_bar.radius = 0.1;
        around_bar.basis = TestBasis{};
        const StateSet b = states_in_profile_set(around_bar, ri.p, opts.cap);
        require(b.count() >= 1, errc::validation, "conditioning ball has an empty preimage");
        const Eigen::VectorXd mu = conditioned_distribution(ri.nu.weights, b);
        const HittingSampleSet cond =
            sample_many(ri.p, table, mu, horizon, 2000, 771178, opts.workers);
        std::vector<double> done_c;
        for (const auto& s : cond.samples)
            if (!s.timed_out) done_c.push_back(s.time);
        const double ks_cond = ks_exponential(done_c, ri.mean_h);

        d = "plateau " + accept::fmt(ri.center) + ", exact mean " + accept::fmt(ri.mean_h) +
            ", KS " + accept::fmt(ks_stat) + " stationary / " + accept::fmt(ks_cond) +
            " conditioned (tol 0.05)";
        return ks_stat < 0.05 && ks_cond < 0.05;
    });

    run(8, "survival quantile consistency", [&](std::string& d) {
        require(rare.has_value(), errc::validation, "needs the tuned instance from criterion 7");
        const accept::RareInstance& ri = *rare;
        const double theta = quantile_time(ri.q, ri.a, ri.nu.weights, 1e-6, opts.cap);
        const double ratio = theta / ri.mean_h;
        d = "theta/mean = " + accept::fmt(ratio) + " (needs [0.8, 1.2])";
        return ratio >= 0.8 && ratio <= 1.2;
    });

    run(9, "diffusive profile evolution", [&](std::string& d) {
        ModelParams p{64, 0.2, 0.8};
        const Configuration init = Configuration::full(p.sites());
        const std::vector<double> frames{0.05, 0.1, 0.2};
        const int mesh = 128;
        const HydroResult sim =
            hydrodynamic_trajectory(p, init, frames, 200, 90210, mesh, opts.workers);
        const DensityProfile gamma = empirical_profile(init, p, mesh);
        const SpaceTimePath pde = heat_solve(gamma, p, 0.2, 400, mesh);
        const TestBasis basis{};
        double sup_d = 0.0, sup_cover = 0.0;
        const int frame_step[3] = {100, 200, 400};
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const DensityProfile slice = pde.slice(frame_step[f]);
            sup_d = std::max(sup_d, profile_distance(sim.profiles[f], slice, basis));
            for (int j = 0; j <= mesh; ++j)
                if (site_of_node(j, mesh, p.N) != 0)
                    sup_cover = std::max(
                        sup_cover, std::abs(sim.profiles[f].values[static_cast<std::size_t>(j)] -
                                            slice.values[static_cast<std::size_t>(j)]));
        }
        d = "sup metric distance " + accept::fmt(sup_d) + " (tol 0.05); site-covered sup gap " +
            accept::fmt(sup_cover) + " reported unchecked";
        return sup_d <= 0.05;
    });

    run(10, "relaxation path costs nothing", [&](std::string& d) {
        ModelParams p{16, 0.2, 0.8};
        double worst = 0.0;
        for (const char* expr : {"constant:0.5", "linear:0.3,0.6", "bump:0.3,0.4,0.5,0.15"}) {
            const DensityProfile gamma = parse_profile(expr, 200, p);
            const SpaceTimePath path = heat_solve(gamma, p, 1.0, 200, 200);
            const RateFunctionalResult r = rate_functional(path, path.slice(0), p);
            require(r.finite, errc::numerical, "relaxation path scored as infinite");
            worst = std::max(worst, r.value);
        }
        d = "max rate value over three starts " + accept::fmt(worst) + " (tol 1e-4)";
        return worst <= 1e-4;
    });

    run(11, "quasipotential entropy sandwich", [&](std::string& d) {
        ModelParams p{16, 0.3, 0.3};
        const DensityProfile gamma(200, 0.5);
        const double entropy = 0.5 * std::log(0.5 / 0.3) + 0.5 * std::log(0.5 / 0.7);
        const QuasipotentialResult est = quasipotential_estimate(gamma, p, 2.0, 100, 200);
        const QuasipotentialResult at_bar =
            quasipotential_estimate(stationary_profile(p, 200), p, 1.0, 50, 200);
        d = "estimate " + accept::fmt(est.value) + " vs entropy " + accept::fmt(entropy) +
            " - 1e-3; stationary estimate " + accept::fmt(at_bar.value) + " (tol 1e-4)";
        return est.value >= entropy - 1e-3 && at_bar.value <= 1e-4;
    });

    run(12, "entry count compensation", [&](std::string& d) {
        ModelParams p{8, 0.2, 0.8};
        const RateMatrix q = build_generator(p, opts.cap);
        const StationaryDistribution nu = solve_stationary(q);
        ProfileSet ball;
        ball.center = stationary_profile(p, 120);
        ball.radius = 0.15;
        ball.basis = TestBasis{};
        const StateSet a = states_in_profile_set(ball, p, opts.cap);
        require(a.count() >= 1 && a.count() < a.dim(), errc::validation,
                "martingale target is degenerate");
        const double rate = average_jump_rate(q, nu, a);
        const double nu_ac = 1.0 - nu.mass(a);
        const double horizon = 100.0;

        const MartingaleSummary ms =
            counting_martingale(p, q, a, nu.weights, horizon, 10000, 555321, opts.workers);
        double var_entries = 0.0;
        for (const auto& s : ms.samples) {
            const double c = s.entries - ms.mean_entries;
            var_entries += c * c;
        }
        const std::size_t n = ms.samples.size();
        const double se_entries =
            std::sqrt(var_entries / (static_cast<double>(n) * (static_cast<double>(n) - 1.0)));
        const double target = nu_ac * rate;
        const double gap_rate = std::abs(ms.mean_entries / horizon - target);
        const bool ok_resid = std::abs(ms.mean_residual) <= 3.0 * ms.residual_stderr;
        const bool ok_rate = gap_rate <= 3.0 * se_entries / horizon;
        d = "mean residual " + accept::fmt(ms.mean_residual) + " (3se " +
            accept::fmt(3.0 * ms.residual_stderr) + "); entry rate gap " + accept::fmt(gap_rate) +
            " (3se " + accept::fmt(3.0 * se_entries / horizon) + ")";
        return ok_resid && ok_rate;
    });

    run(13, "growth rate extrapolation", [&](std::string& d) {
        const auto sweep =
            accept::trend_sweep(accept::scaling_ball(), 0.3, 0.3, {6, 8, 10, 12}, opts.cap);
        std::vector<int> ns;
        std::vector<double> a_n;
        for (const auto& t : sweep) {
            ns.push_back(t.n);
            a_n.push_back(std::log(t.mean_h) / t.n);
        }
        std::vector<double> diffs;
        for (std::size_t i = 1; i < a_n.size(); ++i) diffs.push_back(a_n[i] - a_n[i - 1]);
        bool shrinking = true;
        for (std::size_t i = 1; i < diffs.size(); ++i)
            if (std::abs(diffs[i]) > std::abs(diffs[i - 1])) shrinking = false;
        const double a_inf = detail::extrapolate_inverse(ns, a_n);

        const ProfileSet set = accept::scaling_ball();
        const ModelParams p{6, 0.3, 0.3};
        const std::vector<DensityProfile> samples = sample_profiles_in_set(set, 120, 6, 2024);
        double lb_min = 0.0, est_min = 0.0;
        bool first = true;
        for (const auto& g : samples) {
            const double lb = quasipotential_lower_bound(g, p);
            const double est =
                quasipotential_over_ladder(g, p, {0.5, 1.0, 2.0, 4.0}, 50, 120).value;
            lb_min = first ? lb : std::min(lb_min, lb);
            est_min = first ? est : std::min(est_min, est);
            first = false;
        }
        const bool in_band = a_inf >= 0.5 * lb_min && a_inf <= 1.5 * est_min;
        d = "diffs " + accept::fmt(std::abs(diffs[0])) + " -> " + accept::fmt(std::abs(diffs[1])) +
            " -> " + accept::fmt(std::abs(diffs[2])) + (shrinking ? " shrinking" : " not shrinking") +
            "; extrapolated " + accept::fmt(a_inf) + " vs band [" + accept::fmt(0.5 * lb_min) +
            ", " + accept::fmt(1.5 * est_min) + "]";
        return shrinking && in_band;
    });

    run(14, "module invariant battery", [&](std::string& d) {
        std::string fails;

        {  // metric axioms on deterministic profiles
            DensityProfile g1(60, 0.0), g2(60, 0.0), g3(60, 0.0);
            for (int j = 0; j <= 60; ++j) {
                const double x = j / 60.0;
                g1.values[static_cast<std::size_t>(j)] = 0.5 + 0.4 * std::sin(std::numbers::pi * x);
                g2.values[static_cast<std::size_t>(j)] = 0.3 + 0.2 * x;
                g3.values[static_cast<std::size_t>(j)] = 0.6 - 0.3 * x * x;
            }
            const TestBasis basis{};
            const double d12 = profile_distance(g1, g2, basis);
            const double d23 = profile_distance(g2, g3, basis);
            const double d13 = profile_distance(g1, g3, basis);
            if (profile_distance(g1, g1, basis) != 0.0) fails += "metric identity; ";
            if (std::abs(d12 - profile_distance(g2, g1, basis)) > 1e-15) fails += "metric symmetry; ";
            if (d13 > d12 + d23 + 1e-12) fails += "metric triangle; ";
            if (d12 > l2_distance(g1, g2) + 1e-12 || d12 > 1.0) fails += "metric domination; ";
            if (d12 <= 0.0 || d23 <= 0.0) fails += "metric separation; ";
        }

        {  // generator rows sum to zero
            double worst = 0.0;
            for (int n : {5, 9}) {
                ModelParams p{n, 0.25, 0.7};
                const RateMatrix q = build_generator(p, opts.cap);
                for (std::int64_t i = 0; i < q.dim(); ++i) {
                    double s = 0.0;
                    for (SpMat::InnerIterator it(q.matrix(), i); it; ++it) s += it.value();
                    worst = std::max(worst, std::abs(s));
                }
            }
            if (worst > 1e-12) fails += "generator row sums " + accept::fmt(worst) + "; ";
        }

        {  // replica streams independent of the worker count
            ModelParams p{8, 0.25, 0.7};
            ProfileSet ball;
            ball.center = stationary_profile(p, 120);
            ball.radius = 0.2;
            ball.basis = TestBasis{};
            const MembershipTable table(ball, p, opts.cap);
            Eigen::VectorXd delta = Eigen::VectorXd::Zero(std::int64_t(1) << p.sites());
            delta(static_cast<std::int64_t>(Configuration::full(p.sites()).bits())) = 1.0;
            const HittingSampleSet one = sample_many(p, table, delta, 50.0, 64, 77, 1);
            const HittingSampleSet four = sample_many(p, table, delta, 50.0, 64, 77, 4);
            for (std::size_t i = 0; i < one.samples.size(); ++i)
                if (one.samples[i].time != four.samples[i].time ||
                    one.samples[i].timed_out != four.samples[i].timed_out) {
                    fails += "worker determinism; ";
                    break;
                }
        }

        {  // coupled update leaves the single-chain law intact
            ModelParams p{6, 0.2, 0.8};
            Configuration hi0 = Configuration::from_occupancy({1, 0, 1, 0, 1});
            const Configuration lo0 = Configuration::empty(p.sites());
            const std::vector<Transition> ts = enumerate_transitions(hi0, p);
            const double total_clock = 0.5 * p.N;
            RngStream rng(4242, 0);
            const int trials = 200000;
            std::vector<double> observed(ts.size() + 1, 0.0);
            for (int k = 0; k < trials; ++k) {
                CoupledPair pair{hi0, lo0};
                coupled_step(pair, p, rng);
                std::size_t cat = ts.size();
                for (std::size_t i = 0; i < ts.size(); ++i)
                    if (pair.hi == ts[i].target) {
                        cat = i;
                        break;
                    }
                observed[cat] += 1.0;
            }
            double stat = 0.0;
            double stay = 1.0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                const double expect = trials * ts[i].rate / total_clock;
                stay -= ts[i].rate / total_clock;
                stat += (observed[i] - expect) * (observed[i] - expect) / expect;
            }
            const double expect_stay = trials * stay;
            stat += (observed.back() - expect_stay) * (observed.back() - expect_stay) / expect_stay;
            const double pval = chi_square_upper_tail(stat, static_cast<int>(ts.size()));
            if (pval < 0.001) fails += "coupling marginal (p " + accept::fmt(pval) + "); ";
        }

        {  // discrete maximum principle on rough data
            ModelParams p{16, 0.2, 0.8};
            Configuration rough = Configuration::empty(p.sites());
            for (int s = 1; s <= p.sites(); s += 2) rough.flip(s);
            const DensityProfile gamma = empirical_profile(rough, p, 128);
            const SpaceTimePath path = heat_solve(gamma, p, 0.01, 4, 128);
            double lo = 1.0, hi = 0.0;
            for (double v : path.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (lo < -1e-6 || hi > 1.0 + 1e-6) fails += "maximum principle; ";
        }

        {  // envelope gradient against central differences
            ModelParams p{16, 0.3, 0.5};
            const DensityProfile gamma = parse_profile("bump:0.35,0.25,0.4,0.2", 12, p);
            SpaceTimePath u = heat_solve(gamma, p, 0.5, 6, 12);
            for (int n = 1; n < u.steps; ++n)
                for (int j = 1; j < u.mesh; ++j)
                    u.at(n, j) = std::clamp(u.at(n, j) + 0.05 * std::sin(2.1 * n + 1.3 * j),
                                            0.05, 0.95);
            // The perturbed path is a generic descent candidate, not a solver orbit.
            u.damped_prefix = 0;
            std::vector<std::vector<double>> gbars;
            const double base = detail::descent_objective(u, gbars);
            require(std::isfinite(base), errc::numerical, "gradient probe is degenerate");
            std::vector<double> grad;
            detail::descent_gradient(u, gbars, grad);
            double worst = 0.0;
            const double eps = 1e-5;
            for (int m = 1; m < u.steps; ++m)
                for (int j = 1; j < u.mesh; ++j) {
                    const double keep = u.at(m, j);
                    std::vector<std::vector<double>> scratch;
                    u.at(m, j) = keep + eps;
                    const double up = detail::descent_objective(u, scratch);
                    u.at(m, j) = keep - eps;
                    const double down = detail::descent_objective(u, scratch);
                    u.at(m, j) = keep;
                    const double numeric = (up - down) / (2.0 * eps);
                    const double analytic =
                        grad[static_cast<std::size_t>(m - 1) * (u.mesh - 1) + (j - 1)];
                    worst = std::max(worst,
                                     std::abs(analytic - numeric) / (1.0 + std::abs(numeric)));
                }
            if (worst > 1e-4) fails += "gradient check " + accept::fmt(worst) + "; ";
        }

        d = fails.empty() ? "metric, generator, determinism, coupling marginal, maximum "
                            "principle, gradient all hold"
                          : fails;
        return fails.empty();
    });

    return summary;
}

}  // namespace bdssep
