#pragma once

// Named experiments behind the CLI subcommands.  Each command reads its
// knobs from the config, runs public library operations only, and returns
// a JSON report plus CSV blocks ready for emission.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "bdssep/conditions.hpp"
#include "bdssep/config.hpp"
#include "bdssep/coupling.hpp"
#include "bdssep/exact.hpp"
#include "bdssep/functionals.hpp"
#include "bdssep/heat.hpp"
#include "bdssep/kmc.hpp"
#include "bdssep/metric.hpp"
#include "bdssep/observables.hpp"
#include "bdssep/quasipotential.hpp"
#include "bdssep/rate_matrix.hpp"
#include "bdssep/report.hpp"
#include "bdssep/transient.hpp"

namespace bdssep {

namespace detail {

inline ModelParams model_from(const Config& cfg) {
    ModelParams p;
    p.N = static_cast<int>(cfg.get_int("model.n"));
    p.alpha = cfg.get_double("model.alpha");
    p.beta = cfg.get_double("model.beta");
    p.validate();
    return p;
}

inline ProfileSet set_from(const Config& cfg, const ModelParams& p, int fallback_mesh = 0) {
    if (fallback_mesh == 0) fallback_mesh = default_mesh(p.N);
    const int mesh = static_cast<int>(cfg.get_int("set.mesh", fallback_mesh));
    ProfileSet s;
    s.center = parse_profile(cfg.get_string("set.center"), mesh, p);
    s.radius = cfg.get_double("set.radius");
    s.basis.K = static_cast<int>(cfg.get_int("set.basis_k", 16));
    s.validate();
    return s;
}

// The hitting experiments assume the target is a rare event: the ball must
// exclude the stationary profile by a positive margin.
inline double require_rare_set(const ProfileSet& s, const ModelParams& p) {
    const double gap = profile_distance(s.center, stationary_profile(p, s.center.mesh), s.basis);
    require(gap > s.radius, errc::validation,
            "profile set is not rare: the stationary profile lies within distance " +
                format_g17(gap) + " of the center, radius is " + format_g17(s.radius));
    return gap;
}

inline Configuration parse_configuration(const std::string& expr, const ModelParams& p) {
    if (expr == "full") return Configuration::full(p.sites());
    if (expr == "empty") return Configuration::empty(p.sites());
    if (expr.rfind("bits:", 0) == 0) {
        const std::string bits = expr.substr(5);
        require(static_cast<int>(bits.size()) == p.sites(), errc::validation,
                "configuration expression '" + expr + "': expected " + std::to_string(p.sites()) + " bits");
        Configuration eta = Configuration::empty(p.sites());
        for (int s = 1; s <= p.sites(); ++s) {
            const char c = bits[static_cast<std::size_t>(s - 1)];
            require(c == '0' || c == '1', errc::validation,
                    "configuration expression '" + expr + "': bits must be 0 or 1");
            if (c == '1') eta.flip(s);
        }
        return eta;
    }
    throw error(errc::validation, "unknown configuration expression '" + expr + "'");
}

inline nlohmann::json model_block(const ModelParams& p) {
    return {{"n", p.N}, {"alpha", p.alpha}, {"beta", p.beta}};
}

inline void rep_to_json(nlohmann::json& j, const ConditionReport& rep) {
    j["nu_mass"] = rep.nu_a;
    j["jump_rate"] = rep.jump_rate;
    j["mean_hitting"] = rep.mean_hitting;
    j["rate_mean_product"] = rep.rate_mean_product;
    j["escape_rate_l2"] = rep.escape_rate_l2;
    if (rep.t_mix) j["t_mix"] = *rep.t_mix;
    if (rep.t_rel) j["t_rel"] = *rep.t_rel;
    if (rep.trapping_sup) j["trapping_sup"] = *rep.trapping_sup;
    if (rep.capacity_sum) j["capacity_sum"] = *rep.capacity_sum;
    if (rep.start_product) j["start_product"] = *rep.start_product;
    if (rep.density_l2) j["density_l2"] = *rep.density_l2;
}

// Least squares fit a_N = a_inf + c/N; returns the intercept a_inf.
inline double extrapolate_inverse(const std::vector<int>& ns, const std::vector<double>& a) {
    const std::size_t m = ns.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = 1.0 / ns[i];
        sx += x;
        sy += a[i];
        sxx += x * x;
        sxy += x * a[i];
    }
    const double den = m * sxx - sx * sx;
    require(std::abs(den) > 1e-30, errc::numerical, "extrapolation: degenerate abscissae");
    const double slope = (m * sxy - sx * sy) / den;
    return (sy - slope * sx) / m;
}

}  // namespace detail

// Exact stationary law: per-site densities against the linear interpolation
// of the reservoir densities, and the product-measure check when alpha=beta.
inline CommandResult cmd_stationary(const Config& cfg, const RunOptions& opts) {
    const ModelParams p = detail::model_from(cfg);
    const RateMatrix q = build_generator(p, opts.cap);
    const StationaryDistribution nu = solve_stationary(q);
    const std::int64_t dim = q.dim();

    std::vector<double> site_density(static_cast<std::size_t>(p.sites()), 0.0);
    for (std::int64_t i = 0; i < dim; ++i) {
        const Configuration eta = state_configuration(i, p);
        for (int s = 1; s <= p.sites(); ++s)
            if (eta.occupied(s)) site_density[static_cast<std::size_t>(s - 1)] += nu.weights(i);
    }

    double profile_gap = 0.0;
    CsvWriter density({"site", "x", "density", "linear", "gap"});
    for (int s = 1; s <= p.sites(); ++s) {
        const double x = static_cast<double>(s) / p.N;
        const double lin = p.alpha + (p.beta - p.alpha) * x;
        const double d = site_density[static_cast<std::size_t>(s - 1)];
        profile_gap = std::max(profile_gap, std::abs(d - lin));
        density.row({static_cast<double>(s), x, d, lin, d - lin});
    }

    CommandResult out;
    out.command = "stationary";
    out.report["model"] = detail::model_block(p);
    out.report["dim"] = dim;
    out.report["solve_residual"] = nu.residual;
    out.report["min_weight"] = nu.weights.minCoeff();
    out.report["linear_profile_sup_gap"] = profile_gap;

    if (p.alpha == p.beta) {
        double dev = 0.0;
        for (std::int64_t i = 0; i < dim; ++i) {
            const Configuration eta = state_configuration(i, p);
            double prod = 1.0;
            for (int s = 1; s <= p.sites(); ++s) prod *= eta.occupied(s) ? p.alpha : 1.0 - p.alpha;
            dev = std::max(dev, std::abs(nu.weights(i) - prod));
        }
        out.report["product_measure_deviation"] = dev;
    }

    out.report["provenance"] = provenance_block(cfg, opts);
    out.add_csv("density", density);
    return out;
}

// Exact and simulated hitting of the rare ball: mean, jump rate, their
// product, the 1/e quantile, the linear-in-t bound on the CDF, the
// capacity-route cross-check, and KS statistics against the unit
// exponential from stationary and conditioned starts.
inline CommandResult cmd_hitting(const Config& cfg, const RunOptions& opts) {
    const ModelParams p = detail::model_from(cfg);
    const ProfileSet set = detail::set_from(cfg, p);
    const double rare_gap = detail::require_rare_set(set, p);

    const RateMatrix q = build_generator(p, opts.cap);
    const StationaryDistribution nu = solve_stationary(q);
    const StateSet a = states_in_profile_set(set, p, opts.cap);
    require(a.count() >= 1, errc::validation,
            "profile set has an empty microscopic preimage at n = " + std::to_string(p.N));
    require(a.count() < a.dim(), errc::validation, "profile set covers the whole state space");

    const Eigen::VectorXd u = mean_hitting_times(q, a);
    const double mean_h = nu.weights.dot(u);
    const double rate = average_jump_rate(q, nu, a);
    const double theta = quantile_time(q, a, nu.weights, 1e-6, opts.cap);
    const RateMatrix adj = adjoint_rates(q, nu);
    const double mean_via_cap = mean_hitting_via_capacities(q, adj, nu, a);

    const double nu_a = nu.mass(a);
    const double nu_ac = 1.0 - nu_a;

    const int grid_points = static_cast<int>(cfg.get_int("hitting.grid_points", 50));
    require(grid_points >= 2, errc::validation, "hitting.grid_points must be at least 2");
    const double grid_span = cfg.get_double("hitting.grid_span", 3.0) * mean_h;
    std::vector<double> ts(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i)
        ts[static_cast<std::size_t>(i)] = grid_span * (i + 1) / grid_points;
    const std::vector<double> cdf = hitting_cdf_exact(q, a, nu.weights, ts, opts.cap);

    double worst_margin = 1.0;  // min over the grid of bound - cdf
    CsvWriter survival({"t", "cdf", "linear_bound", "margin"});
    for (int i = 0; i < grid_points; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double bound = std::min(1.0, nu_a + ts[k] * nu_ac * rate);
        worst_margin = std::min(worst_margin, bound - cdf[k]);
        survival.row({ts[k], cdf[k], bound, bound - cdf[k]});
    }

    CommandResult out;
    out.command = "hitting";
    out.report["model"] = detail::model_block(p);
    out.report["dim"] = q.dim();
    out.report["set"] = {{"radius", set.radius},
                         {"basis_k", set.basis.K},
                         {"mesh", set.center.mesh},
                         {"states", a.count()},
                         {"stationary_gap", rare_gap},
                         {"nu_mass", nu_a}};
    out.report["exact"] = {{"mean_hitting", mean_h},
                           {"jump_rate", rate},
                           {"rate_mean_product", rate * mean_h},
                           {"quantile_time", theta},
                           {"quantile_over_mean", theta / mean_h},
                           {"mean_via_capacities", mean_via_cap},
                           {"capacity_route_rel_gap", std::abs(mean_via_cap - mean_h) / mean_h},
                           {"cdf_bound_worst_margin", worst_margin}};
    out.add_csv("survival", survival);

    // Conditioned start: nu restricted to a ball around the stationary
    // profile, the relaxed-start regime of the exponential law.
    const double cond_radius = cfg.get_double("hitting.condition_radius", 0.1);
    StateSet b(q.dim(), "start ball");
    Eigen::VectorXd mu;
    if (cond_radius > 0.0) {
        ProfileSet around_bar;
        around_bar.center = stationary_profile(p, set.center.mesh);
        around_bar.radius = cond_radius;
        around_bar.basis = set.basis;
        b = states_in_profile_set(around_bar, p, opts.cap);
        require(b.count() >= 1, errc::validation, "conditioning ball has an empty preimage");
        mu = conditioned_distribution(nu.weights, b);

        ConditionOptions copts;
        copts.b = b;
        copts.mu = mu;
        copts.s_n = cfg.get_double("hitting.s_n", std::sqrt(mean_h));
        copts.semigroup_cap = opts.cap;
        detail::rep_to_json(out.report["conditions"], check_theorem_conditions(q, nu, adj, a, copts));
    }

    const std::size_t replicas = static_cast<std::size_t>(cfg.get_int("hitting.replicas", 2000));
    if (replicas > 0) {
        const double horizon = cfg.get_double("hitting.horizon_factor", 1e4) * mean_h;
        const MembershipTable table(set, p, opts.cap);

        auto run = [&](const Eigen::VectorXd& init, std::uint64_t seed, const char* block) {
            const HittingSampleSet hs = sample_many(p, table, init, horizon, replicas, seed, opts.workers);
            std::vector<double> done;
            done.reserve(hs.samples.size());
            CsvWriter rows({"stream_id", "sample", "timeout_flag"});
            for (const auto& s : hs.samples) {
                rows.row({static_cast<double>(s.stream), s.time, s.timed_out ? 1.0 : 0.0});
                if (!s.timed_out) done.push_back(s.time);
            }
            out.csv.emplace_back(block, rows.str());
            nlohmann::json j;
            j["replicas"] = hs.samples.size();
            j["timeouts"] = hs.timeouts();
            j["horizon"] = horizon;
            j["mean"] = hs.mean_completed();
            j["ks_vs_exact_mean"] = ks_exponential(done, mean_h);
            j["ks_vs_sample_mean"] = ks_exponential(done, hs.mean_completed());
            return j;
        };

        out.report["simulated"]["stationary_start"] = run(nu.weights, opts.seed, "samples_stationary");
        if (cond_radius > 0.0)
            out.report["simulated"]["conditioned_start"] = run(mu, opts.seed + 1, "samples_conditioned");
    }

    out.report["provenance"] = provenance_block(cfg, opts);
    return out;
}

// Mixing scales: exact worst-case total-variation time and spectral
// relaxation time when the state space is small, and the coupling-based
// confidence bound at any size; all against the N^3/2 benchmark.
inline CommandResult cmd_mixing(const Config& cfg, const RunOptions& opts) {
    const ModelParams p = detail::model_from(cfg);
    const double n3_half = 0.5 * std::pow(static_cast<double>(p.N), 3.0);

    CommandResult out;
    out.command = "mixing";
    out.report["model"] = detail::model_block(p);
    out.report["n3_half"] = n3_half;

    const std::int64_t dim = std::int64_t(1) << p.sites();
    const bool exact = cfg.get_bool("mixing.exact", dim <= (std::int64_t(1) << 13));
    if (exact) {
        const RateMatrix q = build_generator(p, opts.cap);
        const StationaryDistribution nu = solve_stationary(q);
        const MixingResult mix = mixing_time(q, nu);
        const double trel = relaxation_time(q, nu);
        out.report["exact"] = {{"t_mix", mix.t_mix},
                               {"t_mix_over_n3_half", mix.t_mix / n3_half},
                               {"t_rel", trel}};
        CsvWriter trace({"t", "worst_tv"});
        for (const auto& [t, tv] : mix.trace) trace.row({t, tv});
        out.add_csv("trace", trace);
    }

    const std::size_t replicas = static_cast<std::size_t>(cfg.get_int("mixing.replicas", 1000));
    if (replicas > 0) {
        const double grid_max = cfg.get_double("mixing.grid_max", static_cast<double>(p.N) * p.N * p.N);
        const int points = static_cast<int>(cfg.get_int("mixing.grid_points", 64));
        require(points >= 2 && grid_max > 0.0, errc::validation, "mixing grid must be nonempty");
        std::vector<double> grid(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = grid_max * (i + 1) / points;
        const CouplingBound cb =
            coupling_mixing_bound(p, grid, replicas, opts.seed, 0.25, 0.05, opts.workers);
        out.report["coupling"] = {{"replicas", replicas},
                                  {"bound_time", cb.bound_time},
                                  {"bound_over_n3_half", cb.bound_time / n3_half}};
        CsvWriter rows({"t", "exceedance", "upper_95"});
        for (std::size_t g = 0; g < cb.grid.size(); ++g)
            rows.row({cb.grid[g], cb.exceedance[g], cb.upper[g]});
        out.add_csv("coupling", rows);
    }

    out.report["provenance"] = provenance_block(cfg, opts);
    return out;
}

// Growth of the mean hitting time across an N-sweep: the sequence
// (1/N) log E[H], its successive differences, an 1/N extrapolation, and
// the quasi-potential bracket it should land in.
inline CommandResult cmd_scaling(const Config& cfg, const RunOptions& opts) {
    ModelParams base;
    base.alpha = cfg.get_double("model.alpha");
    base.beta = cfg.get_double("model.beta");
    std::vector<int> sweep;
    for (std::int64_t n : cfg.get_ints("scaling.n_sweep")) sweep.push_back(static_cast<int>(n));
    require(sweep.size() >= 3, errc::validation, "scaling.n_sweep needs at least three values");
    require(std::is_sorted(sweep.begin(), sweep.end()), errc::validation,
            "scaling.n_sweep must be increasing");
    base.N = sweep.front();
    base.validate();

    const ProfileSet set = detail::set_from(cfg, base, 120);
    for (int n : sweep)
        require(set.center.mesh % n == 0, errc::validation,
                "set.mesh must be a multiple of every sweep n; " + std::to_string(set.center.mesh) +
                    " is not divisible by " + std::to_string(n));
    detail::require_rare_set(set, base);

    std::vector<double> a_n;
    CsvWriter rows({"n", "states", "mean_hitting", "a_n", "jump_rate", "rate_mean_product"});
    for (int n : sweep) {
        ModelParams p = base;
        p.N = n;
        const RateMatrix q = build_generator(p, opts.cap);
        const StationaryDistribution nu = solve_stationary(q);
        const StateSet a = states_in_profile_set(set, p, opts.cap);
        require(a.count() >= 1, errc::validation,
                "profile set has an empty microscopic preimage at n = " + std::to_string(n));
        const Eigen::VectorXd u = mean_hitting_times(q, a);
        const double mean_h = nu.weights.dot(u);
        const double rate = average_jump_rate(q, nu, a);
        a_n.push_back(std::log(mean_h) / n);
        rows.row({static_cast<double>(n), static_cast<double>(a.count()), mean_h, a_n.back(), rate,
                  rate * mean_h});
    }

    std::vector<double> diffs;
    for (std::size_t i = 1; i < a_n.size(); ++i) diffs.push_back(a_n[i] - a_n[i - 1]);
    bool shrinking = true;
    for (std::size_t i = 1; i < diffs.size(); ++i)
        if (std::abs(diffs[i]) > std::abs(diffs[i - 1])) shrinking = false;
    const double a_inf = detail::extrapolate_inverse(sweep, a_n);

    // Quasi-potential bracket over sampled members of the set.
    const int samples = static_cast<int>(cfg.get_int("scaling.profile_samples", 6));
    const std::vector<double> ladder = cfg.get_doubles("scaling.ladder", {0.5, 1.0, 2.0, 4.0});
    const int per_unit = static_cast<int>(cfg.get_int("scaling.steps_per_unit", 50));
    const std::vector<DensityProfile> in_set_samples =
        sample_profiles_in_set(set, set.center.mesh, samples, opts.seed);
    double lb_min = 0.0, est_min = 0.0;
    bool first = true;
    for (const auto& g : in_set_samples) {
        const double lb = quasipotential_lower_bound(g, base);
        const double est = quasipotential_over_ladder(g, base, ladder, per_unit, set.center.mesh).value;
        if (first) {
            lb_min = lb;
            est_min = est;
            first = false;
        } else {
            lb_min = std::min(lb_min, lb);
            est_min = std::min(est_min, est);
        }
    }

    CommandResult out;
    out.command = "scaling";
    out.report["model"] = {{"alpha", base.alpha}, {"beta", base.beta}, {"n_sweep", sweep}};
    out.report["a_n"] = a_n;
    out.report["successive_differences"] = diffs;
    out.report["differences_shrinking"] = shrinking;
    out.report["extrapolated"] = a_inf;
    out.report["set_samples"] = in_set_samples.size();
    out.report["lower_bound_min"] = lb_min;
    out.report["estimate_min"] = est_min;
    out.report["within_band"] = a_inf >= 0.5 * lb_min && a_inf <= 1.5 * est_min;
    out.report["provenance"] = provenance_block(cfg, opts);
    out.add_csv("sweep", rows);
    return out;
}

// Replica-averaged empirical profiles on the diffusive clock against the
// Crank-Nicolson solution started from the same initial profile.
inline CommandResult cmd_hydro(const Config& cfg, const RunOptions& opts) {
    const ModelParams p = detail::model_from(cfg);
    const Configuration init = detail::parse_configuration(cfg.get_string("hydro.init", "full"), p);
    const std::vector<double> frames = cfg.get_doubles("hydro.frames", {0.05, 0.1, 0.2});
    require(std::is_sorted(frames.begin(), frames.end()) && frames.front() > 0.0, errc::validation,
            "hydro.frames must be increasing and positive");
    const std::size_t replicas = static_cast<std::size_t>(cfg.get_int("hydro.replicas", 200));
    const int mesh = static_cast<int>(cfg.get_int("hydro.mesh", default_mesh(p.N)));
    const int steps = static_cast<int>(cfg.get_int("hydro.steps", 400));

    const double horizon = frames.back();
    std::vector<int> frame_step;
    for (double f : frames) {
        const double k = f / horizon * steps;
        require(std::abs(k - std::round(k)) < 1e-9, errc::validation,
                "hydro.steps must place every frame on a time step");
        frame_step.push_back(static_cast<int>(std::lround(k)));
    }

    const HydroResult sim =
        hydrodynamic_trajectory(p, init, frames, replicas, opts.seed, mesh, opts.workers);
    const DensityProfile gamma = empirical_profile(init, p, mesh);
    const SpaceTimePath pde = heat_solve(gamma, p, horizon, steps, mesh);

    const TestBasis basis{static_cast<int>(cfg.get_int("hydro.basis_k", 16))};
    CommandResult out;
    out.command = "hydro";
    double sup_d = 0.0, sup_linf = 0.0;
    nlohmann::json frames_json = nlohmann::json::array();
    CsvWriter rows({"t", "x", "simulated", "pde"});
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const DensityProfile slice = pde.slice(frame_step[f]);
        const DensityProfile& avg = sim.profiles[f];
        const double dist = profile_distance(avg, slice, basis);
        // The empirical profile is supported on the site intervals; the sup
        // gap is read off the covered nodes only.
        double linf = 0.0;
        for (int j = 0; j <= mesh; ++j)
            if (site_of_node(j, mesh, p.N) != 0)
                linf = std::max(linf, std::abs(avg.values[static_cast<std::size_t>(j)] -
                                               slice.values[static_cast<std::size_t>(j)]));
        sup_d = std::max(sup_d, dist);
        sup_linf = std::max(sup_linf, linf);
        frames_json.push_back({{"t", frames[f]}, {"metric_distance", dist}, {"covered_sup_gap", linf}});
        for (int j = 0; j <= mesh; ++j)
            rows.row({frames[f], slice.x(j), avg.values[static_cast<std::size_t>(j)],
                      slice.values[static_cast<std::size_t>(j)]});
    }

    out.report["model"] = detail::model_block(p);
    out.report["replicas"] = replicas;
    out.report["mesh"] = mesh;
    out.report["steps"] = steps;
    out.report["frames"] = frames_json;
    out.report["sup_metric_distance"] = sup_d;
    out.report["sup_covered_gap"] = sup_linf;
    out.report["provenance"] = provenance_block(cfg, opts);
    out.add_csv("frames", rows);
    return out;
}

// Rate functional of the diffusive relaxation (zero-cost check), of a
// transverse perturbation (positive cost), and the time-reversal identity
// against the energy in the reversible case.
inline CommandResult cmd_ldp(const Config& cfg, const RunOptions& opts) {
    const ModelParams p = detail::model_from(cfg);
    const int mesh = static_cast<int>(cfg.get_int("ldp.mesh", 200));
    const int steps = static_cast<int>(cfg.get_int("ldp.steps", 200));
    const double T = cfg.get_double("ldp.t", 1.0);
    const DensityProfile gamma = parse_profile(cfg.get_string("ldp.gamma", "constant:0.5"), mesh, p);
    HeatOptions hopts;
    hopts.damped_start_steps = static_cast<int>(cfg.get_int("ldp.damped_start_steps", 2));

    const SpaceTimePath path = heat_solve(gamma, p, T, steps, mesh, hopts);
    const RateFunctionalResult zero = rate_functional(path, path.slice(0), p);
    const EnergyResult en = energy(path);

    CommandResult out;
    out.command = "ldp";
    out.report["model"] = detail::model_block(p);
    out.report["grid"] = {{"t", T}, {"steps", steps}, {"mesh", mesh}};
    out.report["relaxation"] = {{"rate_value", zero.value},
                                {"finite", zero.finite},
                                {"certificate_gap", zero.certificate_gap},
                                {"energy", en.value},
                                {"energy_finite", en.finite}};

    const double amp = cfg.get_double("ldp.bump_amp", 0.05);
    if (amp > 0.0) {
        SpaceTimePath bumped = path;
        for (int n = 0; n <= steps; ++n) {
            const double tfac = std::sin(std::numbers::pi * n / steps);
            for (int j = 1; j < mesh; ++j) {
                const double v =
                    bumped.at(n, j) + amp * tfac * std::sin(std::numbers::pi * j / mesh);
                bumped.at(n, j) = std::clamp(v, 0.0, 1.0);
            }
        }
        const RateFunctionalResult moved = rate_functional(bumped, bumped.slice(0), p);
        out.report["perturbed"] = {{"amplitude", amp},
                                   {"rate_value", moved.value},
                                   {"finite", moved.finite},
                                   {"certificate_gap", moved.certificate_gap}};
    }

    if (p.alpha == p.beta) {
        const SpaceTimePath rev = path.time_reversed();
        const RateFunctionalResult back = rate_functional(rev, rev.slice(0), p);
        out.report["time_reversal"] = {{"rate_value", back.value},
                                       {"forward_energy", en.value},
                                       {"abs_gap", std::abs(back.value - en.value)}};
    }

    out.report["provenance"] = provenance_block(cfg, opts);
    out.add_csv("path", csv_of_path(path));
    out.add_csv("certificate", csv_of_field(zero.certificate, T));
    return out;
}

// Quasi-potential of a target profile: the relative-entropy lower bound and
// the descent estimate over a horizon ladder, plus the zero check at the
// stationary profile.
inline CommandResult cmd_quasipotential(const Config& cfg, const RunOptions& opts) {
    const ModelParams p = detail::model_from(cfg);
    const int mesh = static_cast<int>(cfg.get_int("quasipotential.mesh", 200));
    const DensityProfile gamma =
        parse_profile(cfg.get_string("quasipotential.gamma", "constant:0.5"), mesh, p);
    const std::vector<double> ladder = cfg.get_doubles("quasipotential.ladder", {0.5, 1.0, 2.0, 4.0});
    const int per_unit = static_cast<int>(cfg.get_int("quasipotential.steps_per_unit", 50));

    DescentOptions dopts;
    dopts.max_iters = static_cast<int>(cfg.get_int("quasipotential.max_iters", dopts.max_iters));

    const double lb = quasipotential_lower_bound(gamma, p);

    CommandResult out;
    out.command = "quasipotential";
    nlohmann::json rungs = nlohmann::json::array();
    QuasipotentialResult best;
    bool first = true;
    for (double T : ladder) {
        const int n_t = std::max(16, static_cast<int>(std::lround(per_unit * T)));
        QuasipotentialResult r = quasipotential_estimate(gamma, p, T, n_t, mesh, dopts);
        rungs.push_back({{"t", T},
                         {"steps", n_t},
                         {"value", r.value},
                         {"converged", r.converged},
                         {"iterations", r.iterations},
                         {"projected_gradient", r.projected_gradient}});
        if (first || r.value < best.value) {
            best = std::move(r);
            first = false;
        }
    }

    const QuasipotentialResult at_bar = quasipotential_estimate(
        stationary_profile(p, mesh), p, ladder.front(),
        std::max(16, static_cast<int>(std::lround(per_unit * ladder.front()))), mesh, dopts);

    out.report["model"] = detail::model_block(p);
    out.report["mesh"] = mesh;
    out.report["lower_bound"] = lb;
    out.report["ladder"] = rungs;
    out.report["estimate"] = best.value;
    out.report["estimate_minus_lower_bound"] = best.value - lb;
    out.report["stationary_estimate"] = at_bar.value;
    out.report["provenance"] = provenance_block(cfg, opts);
    out.add_csv("optimal_path", csv_of_path(best.path));
    return out;
}

}  // namespace bdssep
