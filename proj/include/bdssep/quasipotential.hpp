#pragma once

// Quasi-potential machinery: the relative-entropy lower bound, a numerical
// upper estimate by minimizing the rate functional over pinned paths from
// the stationary profile, and the path-space infimum inequality check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/functionals.hpp"
#include "bdssep/heat.hpp"
#include "bdssep/metric.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"
#include "bdssep/rng.hpp"

namespace bdssep {

// Integral of the Bernoulli relative entropy of gamma against the
// stationary profile, with the 0 log 0 = 0 convention.  Nonnegative, and
// zero exactly when gamma equals the stationary profile.
inline double quasipotential_lower_bound(const DensityProfile& gamma, const ModelParams& p) {
    p.validate();
    gamma.check_unit_range();
    const DensityProfile rho = stationary_profile(p, gamma.mesh);
    auto xlogy = [](double x, double y) { return x > 0.0 ? x * std::log(y) : 0.0; };
    double total = 0.0;
    for (int j = 0; j <= gamma.mesh; ++j) {
        const double g = gamma.values[static_cast<std::size_t>(j)];
        const double r = rho.values[static_cast<std::size_t>(j)];
        const double cell = xlogy(g, g / r) + xlogy(1.0 - g, (1.0 - g) / (1.0 - r));
        total += quad_weight(j, gamma.mesh) * cell;
    }
    return std::max(0.0, total);
}

struct DescentOptions {
    int max_iters = 400;
    double clip = 1e-4;           // projection box [clip, 1-clip]
    double grad_tol = 1e-7;       // sup-norm of the projected gradient step
    double initial_step = 1.0;
    double shrink = 0.5;
    double grow = 1.3;
    int max_backtracks = 45;
    double armijo = 1e-4;
};

struct QuasipotentialResult {
    double value = 0.0;
    SpaceTimePath path;
    bool converged = false;
    int iterations = 0;
    double projected_gradient = 0.0;
};

namespace detail {

// Objective of the descent: the summed slice costs.  Fills the per-slice
// maximizers for the gradient.  Degenerate slices (clipped paths never
// produce them) are reported as +infinity.
inline double descent_objective(const SpaceTimePath& u, std::vector<std::vector<double>>& gbars) {
    gbars.assign(static_cast<std::size_t>(u.steps), {});
    double total = 0.0;
    for (int n = 0; n < u.steps; ++n) {
        SliceSolve s = solve_slice(u, n);
        if (s.degenerate) return std::numeric_limits<double>::infinity();
        total += s.cost;
        gbars[static_cast<std::size_t>(n)] = std::move(s.gbar);
    }
    return total;
}

// Exact gradient of the discrete objective with the maximizers held fixed
// (envelope rule; the inner maximization is smooth and uniquely attained).
// grad is (steps-1) x (mesh-1), indexed by interior slice m-1, node j-1.
inline void descent_gradient(const SpaceTimePath& u, const std::vector<std::vector<double>>& gbars,
                             std::vector<double>& grad) {
    const int M = u.mesh;
    const int m_cnt = M - 1;
    const double dt = u.dt();
    const double h = u.h();
    grad.assign(static_cast<std::size_t>(u.steps - 1) * m_cnt, 0.0);

    auto gb = [&](int n, int j) -> double {  // test-field value at node j, 0 at ends
        if (j <= 0 || j >= M) return 0.0;
        return gbars[static_cast<std::size_t>(n)][static_cast<std::size_t>(j - 1)];
    };

    for (int m = 1; m < u.steps; ++m) {
        for (int j = 1; j < M; ++j) {
            double g = 0.0;
            for (int n : {m - 1, m}) {
                const double sign = (n == m - 1) ? 1.0 : -1.0;
                const double lapG = (gb(n, j - 1) - 2.0 * gb(n, j) + gb(n, j + 1)) / (h * h);
                g += h * sign * gb(n, j) - (dt * h / 4.0) * lapG;

                // Mobility sensitivity on the two half cells next to node j.
                const double u_jm = 0.5 * (u.at(n, j - 1) + u.at(n + 1, j - 1));
                const double u_j = 0.5 * (u.at(n, j) + u.at(n + 1, j));
                const double u_jp = 0.5 * (u.at(n, j + 1) + u.at(n + 1, j + 1));
                const double mid_l = 0.5 * (u_jm + u_j);
                const double mid_r = 0.5 * (u_j + u_jp);
                const double dG_l = gb(n, j) - gb(n, j - 1);
                const double dG_r = gb(n, j + 1) - gb(n, j);
                g -= (dt / (8.0 * h)) *
                     ((1.0 - 2.0 * mid_l) * dG_l * dG_l + (1.0 - 2.0 * mid_r) * dG_r * dG_r);
            }
            grad[static_cast<std::size_t>(m - 1) * m_cnt + (j - 1)] = g;
        }
    }
}

inline double clip_to(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace detail

// Upper estimate of the quasi-potential at gamma: minimizes the rate
// functional over paths on [0,T] with slice 0 equal to the stationary
// profile and the final slice equal to gamma (endpoints overridden by the
// reservoir densities), by projected gradient descent over the interior
// grid values with Armijo backtracking.  The starting guess is the
// time-reversed diffusive relaxation from gamma, which is already optimal
// in the reversible case as T grows.
inline QuasipotentialResult quasipotential_estimate(const DensityProfile& gamma,
                                                    const ModelParams& p, double T, int n_t,
                                                    int n_x, const DescentOptions& opts = {}) {
    p.validate();
    gamma.check_unit_range();
    require(gamma.mesh == n_x, errc::validation,
            "quasipotential_estimate: profile mesh must equal n_x");
    require(opts.clip > 0.0 && opts.clip < 0.5, errc::validation,
            "quasipotential_estimate: clip must lie in (0, 1/2)");
    require(p.alpha >= opts.clip && p.beta <= 1.0 - opts.clip, errc::validation,
            "quasipotential_estimate: reservoir densities inside the clip box");

    const double lo = opts.clip, hi = 1.0 - opts.clip;
    const DensityProfile rho = stationary_profile(p, n_x);

    // Start from the reversed relaxation path, endpoints forced exactly.
    const SpaceTimePath relax = heat_solve(gamma, p, T, n_t, n_x);
    SpaceTimePath u(T, n_t, n_x, p.alpha, p.beta);
    for (int n = 0; n <= n_t; ++n) {
        u.at(n, 0) = p.alpha;
        u.at(n, n_x) = p.beta;
        for (int j = 1; j < n_x; ++j) {
            double v;
            if (n == 0) {
                v = rho.values[static_cast<std::size_t>(j)];
            } else if (n == n_t) {
                v = gamma.values[static_cast<std::size_t>(j)];
            } else {
                v = detail::clip_to(relax.at(n_t - n, j), lo, hi);
            }
            u.at(n, j) = v;
        }
    }

    const int m_cnt = n_x - 1;
    std::vector<std::vector<double>> gbars;
    std::vector<double> grad;
    double value = detail::descent_objective(u, gbars);

    QuasipotentialResult out;
    double step = opts.initial_step;
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        detail::descent_gradient(u, gbars, grad);

        // Projected-gradient stationarity measure at unit step.
        double pg = 0.0;
        for (int m = 1; m < n_t; ++m)
            for (int j = 1; j < n_x; ++j) {
                const double g = grad[static_cast<std::size_t>(m - 1) * m_cnt + (j - 1)];
                const double moved = detail::clip_to(u.at(m, j) - g, lo, hi);
                pg = std::max(pg, std::abs(u.at(m, j) - moved));
            }
        out.projected_gradient = pg;
        if (pg <= opts.grad_tol) {
            out.converged = true;
            break;
        }

        bool accepted = false;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            SpaceTimePath trial = u;
            double move2 = 0.0;
            for (int m = 1; m < n_t; ++m)
                for (int j = 1; j < n_x; ++j) {
                    const double g = grad[static_cast<std::size_t>(m - 1) * m_cnt + (j - 1)];
                    const double v = detail::clip_to(u.at(m, j) - step * g, lo, hi);
                    const double d = v - u.at(m, j);
                    move2 += d * d;
                    trial.at(m, j) = v;
                }
            if (move2 == 0.0) break;
            std::vector<std::vector<double>> trial_gbars;
            const double trial_value = detail::descent_objective(trial, trial_gbars);
            if (trial_value <= value - (opts.armijo / step) * move2) {
                u = std::move(trial);
                gbars = std::move(trial_gbars);
                value = trial_value;
                step *= opts.grow;
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        if (!accepted) {
            // No descent direction at the smallest step: numerically stationary.
            out.converged = true;
            ++it;
            break;
        }
    }

    out.value = value;
    out.path = std::move(u);
    out.iterations = it;
    return out;
}

// Sweeps the horizon ladder and keeps the best (smallest) estimate; the
// infimum over T is monotone, so a finite ladder brackets it.
inline QuasipotentialResult quasipotential_over_ladder(const DensityProfile& gamma,
                                                       const ModelParams& p,
                                                       const std::vector<double>& ladder,
                                                       int n_t_per_unit, int n_x,
                                                       const DescentOptions& opts = {}) {
    require(!ladder.empty(), errc::validation, "quasipotential_over_ladder: empty ladder");
    QuasipotentialResult best;
    bool first = true;
    for (double T : ladder) {
        const int n_t = std::max(16, static_cast<int>(std::lround(n_t_per_unit * T)));
        QuasipotentialResult r = quasipotential_estimate(gamma, p, T, n_t, n_x, opts);
        if (first || r.value < best.value) {
            best = std::move(r);
            first = false;
        }
    }
    return best;
}

struct PathCheckRow {
    std::size_t index = 0;
    bool touches = false;
    double rate_value = 0.0;
    bool rate_finite = true;
    double start_estimate = 0.0;  // quasi-potential estimate of the initial slice
    double lhs = 0.0;             // rate + start estimate
    double slack = 0.0;           // lhs - rhs
    bool holds = false;
};

struct PathCheckReport {
    std::vector<PathCheckRow> rows;
    double rhs = 0.0;  // min over sampled profiles in the set of the lower bound
    std::size_t sampled = 0;
    double tolerance = 0.0;
    bool all_hold = true;  // over candidates that touch the set
};

// Deterministic sample of profiles inside the set: the center plus smooth
// single-mode perturbations that stay in [0,1] and inside the ball.
inline std::vector<DensityProfile> sample_profiles_in_set(const ProfileSet& s, int mesh,
                                                          std::size_t count, std::uint64_t seed) {
    std::vector<DensityProfile> out;
    require(s.center.mesh == mesh, errc::validation,
            "sample_profiles_in_set: center mesh mismatch");
    out.push_back(s.center);
    RngStream rng(seed, 0);
    const double pi = 3.14159265358979323846;
    std::size_t attempts = 0;
    while (out.size() < count + 1 && attempts < 50 * count) {
        ++attempts;
        const int mode = 1 + static_cast<int>(rng.uniform() * 4.0);
        const double amp = s.radius * (2.0 * rng.uniform() - 1.0);
        DensityProfile g = s.center;
        for (int j = 0; j <= mesh; ++j) {
            double v = g.values[static_cast<std::size_t>(j)] + amp * std::sin(mode * pi * g.x(j));
            g.values[static_cast<std::size_t>(j)] = detail::clip_to(v, 0.0, 1.0);
        }
        if (in_set(g, s)) out.push_back(std::move(g));
    }
    return out;
}

// For every candidate path that touches the set, checks
//   rate_functional(u | u_0) + quasipotential_estimate(u_0)
//     >= min over sampled profiles of quasipotential_lower_bound - tol.
inline PathCheckReport pathspace_infimum_check(const ProfileSet& s, const ModelParams& p,
                                               const std::vector<SpaceTimePath>& candidates,
                                               double estimate_T, int estimate_nt,
                                               double tolerance = 1e-3,
                                               std::size_t set_samples = 8,
                                               std::uint64_t seed = 2024,
                                               const DescentOptions& opts = {}) {
    PathCheckReport report;
    report.tolerance = tolerance;

    require(!candidates.empty(), errc::validation, "pathspace_infimum_check: no candidates");
    const int mesh = candidates.front().mesh;
    const auto samples = sample_profiles_in_set(s, mesh, set_samples, seed);
    report.sampled = samples.size();
    double rhs = std::numeric_limits<double>::infinity();
    for (const auto& g : samples) rhs = std::min(rhs, quasipotential_lower_bound(g, p));
    report.rhs = rhs;

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const SpaceTimePath& u = candidates[i];
        require(u.mesh == mesh, errc::validation, "pathspace_infimum_check: mixed meshes");
        PathCheckRow row;
        row.index = i;
        for (int n = 0; n <= u.steps && !row.touches; ++n) row.touches = in_set(u.slice(n), s);
        if (row.touches) {
            const DensityProfile start = u.slice(0);
            const RateFunctionalResult rf = rate_functional(u, start, p);
            row.rate_value = rf.value;
            row.rate_finite = rf.finite;
            row.start_estimate =
                quasipotential_estimate(start, p, estimate_T, estimate_nt, mesh, opts).value;
            row.lhs = row.rate_value + row.start_estimate;
            row.slack = row.lhs - (report.rhs - tolerance);
            row.holds = !rf.finite || row.slack >= 0.0;
            if (!row.holds) report.all_hold = false;
        }
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace bdssep
