#pragma once

// Space-time grids and the diffusive evolution u_t = (1/2) u_xx with
// Dirichlet data alpha, beta.  Time stepping is Crank-Nicolson; the first
// few steps can be taken with backward Euler instead, which damps the
// high-frequency content of rough initial data and restores the discrete
// maximum principle on coarse time grids.  A fixed number of first-order
// steps does not change the second-order global accuracy.  The path
// records how many leading steps were damped so functionals can score
// each slice pair against the scheme that actually produced it.

#include <algorithm>
#include <cmath>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"

namespace bdssep {

// Density path on the uniform grid t_n = n T/steps, x_j = j/mesh.
// Row n holds slice n.  Finite-rate candidates keep the boundary columns
// pinned to the reservoir densities on every slice.
struct SpaceTimePath {
    double horizon = 0.0;
    int steps = 0;
    int mesh = 0;
    double alpha = 0.0;
    double beta = 0.0;
    // Leading slice pairs advanced by backward Euler rather than
    // Crank-Nicolson (zero for hand-built paths).
    int damped_prefix = 0;
    std::vector<double> values;  // (steps+1) x (mesh+1), row-major in time

    SpaceTimePath() = default;
    SpaceTimePath(double T, int n_t, int n_x, double a, double b)
        : horizon(T), steps(n_t), mesh(n_x), alpha(a), beta(b),
          values(static_cast<std::size_t>(n_t + 1) * (n_x + 1), 0.0) {
        require(T > 0.0, errc::validation, "SpaceTimePath: horizon must be positive");
        require(n_t >= 1, errc::validation, "SpaceTimePath: need at least one time step");
        require(n_x >= 2, errc::validation, "SpaceTimePath: need at least two space cells");
    }

    [[nodiscard]] double dt() const noexcept { return horizon / steps; }
    [[nodiscard]] double h() const noexcept { return 1.0 / mesh; }

    [[nodiscard]] double at(int n, int j) const noexcept {
        return values[static_cast<std::size_t>(n) * (mesh + 1) + j];
    }
    double& at(int n, int j) noexcept {
        return values[static_cast<std::size_t>(n) * (mesh + 1) + j];
    }

    [[nodiscard]] DensityProfile slice(int n) const {
        require(n >= 0 && n <= steps, errc::validation, "SpaceTimePath: slice index out of range");
        DensityProfile g(mesh, 0.0);
        for (int j = 0; j <= mesh; ++j) g.values[static_cast<std::size_t>(j)] = at(n, j);
        return g;
    }

    void check_unit_range() const {
        for (double v : values)
            require(v >= 0.0 && v <= 1.0, errc::validation, "SpaceTimePath: values must lie in [0,1]");
    }

    [[nodiscard]] bool boundary_pinned(double tol = 1e-12) const noexcept {
        for (int n = 0; n <= steps; ++n) {
            if (std::abs(at(n, 0) - alpha) > tol) return false;
            if (std::abs(at(n, mesh) - beta) > tol) return false;
        }
        return true;
    }

    // Same grid, time slices in reverse order.  The reversed path is a
    // generic candidate, so the damped prefix does not carry over.
    [[nodiscard]] SpaceTimePath time_reversed() const {
        SpaceTimePath out = *this;
        out.damped_prefix = 0;
        for (int n = 0; n <= steps; ++n)
            for (int j = 0; j <= mesh; ++j) out.at(n, j) = at(steps - n, j);
        return out;
    }

    static SpaceTimePath constant(const DensityProfile& g, double T, int n_t, double a, double b) {
        SpaceTimePath u(T, n_t, g.mesh, a, b);
        for (int n = 0; n <= n_t; ++n)
            for (int j = 0; j <= g.mesh; ++j) u.at(n, j) = g.values[static_cast<std::size_t>(j)];
        return u;
    }
};

// Test field on the same grid, vanishing at both spatial endpoints.
struct TestField {
    int steps = 0;
    int mesh = 0;
    std::vector<double> values;  // (steps+1) x (mesh+1)

    TestField() = default;
    TestField(int n_t, int n_x)
        : steps(n_t), mesh(n_x), values(static_cast<std::size_t>(n_t + 1) * (n_x + 1), 0.0) {
        require(n_t >= 1, errc::validation, "TestField: need at least one time step");
        require(n_x >= 2, errc::validation, "TestField: need at least two space cells");
    }

    [[nodiscard]] double at(int n, int j) const noexcept {
        return values[static_cast<std::size_t>(n) * (mesh + 1) + j];
    }
    double& at(int n, int j) noexcept {
        return values[static_cast<std::size_t>(n) * (mesh + 1) + j];
    }

    void check_pinned() const {
        for (int n = 0; n <= steps; ++n)
            require(at(n, 0) == 0.0 && at(n, mesh) == 0.0, errc::validation,
                    "TestField: must vanish at the spatial endpoints");
    }
};

struct HeatOptions {
    // Number of leading steps taken with backward Euler instead of
    // Crank-Nicolson (0 disables the damped start).
    int damped_start_steps = 2;
};

namespace detail {

// Solves (I - r D) v = rhs on the interior nodes, D the second-difference
// operator with zero Dirichlet ends, where r = dt/(4 h^2) absorbs the 1/2
// diffusivity.  Boundary contributions must already sit in rhs.
inline void heat_tridiag_solve(std::vector<double>& rhs, double r) {
    const std::size_t m = rhs.size();
    const double diag = 1.0 + 2.0 * r;
    const double off = -r;
    std::vector<double> d(m, diag);
    for (std::size_t i = 1; i < m; ++i) {
        const double w = off / d[i - 1];
        d[i] -= w * off;
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[m - 1] /= d[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) rhs[i] = (rhs[i] - off * rhs[i + 1]) / d[i];
}

}  // namespace detail

// Crank-Nicolson solution of u_t = (1/2) u_xx on [0,T] with u(t,0)=alpha,
// u(t,1)=beta and initial slice gamma (its endpoint nodes are overridden
// by the reservoir densities, so every slice is pinned).  gamma must live
// on the same spatial grid.
inline SpaceTimePath heat_solve(const DensityProfile& gamma, const ModelParams& p, double T,
                                int n_t, int n_x, const HeatOptions& opts = {}) {
    p.validate();
    require(gamma.mesh == n_x, errc::validation, "heat_solve: profile mesh must equal n_x");
    gamma.check_unit_range();
    require(opts.damped_start_steps >= 0 && opts.damped_start_steps <= n_t, errc::validation,
            "heat_solve: damped start steps out of range");

    SpaceTimePath u(T, n_t, n_x, p.alpha, p.beta);
    for (int j = 0; j <= n_x; ++j) u.at(0, j) = gamma.values[static_cast<std::size_t>(j)];
    u.at(0, 0) = p.alpha;
    u.at(0, n_x) = p.beta;

    const double dt = u.dt();
    const double h = u.h();
    const double r = dt / (4.0 * h * h);
    const int m = n_x - 1;  // interior nodes

    std::vector<double> cur(u.values.begin() + 1, u.values.begin() + 1 + m);
    std::vector<double> rhs(m);

    auto backward_euler_step = [&]() {
        // (I - 2r D) v = cur, boundary feeds 2r*alpha and 2r*beta.
        for (int i = 0; i < m; ++i) rhs[i] = cur[i];
        rhs[0] += 2.0 * r * p.alpha;
        rhs[m - 1] += 2.0 * r * p.beta;
        detail::heat_tridiag_solve(rhs, 2.0 * r);
        cur = rhs;
    };

    auto cn_step = [&]() {
        // (I - r D) v = (I + r D) cur, boundary feeds 2 r alpha, 2 r beta.
        for (int i = 0; i < m; ++i) {
            const double left = (i == 0) ? p.alpha : cur[i - 1];
            const double right = (i == m - 1) ? p.beta : cur[i + 1];
            rhs[i] = cur[i] + r * (left - 2.0 * cur[i] + right);
        }
        rhs[0] += r * p.alpha;
        rhs[m - 1] += r * p.beta;
        detail::heat_tridiag_solve(rhs, r);
        cur = rhs;
    };

    for (int n = 0; n < n_t; ++n) {
        if (n < opts.damped_start_steps) {
            backward_euler_step();
        } else {
            cn_step();
        }
        u.at(n + 1, 0) = p.alpha;
        u.at(n + 1, n_x) = p.beta;
        for (int i = 0; i < m; ++i) u.at(n + 1, i + 1) = cur[i];
    }
    u.damped_prefix = opts.damped_start_steps;
    return u;
}

}  // namespace bdssep
