#pragma once

// Large-deviation functionals of density paths: the energy, the test-field
// functional J, and the rate functional computed by per-slice elliptic
// solves whose solutions double as the optimality certificate.
//
// Discrete conventions, chosen so that the per-slice maximization is the
// exact supremum of the discrete J over test fields:
//   - interior product  <f,g>  = h sum_{j=1..M-1} f_j g_j,
//   - half-cell product for gradients, (grad H)_{j+1/2} = (H_{j+1}-H_j)/h,
//   - mobility on half cells evaluated at the midpoint density,
//   - time integrals sample slice averages (midpoint rule),
//   - boundary gradients of test fields by first-order one-sided
//     differences, grad H(0) = H_1/h and grad H(1) = -H_{M-1}/h.
// With these choices summation by parts is exact:
//   <Lap_h u, H> = <u, Lap_h H> + (alpha H_1 + beta H_{M-1})/h
// for u with pinned boundary columns and H vanishing at the ends, which
// is precisely the combination of the Laplacian and boundary terms in the
// weak form.  Consequently the strong-form slice costs, the weak-form J,
// and the reconstructed certificate agree to rounding.
//
// Slice pairs inside the path's damped prefix were advanced by backward
// Euler, so there the drift and the mobility sample the right slice
// instead of the midpoint.  The identities above hold pair by pair, and a
// damped relaxation path scores zero exactly like an undamped one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/heat.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"

namespace bdssep {

struct EnergyResult {
    double value = 0.0;
    bool finite = true;
};

namespace detail {

// Mobility on the half cell between adjacent node densities.
inline double half_cell_mobility(double a, double b) { return mobility(0.5 * (a + b)); }

constexpr double kMobilityFloor = 1e-12;
constexpr double kFlatGradient = 1e-20;  // squared-gradient threshold for 0/0 cells
constexpr double kEnergyOverflow = 1e15;

}  // namespace detail

// Q(u) = (1/2) int dt int dx (grad u)^2 / chi(u), by midpoint-in-time and
// half-cell-in-space quadrature.  Returns the +infinity marker when the
// mobility vanishes against a nonzero gradient or a cell overflows.
inline EnergyResult energy(const SpaceTimePath& u) {
    u.check_unit_range();
    const double dt = u.dt();
    const double h = u.h();
    double total = 0.0;
    for (int n = 0; n < u.steps; ++n) {
        for (int j = 0; j < u.mesh; ++j) {
            const double a = 0.5 * (u.at(n, j) + u.at(n + 1, j));
            const double b = 0.5 * (u.at(n, j + 1) + u.at(n + 1, j + 1));
            const double grad = (b - a) / h;
            const double grad2 = grad * grad;
            const double chi = detail::half_cell_mobility(a, b);
            if (chi < detail::kMobilityFloor) {
                if (grad2 <= detail::kFlatGradient) continue;
                return {std::numeric_limits<double>::infinity(), false};
            }
            const double cell = grad2 / (2.0 * chi);
            if (cell > detail::kEnergyOverflow)
                return {std::numeric_limits<double>::infinity(), false};
            total += dt * h * cell;
        }
    }
    return {total, true};
}

// Discrete evaluation of the weak-form functional
//   J_H(u|gamma) = <u_T,H_T> - <gamma,H_0> - int <u, dH/dt>
//                  - (1/2) int <u, Lap H>
//                  + (beta/2) int grad H(1) - (alpha/2) int grad H(0)
//                  - (1/2) int <chi(u), (grad H)^2>,
// every space term sampled at slice averages.
inline double j_functional(const SpaceTimePath& u, const DensityProfile& gamma,
                           const TestField& field, const ModelParams& p) {
    p.validate();
    require(field.steps == u.steps && field.mesh == u.mesh, errc::validation,
            "j_functional: field grid must match the path grid");
    require(gamma.mesh == u.mesh, errc::validation,
            "j_functional: initial profile mesh must match the path grid");
    field.check_pinned();

    const int M = u.mesh;
    const double dt = u.dt();
    const double h = u.h();
    const int pref = std::clamp(u.damped_prefix, 0, u.steps);

    double endpoint = 0.0;
    for (int j = 1; j < M; ++j) {
        endpoint += h * (u.at(u.steps, j) * field.at(u.steps, j) -
                         gamma.values[static_cast<std::size_t>(j)] * field.at(0, j));
    }

    double time_term = 0.0, laplace_term = 0.0, boundary_term = 0.0, quad_term = 0.0;
    for (int n = 0; n < u.steps; ++n) {
        // Backward-Euler pairs sample the drift at the right slice.
        const double wr = n < pref ? 1.0 : 0.5;
        const double wl = 1.0 - wr;
        for (int j = 1; j < M; ++j) {
            const double ubar = 0.5 * (u.at(n, j) + u.at(n + 1, j));
            const double dH = field.at(n + 1, j) - field.at(n, j);
            time_term -= h * ubar * dH;

            const double udrift = wl * u.at(n, j) + wr * u.at(n + 1, j);
            const double hm = 0.5 * (field.at(n, j - 1) + field.at(n + 1, j - 1));
            const double hc = 0.5 * (field.at(n, j) + field.at(n + 1, j));
            const double hp = 0.5 * (field.at(n, j + 1) + field.at(n + 1, j + 1));
            laplace_term -= 0.5 * dt * h * udrift * (hm - 2.0 * hc + hp) / (h * h);
        }
        const double h1 = 0.5 * (field.at(n, 1) + field.at(n + 1, 1));
        const double hM1 = 0.5 * (field.at(n, M - 1) + field.at(n + 1, M - 1));
        boundary_term += dt * (0.5 * p.beta * (-hM1 / h) - 0.5 * p.alpha * (h1 / h));

        for (int j = 0; j < M; ++j) {
            const double a = wl * u.at(n, j) + wr * u.at(n + 1, j);
            const double b = wl * u.at(n, j + 1) + wr * u.at(n + 1, j + 1);
            const double ga = 0.5 * (field.at(n, j) + field.at(n + 1, j));
            const double gb = 0.5 * (field.at(n, j + 1) + field.at(n + 1, j + 1));
            const double dG = (gb - ga) / h;
            quad_term -= 0.5 * dt * h * detail::half_cell_mobility(a, b) * dG * dG;
        }
    }
    return endpoint + time_term + laplace_term + boundary_term + quad_term;
}

struct RateFunctionalResult {
    double value = 0.0;
    bool finite = true;
    TestField certificate;            // maximizing field; H^n+H^{n+1} = 2 G*_n
    double energy_value = 0.0;
    bool energy_finite = true;
    double certificate_gap = 0.0;     // value - J_certificate, rounding-sized
    std::vector<double> slice_cost;   // per-slice contributions, sum = value
    bool degenerate = false;          // elliptic solve hit vanishing mobility
};

namespace detail {

// Per-slice elliptic data: maximize <c,G> - (1/2) G^T A G over interior G
// with A = (1/h) D^T diag(chi) D.  The maximizer solves A G = h c and the
// attained value is (h/2) c . G.
struct SliceSolve {
    bool degenerate = false;
    double cost = 0.0;              // Delta_t * (h/2) c.G
    std::vector<double> gbar;       // interior maximizer, size M-1
};

inline SliceSolve solve_slice(const SpaceTimePath& u, int n) {
    const int M = u.mesh;
    const double dt = u.dt();
    const double h = u.h();
    const int m = M - 1;

    // Midpoint sampling for Crank-Nicolson pairs, right-slice sampling for
    // the backward-Euler pairs of the damped prefix.
    const double wr = n < std::clamp(u.damped_prefix, 0, u.steps) ? 1.0 : 0.5;
    const double wl = 1.0 - wr;

    std::vector<double> c(m), chi(M);
    double cmax = 0.0;
    for (int j = 1; j < M; ++j) {
        const double um = wl * u.at(n, j - 1) + wr * u.at(n + 1, j - 1);
        const double uc = wl * u.at(n, j) + wr * u.at(n + 1, j);
        const double up = wl * u.at(n, j + 1) + wr * u.at(n + 1, j + 1);
        const double lap = (um - 2.0 * uc + up) / (h * h);
        c[j - 1] = (u.at(n + 1, j) - u.at(n, j)) / dt - 0.5 * lap;
        cmax = std::max(cmax, std::abs(c[j - 1]));
    }
    bool floored = false;
    for (int j = 0; j < M; ++j) {
        const double a = wl * u.at(n, j) + wr * u.at(n + 1, j);
        const double b = wl * u.at(n, j + 1) + wr * u.at(n + 1, j + 1);
        chi[j] = half_cell_mobility(a, b);
        if (chi[j] < kMobilityFloor) floored = true;
    }

    SliceSolve out;
    out.gbar.assign(m, 0.0);
    if (floored) {
        // A flat slice with no drift mismatch costs nothing; otherwise the
        // supremum diverges.
        if (cmax <= 1e-13) return out;
        out.degenerate = true;
        return out;
    }

    // Thomas solve of the SPD tridiagonal A G = h c with
    // A_jj = (chi_{j-1/2}+chi_{j+1/2})/h, A_{j,j+1} = -chi_{j+1/2}/h.
    std::vector<double> diag(m), rhs(m);
    for (int i = 0; i < m; ++i) {
        diag[i] = (chi[i] + chi[i + 1]) / h;
        rhs[i] = h * c[i];
    }
    for (int i = 1; i < m; ++i) {
        const double off = -chi[i] / h;  // couples i-1 and i
        const double w = off / diag[i - 1];
        diag[i] -= w * off;
        rhs[i] -= w * rhs[i - 1];
    }
    out.gbar[m - 1] = rhs[m - 1] / diag[m - 1];
    for (int i = m - 1; i-- > 0;) {
        const double off = -chi[i + 1] / h;
        out.gbar[i] = (rhs[i] - off * out.gbar[i + 1]) / diag[i];
    }
    double dot = 0.0;
    for (int i = 0; i < m; ++i) dot += c[i] * out.gbar[i];
    out.cost = dt * 0.5 * h * dot;
    return out;
}

}  // namespace detail

// Rate functional of a pinned-boundary path with initial profile gamma.
// For finite-energy paths the supremum over test fields is attained by the
// per-slice elliptic solves; the reconstructed certificate satisfies
// j_functional(u, gamma, certificate, p) = value up to rounding.
inline RateFunctionalResult rate_functional(const SpaceTimePath& u, const DensityProfile& gamma,
                                            const ModelParams& p) {
    p.validate();
    require(gamma.mesh == u.mesh, errc::validation,
            "rate_functional: initial profile mesh must match the path grid");
    u.check_unit_range();
    require(u.boundary_pinned(1e-10), errc::validation,
            "rate_functional: path boundary columns must equal alpha and beta");
    for (int j = 1; j < u.mesh; ++j) {
        require(std::abs(u.at(0, j) - gamma.values[static_cast<std::size_t>(j)]) <= 1e-7,
                errc::validation, "rate_functional: path must start at gamma");
    }

    RateFunctionalResult out;
    const EnergyResult q = energy(u);
    out.energy_value = q.value;
    out.energy_finite = q.finite;
    if (!q.finite) {
        out.value = std::numeric_limits<double>::infinity();
        out.finite = false;
        return out;
    }

    const int m = u.mesh - 1;
    out.slice_cost.resize(static_cast<std::size_t>(u.steps));
    std::vector<std::vector<double>> gbars(static_cast<std::size_t>(u.steps));
    for (int n = 0; n < u.steps; ++n) {
        detail::SliceSolve s = detail::solve_slice(u, n);
        if (s.degenerate) {
            out.value = std::numeric_limits<double>::infinity();
            out.finite = false;
            out.degenerate = true;
            return out;
        }
        out.slice_cost[static_cast<std::size_t>(n)] = s.cost;
        out.value += s.cost;
        gbars[static_cast<std::size_t>(n)] = std::move(s.gbar);
    }

    // Certificate with prescribed slice averages: H^0 = G*_0, then
    // H^{n+1} = 2 G*_n - H^n.
    out.certificate = TestField(u.steps, u.mesh);
    for (int i = 0; i < m; ++i) out.certificate.at(0, i + 1) = gbars[0][static_cast<std::size_t>(i)];
    for (int n = 0; n < u.steps; ++n)
        for (int i = 0; i < m; ++i)
            out.certificate.at(n + 1, i + 1) =
                2.0 * gbars[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)] -
                out.certificate.at(n, i + 1);

    out.certificate_gap = out.value - j_functional(u, gamma, out.certificate, p);
    return out;
}

}  // namespace bdssep
