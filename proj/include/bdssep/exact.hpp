#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/rate_matrix.hpp"

namespace bdssep {

struct StationaryDistribution {
    Eigen::VectorXd weights;  // strictly positive, sums to one
    double residual = 0.0;    // ||nu^T Q||_inf achieved by the solve

    [[nodiscard]] double mass(const StateSet& s) const {
        double m = 0.0;
        for (std::int64_t i : s.indices()) m += weights(i);
        return m;
    }
};

namespace detail {

// Kosaraju over the sparsity pattern; used when irreducibility is not
// guaranteed by construction.
inline bool pattern_strongly_connected(const SpMat& q) {
    const std::int64_t n = q.rows();
    if (n <= 1) return true;
    std::vector<std::vector<std::int32_t>> fwd(static_cast<std::size_t>(n)), rev(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        for (SpMat::InnerIterator it(q, i); it; ++it)
            if (it.col() != i && it.value() > 0.0) {
                fwd[static_cast<std::size_t>(i)].push_back(static_cast<std::int32_t>(it.col()));
                rev[static_cast<std::size_t>(it.col())].push_back(static_cast<std::int32_t>(i));
            }
    auto reaches_all = [n](const std::vector<std::vector<std::int32_t>>& adj) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<std::int32_t> stack{0};
        seen[0] = 1;
        std::int64_t count = 1;
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (auto v : adj[static_cast<std::size_t>(u)])
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    ++count;
                    stack.push_back(v);
                }
        }
        return count == n;
    };
    return reaches_all(fwd) && reaches_all(rev);
}

inline void ensure_irreducible(const RateMatrix& q) {
    if (q.structurally_irreducible) return;
    require(pattern_strongly_connected(q.matrix()), errc::numerical,
            "generator is not irreducible; stationary analysis undefined");
}

using SolverLU = Eigen::SparseLU<Eigen::SparseMatrix<double>>;

inline void factorize(SolverLU& lu, const Eigen::SparseMatrix<double>& a, const char* who) {
    lu.compute(a);
    require(lu.info() == Eigen::Success, errc::numerical, std::string(who) + ": sparse LU factorization failed");
}

}  // namespace detail

// Global balance with the normalization row replacing one balance equation,
// then two rounds of iterative refinement with extended-precision residuals.
inline StationaryDistribution solve_stationary(const RateMatrix& q, double tol = 1e-12) {
    detail::ensure_irreducible(q);
    const std::int64_t n = q.dim();
    Eigen::SparseMatrix<double> a(n, n);
    {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(q.matrix().nonZeros()) + static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            for (SpMat::InnerIterator it(q.matrix(), i); it; ++it)
                if (it.col() != 0) trip.emplace_back(static_cast<int>(it.col()), static_cast<int>(i), it.value());
        for (std::int64_t j = 0; j < n; ++j) trip.emplace_back(0, static_cast<int>(j), 1.0);
        a.setFromTriplets(trip.begin(), trip.end());
        a.makeCompressed();
    }
    detail::SolverLU lu;
    detail::factorize(lu, a, "solve_stationary");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(0) = 1.0;
    Eigen::VectorXd x = lu.solve(b);
    require(lu.info() == Eigen::Success, errc::numerical, "solve_stationary: solve failed");
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<long double> r(static_cast<std::size_t>(n), 0.0L);
        for (std::int64_t j = 0; j < n; ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
                r[static_cast<std::size_t>(it.row())] +=
                    static_cast<long double>(it.value()) * static_cast<long double>(x(j));
        r[0] -= 1.0L;
        Eigen::VectorXd rd(n);
        for (std::int64_t i = 0; i < n; ++i) rd(i) = static_cast<double>(r[static_cast<std::size_t>(i)]);
        x -= lu.solve(rd);
    }
    const double total = x.sum();
    require(std::isfinite(total) && total > 0.0, errc::numerical, "solve_stationary: degenerate solution");
    x /= total;
    StationaryDistribution out;
    out.weights = x;
    Eigen::VectorXd res = q.matrix().transpose() * x;
    out.residual = res.lpNorm<Eigen::Infinity>();
    const double qnorm = 2.0 * q.max_exit_rate();
    require(out.residual <= tol * std::max(qnorm, 1.0), errc::numerical,
            "solve_stationary: residual above tolerance");
    require(x.minCoeff() > 0.0, errc::numerical, "solve_stationary: nonpositive stationary weight");
    return out;
}

// Time-reversed rates R*(x,y) = nu(y) R(y,x) / nu(x); exit rates (and thus
// the holding-time structure) are preserved because nu is stationary.
inline RateMatrix adjoint_rates(const RateMatrix& q, const StationaryDistribution& nu) {
    require(q.dim() == nu.weights.size(), errc::validation, "adjoint_rates: dimension mismatch");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(q.matrix().nonZeros()));
    for (std::int64_t i = 0; i < q.dim(); ++i)
        q.for_each_offdiag_in_row(i, [&](std::int64_t j, double v) {
            trip.emplace_back(static_cast<int>(j), static_cast<int>(i), nu.weights(i) * v / nu.weights(j));
        });
    RateMatrix adj = RateMatrix::from_offdiagonal_triplets(q.dim(), trip);
    adj.structurally_irreducible = q.structurally_irreducible;
    return adj;
}

// Largest violation of detailed balance nu_i R_ij = nu_j R_ji over all edges.
inline double detailed_balance_gap(const RateMatrix& q, const StationaryDistribution& nu) {
    double gap = 0.0;
    for (std::int64_t i = 0; i < q.dim(); ++i)
        q.for_each_offdiag_in_row(i, [&](std::int64_t j, double v) {
            double back = 0.0;
            q.for_each_offdiag_in_row(j, [&](std::int64_t k, double w) {
                if (k == i) back = w;
            });
            gap = std::max(gap, std::abs(nu.weights(i) * v - nu.weights(j) * back));
        });
    return gap;
}

namespace detail {

struct Restriction {
    std::vector<std::int64_t> full_of_sub;  // sub index -> full index
    std::vector<std::int64_t> sub_of_full;  // full index -> sub index or -1
};

inline Restriction restriction_to(const StateSet& keep) {
    Restriction r;
    r.sub_of_full.assign(static_cast<std::size_t>(keep.dim()), -1);
    for (std::int64_t i = 0; i < keep.dim(); ++i)
        if (keep.contains(i)) {
            r.sub_of_full[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(r.full_of_sub.size());
            r.full_of_sub.push_back(i);
        }
    return r;
}

// Principal submatrix of the generator over `keep` (column-major, LU-ready).
inline Eigen::SparseMatrix<double> principal_submatrix(const RateMatrix& q, const StateSet& keep,
                                                       const Restriction& r) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t s = 0; s < r.full_of_sub.size(); ++s) {
        const std::int64_t i = r.full_of_sub[s];
        for (SpMat::InnerIterator it(q.matrix(), i); it; ++it) {
            if (it.col() == i) {
                trip.emplace_back(static_cast<int>(s), static_cast<int>(s), it.value());
            } else if (keep.contains(it.col())) {
                trip.emplace_back(static_cast<int>(s),
                                  static_cast<int>(r.sub_of_full[static_cast<std::size_t>(it.col())]), it.value());
            }
        }
    }
    Eigen::SparseMatrix<double> sub(static_cast<std::int64_t>(r.full_of_sub.size()),
                                    static_cast<std::int64_t>(r.full_of_sub.size()));
    sub.setFromTriplets(trip.begin(), trip.end());
    sub.makeCompressed();
    return sub;
}

}  // namespace detail

// u(eta) = E_eta[H_A]; zero on A, solves (Q u)|_{A^c} = -1.
inline Eigen::VectorXd mean_hitting_times(const RateMatrix& q, const StateSet& a) {
    require(q.dim() == a.dim(), errc::validation, "mean_hitting_times: dimension mismatch");
    require(a.count() >= 1, errc::validation, "mean_hitting_times: target set is empty");
    const StateSet keep = a.complement();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(q.dim());
    if (keep.count() == 0) return u;
    const auto r = detail::restriction_to(keep);
    const auto sub = detail::principal_submatrix(q, keep, r);
    detail::SolverLU lu;
    detail::factorize(lu, sub, "mean_hitting_times");
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(sub.rows(), -1.0);
    Eigen::VectorXd us = lu.solve(rhs);
    require(lu.info() == Eigen::Success, errc::numerical, "mean_hitting_times: solve failed");
    require(us.minCoeff() >= 0.0, errc::numerical, "mean_hitting_times: negative mean");
    for (std::size_t s = 0; s < r.full_of_sub.size(); ++s) u(r.full_of_sub[s]) = us(static_cast<std::int64_t>(s));
    return u;
}

// h(eta) = P_eta[H_B < H_A]: zero on A, one on B, harmonic elsewhere.
inline Eigen::VectorXd equilibrium_potential(const RateMatrix& q, const StateSet& a, const StateSet& b) {
    require(q.dim() == a.dim() && q.dim() == b.dim(), errc::validation,
            "equilibrium_potential: dimension mismatch");
    require(a.count() >= 1 && b.count() >= 1, errc::validation, "equilibrium_potential: empty set");
    StateSet keep(q.dim(), "transient");
    for (std::int64_t i = 0; i < q.dim(); ++i) {
        require(!(a.contains(i) && b.contains(i)), errc::validation, "equilibrium_potential: sets overlap");
        if (!a.contains(i) && !b.contains(i)) keep.insert(i);
    }
    Eigen::VectorXd h = Eigen::VectorXd::Zero(q.dim());
    for (std::int64_t i : b.indices()) h(i) = 1.0;
    if (keep.count() == 0) return h;
    const auto r = detail::restriction_to(keep);
    const auto sub = detail::principal_submatrix(q, keep, r);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sub.rows());
    for (std::size_t s = 0; s < r.full_of_sub.size(); ++s) {
        const std::int64_t i = r.full_of_sub[s];
        q.for_each_offdiag_in_row(i, [&](std::int64_t j, double v) {
            if (b.contains(j)) rhs(static_cast<std::int64_t>(s)) -= v;
        });
    }
    detail::SolverLU lu;
    detail::factorize(lu, sub, "equilibrium_potential");
    Eigen::VectorXd hs = lu.solve(rhs);
    require(lu.info() == Eigen::Success, errc::numerical, "equilibrium_potential: solve failed");
    for (std::size_t s = 0; s < r.full_of_sub.size(); ++s) {
        const double v = hs(static_cast<std::int64_t>(s));
        require(v >= -1e-10 && v <= 1.0 + 1e-10, errc::numerical, "equilibrium_potential: value outside [0,1]");
        h(r.full_of_sub[s]) = std::clamp(v, 0.0, 1.0);
    }
    return h;
}

// P_eta[H_B < H_A^+] for eta in A, via one jump into the potential h.
inline double escape_probability(const RateMatrix& q, std::int64_t eta, const Eigen::VectorXd& h) {
    double num = 0.0;
    q.for_each_offdiag_in_row(eta, [&](std::int64_t j, double v) { num += v * h(j); });
    const double lambda = q.exit_rates()(eta);
    require(lambda > 0.0, errc::numerical, "escape_probability: absorbing state");
    return num / lambda;
}

// Cap(A,B) = sum_{eta in A} nu(eta) lambda(eta) P_eta[H_B < H_A^+].
inline double capacity(const RateMatrix& q, const StationaryDistribution& nu, const StateSet& a,
                       const StateSet& b) {
    const Eigen::VectorXd h = equilibrium_potential(q, a, b);
    double cap = 0.0;
    for (std::int64_t i : a.indices()) {
        double flow = 0.0;
        q.for_each_offdiag_in_row(i, [&](std::int64_t j, double v) { flow += v * h(j); });
        cap += nu.weights(i) * flow;
    }
    return cap;
}

// r(A^c, A) = (1/nu(A^c)) sum_{xi not in A} nu(xi) R(xi, A).
inline double average_jump_rate(const RateMatrix& q, const StationaryDistribution& nu, const StateSet& a) {
    require(q.dim() == a.dim(), errc::validation, "average_jump_rate: dimension mismatch");
    const StateSet ac = a.complement();
    const double mass = nu.mass(ac);
    require(mass > 0.0, errc::validation, "average_jump_rate: complement has no stationary mass");
    double s = 0.0;
    for (std::int64_t i : ac.indices()) s += nu.weights(i) * q.rate_into(i, a);
    return s / mass;
}

inline Eigen::VectorXd conditioned_distribution(const Eigen::VectorXd& nu, const StateSet& b) {
    require(nu.size() == b.dim(), errc::validation, "conditioned_distribution: dimension mismatch");
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(nu.size());
    double mass = 0.0;
    for (std::int64_t i : b.indices()) {
        mu(i) = nu(i);
        mass += nu(i);
    }
    require(mass > 0.0, errc::validation, "conditioned_distribution: set has zero mass");
    return mu / mass;
}

// E_nu[H_A] assembled from capacities: for every eta outside A,
// E_eta[H_A] * Cap(eta, A) = sum_{xi not in A} nu(xi) P*_xi[H_eta < H_A],
// where the probability runs over the time-reversed chain.
inline double mean_hitting_via_capacities(const RateMatrix& q, const RateMatrix& adj,
                                          const StationaryDistribution& nu, const StateSet& a) {
    require(q.dim() == a.dim() && adj.dim() == a.dim(), errc::validation,
            "mean_hitting_via_capacities: dimension mismatch");
    double total = 0.0;
    for (std::int64_t eta = 0; eta < q.dim(); ++eta) {
        if (a.contains(eta)) continue;
        StateSet point(q.dim(), "target state");
        point.insert(eta);
        const Eigen::VectorXd hstar = equilibrium_potential(adj, a, point);
        double num = 0.0;
        for (std::int64_t xi = 0; xi < q.dim(); ++xi)
            if (!a.contains(xi)) num += nu.weights(xi) * hstar(xi);
        const double cap = capacity(q, nu, point, a);
        require(cap > 0.0, errc::numerical, "mean_hitting_via_capacities: vanishing capacity");
        total += nu.weights(eta) * num / cap;
    }
    return total;
}

struct EnlargedChain {
    RateMatrix generator;        // dimension 2m: originals first, starred copies after
    Eigen::VectorXd stationary;  // nu_star = (nu/2, nu/2)
    std::int64_t base_dim = 0;

    [[nodiscard]] std::int64_t star_of(std::int64_t i) const noexcept { return i + base_dim; }
};

// Doubled chain: starred lane mirrors the original rates, and every state
// trades places with its star at symmetric rate gamma. Halving nu on both
// lanes is stationary for it.
inline EnlargedChain enlarge(const RateMatrix& q, const StationaryDistribution& nu, double gamma) {
    require(gamma > 0.0, errc::validation, "enlarge: gamma must be positive");
    require(q.dim() == nu.weights.size(), errc::validation, "enlarge: dimension mismatch");
    const std::int64_t m = q.dim();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * static_cast<std::size_t>(q.matrix().nonZeros()) + 2 * static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i)
        q.for_each_offdiag_in_row(i, [&](std::int64_t j, double v) {
            trip.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
            trip.emplace_back(static_cast<int>(i + m), static_cast<int>(j + m), v);
        });
    for (std::int64_t i = 0; i < m; ++i) {
        trip.emplace_back(static_cast<int>(i), static_cast<int>(i + m), gamma);
        trip.emplace_back(static_cast<int>(i + m), static_cast<int>(i), gamma);
    }
    EnlargedChain out;
    out.generator = RateMatrix::from_offdiagonal_triplets(2 * m, trip);
    out.generator.structurally_irreducible = q.structurally_irreducible;
    out.base_dim = m;
    out.stationary.resize(2 * m);
    out.stationary.head(m) = 0.5 * nu.weights;
    out.stationary.tail(m) = 0.5 * nu.weights;
    return out;
}

}  // namespace bdssep
