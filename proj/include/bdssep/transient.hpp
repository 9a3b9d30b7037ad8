#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/exact.hpp"
#include "bdssep/rate_matrix.hpp"

namespace bdssep {

inline constexpr std::int64_t kDefaultSemigroupCap = std::int64_t(1) << 14;

namespace detail {

// Uniformized transition kernel P = I + Q/Lambda with Lambda >= max exit
// rate, so exp(tQ) = sum_k Poisson(k; Lambda t) P^k with nonnegative terms.
struct Uniformized {
    SpMat p;
    double lambda = 0.0;
};

inline Uniformized uniformize(const SpMat& generator, double max_exit) {
    Uniformized u;
    u.lambda = std::max(max_exit, 1e-300);
    u.p = generator * (1.0 / u.lambda);
    for (std::int64_t i = 0; i < u.p.rows(); ++i) u.p.coeffRef(i, i) += 1.0;
    u.p.makeCompressed();
    return u;
}

inline double poisson_weight(double m, std::int64_t k) {
    if (m == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(static_cast<double>(k) * std::log(m) - m - std::lgamma(static_cast<double>(k) + 1.0));
}

enum class Side { distribution, function };  // v^T exp(tQ)  vs  exp(tQ) v

// Truncated uniformization series; absolute error at most tol * ||v||_inf.
inline Eigen::VectorXd exp_apply(const Uniformized& u, double t, Eigen::VectorXd v, Side side,
                                 double tol = 1e-10) {
    require(t >= 0.0, errc::validation, "exp_apply: negative time");
    const double m = u.lambda * t;
    if (m == 0.0) return v;
    const std::int64_t kcap =
        static_cast<std::int64_t>(m + 12.0 * std::sqrt(m + 16.0) + 64.0);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(v.size());
    double cum = 0.0;
    for (std::int64_t k = 0;; ++k) {
        const double w = poisson_weight(m, k);
        if (w > 0.0) {
            acc += w * v;
            cum += w;
        }
        if ((cum >= 1.0 - tol && k >= static_cast<std::int64_t>(m)) || k >= kcap) break;
        v = side == Side::distribution ? Eigen::VectorXd(u.p.transpose() * v) : Eigen::VectorXd(u.p * v);
    }
    return acc;
}

inline Eigen::MatrixXd exp_dense(const Uniformized& u, double t, double tol = 1e-12) {
    require(t >= 0.0, errc::validation, "exp_dense: negative time");
    const double m = u.lambda * t;
    const std::int64_t n = u.p.rows();
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    double cum = 0.0;
    const std::int64_t kcap =
        static_cast<std::int64_t>(m + 12.0 * std::sqrt(m + 16.0) + 64.0);
    for (std::int64_t k = 0;; ++k) {
        const double w = poisson_weight(m, k);
        if (w > 0.0) {
            acc += w * term;
            cum += w;
        }
        if ((cum >= 1.0 - tol && k >= static_cast<std::int64_t>(m)) || k >= kcap) break;
        Eigen::MatrixXd next = term * u.p;
        term.swap(next);
    }
    return acc;
}

}  // namespace detail

// P[H_A <= t] on a sorted nonnegative grid, from initial distribution
// `init`; initial mass already on A counts as an immediate hit.
inline std::vector<double> hitting_cdf_exact(const RateMatrix& q, const StateSet& a,
                                             const Eigen::VectorXd& init, const std::vector<double>& ts,
                                             std::int64_t cap = kDefaultSemigroupCap) {
    require(q.dim() == a.dim() && q.dim() == init.size(), errc::validation,
            "hitting_cdf_exact: dimension mismatch");
    require(q.dim() <= cap, errc::capacity, "hitting_cdf_exact: dimension exceeds semigroup cap");
    require(a.count() >= 1, errc::validation, "hitting_cdf_exact: target set is empty");
    require(std::is_sorted(ts.begin(), ts.end()) && (ts.empty() || ts.front() >= 0.0), errc::validation,
            "hitting_cdf_exact: time grid must be sorted and nonnegative");
    const StateSet keep = a.complement();
    const auto r = detail::restriction_to(keep);
    const auto sub = detail::principal_submatrix(q, keep, r);
    double max_exit = 0.0;
    for (std::int64_t i = 0; i < sub.rows(); ++i) max_exit = std::max(max_exit, -sub.coeff(i, i));
    const detail::Uniformized u = detail::uniformize(SpMat(sub), max_exit);
    Eigen::VectorXd rho(sub.rows());
    for (std::size_t s = 0; s < r.full_of_sub.size(); ++s) rho(static_cast<std::int64_t>(s)) = init(r.full_of_sub[s]);
    std::vector<double> cdf;
    cdf.reserve(ts.size());
    double t_cur = 0.0;
    for (double t : ts) {
        rho = detail::exp_apply(u, t - t_cur, std::move(rho), detail::Side::distribution);
        t_cur = t;
        cdf.push_back(std::clamp(1.0 - rho.sum(), 0.0, 1.0));
    }
    return cdf;
}

namespace detail {

// Smallest t with decreasing(t) <= target, located by doubling plus
// bisection on a monotone survival-type curve. `advance` must propagate the
// carried state forward in time; `value` reads the current level.
template <typename State, typename Advance, typename Value>
inline double monotone_crossing(State state, Advance&& advance, Value&& value, double target,
                                double rel_tol, const char* who) {
    if (value(state) <= target) return 0.0;
    double lo = 0.0, hi = 1.0;
    State at_lo = state;
    State at_hi = at_lo;
    advance(at_hi, hi);
    while (value(at_hi) > target) {
        lo = hi;
        at_lo = at_hi;
        advance(at_hi, hi);  // doubles: now at 2*hi
        hi *= 2.0;
        require(hi < 1e15, errc::numerical, std::string(who) + ": crossing not found below 1e15");
    }
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        State at_mid = at_lo;
        advance(at_mid, mid - lo);
        if (value(at_mid) > target) {
            lo = mid;
            at_lo = std::move(at_mid);
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct SubChain {
    Uniformized u;
    Restriction r;
};

inline SubChain absorbed_chain(const RateMatrix& q, const StateSet& a) {
    const StateSet keep = a.complement();
    SubChain sc;
    sc.r = restriction_to(keep);
    const auto sub = principal_submatrix(q, keep, sc.r);
    double max_exit = 0.0;
    for (std::int64_t i = 0; i < sub.rows(); ++i) max_exit = std::max(max_exit, -sub.coeff(i, i));
    sc.u = uniformize(SpMat(sub), max_exit);
    return sc;
}

}  // namespace detail

// theta = inf{ t : P_init[H_A > t] < 1/e }, bisected to relative precision.
inline double quantile_time(const RateMatrix& q, const StateSet& a, const Eigen::VectorXd& init,
                            double rel_tol = 1e-6, std::int64_t cap = kDefaultSemigroupCap) {
    require(q.dim() <= cap, errc::capacity, "quantile_time: dimension exceeds semigroup cap");
    require(q.dim() == a.dim() && q.dim() == init.size(), errc::validation, "quantile_time: dimension mismatch");
    require(a.count() >= 1, errc::validation, "quantile_time: target set is empty");
    const auto sc = detail::absorbed_chain(q, a);
    Eigen::VectorXd rho(static_cast<std::int64_t>(sc.r.full_of_sub.size()));
    for (std::size_t s = 0; s < sc.r.full_of_sub.size(); ++s)
        rho(static_cast<std::int64_t>(s)) = init(sc.r.full_of_sub[s]);
    const double target = std::exp(-1.0);
    return detail::monotone_crossing(
        rho, [&](Eigen::VectorXd& v, double dt) { v = detail::exp_apply(sc.u, dt, std::move(v), detail::Side::distribution); },
        [](const Eigen::VectorXd& v) { return v.sum(); }, target, rel_tol, "quantile_time");
}

// Worst-case variant: max over starting states of the 1/e survival quantile.
// Survival curves are monotone, so this is the crossing of the max-survival
// envelope exp(tQ_sub) applied to the all-ones vector.
inline double worst_case_quantile_time(const RateMatrix& q, const StateSet& a, double rel_tol = 1e-6,
                                       std::int64_t cap = kDefaultSemigroupCap) {
    require(q.dim() <= cap, errc::capacity, "worst_case_quantile_time: dimension exceeds semigroup cap");
    require(q.dim() == a.dim(), errc::validation, "worst_case_quantile_time: dimension mismatch");
    require(a.count() >= 1 && a.count() < a.dim(), errc::validation,
            "worst_case_quantile_time: target must be proper and nonempty");
    const auto sc = detail::absorbed_chain(q, a);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<std::int64_t>(sc.r.full_of_sub.size()));
    const double target = std::exp(-1.0);
    return detail::monotone_crossing(
        w, [&](Eigen::VectorXd& v, double dt) { v = detail::exp_apply(sc.u, dt, std::move(v), detail::Side::function); },
        [](const Eigen::VectorXd& v) { return v.maxCoeff(); }, target, rel_tol, "worst_case_quantile_time");
}

struct MixingResult {
    double t_mix = 0.0;
    std::vector<std::pair<double, double>> trace;  // probed (t, worst-case TV)
};

// Smallest t with max_eta ||P_t(eta,.) - nu||_TV <= 1/4, via dense
// uniformized semigroup, dyadic composition, and a monotone bit descent.
inline MixingResult mixing_time(const RateMatrix& q, const StationaryDistribution& nu,
                                double threshold = 0.25, double rel_tol = 1e-3,
                                std::int64_t cap = kDefaultSemigroupCap) {
    require(q.dim() <= cap, errc::capacity, "mixing_time: dimension exceeds semigroup cap");
    require(q.dim() == nu.weights.size(), errc::validation, "mixing_time: dimension mismatch");
    const auto u = detail::uniformize(q.matrix(), q.max_exit_rate());
    auto worst_tv = [&](const Eigen::MatrixXd& m) {
        double worst = 0.0;
        for (std::int64_t i = 0; i < m.rows(); ++i) {
            double tv = 0.0;
            for (std::int64_t j = 0; j < m.cols(); ++j) tv += std::abs(m(i, j) - nu.weights(j));
            worst = std::max(worst, 0.5 * tv);
        }
        return worst;
    };
    MixingResult out;
    double t = 1.0 / std::max(u.lambda, 1e-12);
    Eigen::MatrixXd m = detail::exp_dense(u, t);
    double tv = worst_tv(m);
    out.trace.emplace_back(t, tv);
    while (tv > threshold) {
        m = m * m;
        t *= 2.0;
        tv = worst_tv(m);
        out.trace.emplace_back(t, tv);
        require(t < 1e15, errc::numerical, "mixing_time: threshold not reached below 1e15");
    }
    // Refine on a grid fine enough for the relative tolerance.
    const double step = 0.25 * rel_tol * t;
    std::int64_t n_hi = static_cast<std::int64_t>(std::ceil(t / step));
    int levels = 0;
    while ((std::int64_t(1) << levels) < n_hi) ++levels;
    std::vector<Eigen::MatrixXd> dyadic(static_cast<std::size_t>(levels) + 1);
    dyadic[0] = detail::exp_dense(u, step);
    for (int j = 1; j <= levels; ++j) dyadic[static_cast<std::size_t>(j)] = dyadic[static_cast<std::size_t>(j - 1)] * dyadic[static_cast<std::size_t>(j - 1)];
    Eigen::MatrixXd prefix = Eigen::MatrixXd::Identity(q.dim(), q.dim());
    std::int64_t n = 0;  // invariant: worst_tv at n*step exceeds threshold (or n = 0)
    for (int j = levels; j >= 0; --j) {
        const std::int64_t cand = n + (std::int64_t(1) << j);
        if (cand > n_hi) continue;
        Eigen::MatrixXd trial = prefix * dyadic[static_cast<std::size_t>(j)];
        const double tvc = worst_tv(trial);
        out.trace.emplace_back(static_cast<double>(cand) * step, tvc);
        if (tvc > threshold) {
            prefix = std::move(trial);
            n = cand;
        }
    }
    out.t_mix = static_cast<double>(n + 1) * step;
    return out;
}

// 1/gap of the symmetrized generator in the nu-weighted inner product,
// computed on the sqrt(nu)-similarity transform (symmetric, eigenvalue 0 at
// sqrt(nu)).
inline double relaxation_time(const RateMatrix& q, const StationaryDistribution& nu,
                              std::int64_t cap = std::int64_t(1) << 13) {
    require(q.dim() <= cap, errc::capacity, "relaxation_time: dimension exceeds dense eigensolver cap");
    require(q.dim() == nu.weights.size(), errc::validation, "relaxation_time: dimension mismatch");
    require(q.dim() >= 2, errc::validation, "relaxation_time: need at least two states");
    const std::int64_t n = q.dim();
    Eigen::VectorXd sq = nu.weights.cwiseSqrt();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (SpMat::InnerIterator it(q.matrix(), i); it; ++it)
            b(i, it.col()) = sq(i) * it.value() / sq(it.col());
    Eigen::MatrixXd s = 0.5 * (b + b.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
    require(eig.info() == Eigen::Success, errc::numerical, "relaxation_time: eigensolver failed");
    const auto& ev = eig.eigenvalues();  // ascending, top one is ~0
    require(std::abs(ev(n - 1)) <= 1e-8 * std::max(1.0, q.max_exit_rate()), errc::numerical,
            "relaxation_time: leading eigenvalue far from zero");
    const double gap = -ev(n - 2);
    require(gap > 0.0, errc::numerical, "relaxation_time: nonpositive spectral gap");
    return 1.0 / gap;
}

}  // namespace bdssep
