#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include "bdssep/exact.hpp"
#include "bdssep/transient.hpp"

namespace bdssep {

struct ConditionOptions {
    std::optional<StateSet> b;            // conditioning set for the sharpness quantities
    std::optional<Eigen::VectorXd> mu;    // starting distribution paired with s_n
    double s_n = 0.0;                     // intermediate time scale; 0 disables the product
    bool with_mixing = true;
    bool with_relaxation = true;
    std::int64_t semigroup_cap = kDefaultSemigroupCap;
    std::int64_t dense_cap = std::int64_t(1) << 13;
};

// Scalar diagnostics a metastability claim rests on; reported, not judged.
struct ConditionReport {
    double nu_a = 0.0;           // stationary mass of the rare set
    double jump_rate = 0.0;      // r(A^c, A)
    double mean_hitting = 0.0;   // E_nu[H_A]
    double rate_mean_product = 0.0;
    std::optional<double> t_mix;
    std::optional<double> t_rel;
    std::optional<double> trapping_sup;   // sup_{eta in B, xi not in A} P*_xi[H_A < H_eta]
    std::optional<double> capacity_sum;   // sum_{eta outside A,B} nu(eta)/Cap(eta, A)
    std::optional<double> start_product;  // S * E_nu[(dmu/dnu)^2] * (1/S + max_A R(.,all)) * nu(A)
    std::optional<double> density_l2;     // ||dmu/dnu||_2
    double escape_rate_l2 = 0.0;          // ||1_{A^c} R(., A)||_2 in L2(nu)
};

inline ConditionReport check_theorem_conditions(const RateMatrix& q, const StationaryDistribution& nu,
                                                const RateMatrix& adj, const StateSet& a,
                                                const ConditionOptions& opts = {}) {
    require(q.dim() == a.dim(), errc::validation, "check_theorem_conditions: dimension mismatch");
    ConditionReport rep;
    rep.nu_a = nu.mass(a);
    rep.jump_rate = average_jump_rate(q, nu, a);
    const Eigen::VectorXd u = mean_hitting_times(q, a);
    rep.mean_hitting = nu.weights.dot(u);
    rep.rate_mean_product = rep.jump_rate * rep.mean_hitting;
    {
        double s = 0.0;
        for (std::int64_t i = 0; i < q.dim(); ++i)
            if (!a.contains(i)) {
                const double ri = q.rate_into(i, a);
                s += nu.weights(i) * ri * ri;
            }
        rep.escape_rate_l2 = std::sqrt(s);
    }
    if (opts.with_mixing && q.dim() <= opts.semigroup_cap) rep.t_mix = mixing_time(q, nu).t_mix;
    if (opts.with_relaxation && q.dim() <= opts.dense_cap) rep.t_rel = relaxation_time(q, nu, opts.dense_cap);
    if (opts.b) {
        require(opts.b->dim() == q.dim(), errc::validation, "check_theorem_conditions: B dimension mismatch");
        double sup = 0.0;
        for (std::int64_t eta : opts.b->indices()) {
            if (a.contains(eta)) continue;
            StateSet point(q.dim(), "trap state");
            point.insert(eta);
            // P*_xi[H_A < H_eta]: hit A before eta under the reversed chain.
            const Eigen::VectorXd h = equilibrium_potential(adj, point, a);
            for (std::int64_t xi = 0; xi < q.dim(); ++xi)
                if (!a.contains(xi)) sup = std::max(sup, h(xi));
        }
        rep.trapping_sup = sup;
        double sum = 0.0;
        for (std::int64_t eta = 0; eta < q.dim(); ++eta) {
            if (a.contains(eta) || opts.b->contains(eta)) continue;
            StateSet point(q.dim(), "state");
            point.insert(eta);
            const double cap = capacity(q, nu, point, a);
            require(cap > 0.0, errc::numerical, "check_theorem_conditions: vanishing capacity");
            sum += nu.weights(eta) / cap;
        }
        rep.capacity_sum = sum;
    }
    if (opts.mu && opts.s_n > 0.0) {
        require(opts.mu->size() == q.dim(), errc::validation, "check_theorem_conditions: mu dimension mismatch");
        double second_moment = 0.0;  // E_nu[(dmu/dnu)^2]
        for (std::int64_t i = 0; i < q.dim(); ++i) {
            const double ratio = (*opts.mu)(i) / nu.weights(i);
            second_moment += nu.weights(i) * ratio * ratio;
        }
        rep.density_l2 = std::sqrt(second_moment);
        double max_exit_on_a = 0.0;
        for (std::int64_t i : a.indices()) max_exit_on_a = std::max(max_exit_on_a, q.exit_rates()(i));
        rep.start_product =
            opts.s_n * second_moment * (1.0 / opts.s_n + max_exit_on_a) * rep.nu_a;
    }
    return rep;
}

}  // namespace bdssep
