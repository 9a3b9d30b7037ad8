#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"

namespace bdssep {

// Test family for the weak-topology distance: F_k(x) = cos((k-1) pi x),
// k = 1..K. Includes the constant so profiles differing by a constant are
// separated; every member has sup-norm 1.
struct TestBasis {
    int K = 16;

    [[nodiscard]] double eval(int k, double x) const noexcept {
        return std::cos(static_cast<double>(k - 1) * std::numbers::pi * x);
    }

    void validate() const { require(K >= 1 && K <= 64, errc::validation, "TestBasis: K in [1,64]"); }
};

// d(g1,g2) = sum_k 2^{-k} |<g1-g2, F_k>| with the fixed quadrature. Bounded
// by 1 on profiles with values in [0,1] and by the L2 quadrature norm of the
// difference (Cauchy-Schwarz with the 2^{-k} weights summing below 1).
inline double profile_distance(const DensityProfile& g1, const DensityProfile& g2, const TestBasis& basis) {
    basis.validate();
    require(g1.mesh == g2.mesh && g1.mesh >= 1, errc::validation,
            "profile_distance: profiles must share one mesh");
    double d = 0.0;
    double w = 1.0;
    for (int k = 1; k <= basis.K; ++k) {
        w *= 0.5;
        double ip = 0.0;
        for (int j = 0; j <= g1.mesh; ++j) {
            const std::size_t u = static_cast<std::size_t>(j);
            ip += quad_weight(j, g1.mesh) * (g1.values[u] - g2.values[u]) * basis.eval(k, g1.x(j));
        }
        d += w * std::abs(ip);
    }
    return d;
}

inline double l2_distance(const DensityProfile& g1, const DensityProfile& g2) {
    require(g1.mesh == g2.mesh && g1.mesh >= 1, errc::validation, "l2_distance: profiles must share one mesh");
    double s = 0.0;
    for (int j = 0; j <= g1.mesh; ++j) {
        const std::size_t u = static_cast<std::size_t>(j);
        const double t = g1.values[u] - g2.values[u];
        s += quad_weight(j, g1.mesh) * t * t;
    }
    return std::sqrt(s);
}

// Open metric ball in profile space; the rare event is the set of
// configurations whose empirical profile lands inside.
struct ProfileSet {
    DensityProfile center;
    double radius = 0.0;
    TestBasis basis;

    void validate() const {
        basis.validate();
        require(radius > 0.0, errc::validation, "ProfileSet: radius must be positive");
        require(center.mesh >= 1, errc::validation, "ProfileSet: center profile required");
    }
};

// Membership evaluator for configurations of one fixed model size. Because
// every node-cell of the quadrature carries a single site value, the inner
// products <pi^N(eta), F_k> collapse to per-site weights; precomputing them
// makes membership O(sites * K) with no mesh scan.
class SetEvaluator {
  public:
    SetEvaluator(const ProfileSet& s, const ModelParams& p) : set_(s), params_(p) {
        s.validate();
        p.validate();
        require(s.center.mesh >= p.N && s.center.mesh % p.N == 0, errc::validation,
                "SetEvaluator: center mesh must be a multiple of N");
        const int M = s.center.mesh;
        const int K = s.basis.K;
        site_weight_.assign(static_cast<std::size_t>(K) * p.sites(), 0.0);
        center_ip_.assign(static_cast<std::size_t>(K), 0.0);
        for (int k = 1; k <= K; ++k) {
            for (int j = 0; j <= M; ++j) {
                const double f = s.basis.eval(k, static_cast<double>(j) / M);
                const double w = quad_weight(j, M);
                center_ip_[static_cast<std::size_t>(k - 1)] += w * s.center.values[static_cast<std::size_t>(j)] * f;
                const int site = site_of_node(j, M, p.N);
                if (site != 0) site_weight_[idx(k, site)] += w * f;
            }
        }
    }

    [[nodiscard]] double distance_to_center(const Configuration& eta) const {
        require(eta.sites() == params_.sites(), errc::validation, "SetEvaluator: configuration length mismatch");
        double d = 0.0;
        double w = 1.0;
        for (int k = 1; k <= set_.basis.K; ++k) {
            w *= 0.5;
            double ip = -center_ip_[static_cast<std::size_t>(k - 1)];
            for (int x = 1; x <= params_.sites(); ++x)
                if (eta.occupied(x)) ip += site_weight_[idx(k, x)];
            d += w * std::abs(ip);
        }
        return d;
    }

    [[nodiscard]] bool contains(const Configuration& eta) const {
        if (set_.radius > 1.0) return true;  // d never exceeds 1 on unit-range profiles
        return distance_to_center(eta) < set_.radius;
    }

    [[nodiscard]] const ProfileSet& set() const noexcept { return set_; }
    [[nodiscard]] const ModelParams& params() const noexcept { return params_; }

  private:
    [[nodiscard]] std::size_t idx(int k, int site) const noexcept {
        return static_cast<std::size_t>(k - 1) * params_.sites() + (site - 1);
    }

    ProfileSet set_;
    ModelParams params_;
    std::vector<double> site_weight_;  // K x sites
    std::vector<double> center_ip_;    // K
};

inline bool in_set(const Configuration& eta, const ProfileSet& s, const ModelParams& p) {
    return SetEvaluator(s, p).contains(eta);
}

inline bool in_set(const DensityProfile& g, const ProfileSet& s) {
    s.validate();
    if (s.radius > 1.0) return true;
    return profile_distance(g, s.center, s.basis) < s.radius;
}

inline double linf_distance(const DensityProfile& g1, const DensityProfile& g2) {
    require(g1.mesh == g2.mesh && g1.mesh >= 1, errc::validation,
            "linf_distance: profiles must share one mesh");
    double d = 0.0;
    for (std::size_t j = 0; j < g1.values.size(); ++j)
        d = std::max(d, std::abs(g1.values[j] - g2.values[j]));
    return d;
}

}  // namespace bdssep
