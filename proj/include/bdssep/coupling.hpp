#pragma once

// Coupled evolution of two copies of the chain driven by shared clocks.
// Every bond carries one rate-1/2 clock that swaps the bond contents in
// both copies at once, and each reservoir site carries one rate-1/2 clock
// that refreshes that site in both copies from a single uniform mark.
// Each copy, viewed alone, moves with the original rates, and the update
// never breaks the componentwise order between the copies.  Once the
// copies agree they agree forever, so the first meeting time started from
// the (full, empty) pair bounds the meeting time of every other pair.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <thread>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/model.hpp"
#include "bdssep/rng.hpp"

namespace bdssep {

struct CoupledPair {
    Configuration hi;
    Configuration lo;

    bool merged() const { return hi == lo; }
};

// One event of the coupled chain.  There are N independent rate-1/2
// clocks (N-2 bonds plus 2 reservoir clocks), so the holding time is
// Exp(N/2) and the ringing clock is uniform among the N.  Returns the
// holding time.
inline double coupled_step(CoupledPair& pair, const ModelParams& p, RngStream& rng) {
    const int n = p.sites();
    const int clocks = p.N;  // (n - 1) interior bonds + 2 reservoir clocks
    const double dt = rng.exponential(0.5 * static_cast<double>(clocks));
    const int which = std::min<int>(static_cast<int>(rng.uniform() * clocks), clocks - 1);

    if (which < n - 1) {
        // Interior bond (site, site+1), site in 1..n-1: swap in both copies.
        const int site = which + 1;
        pair.hi.exchange(site);
        pair.lo.exchange(site);
    } else {
        // Reservoir refresh: resample the boundary site from the reservoir
        // density using one shared mark, in both copies.
        const bool left = (which == n - 1);
        const int site = left ? 1 : n;
        const double dens = left ? p.alpha : p.beta;
        const bool occ = rng.uniform() < dens;
        if (pair.hi.occupied(site) != occ) pair.hi.flip(site);
        if (pair.lo.occupied(site) != occ) pair.lo.flip(site);
    }
    return dt;
}

// For N = 2 the single site sees both reservoirs; `which` then selects one
// of the two reservoir clocks and the branch above handles it because
// n - 1 = 0 forces the reservoir arm.  (site 1 == site n there.)

struct CouplingSample {
    std::uint64_t stream = 0;
    double time = 0.0;
    bool timed_out = false;
};

// First meeting time of the extreme pair (all sites occupied, all empty).
inline CouplingSample sample_coupling_time(const ModelParams& p, double horizon,
                                           std::uint64_t seed, std::uint64_t stream) {
    require(horizon > 0.0, errc::validation, "coupling horizon must be positive");
    RngStream rng(seed, stream);
    CoupledPair pair{Configuration::full(p.sites()), Configuration::empty(p.sites())};
    CouplingSample out;
    out.stream = stream;
    double t = 0.0;
    while (!pair.merged()) {
        t += coupled_step(pair, p, rng);
        if (t > horizon) {
            out.time = horizon;
            out.timed_out = true;
            return out;
        }
    }
    out.time = t;
    return out;
}

struct CouplingBound {
    std::vector<double> grid;        // candidate times
    std::vector<double> exceedance;  // empirical P[tau > t]
    std::vector<double> upper;       // one-sided 95% confidence bound
    std::vector<CouplingSample> samples;
    double bound_time = 0.0;  // smallest grid time with upper <= threshold
    bool found = false;
};

// Distribution-free (Hoeffding) one-sided upper confidence bound for a
// binomial proportion: p_hat + sqrt(log(1/delta) / (2 n)).
inline double proportion_upper_bound(double p_hat, std::size_t n, double delta) {
    require(n > 0, errc::validation, "empty sample");
    require(delta > 0.0 && delta < 1.0, errc::validation, "confidence level out of range");
    return std::min(1.0, p_hat + std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(n))));
}

// Monte Carlo upper bound for the mixing time: run `replicas` coupled
// chains from the extreme pair and report the smallest grid time at which
// the 95% upper confidence bound on P[not yet merged] drops to 1/4.
// P[tau > t] dominates the worst-case total-variation distance at t.
inline CouplingBound coupling_mixing_bound(const ModelParams& p, const std::vector<double>& grid,
                                           std::size_t replicas, std::uint64_t seed,
                                           double threshold = 0.25, double delta = 0.05,
                                           unsigned workers = 1) {
    require(!grid.empty(), errc::validation, "time grid is empty");
    require(std::is_sorted(grid.begin(), grid.end()), errc::validation,
            "time grid must be increasing");
    require(replicas >= 100, errc::validation, "need at least 100 coupling replicas");
    const double horizon = grid.back();

    CouplingBound out;
    out.grid = grid;
    out.samples.resize(replicas);

    const unsigned nw = std::max(1u, workers);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= replicas) return;
            out.samples[i] = sample_coupling_time(p, horizon, seed, static_cast<std::uint64_t>(i));
        }
    };
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::future<void>> pool;
        pool.reserve(nw);
        for (unsigned w = 0; w < nw; ++w) pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();
    }

    out.exceedance.resize(grid.size());
    out.upper.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::size_t over = 0;
        for (const auto& s : out.samples) {
            if (s.timed_out || s.time > grid[g]) ++over;
        }
        const double frac = static_cast<double>(over) / static_cast<double>(replicas);
        out.exceedance[g] = frac;
        out.upper[g] = proportion_upper_bound(frac, replicas, delta);
        if (!out.found && out.upper[g] <= threshold) {
            out.found = true;
            out.bound_time = grid[g];
        }
    }
    require(out.found, errc::horizon,
            "coupling bound not reached anywhere on the time grid; extend the grid");
    return out;
}

// Expected absorption time of a single rate-1-per-bond symmetric walker on
// {0, 1, ..., span} started at j and stopped at the endpoints.  Solves the
// tridiagonal system u_{j-1} - 2 u_j + u_{j+1} = -1 directly.  This is the
// mean time a discrepancy between the two coupled copies needs to reach a
// reservoir, and it equals j (span - j) / 2.
inline double absorbed_walk_mean(int span, int j) {
    require(span >= 1, errc::validation, "walk span must be at least 1");
    require(j >= 0 && j <= span, errc::validation, "walk start out of range");
    if (j == 0 || j == span) return 0.0;
    const int m = span - 1;  // interior points 1..span-1
    std::vector<double> diag(m, -2.0), rhs(m, -1.0);
    // Thomas elimination with unit off-diagonals.
    for (int i = 1; i < m; ++i) {
        const double w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> u(m);
    u[m - 1] = rhs[m - 1] / diag[m - 1];
    for (int i = m - 2; i >= 0; --i) u[i] = (rhs[i] - u[i + 1]) / diag[i];
    return u[j - 1];
}

}  // namespace bdssep
