#pragma once

// Path functionals sampled along simulated trajectories: the compensated
// count of entries into a target set, and replica-averaged occupation
// profiles at fixed macroscopic times.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <thread>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/kmc.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"
#include "bdssep/rate_matrix.hpp"
#include "bdssep/rng.hpp"

namespace bdssep {

struct MartingaleSample {
    std::uint64_t stream = 0;
    double entries = 0.0;      // jumps from outside the target into it by time T
    double compensator = 0.0;  // integral of the entry rate over time spent outside
    double residual() const { return entries - compensator; }
};

struct MartingaleSummary {
    std::vector<MartingaleSample> samples;
    double horizon = 0.0;
    double mean_entries = 0.0;
    double mean_compensator = 0.0;
    double mean_residual = 0.0;
    double residual_stderr = 0.0;
};

// Runs `replicas` trajectories of length `horizon` started from `init`
// (a distribution over packed states) and accumulates, per replica, the
// number of entries into `target` and the compensator: the time integral
// of the total jump rate into `target` while the path is outside it.
// Their difference has mean zero at every horizon.
inline MartingaleSummary counting_martingale(const ModelParams& p, const RateMatrix& q,
                                             const StateSet& target, const Eigen::VectorXd& init,
                                             double horizon, std::size_t replicas,
                                             std::uint64_t seed, unsigned workers = 1) {
    require(horizon > 0.0, errc::validation, "martingale horizon must be positive");
    require(replicas > 0, errc::validation, "need at least one replica");
    require(init.size() == static_cast<Eigen::Index>(q.dim()), errc::validation,
            "initial distribution has wrong length");

    // Per-state jump rate into the target, tabulated once.
    const std::size_t dim = q.dim();
    std::vector<double> rate_in(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        rate_in[i] = target.contains(i) ? 0.0 : q.rate_into(i, target);
    }

    MartingaleSummary out;
    out.horizon = horizon;
    out.samples.resize(replicas);

    auto run_one = [&](std::size_t r) {
        RngStream rng(seed, static_cast<std::uint64_t>(r));
        std::size_t state = static_cast<std::size_t>(sample_index(init, rng));
        MartingaleSample s;
        s.stream = r;
        Configuration eta = state_configuration(state, p);
        double t = 0.0;
        while (true) {
            const bool outside = !target.contains(state);
            const double dt = kmc_step(eta, p, rng);  // holding time, then jump
            if (t + dt >= horizon) {
                if (outside) s.compensator += (horizon - t) * rate_in[state];
                break;
            }
            if (outside) s.compensator += dt * rate_in[state];
            t += dt;
            const std::size_t to = static_cast<std::size_t>(eta.bits());
            if (outside && target.contains(to)) s.entries += 1.0;
            state = to;
        }
        out.samples[r] = s;
    };

    const unsigned nw = std::max(1u, workers);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= replicas) return;
            run_one(i);
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

    double sum_e = 0.0, sum_c = 0.0, sum_m = 0.0, sum_m2 = 0.0;
    for (const auto& s : out.samples) {
        sum_e += s.entries;
        sum_c += s.compensator;
        const double m = s.residual();
        sum_m += m;
        sum_m2 += m * m;
    }
    const double n = static_cast<double>(replicas);
    out.mean_entries = sum_e / n;
    out.mean_compensator = sum_c / n;
    out.mean_residual = sum_m / n;
    const double var = std::max(0.0, sum_m2 / n - out.mean_residual * out.mean_residual);
    out.residual_stderr = std::sqrt(var / n);
    return out;
}

struct HydroResult {
    std::vector<double> times;                   // macroscopic frame times
    std::vector<std::vector<double>> site_mean;  // per frame, mean occupation per site
    std::vector<DensityProfile> profiles;        // frame averages on the quadrature mesh
    std::size_t replicas = 0;
};

// Replica-averaged occupation numbers at macroscopic times.  Each frame
// time t is observed at microscopic time t N^2 (diffusive clock).  The
// average of empirical profiles over replicas equals the empirical profile
// construction applied nodewise to the averaged occupations, so the
// averages are stored per site and expanded on the mesh once per frame.
inline HydroResult hydrodynamic_trajectory(const ModelParams& p, Configuration init,
                                           const std::vector<double>& frame_times,
                                           std::size_t replicas, std::uint64_t seed,
                                           int mesh = 0, unsigned workers = 1) {
    require(!frame_times.empty(), errc::validation, "no frame times given");
    require(std::is_sorted(frame_times.begin(), frame_times.end()), errc::validation,
            "frame times must be increasing");
    require(frame_times.front() >= 0.0, errc::validation, "frame times must be nonnegative");
    require(replicas > 0, errc::validation, "need at least one replica");
    if (mesh == 0) mesh = default_mesh(p.N);

    const int n = p.sites();
    const std::size_t frames = frame_times.size();
    const double scale = static_cast<double>(p.N) * static_cast<double>(p.N);

    // Per-replica snapshots, reduced in replica order afterwards so the
    // result does not depend on the worker count.
    std::vector<std::uint64_t> snapshot(replicas * frames);

    auto run_one = [&](std::size_t r) {
        RngStream rng(seed, static_cast<std::uint64_t>(r));
        Configuration eta = init;
        double t = 0.0;
        std::size_t f = 0;
        while (f < frames) {
            if (t >= frame_times[f] * scale) {
                // The path is right-continuous: a frame at a jump instant
                // sees the post-jump state.
                snapshot[r * frames + f] = eta.bits();
                ++f;
                continue;
            }
            const Configuration before = eta;
            const double dt = kmc_step(eta, p, rng);
            while (f < frames && frame_times[f] * scale < t + dt) {
                snapshot[r * frames + f] = before.bits();
                ++f;
            }
            t += dt;
        }
    };

    const unsigned nw = std::max(1u, workers);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= replicas) return;
            run_one(i);
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

    HydroResult out;
    out.times = frame_times;
    out.replicas = replicas;
    out.site_mean.assign(frames, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < replicas; ++r) {
        for (std::size_t f = 0; f < frames; ++f) {
            const Configuration eta(snapshot[r * frames + f], n);
            for (int s = 1; s <= n; ++s) {
                if (eta.occupied(s)) out.site_mean[f][s - 1] += 1.0;
            }
        }
    }
    for (auto& row : out.site_mean) {
        for (double& v : row) v /= static_cast<double>(replicas);
    }

    out.profiles.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        DensityProfile prof(mesh, 0.0);
        for (int j = 0; j <= mesh; ++j) {
            const int s = site_of_node(j, mesh, p.N);
            if (s != 0) prof.values[static_cast<std::size_t>(j)] = out.site_mean[f][s - 1];
        }
        out.profiles.push_back(std::move(prof));
    }
    return out;
}

}  // namespace bdssep
