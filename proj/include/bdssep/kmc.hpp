#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <thread>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/exact.hpp"
#include "bdssep/metric.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"
#include "bdssep/rng.hpp"

namespace bdssep {

// One aggregated next-event draw: exponential holding time at the total
// exit rate, then a categorical pick proportional to the rates. Mutates eta
// in place and returns the elapsed holding time.
inline double kmc_step(Configuration& eta, const ModelParams& p, RngStream& rng) {
    double lambda = 0.0;
    for_each_transition(eta, p, [&](const Transition& t) { lambda += t.rate; });
    require(lambda > 0.0, errc::numerical, "kmc_step: no transition available");
    const double dt = rng.exponential(lambda);
    double pick = rng.uniform() * lambda;
    bool moved = false;
    Configuration chosen = eta;
    for_each_transition(eta, p, [&](const Transition& t) {
        if (moved) return;
        pick -= t.rate;
        if (pick < 0.0) {
            chosen = t.target;
            moved = true;
        }
    });
    eta = moved ? chosen : eta;  // fp guard: fall back to the last transition
    if (!moved) {
        // pick == lambda due to rounding: take the final transition.
        Configuration last = eta;
        for_each_transition(eta, p, [&](const Transition& t) { last = t.target; });
        eta = last;
    }
    return dt;
}

// Draw a state index from an explicit distribution (cumulative inversion).
inline std::int64_t sample_index(const Eigen::VectorXd& dist, RngStream& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::int64_t i = 0; i < dist.size(); ++i) {
        cum += dist(i);
        if (u < cum) return i;
    }
    return dist.size() - 1;
}

struct HittingSample {
    std::uint64_t stream = 0;
    double time = 0.0;
    bool timed_out = false;
};

struct HittingSampleSet {
    std::vector<HittingSample> samples;  // ordered by stream id
    double horizon = 0.0;

    [[nodiscard]] std::size_t timeouts() const {
        std::size_t c = 0;
        for (const auto& s : samples) c += s.timed_out ? 1 : 0;
        return c;
    }

    [[nodiscard]] double mean_completed() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& s : samples)
            if (!s.timed_out) {
                sum += s.time;
                ++n;
            }
        require(n > 0, errc::numerical, "HittingSampleSet: no completed samples");
        return sum / static_cast<double>(n);
    }
};

// Membership table over the full bit-indexed state space; O(1) per KMC step.
class MembershipTable {
  public:
    MembershipTable(const ProfileSet& s, const ModelParams& p, std::int64_t cap = kDefaultStateCap) {
        const std::int64_t dim = std::int64_t(1) << p.sites();
        require(dim <= cap, errc::capacity, "MembershipTable: state space exceeds cap");
        SetEvaluator eval(s, p);
        in_.assign(static_cast<std::size_t>(dim), 0);
        for (std::int64_t i = 0; i < dim; ++i)
            if (eval.contains(Configuration(static_cast<std::uint64_t>(i), p.sites()))) in_[static_cast<std::size_t>(i)] = 1;
    }

    [[nodiscard]] bool contains(const Configuration& eta) const noexcept {
        return in_[static_cast<std::size_t>(eta.bits())] != 0;
    }

    [[nodiscard]] StateSet as_state_set() const {
        StateSet s(static_cast<std::int64_t>(in_.size()), "profile ball");
        for (std::size_t i = 0; i < in_.size(); ++i)
            if (in_[i]) s.insert(static_cast<std::int64_t>(i));
        return s;
    }

  private:
    std::vector<std::uint8_t> in_;
};

// First time the trajectory enters the set, starting from a draw of `init`;
// start already inside counts as zero. `horizon` bounds the simulated time.
inline HittingSample sample_hitting_time(const ModelParams& p, const MembershipTable& target,
                                         const Eigen::VectorXd& init, double horizon, std::uint64_t seed,
                                         std::uint64_t stream) {
    require(horizon > 0.0, errc::validation, "sample_hitting_time: horizon must be positive");
    RngStream rng(seed, stream);
    Configuration eta(static_cast<std::uint64_t>(sample_index(init, rng)), p.sites());
    double t = 0.0;
    HittingSample out;
    out.stream = stream;
    if (target.contains(eta)) return out;
    while (true) {
        t += kmc_step(eta, p, rng);
        if (t > horizon) {
            out.time = horizon;
            out.timed_out = true;
            return out;
        }
        if (target.contains(eta)) {
            out.time = t;
            return out;
        }
    }
}

// Replicated sampler. Stream i is pre-assigned to replica i, so the result
// is bit-for-bit identical for any worker count; outputs are ordered by
// stream id.
inline HittingSampleSet sample_many(const ModelParams& p, const MembershipTable& target,
                                    const Eigen::VectorXd& init, double horizon, std::size_t replicas,
                                    std::uint64_t seed, unsigned workers = 1) {
    require(replicas >= 1, errc::validation, "sample_many: need at least one replica");
    HittingSampleSet out;
    out.horizon = horizon;
    out.samples.resize(replicas);
    workers = std::max(1u, workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < replicas; ++i)
            out.samples[i] = sample_hitting_time(p, target, init, horizon, seed, i);
        return out;
    }
    std::vector<std::future<void>> tasks;
    tasks.reserve(workers);
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w)
        tasks.push_back(std::async(std::launch::async, [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= replicas) return;
                out.samples[i] = sample_hitting_time(p, target, init, horizon, seed, i);
            }
        }));
    for (auto& t : tasks) t.get();
    return out;
}

namespace detail {

// Regularized incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a): series for the
// lower tail below a+1, Lentz continued fraction above.
inline double gamma_q(double a, double x) {
    require(a > 0.0 && x >= 0.0, errc::validation, "gamma_q: domain");
    if (x == 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term, ap = a;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, f = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return f * std::exp(-x + a * std::log(x) - lg);
}

}  // namespace detail

// Upper tail of the chi-square law: P[X >= stat] with `dof` degrees of
// freedom; the p-value for Pearson goodness-of-fit statistics.
inline double chi_square_upper_tail(double stat, int dof) {
    require(dof >= 1, errc::validation, "chi_square_upper_tail: dof must be positive");
    require(stat >= 0.0, errc::validation, "chi_square_upper_tail: negative statistic");
    return detail::gamma_q(0.5 * dof, 0.5 * stat);
}

// Kolmogorov-Smirnov distance between samples/normalizer and Exp(1).
inline double ks_exponential(std::vector<double> samples, double normalizer) {
    require(!samples.empty(), errc::validation, "ks_exponential: no samples");
    require(normalizer > 0.0, errc::validation, "ks_exponential: normalizer must be positive");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = 1.0 - std::exp(-samples[i] / normalizer);
        ks = std::max(ks, std::max(std::abs(static_cast<double>(i + 1) / n - f),
                                   std::abs(f - static_cast<double>(i) / n)));
    }
    return ks;
}

}  // namespace bdssep
