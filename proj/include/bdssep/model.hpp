#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdssep/errors.hpp"

namespace bdssep {

// Open segment {1, ..., N-1} coupled to reservoirs of density alpha (left)
// and beta (right). Constraint 0 < alpha <= beta < 1 mirrors the regime the
// analysis assumes; N >= 2.
struct ModelParams {
    int N = 2;
    double alpha = 0.5;
    double beta = 0.5;

    void validate() const {
        require(N >= 2, errc::validation, "ModelParams: N must be >= 2");
        require(N <= 65, errc::validation, "ModelParams: bit-packed occupancy supports N <= 65");
        require(alpha > 0.0 && alpha <= beta && beta < 1.0, errc::validation,
                "ModelParams: need 0 < alpha <= beta < 1");
    }

    [[nodiscard]] int sites() const noexcept { return N - 1; }
};

// Occupancies of sites 1..N-1, bit x-1 holds site x.
class Configuration {
  public:
    Configuration() = default;
    Configuration(std::uint64_t bits, int sites) : bits_(bits), sites_(sites) {
        require(sites >= 1 && sites <= 64, errc::validation, "Configuration: 1..64 sites");
        if (sites < 64) require(bits >> sites == 0, errc::validation, "Configuration: stray bits");
    }

    static Configuration from_occupancy(const std::vector<int>& occ) {
        require(!occ.empty() && occ.size() <= 64, errc::validation, "Configuration: 1..64 sites");
        std::uint64_t b = 0;
        for (std::size_t i = 0; i < occ.size(); ++i) {
            require(occ[i] == 0 || occ[i] == 1, errc::validation, "Configuration: occupancy must be 0/1");
            if (occ[i]) b |= std::uint64_t(1) << i;
        }
        return Configuration(b, static_cast<int>(occ.size()));
    }

    static Configuration empty(int sites) { return Configuration(0, sites); }
    static Configuration full(int sites) {
        std::uint64_t b = sites == 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << sites) - 1;
        return Configuration(b, sites);
    }

    [[nodiscard]] int sites() const noexcept { return sites_; }
    [[nodiscard]] std::uint64_t bits() const noexcept { return bits_; }

    // Site labels are 1-based to match the segment {1,...,N-1}.
    [[nodiscard]] bool occupied(int site) const noexcept { return (bits_ >> (site - 1)) & 1u; }
    void flip(int site) noexcept { bits_ ^= std::uint64_t(1) << (site - 1); }
    void exchange(int site) noexcept {  // swap contents of (site, site+1)
        std::uint64_t lo = (bits_ >> (site - 1)) & 1u;
        std::uint64_t hi = (bits_ >> site) & 1u;
        if (lo != hi) bits_ ^= (std::uint64_t(3) << (site - 1));
    }

    [[nodiscard]] int particle_count() const noexcept { return __builtin_popcountll(bits_); }

    [[nodiscard]] std::vector<int> occupancy() const {
        std::vector<int> occ(sites_);
        for (int i = 0; i < sites_; ++i) occ[i] = static_cast<int>((bits_ >> i) & 1u);
        return occ;
    }

    [[nodiscard]] std::string to_string() const {
        std::string s(sites_, '0');
        for (int i = 0; i < sites_; ++i)
            if ((bits_ >> i) & 1u) s[i] = '1';
        return s;
    }

    friend bool operator==(const Configuration& a, const Configuration& b) noexcept {
        return a.bits_ == b.bits_ && a.sites_ == b.sites_;
    }

  private:
    std::uint64_t bits_ = 0;
    int sites_ = 0;
};

struct Transition {
    enum class Kind { exchange, flip };
    Kind kind;
    int site;  // exchange acts on (site, site+1); flip acts on site 1 or N-1
    double rate;
    Configuration target;
};

// Visits every allowed move out of eta with its rate: nearest-neighbour
// exchanges at rate 1/2 across occupation-distinct bonds, reservoir flips at
// site 1 with rate alpha/2 (create) or (1-alpha)/2 (remove), and at site N-1
// with beta/2 or (1-beta)/2. Guarantees sum of rates <= N.
template <typename F>
inline void for_each_transition(const Configuration& eta, const ModelParams& p, F&& f) {
    const int n = p.sites();
    for (int x = 1; x < n; ++x) {
        if (eta.occupied(x) != eta.occupied(x + 1)) {
            Configuration t = eta;
            t.exchange(x);
            f(Transition{Transition::Kind::exchange, x, 0.5, t});
        }
    }
    {
        Configuration t = eta;
        t.flip(1);
        double r = eta.occupied(1) ? (1.0 - p.alpha) / 2.0 : p.alpha / 2.0;
        f(Transition{Transition::Kind::flip, 1, r, t});
    }
    {
        // For N = 2 the single site faces both reservoirs, so this emits a
        // second flip of site 1; generator assembly and sampling add rates.
        Configuration t = eta;
        t.flip(n);
        double r = eta.occupied(n) ? (1.0 - p.beta) / 2.0 : p.beta / 2.0;
        f(Transition{Transition::Kind::flip, n, r, t});
    }
}

inline std::vector<Transition> enumerate_transitions(const Configuration& eta, const ModelParams& p) {
    p.validate();
    require(eta.sites() == p.sites(), errc::validation,
            "enumerate_transitions: configuration length must be N-1");
    std::vector<Transition> out;
    out.reserve(static_cast<std::size_t>(p.sites()) + 1);
    for_each_transition(eta, p, [&](const Transition& t) { out.push_back(t); });
    return out;
}

inline double total_exit_rate(const Configuration& eta, const ModelParams& p) {
    require(eta.sites() == p.sites(), errc::validation,
            "total_exit_rate: configuration length must be N-1");
    double sum = 0.0;
    for_each_transition(eta, p, [&](const Transition& t) { sum += t.rate; });
    return sum;
}

// Local mobility a(1-a); finite and nonnegative exactly on [0,1].
inline double mobility(double a) {
    require(a >= 0.0 && a <= 1.0, errc::validation, "mobility: argument outside [0,1]");
    return a * (1.0 - a);
}

}  // namespace bdssep
