#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/metric.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"

namespace bdssep {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr std::int64_t kDefaultStateCap = std::int64_t(1) << 20;

// Indicator of a subset of states plus a human-readable label.
struct StateSet {
    std::vector<std::uint8_t> member;
    std::string label;

    StateSet() = default;
    StateSet(std::int64_t dim, std::string lbl) : member(static_cast<std::size_t>(dim), 0), label(std::move(lbl)) {}

    [[nodiscard]] std::int64_t dim() const noexcept { return static_cast<std::int64_t>(member.size()); }
    [[nodiscard]] bool contains(std::int64_t i) const noexcept {
        return member[static_cast<std::size_t>(i)] != 0;
    }
    void insert(std::int64_t i) { member[static_cast<std::size_t>(i)] = 1; }

    [[nodiscard]] std::int64_t count() const noexcept {
        std::int64_t c = 0;
        for (auto m : member) c += m;
        return c;
    }

    [[nodiscard]] StateSet complement() const {
        StateSet s(dim(), "complement of " + label);
        for (std::size_t i = 0; i < member.size(); ++i) s.member[i] = member[i] ? 0 : 1;
        return s;
    }

    [[nodiscard]] std::vector<std::int64_t> indices() const {
        std::vector<std::int64_t> out;
        for (std::size_t i = 0; i < member.size(); ++i)
            if (member[i]) out.push_back(static_cast<std::int64_t>(i));
        return out;
    }
};

// Conservative continuous-time generator held sparse, diagonal included.
// Invariants: off-diagonal entries nonnegative, row sums zero.
class RateMatrix {
  public:
    RateMatrix() = default;

    static RateMatrix from_offdiagonal_triplets(std::int64_t dim,
                                                const std::vector<Eigen::Triplet<double>>& offdiag) {
        require(dim >= 1, errc::validation, "RateMatrix: dimension must be positive");
        Eigen::VectorXd exit = Eigen::VectorXd::Zero(dim);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(offdiag.size() + static_cast<std::size_t>(dim));
        for (const auto& t : offdiag) {
            require(t.row() != t.col(), errc::validation, "RateMatrix: triplets must be off-diagonal");
            require(t.value() >= 0.0, errc::validation, "RateMatrix: rates must be nonnegative");
            if (t.value() == 0.0) continue;
            trip.push_back(t);
            exit(t.row()) += t.value();
        }
        for (std::int64_t i = 0; i < dim; ++i)
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), -exit(i));
        RateMatrix m;
        m.q_.resize(dim, dim);
        m.q_.setFromTriplets(trip.begin(), trip.end());
        m.q_.makeCompressed();
        m.exit_ = std::move(exit);
        return m;
    }

    [[nodiscard]] std::int64_t dim() const noexcept { return q_.rows(); }
    [[nodiscard]] const SpMat& matrix() const noexcept { return q_; }
    [[nodiscard]] const Eigen::VectorXd& exit_rates() const noexcept { return exit_; }
    [[nodiscard]] double max_exit_rate() const noexcept { return exit_.size() ? exit_.maxCoeff() : 0.0; }

    template <typename F>
    void for_each_offdiag_in_row(std::int64_t row, F&& f) const {
        for (SpMat::InnerIterator it(q_, row); it; ++it)
            if (it.col() != row && it.value() > 0.0) f(it.col(), it.value());
    }

    // Total rate out of `row` into `target`.
    [[nodiscard]] double rate_into(std::int64_t row, const StateSet& target) const {
        double s = 0.0;
        for_each_offdiag_in_row(row, [&](std::int64_t col, double v) {
            if (target.contains(col)) s += v;
        });
        return s;
    }

    bool structurally_irreducible = false;  // set by constructions that guarantee it

  private:
    SpMat q_;
    Eigen::VectorXd exit_;
};

// Exact enumeration of the exclusion chain: state index = occupancy bits, so
// index i corresponds to Configuration(i, N-1).
inline RateMatrix build_generator(const ModelParams& p, std::int64_t cap = kDefaultStateCap) {
    p.validate();
    require(p.sites() <= 62, errc::capacity, "build_generator: state space exceeds 2^62");
    const std::int64_t dim = std::int64_t(1) << p.sites();
    require(dim <= cap, errc::capacity, "build_generator: state space exceeds cap");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(dim) * (static_cast<std::size_t>(p.N)));
    for (std::int64_t i = 0; i < dim; ++i) {
        Configuration eta(static_cast<std::uint64_t>(i), p.sites());
        for_each_transition(eta, p, [&](const Transition& t) {
            trip.emplace_back(static_cast<int>(i), static_cast<int>(t.target.bits()), t.rate);
        });
    }
    RateMatrix m = RateMatrix::from_offdiagonal_triplets(dim, trip);
    m.structurally_irreducible = true;  // reservoir flips reach full/empty from anywhere
    return m;
}

inline Configuration state_configuration(std::int64_t index, const ModelParams& p) {
    return Configuration(static_cast<std::uint64_t>(index), p.sites());
}

// All states of the chain whose empirical profile lies in the metric ball.
inline StateSet states_in_profile_set(const ProfileSet& s, const ModelParams& p,
                                      std::int64_t cap = kDefaultStateCap) {
    const std::int64_t dim = std::int64_t(1) << p.sites();
    require(dim <= cap, errc::capacity, "states_in_profile_set: state space exceeds cap");
    SetEvaluator eval(s, p);
    StateSet out(dim, "profile ball");
    for (std::int64_t i = 0; i < dim; ++i)
        if (eval.contains(state_configuration(i, p))) out.insert(i);
    return out;
}

// States outside A with at least one direct jump into A.
inline StateSet outer_boundary(const RateMatrix& q, const StateSet& a) {
    require(q.dim() == a.dim(), errc::validation, "outer_boundary: dimension mismatch");
    StateSet b(q.dim(), "outer boundary of " + a.label);
    for (std::int64_t i = 0; i < q.dim(); ++i) {
        if (a.contains(i)) continue;
        bool hit = false;
        q.for_each_offdiag_in_row(i, [&](std::int64_t col, double) {
            if (a.contains(col)) hit = true;
        });
        if (hit) b.insert(i);
    }
    return b;
}

}  // namespace bdssep
