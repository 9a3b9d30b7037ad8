#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/model.hpp"

namespace bdssep {

// Density profile sampled on the M+1 nodes x_j = j/M of [0,1].
struct DensityProfile {
    int mesh = 0;
    std::vector<double> values;  // size mesh+1

    DensityProfile() = default;
    DensityProfile(int m, double fill) : mesh(m), values(static_cast<std::size_t>(m) + 1, fill) {
        require(m >= 1, errc::validation, "DensityProfile: mesh must be >= 1");
    }

    [[nodiscard]] double x(int j) const noexcept { return static_cast<double>(j) / mesh; }
    [[nodiscard]] std::size_t nodes() const noexcept { return values.size(); }

    void check_unit_range() const {
        for (double v : values)
            require(v >= 0.0 && v <= 1.0, errc::validation, "DensityProfile: values must lie in [0,1]");
    }
};

// Fixed quadrature for all bracket integrals: node-centered cells, so each
// interior node is the midpoint of its own cell of width 1/M and the end
// nodes own half cells. Exact for the empirical step functions whenever the
// mesh is a multiple of N.
inline double quad_weight(int j, int mesh) noexcept {
    return (j == 0 || j == mesh) ? 0.5 / mesh : 1.0 / mesh;
}

inline double quad_integral(const DensityProfile& g) {
    double s = 0.0;
    for (int j = 0; j <= g.mesh; ++j) s += quad_weight(j, g.mesh) * g.values[static_cast<std::size_t>(j)];
    return s;
}

template <typename F>
inline double quad_inner(const DensityProfile& g, F&& f) {
    double s = 0.0;
    for (int j = 0; j <= g.mesh; ++j)
        s += quad_weight(j, g.mesh) * g.values[static_cast<std::size_t>(j)] * f(g.x(j));
    return s;
}

inline int default_mesh(int N, int floor_mesh = 128) {
    int m = ((floor_mesh + N - 1) / N) * N;
    return m;
}

// Index of the site interval [x/N - 1/2N, x/N + 1/2N) containing node j/M,
// or 0 when the node falls outside every interval. Integer-exact: node j/M
// lies in interval s iff (2s-1)c <= 2j < (2s+1)c with c = M/N.
inline int site_of_node(int j, int mesh, int N) noexcept {
    const int c = mesh / N;
    const int s = (2 * j + c) / (2 * c);  // floor(j/c + 1/2)
    if (s < 1 || s > N - 1) return 0;
    return (2 * s - 1) * c <= 2 * j && 2 * j < (2 * s + 1) * c ? s : 0;
}

// Step function of the configuration: eta(x) on [x/N - 1/2N, x/N + 1/2N),
// zero outside, sampled at the mesh nodes. Its quadrature integral equals
// particle_count()/N exactly.
inline DensityProfile empirical_profile(const Configuration& eta, const ModelParams& p, int mesh) {
    p.validate();
    require(eta.sites() == p.sites(), errc::validation, "empirical_profile: configuration length must be N-1");
    require(mesh >= p.N && mesh % p.N == 0, errc::validation,
            "empirical_profile: mesh must be a positive multiple of N");
    DensityProfile g(mesh, 0.0);
    for (int j = 0; j <= mesh; ++j) {
        const int s = site_of_node(j, mesh, p.N);
        if (s != 0 && eta.occupied(s)) g.values[static_cast<std::size_t>(j)] = 1.0;
    }
    return g;
}

// Interpolation of the reservoir densities: rho_bar(x) = alpha + (beta-alpha)x.
inline DensityProfile stationary_profile(const ModelParams& p, int mesh) {
    p.validate();
    require(mesh >= 1, errc::validation, "stationary_profile: mesh must be >= 1");
    DensityProfile g(mesh, 0.0);
    for (int j = 0; j <= mesh; ++j) g.values[static_cast<std::size_t>(j)] = p.alpha + (p.beta - p.alpha) * g.x(j);
    return g;
}

}  // namespace bdssep
