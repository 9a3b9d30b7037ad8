#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "bdssep/config.hpp"
#include "bdssep/errors.hpp"
#include "bdssep/metric.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"

using namespace bdssep;

TEST_CASE("model parameter validation") {
    REQUIRE_NOTHROW((ModelParams{2, 0.5, 0.5}.validate()));
    REQUIRE_NOTHROW((ModelParams{10, 0.2, 0.8}.validate()));
    REQUIRE_THROWS_AS((ModelParams{1, 0.5, 0.5}.validate()), error);
    REQUIRE_THROWS_AS((ModelParams{5, 0.0, 0.5}.validate()), error);
    REQUIRE_THROWS_AS((ModelParams{5, 0.5, 1.0}.validate()), error);
    REQUIRE_THROWS_AS((ModelParams{5, 0.6, 0.4}.validate()), error);

    try {
        ModelParams{5, 0.6, 0.4}.validate();
        FAIL("expected a validation error");
    } catch (const error& e) {
        REQUIRE(e.kind() == errc::validation);
    }
}

TEST_CASE("configuration bit manipulation") {
    Configuration c = Configuration::from_occupancy({1, 0, 1});
    REQUIRE(c.sites() == 3);
    REQUIRE(c.bits() == 0b101u);
    REQUIRE(c.occupied(1));
    REQUIRE_FALSE(c.occupied(2));
    REQUIRE(c.occupied(3));
    REQUIRE(c.particle_count() == 2);
    REQUIRE(c.to_string() == "101");
    REQUIRE((c.occupancy() == std::vector<int>{1, 0, 1}));

    c.flip(2);
    REQUIRE(c == Configuration::full(3));
    c.flip(2);

    c.exchange(1);  // 101 -> 011
    REQUIRE(c.bits() == 0b110u);
    c.exchange(2);  // 011 -> 011 viewed as sites: site2,3 both occupied, no change
    REQUIRE(c.bits() == 0b110u);

    REQUIRE(Configuration::empty(5).particle_count() == 0);
    REQUIRE(Configuration::full(5).particle_count() == 5);
    REQUIRE(Configuration::full(5).bits() == 0b11111u);
}

TEST_CASE("transition enumeration matches a hand-computed case") {
    const ModelParams p{4, 0.2, 0.6};
    const Configuration eta = Configuration::from_occupancy({1, 0, 1});
    const std::vector<Transition> ts = enumerate_transitions(eta, p);
    REQUIRE(ts.size() == 4);

    // Collect target-bits -> rate.
    std::map<std::uint64_t, double> got;
    for (const Transition& t : ts) got[t.target.bits()] += t.rate;

    // Bond (1,2) occupied/empty: exchange at 1/2 -> 011 (bits 110).
    // Bond (2,3) empty/occupied: exchange at 1/2 -> 110 (bits 011).
    // Site 1 occupied: remove at (1-alpha)/2 = 0.4 -> 001 (bits 100).
    // Site 3 occupied: remove at (1-beta)/2 = 0.2 -> 100 (bits 001).
    REQUIRE(got.size() == 4);
    REQUIRE(got.at(0b110u) == 0.5);
    REQUIRE(got.at(0b011u) == 0.5);
    REQUIRE(got.at(0b100u) == Catch::Approx(0.4).margin(1e-15));
    REQUIRE(got.at(0b001u) == Catch::Approx(0.2).margin(1e-15));
    REQUIRE(total_exit_rate(eta, p) == Catch::Approx(1.6).margin(1e-15));
}

TEST_CASE("smallest chain exposes both reservoirs on one site") {
    const ModelParams p{2, 0.3, 0.7};
    const Configuration eta = Configuration::empty(1);
    const std::vector<Transition> ts = enumerate_transitions(eta, p);
    REQUIRE(ts.size() == 2);
    REQUIRE(ts[0].target == Configuration::full(1));
    REQUIRE(ts[1].target == Configuration::full(1));
    REQUIRE(total_exit_rate(eta, p) == Catch::Approx((0.3 + 0.7) / 2).margin(1e-15));
}

TEST_CASE("total exit rate stays below N/2 across a full state space") {
    const ModelParams p{6, 0.15, 0.9};
    for (std::uint64_t b = 0; b < (1u << 5); ++b) {
        const Configuration eta(b, 5);
        const double r = total_exit_rate(eta, p);
        REQUIRE(r > 0.0);
        REQUIRE(r <= p.N / 2.0 + 1e-15);
    }
}

TEST_CASE("configuration length mismatches are rejected") {
    const ModelParams p{4, 0.2, 0.6};
    REQUIRE_THROWS_AS(enumerate_transitions(Configuration::empty(4), p), error);
    REQUIRE_THROWS_AS(empirical_profile(Configuration::empty(2), p, 8), error);
}

TEST_CASE("empirical profile integrates to the particle fraction exactly") {
    const ModelParams p{6, 0.2, 0.8};
    const int mesh = 120;
    for (std::uint64_t b = 0; b < (1u << 5); ++b) {
        const Configuration eta(b, 5);
        const DensityProfile g = empirical_profile(eta, p, mesh);
        REQUIRE(quad_integral(g) == Catch::Approx(eta.particle_count() / double(p.N)).margin(1e-15));
    }
    REQUIRE_THROWS_AS(empirical_profile(Configuration::empty(5), p, 100), error);
}

TEST_CASE("site interval lookup is integer exact at the cell edges") {
    const int mesh = 120, N = 6;  // c = mesh/N = 20
    REQUIRE(site_of_node(0, mesh, N) == 0);
    REQUIRE(site_of_node(9, mesh, N) == 0);
    REQUIRE(site_of_node(10, mesh, N) == 1);   // left edge of site 1, closed
    REQUIRE(site_of_node(29, mesh, N) == 1);
    REQUIRE(site_of_node(30, mesh, N) == 2);   // right edge open
    REQUIRE(site_of_node(90, mesh, N) == 5);
    REQUIRE(site_of_node(109, mesh, N) == 5);
    REQUIRE(site_of_node(110, mesh, N) == 0);  // beyond the last interval
    REQUIRE(site_of_node(120, mesh, N) == 0);
}

TEST_CASE("quadrature weights form a partition of unity") {
    const int mesh = 37;
    double s = 0.0;
    for (int j = 0; j <= mesh; ++j) s += quad_weight(j, mesh);
    REQUIRE(s == Catch::Approx(1.0).margin(1e-15));

    // Exact for linear integrands on the node-centered cells up to the
    // half-cell end correction: integrate x on mesh 4.
    DensityProfile lin(4, 0.0);
    for (int j = 0; j <= 4; ++j) lin.values[j] = lin.x(j);
    REQUIRE(quad_integral(lin) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("stationary profile interpolates the reservoir densities") {
    const ModelParams p{8, 0.2, 0.8};
    const DensityProfile g = stationary_profile(p, 160);
    REQUIRE(g.values.front() == Catch::Approx(0.2).margin(1e-15));
    REQUIRE(g.values.back() == Catch::Approx(0.8).margin(1e-15));
    REQUIRE(g.values[80] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("default mesh is the smallest multiple of N not below the floor") {
    REQUIRE(default_mesh(64) == 128);
    REQUIRE(default_mesh(10) == 130);
    REQUIRE(default_mesh(7) == 133);
    REQUIRE(default_mesh(128) == 128);
    REQUIRE(default_mesh(6, 120) == 120);
}

TEST_CASE("profile distance between constants halves the gap") {
    // Only the constant member F_1 sees a constant difference; its weight is 1/2.
    const TestBasis basis{};
    const DensityProfile a(50, 0.9), b(50, 0.4);
    REQUIRE(profile_distance(a, b, basis) == Catch::Approx(0.25).margin(1e-14));
    REQUIRE(profile_distance(a, a, basis) == 0.0);
}

TEST_CASE("profile distance is a metric dominated by the L2 norm") {
    const TestBasis basis{};
    const int mesh = 60;
    DensityProfile a(mesh, 0.0), b(mesh, 0.0), c(mesh, 0.0);
    for (int j = 0; j <= mesh; ++j) {
        const double x = double(j) / mesh;
        a.values[j] = 0.5 + 0.4 * std::sin(std::numbers::pi * x);
        b.values[j] = 0.2 + 0.6 * x;
        c.values[j] = 0.3 + 0.5 * x * x;
    }
    const double dab = profile_distance(a, b, basis);
    const double dba = profile_distance(b, a, basis);
    const double dac = profile_distance(a, c, basis);
    const double dcb = profile_distance(c, b, basis);
    REQUIRE(dab == dba);
    REQUIRE(dab > 0.0);
    REQUIRE(dab <= dac + dcb + 1e-12);
    REQUIRE(dab <= l2_distance(a, b) + 1e-12);
    REQUIRE(dab <= 1.0);
}

TEST_CASE("set membership agrees with a direct quadrature evaluation") {
    const ModelParams p{8, 0.3, 0.3};
    const int mesh = 120;
    ProfileSet s;
    s.center = DensityProfile(mesh, 0.9);
    s.radius = 0.05;

    const Configuration eta = Configuration::full(7);
    const DensityProfile pi = empirical_profile(eta, p, mesh);

    // Independent evaluation of d(pi, 0.9) straight from the definition.
    double ref = 0.0;
    double w = 1.0;
    for (int k = 1; k <= s.basis.K; ++k) {
        w *= 0.5;
        double ip = 0.0;
        for (int j = 0; j <= mesh; ++j)
            ip += quad_weight(j, mesh) * (pi.values[j] - 0.9) *
                  std::cos((k - 1) * std::numbers::pi * j / double(mesh));
        ref += w * std::abs(ip);
    }
    REQUIRE(profile_distance(pi, s.center, s.basis) == Catch::Approx(ref).margin(1e-12));
    REQUIRE(in_set(eta, s, p) == (ref < s.radius));
    REQUIRE(in_set(eta, s, p));  // the full configuration sits 0.03-ish from 0.9
    REQUIRE(in_set(pi, s) == in_set(eta, s, p));
    REQUIRE_FALSE(in_set(Configuration::empty(7), s, p));
}

TEST_CASE("profile set validation") {
    ProfileSet s;
    s.center = DensityProfile(10, 0.5);
    s.radius = 0.0;
    REQUIRE_THROWS_AS(s.validate(), error);
    s.radius = 0.1;
    REQUIRE_NOTHROW(s.validate());
    s.basis.K = 0;
    REQUIRE_THROWS_AS(s.validate(), error);
}

TEST_CASE("profile expressions parse into the advertised shapes") {
    const ModelParams p{8, 0.2, 0.8};
    const int mesh = 40;

    const DensityProfile c = parse_profile("constant:0.35", mesh, p);
    REQUIRE(c.mesh == mesh);
    REQUIRE(c.values[7] == 0.35);

    const DensityProfile lin = parse_profile("linear:0.1,0.9", mesh, p);
    REQUIRE(lin.values.front() == Catch::Approx(0.1).margin(1e-15));
    REQUIRE(lin.values.back() == Catch::Approx(0.9).margin(1e-15));
    REQUIRE(lin.values[20] == Catch::Approx(0.5).margin(1e-15));

    const DensityProfile bump = parse_profile("bump:0.3,0.4,0.5,0.15", mesh, p);
    REQUIRE(bump.values[20] == Catch::Approx(0.7).margin(1e-12));
    REQUIRE(bump.values.front() == Catch::Approx(0.3 + 0.4 * std::exp(-(0.5 / 0.15) * (0.5 / 0.15))).margin(1e-12));

    const DensityProfile st = parse_profile("stationary", mesh, p);
    REQUIRE(st.values.front() == Catch::Approx(0.2).margin(1e-15));
    REQUIRE(st.values.back() == Catch::Approx(0.8).margin(1e-15));

    REQUIRE_THROWS_AS(parse_profile("constant:1.5", mesh, p), error);
    REQUIRE_THROWS_AS(parse_profile("linear:0.1", mesh, p), error);
    REQUIRE_THROWS_AS(parse_profile("mystery:1", mesh, p), error);
    REQUIRE_THROWS_AS(parse_profile("file:/nonexistent/profile.txt", mesh, p), error);
}

TEST_CASE("config files parse sections, comments and types") {
    const std::string text =
        "# heading comment\n"
        "[model]\n"
        "n = 8\n"
        "alpha = 0.2\n"
        "beta = 0.8   ; trailing comment\n"
        "\n"
        "[sim]\n"
        "replicas = 500\n"
        "exact = true\n"
        "ladder = 0.5, 1, 2\n";
    Config cfg = Config::from_string(text, "inline");

    REQUIRE(cfg.get_int("model.n") == 8);
    REQUIRE(cfg.get_double("model.alpha") == 0.2);
    REQUIRE(cfg.get_double("model.beta") == 0.8);
    REQUIRE(cfg.get_int("sim.replicas") == 500);
    REQUIRE(cfg.get_bool("sim.exact", false) == true);
    REQUIRE((cfg.get_doubles("sim.ladder", {}) == std::vector<double>{0.5, 1.0, 2.0}));

    // Defaults are recorded, reads are tracked.
    REQUIRE(cfg.get_double("sim.horizon", 9.5) == 9.5);
    REQUIRE(cfg.defaulted().count("sim.horizon") == 1);
    REQUIRE(cfg.accessed().count("model.n") == 1);
    REQUIRE(cfg.accessed().count("sim.horizon") == 0);
}

TEST_CASE("config errors carry the key and reject malformed input") {
    Config cfg = Config::from_string("[model]\nn = seven\n", "inline");
    try {
        (void)cfg.get_int("model.n");
        FAIL("expected a parse error");
    } catch (const error& e) {
        REQUIRE(e.kind() == errc::validation);
        REQUIRE(std::string(e.what()).find("model.n") != std::string::npos);
    }
    try {
        (void)cfg.get_string("model.alpha");
        FAIL("expected a missing-key error");
    } catch (const error& e) {
        REQUIRE(std::string(e.what()).find("model.alpha") != std::string::npos);
    }
    REQUIRE_THROWS_AS(Config::from_string("loose = 1\n", "inline"), error);
    REQUIRE_THROWS_AS(Config::from_string("[s]\nnovalue\n", "inline"), error);
}

TEST_CASE("canonical form ignores order and comments") {
    Config a = Config::from_string("[m]\nx = 1\ny = 2\n", "a");
    Config b = Config::from_string("# note\n[m]\ny = 2\n; other\nx = 1\n", "b");
    REQUIRE(a.canonical() == b.canonical());
    Config c = Config::from_string("[m]\nx = 1\ny = 3\n", "c");
    REQUIRE(a.canonical() != c.canonical());
}
