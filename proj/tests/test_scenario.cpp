#include <doctest.h>

#include "cfisac/scenario.hpp"

using namespace cfisac;

namespace {

ScenarioConfig small_config() {
    ScenarioConfig cfg;
    cfg.n_ap = 6;
    cfg.n_rx = 1;
    cfg.n_ue = 3;
    cfg.m_antennas = 4;
    cfg.k_antennas = 2;
    cfg.n_samples = 8;
    return cfg;
}

}  // namespace

TEST_CASE("generate_scenario is a pure function of config and seed") {
    const ScenarioConfig cfg = small_config();
    const Scenario a = generate_scenario(cfg, 77);
    const Scenario b = generate_scenario(cfg, 77);
    REQUIRE(a.ap_positions.size() == b.ap_positions.size());
    for (size_t i = 0; i < a.ap_positions.size(); ++i) {
        CHECK(a.ap_positions[i].x == b.ap_positions[i].x);
        CHECK(a.ap_positions[i].y == b.ap_positions[i].y);
    }
    CHECK(a.target_position.x == b.target_position.x);
    for (int j = 0; j < cfg.n_ap; ++j)
        for (int i = 0; i < cfg.n_ue; ++i) CHECK(a.channels[j][i] == b.channels[j][i]);
    CHECK(a.alpha == b.alpha);

    const Scenario c = generate_scenario(cfg, 78);
    CHECK(a.target_position.x != c.target_position.x);
}

TEST_CASE("generated geometry respects counts, bounds, and separation") {
    ScenarioConfig cfg = small_config();
    cfg.grid_side = 1000.0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const Scenario scn = generate_scenario(cfg, seed);
        CHECK(scn.n_ap() == 6);
        CHECK(scn.n_ue() == 3);
        std::vector<Point2> all = scn.ap_positions;
        all.insert(all.end(), scn.ue_positions.begin(), scn.ue_positions.end());
        all.push_back(scn.target_position);
        for (const auto& p : all) {
            CHECK(p.x >= 0.0);
            CHECK(p.x <= 1000.0);
            CHECK(p.y >= 0.0);
            CHECK(p.y <= 1000.0);
        }
        for (size_t i = 0; i < all.size(); ++i)
            for (size_t j = i + 1; j < all.size(); ++j) CHECK(distance(all[i], all[j]) >= 1.0);
        for (int j = 0; j < cfg.n_ap; ++j) {
            CHECK(scn.theta_tx(j) > -kPi);
            CHECK(scn.theta_tx(j) <= kPi);
        }
    }
}

TEST_CASE("placement fails on an impossible grid") {
    ScenarioConfig cfg = small_config();
    cfg.grid_side = 2.0;  // cannot fit 10 nodes with 1 m separation
    cfg.n_ap = 8;
    CHECK_THROWS_AS(generate_scenario(cfg, 1), std::runtime_error);
}

TEST_CASE("channel entries have the configured link-gain variance") {
    // one long channel vector gives a large i.i.d. sample of CN(0, beta)
    ScenarioConfig cfg = small_config();
    cfg.n_ap = 1;
    cfg.n_rx = 1;
    cfg.n_ue = 1;
    cfg.n_ap = 2;  // n_rx < n_ap
    cfg.m_antennas = 100000;
    const Scenario scn = generate_scenario(cfg, 31);
    const double beta = scn.beta_ue(0, 0);
    const double mean_power = scn.channels[0][0].squaredNorm() / cfg.m_antennas;
    // |entry|^2 has variance beta^2; 3 sigma over 1e5 draws is ~0.95%
    CHECK(std::abs(mean_power - beta) < 3.0 * beta / std::sqrt(double(cfg.m_antennas)));
    CHECK(std::abs(mean_power / beta - 1.0) < 0.05);
}

TEST_CASE("path gain reference points and monotonicity") {
    CHECK(path_gain(1.0, 3.0) == doctest::Approx(1.0));
    CHECK(path_gain(10.0, 3.0) == doctest::Approx(1e-3));
    CHECK(path_gain(0.3, 3.0) == 1.0);  // clamped below the reference distance
    double prev = path_gain(1.0, 3.0);
    for (double d = 1.5; d < 50.0; d += 0.5) {
        const double g = path_gain(d, 3.0);
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("array response structure") {
    SUBCASE("single antenna") {
        const CVec a = array_response(0.731, 1);
        REQUIRE(a.size() == 1);
        CHECK(a(0) == cdouble(1.0, 0.0));
    }
    SUBCASE("broadside is all ones") {
        const CVec a = array_response(kPi / 2.0, 4);
        for (int p = 0; p < 4; ++p) CHECK(std::abs(a(p) - cdouble(1.0, 0.0)) < 1e-12);
    }
    SUBCASE("norm equals antenna count for random draws") {
        Rng rng(5);
        for (int k = 0; k < 100; ++k) {
            const int m = 1 + rng.uniform_int(128);
            const double theta = rng.uniform(-kPi, kPi);
            CHECK(std::abs(array_response(theta, m).squaredNorm() - m) <= 1e-9 * m);
        }
    }
    SUBCASE("first element exactly one") {
        Rng rng(6);
        for (int k = 0; k < 20; ++k)
            CHECK(array_response(rng.uniform(-kPi, kPi), 8)(0) == cdouble(1.0, 0.0));
    }
}

TEST_CASE("sensing geometry angles and gains") {
    Scenario scn;
    scn.ap_positions = {{0.0, 0.0}, {10.0, 0.0}};
    scn.ue_positions = {{3.0, 4.0}};
    scn.target_position = {1.0, 0.0};

    SUBCASE("axis-aligned bearing") {
        CHECK(bearing(scn.ap_positions[0], scn.target_position) == doctest::Approx(0.0));
    }
    SUBCASE("vertical bearing") {
        CHECK(bearing(Point2{0.0, 0.0}, Point2{0.0, 5.0}) == doctest::Approx(kPi / 2.0));
    }
    SUBCASE("two-hop gain is the product of segment gains") {
        Scenario s2;
        s2.ap_positions = {{0.0, 0.0}, {20.0, 0.0}};
        s2.target_position = {10.0, 0.0};  // both hops are 10 m
        const ApConfiguration cfg = ApConfiguration::from_receivers(2, {1});
        const SensingGeometry g = sensing_geometry(s2, cfg, 3.0);
        CHECK(g.beta_tr(0, 0) == doctest::Approx(1e-6));
    }
}
