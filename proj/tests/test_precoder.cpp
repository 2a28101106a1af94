#include <doctest.h>

#include "cfisac/precoder.hpp"
#include "oracles.hpp"

using namespace cfisac;

namespace {

ScenarioConfig opt_config() {
    ScenarioConfig cfg;
    cfg.n_ap = 4;
    cfg.n_rx = 1;
    cfg.n_ue = 2;
    cfg.m_antennas = 3;
    cfg.k_antennas = 2;
    cfg.n_samples = 8;
    return cfg;
}

}  // namespace

TEST_CASE("echo quadratic reduces to the scalar product at one antenna") {
    Scenario tiny;
    tiny.ap_positions = {{0.0, 0.0}, {20.0, 0.0}};
    tiny.target_position = {10.0, 0.0};
    tiny.channels = {{CVec::Zero(1)}, {CVec::Zero(1)}};  // single-antenna APs
    tiny.alpha = CMat::Zero(2, 2);
    tiny.alpha(0, 1) = cdouble(0.4, 1.1);
    tiny.theta_tx = RVec::Zero(2);
    tiny.theta_tx(0) = bearing(tiny.ap_positions[0], tiny.target_position);
    const SensingQuadratic q = build_sensing_quadratic(tiny, {0}, {1}, 3.0);
    REQUIRE(q.n_rx() == 1);
    const CMat a = q.a_r(0);
    REQUIRE(a.rows() == 1);
    CHECK(a(0, 0).real() == doctest::Approx(1e-6 * std::norm(tiny.alpha(0, 1))));
    CHECK(std::abs(a(0, 0).imag()) < 1e-18);
}

TEST_CASE("echo quadratic is rank-1 Hermitian PSD") {
    const ScenarioConfig cfg = opt_config();
    const Scenario scn = generate_scenario(cfg, 61);
    const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {0, 2});
    const SensingQuadratic quad = build_sensing_quadratic(scn, ap, cfg.path_loss_exp);
    Rng rng(62);
    for (int r = 0; r < quad.n_rx(); ++r) {
        const CMat a = quad.a_r(r);
        CHECK((a - a.adjoint()).norm() <= 1e-12 * a.norm());
        Eigen::SelfAdjointEigenSolver<CMat> eig(a);
        const RVec ev = eig.eigenvalues();
        CHECK(ev.minCoeff() >= -1e-12 * ev.maxCoeff());
        int significant = 0;
        for (int i = 0; i < ev.size(); ++i)
            if (ev(i) > 1e-10 * ev.maxCoeff()) ++significant;
        CHECK(significant == 1);
        // PSD quadratic form stays non-negative
        for (int k = 0; k < 10; ++k) {
            const CVec v = rng.cgaussian_vector(quad.t_rows());
            CHECK((v.adjoint() * a * v).real().value() >= -1e-12 * a.norm() * v.squaredNorm());
        }
    }
}

TEST_CASE("linearized objective") {
    const ScenarioConfig cfg = opt_config();
    const Scenario scn = generate_scenario(cfg, 63);
    const SymbolFrame frame = generate_frame(cfg.n_ue, cfg.n_samples, cfg.mod_order, 64);
    const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {1});
    const SensingQuadratic quad = build_sensing_quadratic(scn, ap, cfg.path_loss_exp);
    Rng rng(65);
    const CMat w0 = rng.cgaussian_matrix(quad.t_rows(), cfg.n_ue + 1);
    const LinearizedObjective lin = linearize_objective(quad, w0, frame, cfg.sigma_n);

    SUBCASE("exact at the anchor") {
        CHECK(lin.value(w0) ==
              doctest::Approx(sensing_sinr(w0, quad, frame, cfg.sigma_n)).epsilon(1e-9));
    }
    SUBCASE("global under-estimator") {
        for (int k = 0; k < 100; ++k) {
            const CMat w = rng.cgaussian_matrix(w0.rows(), w0.cols()) * rng.uniform(0.1, 3.0);
            const double truth = sensing_sinr(w, quad, frame, cfg.sigma_n);
            CHECK(lin.value(w) <= truth * (1.0 + 1e-9) + 1e-12);
        }
    }
    SUBCASE("zero quadratic gives the zero functional") {
        Scenario dark = scn;
        dark.alpha.setZero();
        const SensingQuadratic qz = build_sensing_quadratic(dark, ap, cfg.path_loss_exp);
        const LinearizedObjective lz = linearize_objective(qz, w0, frame, cfg.sigma_n);
        CHECK(lz.g.norm() == 0.0);
        CHECK(lz.constant == 0.0);
        CHECK(lz.value(w0) == 0.0);
    }
}

TEST_CASE("subproblem honors feasible-set nesting in the rate floor") {
    Rng rng(67);
    const int t = 6, nue = 1;
    ipm::Subproblem p;
    p.g_obj = rng.cgaussian_matrix(t, nue + 1);
    p.h.push_back(rng.cgaussian_vector(t));
    p.p_max = 2.0;
    p.sigma_n2 = 1e-3;
    CMat anchor = rng.cgaussian_matrix(t, nue + 1) * 0.05;
    anchor.col(0) += 0.8 * p.h[0] / p.h[0].norm();
    p.z.push_back(p.h[0].dot(anchor.col(0)));

    p.gamma_min = 1.1;
    const ipm::Result loose = ipm::solve_subproblem(p, anchor);
    p.gamma_min = 3.0;
    const ipm::Result tight = ipm::solve_subproblem(p, anchor);
    REQUIRE(loose.status == SolveStatus::ok);
    REQUIRE(tight.status == SolveStatus::ok);
    const double obj_loose = p.g_obj.cwiseProduct(loose.w.conjugate()).sum().real();
    const double obj_tight = p.g_obj.cwiseProduct(tight.w.conjugate()).sum().real();
    CHECK(obj_loose >= obj_tight - 1e-6 * std::abs(obj_tight));
}

TEST_CASE("subproblem matches a dense grid search on a tiny real instance") {
    for (std::uint64_t seed : {11, 12, 13}) {
        Rng rng(seed);
        oracles::TinySubproblem tiny;
        tiny.g = RMat::NullaryExpr(2, 2, [&](int, int) { return rng.gaussian(); });
        tiny.h = RVec::NullaryExpr(2, [&](int) { return rng.gaussian(); });
        tiny.gamma_min = 1.5;
        tiny.p_max = 1.0;
        tiny.sigma_n2 = 0.05;
        tiny.z = 0.6 * tiny.h.norm();

        ipm::Subproblem p;
        p.g_obj = tiny.g.cast<cdouble>();
        p.h.push_back(tiny.h.cast<cdouble>());
        p.z.push_back(tiny.z);
        p.gamma_min = tiny.gamma_min;
        p.p_max = tiny.p_max;
        p.sigma_n2 = tiny.sigma_n2;
        CMat anchor = CMat::Zero(2, 2);
        anchor.col(0) = (0.6 / tiny.h.norm()) * tiny.h.cast<cdouble>();  // reproduces z
        const ipm::Result r = ipm::solve_subproblem(p, anchor);
        REQUIRE(r.status == SolveStatus::ok);
        const double solver_obj = p.g_obj.cwiseProduct(r.w.conjugate()).sum().real();
        const double grid_obj = oracles::grid_search_tiny(tiny);
        CHECK(std::abs(solver_obj - grid_obj) < 1e-2);
    }
}

TEST_CASE("alternated linearization") {
    const ScenarioConfig cfg = opt_config();

    SUBCASE("a unit iteration cap returns the first solution") {
        ScenarioConfig one = cfg;
        one.ccp_max_iter = 1;
        const Scenario scn = generate_scenario(one, 71);
        const SymbolFrame frame = generate_frame(one.n_ue, one.n_samples, one.mod_order, 72);
        const ApConfiguration ap = ApConfiguration::from_receivers(one.n_ap, {0});
        const CcpResult res = optimize_precoder(scn, ap, frame, one, 73);
        REQUIRE(res.state.status != CcpStatus::infeasible);
        CHECK(res.state.iterations == 1);
        CHECK(res.state.objective_history.size() == 1);
    }

    SUBCASE("objective history ascends and constraints hold") {
        int checked = 0;
        for (std::uint64_t seed = 0; seed < 12; ++seed) {
            const Scenario scn = generate_scenario(cfg, 700 + seed);
            const SymbolFrame frame = generate_frame(cfg.n_ue, cfg.n_samples, cfg.mod_order, 800 + seed);
            const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {0});
            const CcpResult res = optimize_precoder(scn, ap, frame, cfg, 900 + seed);
            if (res.state.status == CcpStatus::infeasible) continue;
            ++checked;
            const auto& hist = res.state.objective_history;
            REQUIRE(!hist.empty());
            CHECK(hist.back() >= hist.front() - 1e-6 * std::abs(hist.front()));
            for (size_t i = 1; i < hist.size(); ++i)
                CHECK(hist[i] >= hist[i - 1] * (1.0 - 1e-6) - 1e-12);
            CHECK(res.state.max_kkt_stationarity < 1e-6);
            CHECK(res.state.max_kkt_complementarity < 1e-6);

            CHECK(res.w.max_row_power() <= cfg.p_max * (1.0 + 1e-6));
            std::vector<CVec> h;
            for (int i = 0; i < cfg.n_ue; ++i) h.push_back(scn.concat_channel(ap, i));
            CHECK(min_user_sinr(res.w.w, h, cfg.sigma_n) >= cfg.gamma_min * (1.0 - 1e-3));
        }
        CHECK(checked >= 8);
    }
}
