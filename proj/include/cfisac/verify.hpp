#pragma once

// Quick oracle/property self-checks behind the `verify` subcommand. Each
// check prints one pass/fail line; the whole suite runs in seconds.

#include <cstdio>
#include <functional>
#include <string>

#include "cfisac/harness.hpp"

namespace cfisac {

namespace verify_detail {

inline ScenarioConfig tiny_config() {
    ScenarioConfig cfg;
    cfg.n_ap = 3;
    cfg.n_rx = 1;
    cfg.n_ue = 2;
    cfg.k_antennas = 2;
    cfg.m_antennas = 4;
    cfg.n_samples = 8;
    cfg.em_max_iter = 50;
    cfg.framework_max_iter = 10;
    return cfg;
}

}  // namespace verify_detail

inline bool run_verification(std::FILE* out) {
    int failures = 0;
    auto check = [&](const char* name, const std::function<bool()>& fn) {
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            std::fprintf(out, "[FAIL] %s (exception: %s)\n", name, e.what());
            ++failures;
            return;
        }
        std::fprintf(out, "[%s] %s\n", ok ? "PASS" : "FAIL", name);
        if (!ok) ++failures;
    };

    check("array response norm equals antenna count", [] {
        Rng rng(11);
        for (int k = 0; k < 200; ++k) {
            const int m = 1 + rng.uniform_int(64);
            const double theta = rng.uniform(-kPi, kPi);
            if (std::abs(array_response(theta, m).squaredNorm() - m) > 1e-9 * m) return false;
        }
        return true;
    });

    check("path gain reference values", [] {
        return std::abs(path_gain(1.0, 3.0) - 1.0) < 1e-15 &&
               std::abs(path_gain(10.0, 3.0) - 1e-3) < 1e-15 && path_gain(0.2, 3.0) == 1.0;
    });

    check("constellation average power is one", [] {
        for (int order : {4, 16, 64}) {
            double p = 0.0;
            for (const auto& s : qam_constellation(order)) p += std::norm(s);
            if (std::abs(p / order - 1.0) > 1e-12) return false;
        }
        return true;
    });

    check("received-signal decomposition identity", [] {
        const ScenarioConfig cfg = verify_detail::tiny_config();
        const Scenario scn = generate_scenario(cfg, 5);
        const SymbolFrame frame = generate_frame(cfg.n_ue, cfg.n_samples, cfg.mod_order, 6);
        const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {2});
        Rng rng(7);
        PrecoderMatrix w;
        w.m_antennas = cfg.m_antennas;
        w.tx_index_map = ap.transmitters;
        w.w = rng.cgaussian_matrix(cfg.m_antennas * ap.n_tx(), cfg.n_ue + 1);
        const UserRxSignal rx =
            received_user_signal(scn, ap, w, frame, 0, cfg.k_antennas, cfg.sigma_n, 8);
        const CMat sum = rx.desired + rx.comm_interference + rx.sens_interference + rx.noise;
        return (sum - rx.total).norm() < 1e-12 * (1.0 + rx.total.norm());
    });

    check("echo quadratic is rank-1 Hermitian PSD", [] {
        const ScenarioConfig cfg = verify_detail::tiny_config();
        const Scenario scn = generate_scenario(cfg, 9);
        const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {1});
        const SensingQuadratic quad = build_sensing_quadratic(scn, ap, cfg.path_loss_exp);
        const CMat a = quad.a_r(0);
        if ((a - a.adjoint()).norm() > 1e-12 * a.norm()) return false;
        Eigen::SelfAdjointEigenSolver<CMat> eig(a);
        const RVec ev = eig.eigenvalues();
        if (ev.minCoeff() < -1e-12 * ev.maxCoeff()) return false;
        int significant = 0;
        for (int i = 0; i < ev.size(); ++i)
            if (ev(i) > 1e-9 * ev.maxCoeff()) ++significant;
        return significant == 1;
    });

    check("linearization exact at anchor and below elsewhere", [] {
        const ScenarioConfig cfg = verify_detail::tiny_config();
        const Scenario scn = generate_scenario(cfg, 13);
        const SymbolFrame frame = generate_frame(cfg.n_ue, cfg.n_samples, cfg.mod_order, 14);
        const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {0});
        const SensingQuadratic quad = build_sensing_quadratic(scn, ap, cfg.path_loss_exp);
        Rng rng(15);
        const CMat w0 = rng.cgaussian_matrix(cfg.m_antennas * ap.n_tx(), cfg.n_ue + 1);
        const LinearizedObjective lin = linearize_objective(quad, w0, frame, cfg.sigma_n);
        const double at_anchor = sensing_sinr(w0, quad, frame, cfg.sigma_n);
        if (std::abs(lin.value(w0) - at_anchor) > 1e-9 * (1.0 + std::abs(at_anchor))) return false;
        for (int k = 0; k < 50; ++k) {
            const CMat w = rng.cgaussian_matrix(w0.rows(), w0.cols());
            if (lin.value(w) > sensing_sinr(w, quad, frame, cfg.sigma_n) * (1.0 + 1e-9) + 1e-9)
                return false;
        }
        return true;
    });

    check("receiver selection matches exhaustive search", [] {
        Rng rng(17);
        for (int rep = 0; rep < 30; ++rep) {
            const int n_ap = 4 + rng.uniform_int(4);
            const int n_ue = 1 + rng.uniform_int(3);
            const int n_rx = 1 + rng.uniform_int(n_ap - 1);
            RMat mi(n_ue, n_ap);
            for (int i = 0; i < n_ue; ++i)
                for (int l = 0; l < n_ap; ++l) mi(i, l) = std::abs(rng.gaussian());
            if (rep % 3 == 0) mi.col(0) = mi.col(n_ap - 1);  // force ties
            const std::vector<int> fast = select_receivers(mi, n_rx);
            // exhaustive argmax over subsets in lexicographic order
            std::vector<int> best;
            double best_score = -1.0;
            std::vector<int> idx(n_rx);
            std::function<void(int, int)> rec = [&](int start, int depth) {
                if (depth == n_rx) {
                    double s = 0.0;
                    for (int j : idx) s += mi.col(j).norm();
                    if (s > best_score + 1e-9 * (1.0 + std::abs(best_score))) {
                        best_score = s;
                        best = idx;
                    }
                    return;
                }
                for (int j = start; j < n_ap; ++j) {
                    idx[depth] = j;
                    rec(j + 1, depth + 1);
                }
            };
            rec(0, 0);
            if (fast != best) return false;
        }
        return true;
    });

    check("triangulation matches closed-form least squares", [] {
        Rng rng(19);
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<Line2> lines;
            RMat a = RMat::Zero(2, 2);
            RVec b = RVec::Zero(2);
            for (int l = 0; l < 3 + rng.uniform_int(3); ++l) {
                const Point2 anchor{rng.uniform(0, 100), rng.uniform(0, 100)};
                const double th = rng.uniform(-kPi, kPi);
                const Point2 dir{std::cos(th), std::sin(th)};
                lines.push_back({anchor, dir});
                RMat proj(2, 2);
                proj << 1 - dir.x * dir.x, -dir.x * dir.y, -dir.x * dir.y, 1 - dir.y * dir.y;
                a += proj;
                b += proj * RVec(Eigen::Vector2d(anchor.x, anchor.y));
            }
            const RVec q_star = a.ldlt().solve(b);
            const TriangulationResult tri = triangulate(lines, 1.0, 100000, 1e-10);
            const double err = std::hypot(tri.q.x - q_star(0), tri.q.y - q_star(1));
            if (err > 1e-4 || !tri.mse_monotone) return false;
        }
        return true;
    });

    check("maximization step satisfies its normal equations", [] {
        Rng rng(23);
        for (int rep = 0; rep < 20; ++rep) {
            const int m = 2 + rng.uniform_int(6);
            const int k = 1 + rng.uniform_int(4);
            const CMat e_h = rng.cgaussian_matrix(m, k);
            CMat omega = rng.cgaussian_matrix(m, m);
            omega = (omega * omega.adjoint() + CMat::Identity(m, m)).eval();
            const CVec y = rng.cgaussian_vector(k);
            const CVec x = em_m_step(y, e_h, omega, m);
            CVec resid = static_cast<double>(m) * (omega * x);
            for (int j = 0; j < k; ++j) resid += e_h.col(j) * (e_h.col(j).dot(x) - y(j));
            if (resid.norm() > 1e-8 * (1.0 + x.norm())) return false;
        }
        return true;
    });

    check("precision-mixture mean matches Monte Carlo sampling", [] {
        const double nu = 5.0, c = 3.0;
        const int k = 4;
        const double closed = (nu + 2.0 * k) / (nu + c);
        Rng rng(29);
        double acc = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) acc += rng.gamma((nu + 2.0 * k) / 2.0, (nu + c) / 2.0);
        return std::abs(acc / n - closed) < 0.01 * closed;
    });

    check("alternation keeps the echo objective non-decreasing", [] {
        const ScenarioConfig cfg = verify_detail::tiny_config();
        for (int rep = 0; rep < 5; ++rep) {
            const Scenario scn = generate_scenario(cfg, 100 + rep);
            const SymbolFrame frame = generate_frame(cfg.n_ue, cfg.n_samples, cfg.mod_order, 200 + rep);
            const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {0});
            const CcpResult res = optimize_precoder(scn, ap, frame, cfg, 300 + rep);
            if (res.state.status == CcpStatus::infeasible) continue;
            if (res.state.max_kkt_stationarity > 1e-6 || res.state.max_kkt_complementarity > 1e-6)
                return false;
            const auto& h = res.state.objective_history;
            for (size_t i = 1; i < h.size(); ++i)
                if (h[i] < h[i - 1] * (1.0 - 1e-6) - 1e-12) return false;
        }
        return true;
    });

    check("paired trial is reproducible", [] {
        const ScenarioConfig cfg = verify_detail::tiny_config();
        return run_trial(cfg, 424242) == run_trial(cfg, 424242);
    });

    std::fprintf(out, "%s (%d failure%s)\n", failures == 0 ? "verification passed" : "verification FAILED",
                 failures, failures == 1 ? "" : "s");
    return failures == 0;
}

}  // namespace cfisac
