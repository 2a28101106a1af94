// Acceptance suite: reproduces the headline behaviors end to end and checks
// the oracle equivalences at full tolerance. Prints one PASS/FAIL line per
// criterion; exits nonzero if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cfisac/harness.hpp"
#include "oracles.hpp"

using namespace cfisac;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", idx, name, detail.c_str());
    if (!pass) ++g_failures;
}

double ci_halfwidth(const SweepRow& r, bool baseline) {
    return baseline ? 0.5 * (r.pd_baseline_ci_high - r.pd_baseline_ci_low)
                    : 0.5 * (r.pd_framework_ci_high - r.pd_framework_ci_low);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioConfig desk() { return ScenarioConfig::desk_profile(); }

}  // namespace

int main(int argc, char** argv) {
    std::string cli_path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--cli") cli_path = argv[i + 1];
    const int threads = std::max(1u, std::thread::hardware_concurrency());
    const int trials_per_point = 200;

    // ---- power sweep (criterion 1) ----
    const auto t_power0 = std::chrono::steady_clock::now();
    SweepSpec power_spec;
    power_spec.variable = SweepSpec::Variable::p_max;
    power_spec.values = {29.0, 35.0, 41.0};
    power_spec.trials_per_point = trials_per_point;
    power_spec.base_config = desk();
    const SweepResult power = run_sweep(power_spec, desk().seed, threads);
    const double power_minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_power0).count() / 60.0;

    {
        bool monotone = true;
        for (size_t i = 1; i < power.rows.size(); ++i) {
            const SweepRow& a = power.rows[i - 1];
            const SweepRow& b = power.rows[i];
            if (b.pd_baseline < a.pd_baseline &&
                b.pd_baseline_ci_high < a.pd_baseline_ci_low)
                monotone = false;
        }
        bool dominated = true;
        int significant = 0;
        std::string gaps;
        for (size_t pt = 0; pt < power.rows.size(); ++pt) {
            const SweepRow& r = power.rows[pt];
            if (r.pd_framework > r.pd_baseline + 1e-12) dominated = false;
            int k_bl = 0, k_fw = 0, nf = 0;
            for (const TrialResult& t : power.trials[pt])
                if (t.feasible) {
                    ++nf;
                    k_bl += t.detected_baseline ? 1 : 0;
                    k_fw += t.detected_framework ? 1 : 0;
                }
            const double p = two_proportion_p_value(k_bl, nf, k_fw, nf);
            if (p < 0.05) ++significant;
            char buf[96];
            std::snprintf(buf, sizeof(buf), " %gdBm: bl=%.3f fw=%.3f p=%.3g;", r.sweep_value,
                          r.pd_baseline, r.pd_framework, p);
            gaps += buf;
        }
        const bool in_budget = power_minutes < 30.0;
        char buf[64];
        std::snprintf(buf, sizeof(buf), " runtime=%.1f min", power_minutes);
        report(1, "detection trend over the power sweep",
               monotone && dominated && significant >= 2 && in_budget, gaps + buf);
    }

    // ---- receiver-count sweep (criteria 2 and 3) ----
    SweepSpec rx_spec;
    rx_spec.variable = SweepSpec::Variable::n_rx;
    rx_spec.values = {1.0, 2.0, 3.0};
    rx_spec.trials_per_point = trials_per_point;
    rx_spec.base_config = desk();
    const SweepResult rx = run_sweep(rx_spec, desk().seed, threads);

    {
        bool both_nonincreasing = true;
        bool gap_nondecreasing = true;
        std::string detail;
        for (size_t i = 1; i < rx.rows.size(); ++i) {
            const SweepRow& a = rx.rows[i - 1];
            const SweepRow& b = rx.rows[i];
            if (b.pd_baseline > a.pd_baseline && b.pd_baseline_ci_low > a.pd_baseline_ci_high)
                both_nonincreasing = false;
            if (b.pd_framework > a.pd_framework && b.pd_framework_ci_low > a.pd_framework_ci_high)
                both_nonincreasing = false;
            const double gap_a = a.pd_baseline - a.pd_framework;
            const double gap_b = b.pd_baseline - b.pd_framework;
            const double slack = std::max(ci_halfwidth(a, true) + ci_halfwidth(a, false),
                                          ci_halfwidth(b, true) + ci_halfwidth(b, false));
            if (gap_b < gap_a - slack) gap_nondecreasing = false;
        }
        for (const SweepRow& r : rx.rows) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), " n_rx=%g: bl=%.3f fw=%.3f;", r.sweep_value,
                          r.pd_baseline, r.pd_framework);
            detail += buf;
        }
        report(2, "detection trend over the receiver-count sweep",
               both_nonincreasing && gap_nondecreasing, detail);
    }

    {
        std::vector<double> g_fw, g_bl;
        for (const auto& point : rx.trials)
            for (const TrialResult& t : point)
                if (t.feasible) {
                    g_fw.push_back(t.gamma_s_framework_db);
                    g_bl.push_back(t.gamma_s_baseline_db);
                }
        auto median = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            const size_t n = v.size();
            return n == 0 ? 0.0 : (n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]));
        };
        const double med_fw = median(g_fw);
        const double med_bl = median(g_bl);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "median fw=%.2f dB, baseline=%.2f dB", med_fw, med_bl);
        report(3, "sensing SINR preserved within 1 dB", med_fw >= med_bl - 1.0, buf);
    }

    {
        // constraint satisfaction across every feasible trial at the nominal power
        int checked = 0, ok = 0;
        auto scan = [&](const std::vector<std::vector<TrialResult>>& points) {
            for (const auto& point : points)
                for (const TrialResult& t : point) {
                    if (!t.feasible) continue;
                    ++checked;
                    if (t.min_user_sinr_db >= 3.0 - 0.01 && t.max_row_power_dbm <= 35.0 + 0.01) ++ok;
                }
        };
        scan(rx.trials);
        scan({power.trials[1]});  // the 35 dBm point
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d/%d trials", ok, checked);
        report(4, "user SINR and power constraints met on all feasible trials",
               checked > 0 && ok == checked, buf);
    }

    {
        // ascent and subproblem quality on random instances
        ScenarioConfig cfg;
        cfg.n_ap = 4;
        cfg.n_rx = 1;
        cfg.n_ue = 2;
        cfg.m_antennas = 3;
        cfg.k_antennas = 2;
        cfg.n_samples = 8;
        int solved = 0;
        bool ascent = true;
        double worst_stat = 0.0, worst_comp = 0.0;
        for (std::uint64_t seed = 0; solved < 100 && seed < 160; ++seed) {
            const Scenario scn = generate_scenario(cfg, derive_seed(9000, seed));
            const SymbolFrame frame =
                generate_frame(cfg.n_ue, cfg.n_samples, cfg.mod_order, derive_seed(9100, seed));
            const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {0});
            const CcpResult res = optimize_precoder(scn, ap, frame, cfg, derive_seed(9200, seed));
            if (res.state.status == CcpStatus::infeasible) continue;
            ++solved;
            const auto& h = res.state.objective_history;
            for (size_t i = 1; i < h.size(); ++i)
                if (h[i] < h[i - 1] * (1.0 - 1e-6) - 1e-12) ascent = false;
            worst_stat = std::max(worst_stat, res.state.max_kkt_stationarity);
            worst_comp = std::max(worst_comp, res.state.max_kkt_complementarity);
        }
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d instances, worst kkt %.2e/%.2e", solved, worst_stat,
                      worst_comp);
        report(5, "objective ascent with tight subproblem optimality",
               solved >= 100 && ascent && worst_stat < 1e-6 && worst_comp < 1e-6, buf);
    }

    {
        bool ok_a = true, ok_b = true, ok_c = true, ok_d = true, ok_e = true;
        std::string detail;

        {  // (a) closed-form maximization step vs numerical minimizer
            Rng rng(11001);
            double worst = 0.0;
            for (int rep = 0; rep < 25; ++rep) {
                const int m = 3 + rng.uniform_int(4);
                const int k = 1 + rng.uniform_int(3);
                const CMat e_h = rng.cgaussian_matrix(m, k);
                CMat omega = rng.cgaussian_matrix(m, m);
                omega = (omega * omega.adjoint() + 0.5 * CMat::Identity(m, m)).eval();
                const CVec y = rng.cgaussian_vector(k);
                const CVec x_closed = em_m_step(y, e_h, omega, m);
                const CVec x_gd = oracles::m_step_gradient_descent(y, e_h, omega, m);
                const double gap = oracles::m_step_objective(y, e_h, omega, m, x_gd) -
                                   oracles::m_step_objective(y, e_h, omega, m, x_closed);
                worst = std::max(worst, std::abs(gap));
                if (std::abs(gap) >= 1e-8) ok_a = false;
            }
            char buf[48];
            std::snprintf(buf, sizeof(buf), "a:%.1e", worst);
            detail += buf;
        }
        {  // (b) selection vs exhaustive subsets
            Rng rng(11002);
            for (int rep = 0; rep < 200 && ok_b; ++rep) {
                const int n_ap = 2 + rng.uniform_int(7);  // up to 8
                const int n_ue = 1 + rng.uniform_int(3);
                const int n_rx = 1 + rng.uniform_int(n_ap - 1);
                RMat mi(n_ue, n_ap);
                for (int i = 0; i < n_ue; ++i)
                    for (int l = 0; l < n_ap; ++l) mi(i, l) = std::abs(rng.gaussian());
                if (rep % 3 == 0 && n_ap >= 2) mi.col(n_ap - 1) = mi.col(0);
                if (select_receivers(mi, n_rx) != oracles::exhaustive_selection(mi, n_rx)) ok_b = false;
            }
            detail += ok_b ? " b:exact" : " b:mismatch";
        }
        {  // (c) descent triangulation vs normal equations
            Rng rng(11003);
            double worst = 0.0;
            for (int rep = 0; rep < 50; ++rep) {
                std::vector<Line2> lines;
                for (int l = 0; l < 3 + rng.uniform_int(4); ++l) {
                    const double th = rng.uniform(-kPi, kPi);
                    lines.push_back({{rng.uniform(0, 1000), rng.uniform(0, 1000)},
                                     {std::cos(th), std::sin(th)}});
                }
                const TriangulationResult tri = triangulate(lines, 1.0, 200000, 1e-11);
                const Point2 want = oracles::least_squares_intersection(lines);
                worst = std::max(worst, distance(tri.q, want));
            }
            ok_c = worst < 1e-4;
            char buf[48];
            std::snprintf(buf, sizeof(buf), " c:%.1em", worst);
            detail += buf;
        }
        {  // (d) subproblem vs dense grid search
            double worst = 0.0;
            for (std::uint64_t seed : {21, 22, 23, 24}) {
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
                anchor.col(0) = (0.6 / tiny.h.norm()) * tiny.h.cast<cdouble>();
                const ipm::Result r = ipm::solve_subproblem(p, anchor);
                if (r.status != SolveStatus::ok) {
                    ok_d = false;
                    continue;
                }
                const double solver_obj = p.g_obj.cwiseProduct(r.w.conjugate()).sum().real();
                worst = std::max(worst, std::abs(solver_obj - oracles::grid_search_tiny(tiny)));
            }
            ok_d = ok_d && worst < 1e-2;
            char buf[48];
            std::snprintf(buf, sizeof(buf), " d:%.1e", worst);
            detail += buf;
        }
        {  // (e) quadratic-form sensing SINR vs Monte Carlo echo power
            ScenarioConfig cfg;
            cfg.n_ap = 4;
            cfg.n_rx = 1;
            cfg.n_ue = 2;
            cfg.m_antennas = 3;
            cfg.k_antennas = 2;
            cfg.n_samples = 6;
            const Scenario scn = generate_scenario(cfg, 11005);
            const SymbolFrame frame = generate_frame(cfg.n_ue, cfg.n_samples, cfg.mod_order, 11006);
            const ApConfiguration ap = ApConfiguration::from_receivers(cfg.n_ap, {1});
            const SensingQuadratic quad = build_sensing_quadratic(scn, ap, cfg.path_loss_exp);
            Rng rng(11007);
            PrecoderMatrix w;
            w.m_antennas = cfg.m_antennas;
            w.tx_index_map = ap.transmitters;
            w.w = rng.cgaussian_matrix(quad.t_rows(), cfg.n_ue + 1);
            const std::vector<CMat> x = transmit_frame(w, frame);
            const double echo2 =
                received_sensing_signal(scn, ap, 0, x, cfg.path_loss_exp, 0.0, 0.0, 1).squaredNorm();
            const double denom_scale = ap.n_rx() * cfg.n_samples * cfg.m_antennas;
            const double sigma2 = echo2 / (denom_scale * 5.0);  // target ratio ~5
            const double gamma = sensing_sinr(w.w, quad, frame, sigma2);
            double acc = 0.0;
            const int draws = 10000;
            for (int d = 0; d < draws; ++d)
                acc += received_sensing_signal(scn, ap, 0, x, cfg.path_loss_exp, sigma2, 0.0,
                                               derive_seed(11008, d))
                           .squaredNorm();
            const double gamma_mc = (acc / draws - denom_scale * sigma2) / (denom_scale * sigma2);
            const double rel = std::abs(gamma_mc - gamma) / gamma;
            ok_e = rel < 0.02;
            char buf[48];
            std::snprintf(buf, sizeof(buf), " e:%.2f%%", rel * 100.0);
            detail += buf;
        }
        report(6, "oracle equivalences", ok_a && ok_b && ok_c && ok_d && ok_e, detail);
    }

    {
        bool norm_ok = true;
        Rng rng(12001);
        for (int rep = 0; rep < 500; ++rep) {
            const int m = 1 + rng.uniform_int(128);
            const double theta = rng.uniform(-kPi, kPi);
            if (std::abs(array_response(theta, m).squaredNorm() - m) > 1e-9 * m) norm_ok = false;
        }
        const double nu = 5.0, c = 3.0;
        const int k = 4;
        const double closed = (nu + 2.0 * k) / (nu + c);
        double acc = 0.0;
        const int draws = 1000000;
        Rng grng(12002);
        for (int i = 0; i < draws; ++i) acc += grng.gamma((nu + 2.0 * k) / 2.0, (nu + c) / 2.0);
        const double gamma_rel = std::abs(acc / draws - closed) / closed;

        bool gd_ok = true;
        long attacks = 0;
        for (const auto& sweep : {&power, &rx})
            for (const auto& point : sweep->trials)
                for (const TrialResult& t : point)
                    if (t.feasible) {
                        ++attacks;
                        if (!t.gd_mse_monotone) gd_ok = false;
                    }
        char buf[96];
        std::snprintf(buf, sizeof(buf), "gamma mean err %.3f%%, %ld attack pairs monotone",
                      gamma_rel * 100.0, attacks);
        report(7, "estimator identities", norm_ok && gamma_rel < 0.01 && gd_ok && attacks > 0, buf);
    }

    {
        bool ok = !cli_path.empty();
        std::string detail = cli_path.empty() ? "no --cli path given" : "";
        if (ok) {
            const std::string cfg_path = "acceptance_cli_cfg.json";
            std::ofstream cfg(cfg_path);
            cfg << R"({"n_ap":3,"n_rx":1,"n_ue":1,"k_antennas":2,"m_antennas":3,)"
                << R"("n_samples":6,"em_max_iter":20,"framework_max_iter":8})";
            cfg.close();
            auto run = [&](const std::string& args, const std::string& out) {
                const std::string cmd =
                    "\"" + cli_path + "\" " + args + " --out " + out + " > /dev/null 2>&1";
                return std::system(cmd.c_str()) == 0;
            };
            const std::string sim_args =
                "simulate --profile desk --config " + cfg_path + " --trials 4 --seed 31 --threads 2";
            const std::string sweep_args = "sweep --profile desk --config " + cfg_path +
                                           " --variable n_rx --values 1,2 --trials 2 --seed 31";
            ok = run(sim_args, "acc_sim_a.csv") && run(sim_args, "acc_sim_b.csv") &&
                 run(sweep_args, "acc_swp_a.csv") && run(sweep_args, "acc_swp_b.csv");
            if (ok) {
                const std::string sa = read_file("acc_sim_a.csv");
                ok = !sa.empty() && sa == read_file("acc_sim_b.csv") &&
                     read_file("acc_swp_a.csv") == read_file("acc_swp_b.csv") &&
                     !read_file("acc_swp_a.csv").empty();
                detail = ok ? "simulate and sweep outputs byte-identical" : "outputs differ";
            } else {
                detail = "CLI invocation failed";
            }
        }
        report(8, "repeated CLI runs are byte-identical", ok, detail);
    }

    std::printf("%d criterion failure%s\n", g_failures, g_failures == 1 ? "" : "s");
    return g_failures == 0 ? 0 : 1;
}
