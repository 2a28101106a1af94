#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cfisac/adversary.hpp"
#include "cfisac/framework.hpp"

namespace cfisac {

/// Outcome of one paired trial: the selection framework and the random-
/// receiver baseline run on the identical scenario, symbol frame, and
/// adversary noise.
struct TrialResult {
    bool detected_framework = false;
    bool detected_baseline = false;
    double gamma_s_framework_db = 0.0;
    double gamma_s_baseline_db = 0.0;
    double min_user_sinr_db = 0.0;   // worst user over both arms
    double max_row_power_dbm = 0.0;  // worst antenna over both arms
    bool feasible = false;
    bool gd_mse_monotone = true;  // both arms' line-fit descent stayed monotone
    int framework_iters = 0;
    std::uint64_t seed = 0;

    bool operator==(const TrialResult&) const = default;
};

inline TrialResult run_trial(const ScenarioConfig& cfg, std::uint64_t trial_seed) {
    TrialResult out;
    out.seed = trial_seed;

    const Scenario scn = generate_scenario(cfg, derive_seed(trial_seed, 1));
    const SymbolFrame frame =
        generate_frame(cfg.n_ue, cfg.n_samples, cfg.mod_order, derive_seed(trial_seed, 2));

    FrameworkResult fw = run_framework(scn, frame, cfg, derive_seed(trial_seed, 3));
    FrameworkResult bl = run_baseline(scn, frame, cfg, derive_seed(trial_seed, 4));
    out.framework_iters = fw.iterations;
    out.feasible = fw.status != CcpStatus::infeasible && bl.status != CcpStatus::infeasible;
    if (!out.feasible) return out;

    const std::uint64_t attack_seed = derive_seed(trial_seed, 5);  // shared by both arms
    const AttackResult atk_fw = run_attack(scn, fw.w_final, frame, cfg, attack_seed);
    const AttackResult atk_bl = run_attack(scn, bl.w_final, frame, cfg, attack_seed);
    out.detected_framework = atk_fw.detected;
    out.detected_baseline = atk_bl.detected;
    out.gd_mse_monotone = atk_fw.gd_mse_monotone && atk_bl.gd_mse_monotone;

    out.gamma_s_framework_db = linear_to_db(std::max(fw.final_sensing_sinr(), 1e-300));
    out.gamma_s_baseline_db = linear_to_db(std::max(bl.final_sensing_sinr(), 1e-300));

    double min_sinr = std::numeric_limits<double>::infinity();
    double max_power = 0.0;
    for (const FrameworkResult* arm : {&fw, &bl}) {
        std::vector<CVec> h;
        for (int i = 0; i < cfg.n_ue; ++i) h.push_back(scn.concat_channel(arm->r_final, i));
        min_sinr = std::min(min_sinr, min_user_sinr(arm->w_final.w, h, cfg.sigma_n));
        max_power = std::max(max_power, arm->w_final.max_row_power());
    }
    out.min_user_sinr_db = linear_to_db(min_sinr);
    out.max_row_power_dbm = linear_to_db(max_power);
    return out;
}

/// Runs `n` paired trials with per-trial seeds derived from `base_seed`.
/// Trials are independent and distributed over a small thread pool; results
/// land in trial order regardless of scheduling.
inline std::vector<TrialResult> run_trials(const ScenarioConfig& cfg, int n, std::uint64_t base_seed,
                                           int n_threads = 0) {
    std::vector<TrialResult> results(n);
    if (n_threads <= 0)
        n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, n > 0 ? n : 1);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
            results[i] = run_trial(cfg, derive_seed(base_seed, 0x7472ULL, i));
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return results;
}

/// Wilson 95% score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(int successes, int n, double z = 1.959963984540054) {
    if (n <= 0) return {0.0, 1.0};
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// One-sided pooled two-proportion z-test p-value for H1: p1 > p2.
inline double two_proportion_p_value(int k1, int n1, int k2, int n2) {
    if (n1 == 0 || n2 == 0) return 1.0;
    const double p1 = static_cast<double>(k1) / n1;
    const double p2 = static_cast<double>(k2) / n2;
    const double pooled = static_cast<double>(k1 + k2) / (n1 + n2);
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
    if (se <= 0.0) return p1 > p2 ? 0.0 : 1.0;
    const double z = (p1 - p2) / se;
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

struct SweepRow {
    double sweep_value = 0.0;
    double pd_baseline = 0.0;
    double pd_framework = 0.0;
    double pd_baseline_ci_low = 0.0;
    double pd_baseline_ci_high = 0.0;
    double pd_framework_ci_low = 0.0;
    double pd_framework_ci_high = 0.0;
    double sinr_baseline_db = 0.0;
    double sinr_framework_db = 0.0;
    int n_feasible = 0;
    int n_trials = 0;

    bool operator==(const SweepRow&) const = default;
};

inline SweepRow summarize_trials(const std::vector<TrialResult>& trials, double sweep_value) {
    SweepRow row;
    row.sweep_value = sweep_value;
    row.n_trials = static_cast<int>(trials.size());
    int det_bl = 0, det_fw = 0;
    double sinr_bl = 0.0, sinr_fw = 0.0;
    for (const auto& t : trials) {
        if (!t.feasible) continue;
        ++row.n_feasible;
        det_bl += t.detected_baseline ? 1 : 0;
        det_fw += t.detected_framework ? 1 : 0;
        sinr_bl += t.gamma_s_baseline_db;
        sinr_fw += t.gamma_s_framework_db;
    }
    if (row.n_feasible > 0) {
        row.pd_baseline = static_cast<double>(det_bl) / row.n_feasible;
        row.pd_framework = static_cast<double>(det_fw) / row.n_feasible;
        row.sinr_baseline_db = sinr_bl / row.n_feasible;
        row.sinr_framework_db = sinr_fw / row.n_feasible;
    }
    std::tie(row.pd_baseline_ci_low, row.pd_baseline_ci_high) = wilson_interval(det_bl, row.n_feasible);
    std::tie(row.pd_framework_ci_low, row.pd_framework_ci_high) =
        wilson_interval(det_fw, row.n_feasible);
    return row;
}

struct SweepSpec {
    enum class Variable { p_max, n_rx };
    Variable variable = Variable::p_max;
    std::vector<double> values;  // dBm for p_max, counts for n_rx
    int trials_per_point = 200;
    ScenarioConfig base_config;
};

inline ScenarioConfig sweep_point_config(const SweepSpec& spec, double value) {
    ScenarioConfig cfg = spec.base_config;
    if (spec.variable == SweepSpec::Variable::p_max)
        cfg.p_max = db_to_linear(value);
    else
        cfg.n_rx = static_cast<int>(std::lround(value));
    cfg.validate();
    return cfg;
}

/// Per-point trial sets plus the summary table. Trial seeds are shared
/// across sweep points (common random numbers).
struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<std::vector<TrialResult>> trials;  // per point
};

inline SweepResult run_sweep(const SweepSpec& spec, std::uint64_t base_seed, int n_threads = 0) {
    SweepResult out;
    for (double v : spec.values) {
        const ScenarioConfig cfg = sweep_point_config(spec, v);
        std::vector<TrialResult> trials = run_trials(cfg, spec.trials_per_point, base_seed, n_threads);
        out.rows.push_back(summarize_trials(trials, v));
        out.trials.push_back(std::move(trials));
    }
    return out;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace detail

inline const char* kResultsCsvHeader =
    "sweep_value,pd_baseline,pd_framework,pd_baseline_ci_low,pd_baseline_ci_high,"
    "pd_framework_ci_low,pd_framework_ci_high,sinr_baseline_db,sinr_framework_db,"
    "n_feasible,n_trials";

inline std::string results_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = kResultsCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += detail::format_double(r.sweep_value) + ',' + detail::format_double(r.pd_baseline) +
               ',' + detail::format_double(r.pd_framework) + ',' +
               detail::format_double(r.pd_baseline_ci_low) + ',' +
               detail::format_double(r.pd_baseline_ci_high) + ',' +
               detail::format_double(r.pd_framework_ci_low) + ',' +
               detail::format_double(r.pd_framework_ci_high) + ',' +
               detail::format_double(r.sinr_baseline_db) + ',' +
               detail::format_double(r.sinr_framework_db) + ',' + std::to_string(r.n_feasible) +
               ',' + std::to_string(r.n_trials) + '\n';
    }
    return out;
}

inline nlohmann::json row_to_json(const SweepRow& r) {
    nlohmann::json j;
    j["sweep_value"] = r.sweep_value;
    j["pd_baseline"] = r.pd_baseline;
    j["pd_framework"] = r.pd_framework;
    j["pd_baseline_ci_low"] = r.pd_baseline_ci_low;
    j["pd_baseline_ci_high"] = r.pd_baseline_ci_high;
    j["pd_framework_ci_low"] = r.pd_framework_ci_low;
    j["pd_framework_ci_high"] = r.pd_framework_ci_high;
    j["sinr_baseline_db"] = r.sinr_baseline_db;
    j["sinr_framework_db"] = r.sinr_framework_db;
    j["n_feasible"] = r.n_feasible;
    j["n_trials"] = r.n_trials;
    return j;
}

inline SweepRow row_from_json(const nlohmann::json& j) {
    SweepRow r;
    r.sweep_value = j.at("sweep_value").get<double>();
    r.pd_baseline = j.at("pd_baseline").get<double>();
    r.pd_framework = j.at("pd_framework").get<double>();
    r.pd_baseline_ci_low = j.at("pd_baseline_ci_low").get<double>();
    r.pd_baseline_ci_high = j.at("pd_baseline_ci_high").get<double>();
    r.pd_framework_ci_low = j.at("pd_framework_ci_low").get<double>();
    r.pd_framework_ci_high = j.at("pd_framework_ci_high").get<double>();
    r.sinr_baseline_db = j.at("sinr_baseline_db").get<double>();
    r.sinr_framework_db = j.at("sinr_framework_db").get<double>();
    r.n_feasible = j.at("n_feasible").get<int>();
    r.n_trials = j.at("n_trials").get<int>();
    return r;
}

inline std::string results_to_json(const std::vector<SweepRow>& rows, const ScenarioConfig& cfg,
                                   std::uint64_t seed, const std::string& variable) {
    nlohmann::json j;
    char hash_buf[24];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    j["metadata"] = {{"config_hash", hash_buf},
                     {"seed", seed},
                     {"version", "0.1.0"},
                     {"variable", variable}};
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) j["rows"].push_back(row_to_json(r));
    return j.dump(2) + "\n";
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cfisac
