// Command-line front end: Monte Carlo trial runs, parameter sweeps, and a
// quick self-check suite.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfisac/harness.hpp"
#include "cfisac/verify.hpp"

namespace {

cfisac::ScenarioConfig make_config(const std::string& profile, const std::string& config_path) {
    cfisac::ScenarioConfig cfg = profile == "paper" ? cfisac::ScenarioConfig::paper_profile()
                                                    : cfisac::ScenarioConfig::desk_profile();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config file: " + config_path);
        nlohmann::json j;
        in >> j;
        cfg.apply_json(j);
    }
    cfg.validate();
    return cfg;
}

void emit(const std::vector<cfisac::SweepRow>& rows, const cfisac::ScenarioConfig& cfg,
          std::uint64_t seed, const std::string& variable, const std::string& out_path,
          const std::string& format) {
    if (format == "json")
        cfisac::write_text_file(out_path, cfisac::results_to_json(rows, cfg, seed, variable));
    else
        cfisac::write_text_file(out_path, cfisac::results_to_csv(rows));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cell-free MIMO ISAC privacy simulator"};
    app.require_subcommand(1);

    std::string profile = "desk";
    std::string config_path;
    std::string out_path = "results.csv";
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 200;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--profile", profile, "Parameter profile: desk or paper")
            ->check(CLI::IsMember({"desk", "paper"}));
        cmd->add_option("--config", config_path, "JSON config file (overrides the profile)");
        cmd->add_option("--seed", seed, "Base seed (default: config seed)")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "Worker threads (default: hardware)");
    };

    CLI::App* sim = app.add_subcommand("simulate", "Run paired trials at one configuration");
    add_common(sim);
    sim->add_option("--trials", trials, "Number of paired trials");
    sim->add_option("--out", out_path, "Output file");
    sim->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    CLI::App* sweep = app.add_subcommand("sweep", "Sweep p_max or n_rx");
    add_common(sweep);
    std::string variable = "p_max";
    std::vector<double> values;
    sweep->add_option("--variable", variable, "Sweep variable")
        ->check(CLI::IsMember({"p_max", "n_rx"}));
    sweep->add_option("--values", values, "Sweep values (dBm for p_max, counts for n_rx)")
        ->required()
        ->delimiter(',');
    sweep->add_option("--trials", trials, "Trials per sweep point");
    sweep->add_option("--out", out_path, "Output file");
    sweep->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    CLI::App* verify = app.add_subcommand("verify", "Run the oracle/property self-checks");
    add_common(verify);

    CLI11_PARSE(app, argc, argv);

    try {
        const cfisac::ScenarioConfig cfg = make_config(profile, config_path);
        const std::uint64_t base_seed = seed_set ? seed : cfg.seed;

        if (sim->parsed()) {
            std::vector<cfisac::TrialResult> res = cfisac::run_trials(cfg, trials, base_seed, threads);
            const cfisac::SweepRow row = cfisac::summarize_trials(res, cfg.p_max_dbm());
            emit({row}, cfg, base_seed, "p_max", out_path, format);
            std::printf("%d trials (%d feasible): P_D baseline %.4f, framework %.4f -> %s\n",
                        row.n_trials, row.n_feasible, row.pd_baseline, row.pd_framework,
                        out_path.c_str());
        } else if (sweep->parsed()) {
            cfisac::SweepSpec spec;
            spec.variable = variable == "n_rx" ? cfisac::SweepSpec::Variable::n_rx
                                               : cfisac::SweepSpec::Variable::p_max;
            spec.values = values;
            spec.trials_per_point = trials;
            spec.base_config = cfg;
            const cfisac::SweepResult res = cfisac::run_sweep(spec, base_seed, threads);
            emit(res.rows, cfg, base_seed, variable, out_path, format);
            for (const auto& row : res.rows)
                std::printf("%s=%g: P_D baseline %.4f, framework %.4f (%d feasible)\n",
                            variable.c_str(), row.sweep_value, row.pd_baseline, row.pd_framework,
                            row.n_feasible);
            std::printf("-> %s\n", out_path.c_str());
        } else if (verify->parsed()) {
            return cfisac::run_verification(stdout) ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
