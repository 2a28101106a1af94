#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cfisac/types.hpp"

namespace cfisac {

/// Full system configuration. Power/gain quantities are stored in linear
/// scale (mW for powers, plain ratios otherwise); the JSON form carries the
/// usual dB/dBm values with a `_db`/`_dbm` key suffix and conversion happens
/// once at parse time.
struct ScenarioConfig {
    double grid_side = 1000.0;  // m, square deployment area
    int n_ap = 6;
    int n_rx = 1;
    int n_ue = 3;
    int k_antennas = 4;   // antennas per user
    int m_antennas = 64;  // antennas per AP
    int n_samples = 16;   // symbols per frame
    int mod_order = 16;   // square QAM
    double path_loss_exp = 3.0;
    double p_max = 3162.2776601683795;  // mW, per antenna (35 dBm)
    double gamma_min = 1.9952623149688795;  // linear (3 dB)
    double sigma_n = 3.9810717055349695e-10;  // mW, noise power (-94 dBm)
    double sigma_h = 1e-4;    // channel-estimation error variance, relative to link gain (-40 dB)
    double alpha_var = 10.0;  // mean-square radar cross section (10 dB)
    double eta = 1.0;         // gradient-descent step size
    double r_gd = 10.0;       // m, detection radius
    double nu = 5.0;          // Student's-t degrees of freedom
    int em_max_iter = 100;
    double em_tol = 1e-10;
    int ccp_max_iter = 100;
    double ccp_tol = 0.1;  // dB change in sensing SINR between iterations
    int gd_max_iter = 10000;
    double gd_tol = 1e-6;
    int framework_max_iter = 50;
    double clutter_var = 0.0;  // per-entry NLoS clutter variance, 0 disables
    std::uint64_t seed = 1;

    int n_streams() const { return n_ue + 1; }

    double p_max_dbm() const { return linear_to_db(p_max); }
    double gamma_min_db() const { return linear_to_db(gamma_min); }
    double sigma_n_dbm() const { return linear_to_db(sigma_n); }

    void validate() const {
        auto fail = [](const std::string& msg) { throw std::invalid_argument("ScenarioConfig: " + msg); };
        if (grid_side <= 0.0) fail("grid_side must be positive");
        if (n_ap <= 0 || n_rx <= 0 || n_ue < 1 || k_antennas <= 0 || m_antennas < 1 || n_samples < 1)
            fail("counts must be positive (n_ue >= 1, m_antennas >= 1, n_samples >= 1)");
        if (n_rx >= n_ap) fail("n_rx must be < n_ap");
        const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(mod_order))));
        if (mod_order < 4 || root * root != mod_order) fail("mod_order must be a perfect square >= 4");
        if (p_max <= 0.0 || gamma_min <= 0.0 || sigma_n <= 0.0 || alpha_var <= 0.0) fail("powers must be positive");
        if (sigma_h < 0.0 || clutter_var < 0.0) fail("variances must be non-negative");
        if (path_loss_exp <= 0.0 || eta <= 0.0 || r_gd <= 0.0 || nu <= 0.0) fail("parameters must be positive");
        if (em_tol <= 0.0 || ccp_tol <= 0.0 || gd_tol <= 0.0) fail("tolerances must be strictly positive");
        if (em_max_iter <= 0 || ccp_max_iter <= 0 || gd_max_iter <= 0 || framework_max_iter <= 0)
            fail("iteration caps must be positive");
    }

    /// Reduced size for desktop-scale experiments.
    static ScenarioConfig desk_profile() {
        ScenarioConfig c;
        c.m_antennas = 16;
        return c;
    }

    /// Full-scale parameter set.
    static ScenarioConfig paper_profile() { return ScenarioConfig{}; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["grid_side"] = grid_side;
        j["n_ap"] = n_ap;
        j["n_rx"] = n_rx;
        j["n_ue"] = n_ue;
        j["k_antennas"] = k_antennas;
        j["m_antennas"] = m_antennas;
        j["n_samples"] = n_samples;
        j["mod_order"] = mod_order;
        j["path_loss_exp"] = path_loss_exp;
        j["p_max_dbm"] = linear_to_db(p_max);
        j["gamma_min_db"] = linear_to_db(gamma_min);
        j["sigma_n_dbm"] = linear_to_db(sigma_n);
        j["sigma_h_db"] = linear_to_db(sigma_h);
        j["alpha_var_db"] = linear_to_db(alpha_var);
        j["eta"] = eta;
        j["r_gd"] = r_gd;
        j["nu"] = nu;
        j["em_max_iter"] = em_max_iter;
        j["em_tol"] = em_tol;
        j["ccp_max_iter"] = ccp_max_iter;
        j["ccp_tol"] = ccp_tol;
        j["gd_max_iter"] = gd_max_iter;
        j["gd_tol"] = gd_tol;
        j["framework_max_iter"] = framework_max_iter;
        j["clutter_var"] = clutter_var;
        j["seed"] = seed;
        return j;
    }

    /// Applies the keys present in `j` on top of the current values, so a
    /// partial document can override a profile.
    void apply_json(const nlohmann::json& j) {
        auto get = [&j](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
        };
        auto get_db = [&j](const char* key, double& field) {
            if (j.contains(key)) field = db_to_linear(j.at(key).template get<double>());
        };
        get("grid_side", grid_side);
        get("n_ap", n_ap);
        get("n_rx", n_rx);
        get("n_ue", n_ue);
        get("k_antennas", k_antennas);
        get("m_antennas", m_antennas);
        get("n_samples", n_samples);
        get("mod_order", mod_order);
        get("path_loss_exp", path_loss_exp);
        get_db("p_max_dbm", p_max);
        get_db("gamma_min_db", gamma_min);
        get_db("sigma_n_dbm", sigma_n);
        get_db("sigma_h_db", sigma_h);
        get_db("alpha_var_db", alpha_var);
        get("eta", eta);
        get("r_gd", r_gd);
        get("nu", nu);
        get("em_max_iter", em_max_iter);
        get("em_tol", em_tol);
        get("ccp_max_iter", ccp_max_iter);
        get("ccp_tol", ccp_tol);
        get("gd_max_iter", gd_max_iter);
        get("gd_tol", gd_tol);
        get("framework_max_iter", framework_max_iter);
        get("clutter_var", clutter_var);
        get("seed", seed);
    }

    static ScenarioConfig from_json(const nlohmann::json& j) {
        ScenarioConfig c;
        c.apply_json(j);
        c.validate();
        return c;
    }

    static ScenarioConfig load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        nlohmann::json j;
        in >> j;
        ScenarioConfig c;
        c.apply_json(j);
        c.validate();
        return c;
    }

    /// FNV-1a over the canonical JSON dump; changes whenever any field changes.
    std::uint64_t hash() const {
        const std::string dump = to_json().dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : dump) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

}  // namespace cfisac
