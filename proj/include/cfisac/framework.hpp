#pragma once

#include <numeric>
#include <vector>

#include "cfisac/precoder.hpp"
#include "cfisac/selection.hpp"

namespace cfisac {

struct FrameworkHistoryEntry {
    std::vector<int> receivers;  // receiver set the precoder was solved against
    double gamma_s = 0.0;
};

struct FrameworkResult {
    PrecoderMatrix w_final;
    ApConfiguration r_final;
    int iterations = 0;
    bool converged = false;
    std::vector<FrameworkHistoryEntry> history;
    CcpStatus status = CcpStatus::converged;
    double max_kkt_stationarity = 0.0;
    double max_kkt_complementarity = 0.0;
    bool ascent_ok = true;  // every run's objective history non-decreasing
    int scoring_disagreements = 0;  // rounds where the two column scorings differ

    double final_sensing_sinr() const { return history.empty() ? 0.0 : history.back().gamma_s; }
};

namespace detail {

inline void record_ccp(FrameworkResult& res, const CcpState& state) {
    res.max_kkt_stationarity = std::max(res.max_kkt_stationarity, state.max_kkt_stationarity);
    res.max_kkt_complementarity = std::max(res.max_kkt_complementarity, state.max_kkt_complementarity);
    for (size_t i = 1; i < state.objective_history.size(); ++i)
        if (state.objective_history[i] < state.objective_history[i - 1] * (1.0 - 1e-6) - 1e-12)
            res.ascent_ok = false;
}

inline std::vector<int> nearest_aps_to_target(const Scenario& scn, int count) {
    std::vector<int> order(scn.n_ap());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = distance(scn.ap_positions[a], scn.target_position);
        const double db = distance(scn.ap_positions[b], scn.target_position);
        if (da != db) return da < db;
        return a < b;
    });
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace detail

/// Alternating precoder design and receiver selection until the receiver
/// set repeats. The first round has every AP transmitting, with the
/// receivers of the echo objective provisionally set to the APs nearest the
/// target; selection then installs a proper split. Each AP's most recent
/// sensing precoder is kept so that current receivers stay scoreable.
inline FrameworkResult run_framework(const Scenario& scn, const SymbolFrame& frame,
                                     const ScenarioConfig& cfg, std::uint64_t seed) {
    FrameworkResult res;
    const int n_ap = scn.n_ap();
    std::vector<CVec> last_sensing(n_ap, CVec::Zero(cfg.m_antennas));

    std::vector<int> all_aps(n_ap);
    std::iota(all_aps.begin(), all_aps.end(), 0);

    std::vector<int> rx_prev;  // empty on round one
    PrecoderMatrix w_cur;

    for (int p = 1; p <= cfg.framework_max_iter; ++p) {
        std::vector<int> tx_list;
        std::vector<int> rx_for_objective;
        if (rx_prev.empty()) {
            tx_list = all_aps;
            rx_for_objective = detail::nearest_aps_to_target(scn, cfg.n_rx);
        } else {
            rx_for_objective = rx_prev;
            for (int j = 0; j < n_ap; ++j)
                if (!std::binary_search(rx_prev.begin(), rx_prev.end(), j)) tx_list.push_back(j);
        }

        CcpResult ccp = optimize_precoder_roles(scn, tx_list, rx_for_objective, frame, cfg,
                                                derive_seed(seed, 0x667770ULL, p));
        if (ccp.state.status == CcpStatus::infeasible) {
            res.status = CcpStatus::infeasible;
            res.iterations = p;
            return res;
        }
        detail::record_ccp(res, ccp.state);
        w_cur = std::move(ccp.w);
        for (int b = 0; b < w_cur.n_tx(); ++b) last_sensing[w_cur.tx_index_map[b]] = w_cur.sensing_block(b);

        res.iterations = p;
        res.history.push_back({rx_for_objective,
                               sensing_sinr(w_cur.w,
                                            build_sensing_quadratic(scn, tx_list, rx_for_objective,
                                                                    cfg.path_loss_exp),
                                            frame, cfg.sigma_n)});

        const RMat mi = build_mi_matrix(last_sensing, scn.channels, frame.sensing_symbols);
        std::vector<int> rx_next = select_receivers(mi, cfg.n_rx);
        if (rx_next != select_receivers(mi, cfg.n_rx, MiScoring::entry_sum))
            ++res.scoring_disagreements;
        if (!rx_prev.empty() && rx_next == rx_prev) {
            res.converged = true;
            res.r_final = ApConfiguration::from_receivers(n_ap, rx_prev);
            res.w_final = std::move(w_cur);
            res.status = CcpStatus::converged;
            return res;
        }
        rx_prev = std::move(rx_next);
    }

    // iteration cap: fall back to the best proper configuration seen
    res.converged = false;
    res.status = CcpStatus::iter_cap;
    int best = -1;
    for (size_t i = 1; i < res.history.size(); ++i)
        if (best < 0 || res.history[i].gamma_s > res.history[best].gamma_s) best = static_cast<int>(i);
    if (best < 0) {
        // cap hit before any proper split existed; align a precoder with the
        // last selection
        CcpResult ccp = optimize_precoder_roles(
            scn, [&] {
                std::vector<int> tx;
                for (int j = 0; j < n_ap; ++j)
                    if (!std::binary_search(rx_prev.begin(), rx_prev.end(), j)) tx.push_back(j);
                return tx;
            }(),
            rx_prev, frame, cfg, derive_seed(seed, 0x667770ULL, cfg.framework_max_iter + 1));
        if (ccp.state.status == CcpStatus::infeasible) {
            res.status = CcpStatus::infeasible;
            return res;
        }
        detail::record_ccp(res, ccp.state);
        res.r_final = ApConfiguration::from_receivers(n_ap, rx_prev);
        res.w_final = std::move(ccp.w);
        std::vector<int> tx_list = res.r_final.transmitters;
        res.history.push_back({rx_prev, sensing_sinr(res.w_final.w,
                                                     build_sensing_quadratic(scn, tx_list, rx_prev,
                                                                             cfg.path_loss_exp),
                                                     frame, cfg.sigma_n)});
        return res;
    }
    // re-run the best round's precoder deterministically
    const std::vector<int>& rx_best = res.history[best].receivers;
    std::vector<int> tx_best;
    for (int j = 0; j < n_ap; ++j)
        if (!std::binary_search(rx_best.begin(), rx_best.end(), j)) tx_best.push_back(j);
    CcpResult ccp = optimize_precoder_roles(scn, tx_best, rx_best, frame, cfg,
                                            derive_seed(seed, 0x667770ULL, best + 1));
    if (ccp.state.status == CcpStatus::infeasible) {
        res.status = CcpStatus::infeasible;
        return res;
    }
    detail::record_ccp(res, ccp.state);
    res.r_final = ApConfiguration::from_receivers(n_ap, rx_best);
    res.w_final = std::move(ccp.w);
    return res;
}

/// Reference scheme without leakage-aware selection: receivers drawn
/// uniformly at random, one precoder solve, no alternation.
inline FrameworkResult run_baseline(const Scenario& scn, const SymbolFrame& frame,
                                    const ScenarioConfig& cfg, std::uint64_t seed) {
    FrameworkResult res;
    const int n_ap = scn.n_ap();
    Rng rng(derive_seed(seed, 0x626c72ULL));
    std::vector<int> pool(n_ap);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < cfg.n_rx; ++i) {
        const int j = i + rng.uniform_int(n_ap - i);
        std::swap(pool[i], pool[j]);
    }
    std::vector<int> rx(pool.begin(), pool.begin() + cfg.n_rx);
    std::sort(rx.begin(), rx.end());

    res.r_final = ApConfiguration::from_receivers(n_ap, rx);
    CcpResult ccp = optimize_precoder_roles(scn, res.r_final.transmitters, rx, frame, cfg,
                                            derive_seed(seed, 0x626c70ULL));
    res.iterations = 1;
    res.converged = true;
    if (ccp.state.status == CcpStatus::infeasible) {
        res.status = CcpStatus::infeasible;
        return res;
    }
    detail::record_ccp(res, ccp.state);
    res.w_final = std::move(ccp.w);
    res.history.push_back({rx, sensing_sinr(res.w_final.w,
                                            build_sensing_quadratic(scn, res.r_final.transmitters, rx,
                                                                    cfg.path_loss_exp),
                                            frame, cfg.sigma_n)});
    res.status = CcpStatus::converged;
    return res;
}

}  // namespace cfisac
