#pragma once

#include <vector>

#include "cfisac/ipm.hpp"
#include "cfisac/rng.hpp"
#include "cfisac/scenario.hpp"
#include "cfisac/signals.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Echo quadratic for each sensing receiver. The receiver-r matrix is the
/// rank-1 Hermitian PSD form
///     A_r = M * u_r u_r^H,
/// where block j of u_r is sqrt(beta_tr(j,r)) * conj(alpha(j,r)) *
/// conj(a(theta_j)); only the factors are stored, `a_r()` assembles the
/// dense matrix on demand.
struct SensingQuadratic {
    int m_antennas = 0;
    std::vector<CVec> factors;  // one per receiver, length M * n_tx

    int n_rx() const { return static_cast<int>(factors.size()); }
    int t_rows() const { return factors.empty() ? 0 : static_cast<int>(factors[0].size()); }

    CMat a_r(int r) const { return m_antennas * (factors[r] * factors[r].adjoint()); }
};

/// Builds the echo quadratics for an explicit transmitter/receiver role
/// assignment (the two lists may overlap during bootstrap).
inline SensingQuadratic build_sensing_quadratic(const Scenario& scn, const std::vector<int>& tx_aps,
                                                const std::vector<int>& rx_aps, double ple) {
    const int m = scn.m_antennas();
    SensingQuadratic q;
    q.m_antennas = m;
    for (int r_ap : rx_aps) {
        CVec u(m * static_cast<int>(tx_aps.size()));
        const double d_rx = distance(scn.target_position, scn.ap_positions[r_ap]);
        for (int b = 0; b < static_cast<int>(tx_aps.size()); ++b) {
            const int j_ap = tx_aps[b];
            const double d_tx = distance(scn.ap_positions[j_ap], scn.target_position);
            const double beta = path_gain(d_tx, ple) * path_gain(d_rx, ple);
            const CVec a_tx = array_response(scn.theta_tx(j_ap), m);
            u.segment(b * m, m) = std::sqrt(beta) * std::conj(scn.alpha(j_ap, r_ap)) * a_tx.conjugate();
        }
        q.factors.push_back(std::move(u));
    }
    return q;
}

inline SensingQuadratic build_sensing_quadratic(const Scenario& scn, const ApConfiguration& cfg,
                                                double ple) {
    return build_sensing_quadratic(scn, cfg.transmitters, cfg.receivers, ple);
}

/// Sensing SINR of a precoder: total echo power over receivers and samples,
/// normalized by receiver count, samples, antennas, and noise.
inline double sensing_sinr(const CMat& w, const SensingQuadratic& quad, const SymbolFrame& frame,
                           double sigma_n2) {
    const CMat s = frame.stacked();
    double num = 0.0;
    for (const auto& u : quad.factors) num += (u.adjoint() * w * s).squaredNorm();
    return num / (quad.n_rx() * frame.n_samples() * sigma_n2);
}

/// First-order expansion of the sensing SINR around `w_prev`:
/// value(W) = Re<g, W> + constant, exact at the anchor and a global
/// under-estimator elsewhere (the dropped term is a PSD quadratic).
struct LinearizedObjective {
    CMat g;
    double constant = 0.0;

    double value(const CMat& w) const {
        return g.cwiseProduct(w.conjugate()).sum().real() + constant;
    }
};

inline LinearizedObjective linearize_objective(const SensingQuadratic& quad, const CMat& w_prev,
                                               const SymbolFrame& frame, double sigma_n2) {
    const CMat sg = frame.sample_gram();
    const double denom = quad.n_rx() * frame.n_samples() * quad.m_antennas * sigma_n2;
    LinearizedObjective lin;
    lin.g = CMat::Zero(w_prev.rows(), w_prev.cols());
    for (const auto& u : quad.factors) {
        // A_r W_prev S with A_r = M u u^H
        const Eigen::RowVectorXcd proj = u.adjoint() * w_prev;  // 1 x C
        lin.g.noalias() += (2.0 * quad.m_antennas / denom) * (u * (proj * sg));
    }
    lin.constant = -sensing_sinr(w_prev, quad, frame, sigma_n2);
    return lin;
}

struct SubproblemResult {
    CMat w;
    SolveStatus status = SolveStatus::ok;
    double kkt_stationarity = 0.0;
    double kkt_complementarity = 0.0;
    int newton_iters = 0;
};

/// One convex subproblem: maximize the linearized sensing objective under
/// the user-SINR slack reformulation and per-antenna power caps.
inline SubproblemResult solve_ccp_subproblem(const LinearizedObjective& lin,
                                             const std::vector<CVec>& h_concat, const CMat& w_prev,
                                             double gamma_min, double p_max, double sigma_n2,
                                             double tol = 1e-6) {
    ipm::Subproblem p;
    p.g_obj = lin.g;
    p.h = h_concat;
    for (size_t i = 0; i < h_concat.size(); ++i) p.z.push_back(h_concat[i].dot(w_prev.col(i)));
    p.gamma_min = gamma_min;
    p.p_max = p_max;
    p.sigma_n2 = sigma_n2;
    const ipm::Result r = ipm::solve_subproblem(p, w_prev, tol);
    SubproblemResult out;
    out.w = r.w;
    out.status = r.status;
    out.kkt_stationarity = r.kkt_stationarity;
    out.kkt_complementarity = r.kkt_complementarity;
    out.newton_iters = r.newton_iters;
    return out;
}

enum class CcpStatus { converged, iter_cap, infeasible };

struct CcpState {
    int iterations = 0;
    std::vector<double> objective_history;  // sensing SINR after each subproblem
    CcpStatus status = CcpStatus::converged;
    double max_kkt_stationarity = 0.0;
    double max_kkt_complementarity = 0.0;
    int init_attempts = 1;
};

struct CcpResult {
    PrecoderMatrix w;
    CcpState state;
};

/// Iterated linearize-and-solve for given transmitter/receiver roles.
/// Convergence is declared when the sensing SINR moves by less than
/// `ccp_tol` dB between iterations. A random scaled start is drawn from
/// `seed`; if the first subproblem is infeasible up to 4 fresh starts are
/// tried before giving up.
inline CcpResult optimize_precoder_roles(const Scenario& scn, const std::vector<int>& tx_aps,
                                         const std::vector<int>& rx_aps, const SymbolFrame& frame,
                                         const ScenarioConfig& cfg, std::uint64_t seed) {
    const int m = scn.m_antennas();
    const int t_rows = m * static_cast<int>(tx_aps.size());
    const int n_cols = cfg.n_ue + 1;

    const SensingQuadratic quad = build_sensing_quadratic(scn, tx_aps, rx_aps, cfg.path_loss_exp);
    std::vector<CVec> h_concat;
    for (int i = 0; i < cfg.n_ue; ++i) {
        CVec h(t_rows);
        for (int b = 0; b < static_cast<int>(tx_aps.size()); ++b)
            h.segment(b * m, m) = scn.channels[tx_aps[b]][i];
        h_concat.push_back(std::move(h));
    }

    CcpResult res;
    res.w.m_antennas = m;
    res.w.tx_index_map = tx_aps;

    constexpr int kMaxInitAttempts = 5;
    CMat w_cur;
    bool started = false;
    for (int attempt = 0; attempt < kMaxInitAttempts && !started; ++attempt) {
        res.state.init_attempts = attempt + 1;
        Rng rng(derive_seed(seed, 0x77303030ULL, attempt));
        CMat w0 = rng.cgaussian_matrix(t_rows, n_cols);
        double max_rn = 0.0;
        for (int r = 0; r < t_rows; ++r) max_rn = std::max(max_rn, w0.row(r).squaredNorm());
        w0 *= std::sqrt(cfg.p_max / (2.0 * max_rn));  // 3 dB power margin on every row

        LinearizedObjective lin = linearize_objective(quad, w0, frame, cfg.sigma_n);
        SubproblemResult sub =
            solve_ccp_subproblem(lin, h_concat, w0, cfg.gamma_min, cfg.p_max, cfg.sigma_n);
        if (sub.status == SolveStatus::infeasible) continue;
        res.state.max_kkt_stationarity = std::max(res.state.max_kkt_stationarity, sub.kkt_stationarity);
        res.state.max_kkt_complementarity =
            std::max(res.state.max_kkt_complementarity, sub.kkt_complementarity);
        w_cur = sub.w;
        res.state.iterations = 1;
        res.state.objective_history.push_back(sensing_sinr(w_cur, quad, frame, cfg.sigma_n));
        started = true;
    }
    if (!started) {
        res.state.status = CcpStatus::infeasible;
        return res;
    }

    res.state.status = CcpStatus::iter_cap;
    for (int p = 2; p <= cfg.ccp_max_iter; ++p) {
        LinearizedObjective lin = linearize_objective(quad, w_cur, frame, cfg.sigma_n);
        SubproblemResult sub =
            solve_ccp_subproblem(lin, h_concat, w_cur, cfg.gamma_min, cfg.p_max, cfg.sigma_n);
        if (sub.status == SolveStatus::infeasible) {
            // previous iterate remains valid; report it with a cap status
            break;
        }
        res.state.max_kkt_stationarity = std::max(res.state.max_kkt_stationarity, sub.kkt_stationarity);
        res.state.max_kkt_complementarity =
            std::max(res.state.max_kkt_complementarity, sub.kkt_complementarity);
        w_cur = sub.w;
        res.state.iterations = p;
        const double g_new = sensing_sinr(w_cur, quad, frame, cfg.sigma_n);
        const double g_old = res.state.objective_history.back();
        res.state.objective_history.push_back(g_new);
        if (std::abs(linear_to_db(std::max(g_new, 1e-300)) - linear_to_db(std::max(g_old, 1e-300))) <
            cfg.ccp_tol) {
            res.state.status = CcpStatus::converged;
            break;
        }
    }
    if (res.state.iterations >= cfg.ccp_max_iter && res.state.status != CcpStatus::converged)
        res.state.status = CcpStatus::iter_cap;

    res.w.w = w_cur;
    return res;
}

inline CcpResult optimize_precoder(const Scenario& scn, const ApConfiguration& ap_config,
                                   const SymbolFrame& frame, const ScenarioConfig& cfg,
                                   std::uint64_t seed) {
    return optimize_precoder_roles(scn, ap_config.transmitters, ap_config.receivers, frame, cfg, seed);
}

}  // namespace cfisac
