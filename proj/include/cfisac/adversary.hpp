#pragma once

#include <vector>

#include "cfisac/config.hpp"
#include "cfisac/rng.hpp"
#include "cfisac/scenario.hpp"
#include "cfisac/signals.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Per-sample fading channels of the adversary's K antennas on one AP link:
/// every (antenna, sample) pair is an independent CN(0, beta) draw.
inline std::vector<CMat> draw_adversary_channels(const Scenario& scn, int ap, int adversary_user,
                                                 int k_antennas, int n_samples,
                                                 std::uint64_t seed) {
    const int m = scn.m_antennas();
    const double beta = scn.beta_ue(ap, adversary_user);
    std::vector<CMat> h(n_samples);
    for (int t = 0; t < n_samples; ++t) {
        Rng rng(derive_seed(seed, 0x616476ULL, ap, t));
        h[t] = rng.cgaussian_matrix(m, k_antennas, beta);
    }
    return h;
}

/// Observations through given per-sample channels: y_k[n] = h_k[n]^H x[n] + noise.
inline CMat observe_through(const std::vector<CMat>& channels, const CMat& x_j, double sigma_n2,
                            std::uint64_t noise_seed) {
    const int n = static_cast<int>(x_j.cols());
    const int k_antennas = channels.empty() ? 0 : static_cast<int>(channels[0].cols());
    CMat y(k_antennas, n);
    Rng rng(derive_seed(noise_seed, 0x6f6273ULL));
    for (int t = 0; t < n; ++t)
        for (int k = 0; k < k_antennas; ++k)
            y(k, t) = channels[t].col(k).dot(x_j.col(t)) + rng.cgaussian(sigma_n2);
    return y;
}

/// Downlink observations of one AP's transmission at the adversary's K
/// antennas, with the per-sample channels used.
struct ApObservation {
    CMat y;                       // K x N
    std::vector<CMat> antenna_h;  // per sample, M x K
};

inline ApObservation observe_per_ap(const Scenario& scn, const CMat& x_j, int ap, int adversary_user,
                                    int k_antennas, double sigma_n2, std::uint64_t noise_seed) {
    ApObservation obs;
    obs.antenna_h = draw_adversary_channels(scn, ap, adversary_user, k_antennas,
                                            static_cast<int>(x_j.cols()), noise_seed);
    obs.y = observe_through(obs.antenna_h, x_j, sigma_n2, derive_seed(noise_seed, 0x6e7aULL, ap));
    return obs;
}

/// Channel estimate available to the adversary: truth plus CN(0, sigma_h2 I).
inline CVec noisy_channel_estimate(const CVec& h, double sigma_h2, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x686874ULL));
    return h + rng.cgaussian_vector(static_cast<int>(h.size()), sigma_h2);
}

/// Variational posterior pieces for one sample: per-antenna channel means,
/// the shared channel covariance, and the precision-mixture mean.
struct EmEStep {
    CMat e_h;      // M x K
    CMat omega_h;  // M x M, Hermitian positive definite
    double e_u = 1.0;
};

/// Expectation step. The covariance couples to the previous iteration's
/// precision mean e_u_prev; the observation-dependent terms sum over the K
/// antennas.
inline EmEStep em_e_step(const CVec& y, const CVec& x_hat, const CMat& h_hat, double e_u_prev,
                         double nu, double sigma_n2, double sigma_h2) {
    const int m = static_cast<int>(x_hat.size());
    const int k_obs = static_cast<int>(y.size());
    EmEStep out;

    // (sigma_h^-2 I + e_u/sigma_n^2 x x^H)^-1 via the rank-1 identity
    const double a = 1.0 / sigma_h2;
    const double b = e_u_prev / sigma_n2;
    const double xn2 = x_hat.squaredNorm();
    out.omega_h = CMat::Identity(m, m) / a;
    if (xn2 > 0.0)
        out.omega_h -= (b / (a * (a + b * xn2))) * (x_hat * x_hat.adjoint());

    out.e_h.resize(m, k_obs);
    for (int k = 0; k < k_obs; ++k)
        out.e_h.col(k) = out.omega_h * (h_hat.col(k) / sigma_h2 +
                                        x_hat * std::conj(y(k)) * (e_u_prev / sigma_n2));

    double c_res = 0.0;
    for (int k = 0; k < k_obs; ++k) c_res += std::norm(y(k) - out.e_h.col(k).dot(x_hat));
    const double c_quad = m * (x_hat.adjoint() * out.omega_h * x_hat).real().value();
    const double c_total = (c_res + c_quad) / sigma_n2;
    out.e_u = (nu + 2.0 * k_obs) / (nu + c_total);
    return out;
}

/// Maximization step: closed-form minimizer of
///   sum_k |y_k - e_h_k^H x|^2 + M x^H Omega x,
/// i.e. the solution of (sum_k e_k e_k^H + M Omega) x = sum_k e_k y_k.
inline CVec em_m_step(const CVec& y, const CMat& e_h, const CMat& omega_h, int m_antennas) {
    const int m = static_cast<int>(e_h.rows());
    const int k_obs = static_cast<int>(y.size());
    CMat lhs = static_cast<double>(m_antennas) * omega_h;
    CVec rhs = CVec::Zero(m);
    for (int k = 0; k < k_obs; ++k) {
        lhs.noalias() += e_h.col(k) * e_h.col(k).adjoint();
        rhs += e_h.col(k) * y(k);
    }
    return lhs.llt().solve(rhs);
}

struct EmRun {
    CMat x_hat;  // M x N, per-sample signal estimates
    std::vector<int> iterations;
    bool all_converged = true;
};

/// Per-sample alternation of the E and M steps until the update to x_hat is
/// below tolerance. `h_hat[n]` carries the sample-n channel estimates; the
/// precision mean is randomly initialized per sample.
inline EmRun em_estimate_signal(const CMat& y, const std::vector<CMat>& h_hat, double nu,
                                double sigma_n2, double sigma_h2, int em_max_iter, double em_tol,
                                std::uint64_t seed) {
    const int m = h_hat.empty() ? 0 : static_cast<int>(h_hat[0].rows());
    const int n = static_cast<int>(y.cols());
    EmRun run;
    run.x_hat = CMat::Zero(m, n);
    run.iterations.resize(n, 0);
    for (int t = 0; t < n; ++t) {
        Rng rng(derive_seed(seed, 0x656d75ULL, t));
        double e_u = rng.uniform(0.5, 1.5);
        CVec x_hat = CVec::Zero(m);
        bool converged = false;
        int it = 0;
        for (; it < em_max_iter; ++it) {
            const EmEStep e = em_e_step(y.col(t), x_hat, h_hat[t], e_u, nu, sigma_n2, sigma_h2);
            e_u = e.e_u;
            const CVec x_next = em_m_step(y.col(t), e.e_h, e.omega_h, m);
            const double delta = (x_next - x_hat).squaredNorm();
            x_hat = x_next;
            if (delta < em_tol) {
                converged = true;
                ++it;
                break;
            }
        }
        run.iterations[t] = it;
        run.all_converged = run.all_converged && converged;
        run.x_hat.col(t) = x_hat;
    }
    return run;
}

/// Transmit beampattern of the estimated signals averaged over the frame:
/// p(theta) = (1/N) sum_n |a(theta)^T x[n]|^2, maximized over the grid.
/// Ties resolve to the lowest grid angle.
inline double estimate_angle(const CMat& x_hat, const RVec& theta_grid) {
    const int m = static_cast<int>(x_hat.rows());
    const int n = static_cast<int>(x_hat.cols());
    double best_val = -1.0;
    double best_theta = theta_grid(0);
    for (int g = 0; g < theta_grid.size(); ++g) {
        const CVec a = array_response(theta_grid(g), m);
        const Eigen::RowVectorXcd proj = a.transpose() * x_hat;
        const double p = proj.squaredNorm() / n;
        if (p > best_val) {
            best_val = p;
            best_theta = theta_grid(g);
        }
    }
    return best_theta;
}

/// Search grid over the half-plane on the true angle's side of the array
/// axis, where the array response is injective: [0, pi] when sin(theta) >= 0,
/// [-pi, 0] otherwise.
inline RVec halfplane_grid(double theta_true, double step_deg = 0.5) {
    const double step = step_deg * kPi / 180.0;
    const int n = static_cast<int>(std::floor(kPi / step)) + 1;
    const double lo = std::sin(theta_true) >= 0.0 ? 0.0 : -kPi;
    RVec grid(n);
    for (int i = 0; i < n; ++i) grid(i) = std::min(lo + i * step, lo + kPi);
    return grid;
}

struct Line2 {
    Point2 anchor;
    Point2 dir;  // unit
};

struct TriangulationResult {
    Point2 q;
    int iterations = 0;
    bool mse_monotone = true;
    double final_mse = 0.0;
};

inline double line_mse(const std::vector<Line2>& lines, const Point2& q) {
    double acc = 0.0;
    for (const auto& ln : lines) {
        const Point2 d = q - ln.anchor;
        const double along = d.dot(ln.dir);
        const Point2 resid = d - ln.dir * along;
        acc += resid.dot(resid);
    }
    return acc / static_cast<double>(lines.size());
}

/// Gradient descent on the mean squared distance to the lines, started at
/// the centroid of the anchors.
inline TriangulationResult triangulate(const std::vector<Line2>& lines, double eta, int max_iter,
                                       double tol) {
    TriangulationResult res;
    Point2 q{0.0, 0.0};
    for (const auto& ln : lines) q = q + ln.anchor;
    q = q * (1.0 / static_cast<double>(lines.size()));

    double mse_prev = line_mse(lines, q);
    for (int it = 0; it < max_iter; ++it) {
        Point2 grad{0.0, 0.0};
        for (const auto& ln : lines) {
            const Point2 d = q - ln.anchor;
            const double along = d.dot(ln.dir);
            grad = grad + (d - ln.dir * along);
        }
        grad = grad * (2.0 / static_cast<double>(lines.size()));
        res.iterations = it + 1;
        if (grad.norm() < tol) break;
        q = q - grad * eta;
        const double mse = line_mse(lines, q);
        if (mse > mse_prev * (1.0 + 1e-12) + 1e-300) res.mse_monotone = false;
        mse_prev = mse;
    }
    res.q = q;
    res.final_mse = mse_prev;
    return res;
}

struct AttackResult {
    RVec angle_estimates;     // per transmitting AP
    RVec angle_errors;        // against the true AP->target bearings
    std::vector<Line2> lines;
    Point2 q_hat;
    bool detected = false;
    int gd_iterations = 0;
    bool gd_mse_monotone = true;
    double final_mse = 0.0;
    double path_error = 0.0;  // |q_hat - target|
};

/// Full attack pipeline of the malicious user (user 0): per-AP observation,
/// per-sample EM signal estimation, beampattern peak extraction, and
/// line-intersection by gradient descent. The channel-estimate error
/// variance scales with the link gain so that the configured level is
/// relative to the channel power.
inline AttackResult run_attack(const Scenario& scn, const PrecoderMatrix& w, const SymbolFrame& frame,
                               const ScenarioConfig& cfg, std::uint64_t noise_seed) {
    constexpr int kAdversary = 0;
    const std::vector<CMat> x = transmit_frame(w, frame);

    AttackResult res;
    const int n_tx = w.n_tx();
    res.angle_estimates.resize(n_tx);
    res.angle_errors.resize(n_tx);
    for (int b = 0; b < n_tx; ++b) {
        const int ap = w.tx_index_map[b];
        const ApObservation obs =
            observe_per_ap(scn, x[b], ap, kAdversary, cfg.k_antennas, cfg.sigma_n, noise_seed);
        const double sigma_h2 = cfg.sigma_h * scn.beta_ue(ap, kAdversary);
        std::vector<CMat> h_hat(obs.antenna_h.size());
        for (size_t t = 0; t < obs.antenna_h.size(); ++t) {
            h_hat[t].resize(scn.m_antennas(), cfg.k_antennas);
            const std::uint64_t est_seed = derive_seed(noise_seed, 0x637368ULL, ap);
            for (int k = 0; k < cfg.k_antennas; ++k)
                h_hat[t].col(k) = noisy_channel_estimate(obs.antenna_h[t].col(k), sigma_h2,
                                                         derive_seed(est_seed, t, k));
        }
        const EmRun em = em_estimate_signal(obs.y, h_hat, cfg.nu, cfg.sigma_n, sigma_h2,
                                            cfg.em_max_iter, cfg.em_tol,
                                            derive_seed(noise_seed, 0x656d73ULL, ap));
        const double theta = estimate_angle(em.x_hat, halfplane_grid(scn.theta_tx(ap)));
        res.angle_estimates(b) = theta;
        double err = std::abs(theta - scn.theta_tx(ap));
        if (err > kPi) err = 2.0 * kPi - err;
        res.angle_errors(b) = err;
        res.lines.push_back({scn.ap_positions[ap], Point2{std::cos(theta), std::sin(theta)}});
    }

    if (res.lines.size() >= 2) {
        const TriangulationResult tri = triangulate(res.lines, cfg.eta, cfg.gd_max_iter, cfg.gd_tol);
        res.q_hat = tri.q;
        res.gd_iterations = tri.iterations;
        res.gd_mse_monotone = tri.mse_monotone;
        res.final_mse = tri.final_mse;
    } else {
        res.q_hat = res.lines.empty() ? Point2{0.0, 0.0} : res.lines[0].anchor;
    }
    res.path_error = distance(res.q_hat, scn.target_position);
    res.detected = res.path_error <= cfg.r_gd;
    return res;
}

}  // namespace cfisac
