#pragma once

#include <vector>

#include "cfisac/rng.hpp"
#include "cfisac/scenario.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Unit-average-power square QAM constellation (Gray labeling is irrelevant
/// here; only the point set matters).
inline std::vector<cdouble> qam_constellation(int mod_order) {
    const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(mod_order))));
    if (root * root != mod_order || mod_order < 4)
        throw std::invalid_argument("qam_constellation: mod_order must be a perfect square >= 4");
    const double scale = std::sqrt(2.0 * (root * root - 1) / 3.0);
    std::vector<cdouble> pts;
    pts.reserve(mod_order);
    for (int a = 0; a < root; ++a)
        for (int b = 0; b < root; ++b)
            pts.emplace_back((2 * a - root + 1) / scale, (2 * b - root + 1) / scale);
    return pts;
}

/// One frame of transmit symbols: N QAM symbols per user plus N unit-modulus
/// QPSK sensing symbols.
struct SymbolFrame {
    CMat user_symbols;     // n_ue x N
    CVec sensing_symbols;  // N

    int n_ue() const { return static_cast<int>(user_symbols.rows()); }
    int n_samples() const { return static_cast<int>(sensing_symbols.size()); }

    /// Stacked symbol vector s[n] = [s_1 ... s_{n_ue}, s_s]^T.
    CVec s_vec(int n) const {
        CVec s(n_ue() + 1);
        s.head(n_ue()) = user_symbols.col(n);
        s(n_ue()) = sensing_symbols(n);
        return s;
    }

    /// (n_ue + 1) x N matrix whose columns are s[n].
    CMat stacked() const {
        CMat s(n_ue() + 1, n_samples());
        s.topRows(n_ue()) = user_symbols;
        s.row(n_ue()) = sensing_symbols.transpose();
        return s;
    }

    /// Sum over samples of s[n] s[n]^H.
    CMat sample_gram() const {
        const CMat s = stacked();
        return s * s.adjoint();
    }
};

inline SymbolFrame generate_frame(int n_ue, int n, int mod_order, std::uint64_t seed) {
    const auto constellation = qam_constellation(mod_order);
    SymbolFrame f;
    f.user_symbols.resize(n_ue, n);
    f.sensing_symbols.resize(n);
    Rng rng(derive_seed(seed, 0x6672616dULL));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n_ue; ++i)
            f.user_symbols(i, k) = constellation[rng.uniform_int(mod_order)];
    for (int k = 0; k < n; ++k)
        f.sensing_symbols(k) = std::polar(1.0, kPi / 4.0 + rng.uniform_int(4) * kPi / 2.0);
    return f;
}

/// Aggregate precoder: M rows per transmitter AP stacked in transmitter
/// order, one column per user plus the sensing column last.
struct PrecoderMatrix {
    CMat w;                         // (M * n_tx) x (n_ue + 1)
    std::vector<int> tx_index_map;  // AP index of each M-row block
    int m_antennas = 0;

    int n_tx() const { return static_cast<int>(tx_index_map.size()); }
    int n_ue() const { return static_cast<int>(w.cols()) - 1; }

    /// M x (n_ue + 1) block of transmitter b (position in tx_index_map).
    Eigen::Block<const CMat> block(int b) const { return w.middleRows(b * m_antennas, m_antennas); }

    CVec user_column(int i) const { return w.col(i); }
    CVec sensing_column() const { return w.col(w.cols() - 1); }

    /// Sensing precoder of transmitter b.
    CVec sensing_block(int b) const {
        return w.col(w.cols() - 1).segment(b * m_antennas, m_antennas);
    }

    double max_row_power() const {
        double p = 0.0;
        for (int r = 0; r < w.rows(); ++r) p = std::max(p, w.row(r).squaredNorm());
        return p;
    }

    /// Full (M * n_ap) x (n_ue + 1) matrix with zero rows for APs that do not
    /// transmit.
    CMat expand_full(int n_ap) const {
        CMat full = CMat::Zero(static_cast<long>(m_antennas) * n_ap, w.cols());
        for (int b = 0; b < n_tx(); ++b)
            full.middleRows(static_cast<long>(tx_index_map[b]) * m_antennas, m_antennas) = block(b);
        return full;
    }
};

/// Per-AP transmit vector x_j[n] = W_j s[n].
inline CVec transmit_signal(const Eigen::Ref<const CMat>& w_block, const Eigen::Ref<const CVec>& s_vec) {
    if (w_block.cols() != s_vec.size())
        throw std::invalid_argument("transmit_signal: dimension mismatch");
    return w_block * s_vec;
}

/// All transmit vectors of one frame, per transmitter: each entry is M x N.
inline std::vector<CMat> transmit_frame(const PrecoderMatrix& w, const SymbolFrame& frame) {
    const CMat s = frame.stacked();
    std::vector<CMat> x(w.n_tx());
    for (int b = 0; b < w.n_tx(); ++b) x[b] = w.block(b) * s;
    return x;
}

/// Received downlink samples at one user, split into the four model terms.
/// Row k is antenna k; antenna 0 observes through the scenario channel and
/// the remaining antennas through fresh independent draws.
struct UserRxSignal {
    CMat total;              // K x N
    CMat desired;            // K x N
    CMat comm_interference;  // K x N
    CMat sens_interference;  // K x N
    CMat noise;              // K x N
};

inline UserRxSignal received_user_signal(const Scenario& scn, const ApConfiguration& cfg,
                                         const PrecoderMatrix& w, const SymbolFrame& frame, int user,
                                         int k_antennas, double sigma_n2, std::uint64_t noise_seed) {
    const int m = w.m_antennas;
    const int n = frame.n_samples();
    const int n_ue = frame.n_ue();
    UserRxSignal rx;
    rx.total = CMat::Zero(k_antennas, n);
    rx.desired = CMat::Zero(k_antennas, n);
    rx.comm_interference = CMat::Zero(k_antennas, n);
    rx.sens_interference = CMat::Zero(k_antennas, n);
    rx.noise = CMat::Zero(k_antennas, n);

    for (int k = 0; k < k_antennas; ++k) {
        Rng rng(derive_seed(noise_seed, 0x757372ULL, user, k));
        for (int b = 0; b < w.n_tx(); ++b) {
            const int ap = w.tx_index_map[b];
            const CVec h = (k == 0) ? scn.channels[ap][user]
                                    : rng.cgaussian_vector(m, scn.beta_ue(ap, user));
            const CVec hw = w.block(b).adjoint() * h;  // (n_ue+1) gains h^H w_{j,.}
            for (int t = 0; t < n; ++t) {
                rx.desired(k, t) += std::conj(hw(user)) * frame.user_symbols(user, t);
                for (int i = 0; i < n_ue; ++i)
                    if (i != user) rx.comm_interference(k, t) += std::conj(hw(i)) * frame.user_symbols(i, t);
                rx.sens_interference(k, t) += std::conj(hw(n_ue)) * frame.sensing_symbols(t);
            }
        }
        for (int t = 0; t < n; ++t) rx.noise(k, t) = rng.cgaussian(sigma_n2);
    }
    rx.total = rx.desired + rx.comm_interference + rx.sens_interference + rx.noise;
    return rx;
}

/// Received echo at one sensing receiver: target reflection per transmitter,
/// optional NLoS clutter, and antenna noise. `rx_pos` indexes
/// cfg.receivers; `x` holds the per-transmitter M x N transmit signals.
inline CMat received_sensing_signal(const Scenario& scn, const ApConfiguration& cfg, int rx_pos,
                                    const std::vector<CMat>& x, double ple, double sigma_n2,
                                    double clutter_var, std::uint64_t noise_seed) {
    const int r_ap = cfg.receivers[rx_pos];
    const int m = scn.m_antennas();
    const int n = x.empty() ? 0 : static_cast<int>(x[0].cols());
    const SensingGeometry geo = sensing_geometry(scn, cfg, ple);
    const CVec a_rx = array_response(geo.theta_rx(rx_pos), m);

    CMat y = CMat::Zero(m, n);
    for (int b = 0; b < cfg.n_tx(); ++b) {
        const int j_ap = cfg.transmitters[b];
        const CVec a_tx = array_response(geo.theta_tx(b), m);
        const cdouble gain = scn.alpha(j_ap, r_ap) * std::sqrt(geo.beta_tr(b, rx_pos));
        // a(theta_r) a(theta_j)^T x_j[n], evaluated as a rank-1 product
        const Eigen::RowVectorXcd proj = a_tx.transpose() * x[b];
        y.noalias() += gain * (a_rx * proj);
    }
    if (clutter_var > 0.0) {
        Rng clutter_rng(derive_seed(noise_seed, 0x636c74ULL, r_ap));
        for (int b = 0; b < cfg.n_tx(); ++b) {
            const CMat h_cl = clutter_rng.cgaussian_matrix(m, m, clutter_var);
            y.noalias() += h_cl * x[b];
        }
    }
    Rng noise_rng(derive_seed(noise_seed, 0x736e73ULL, r_ap));
    for (int t = 0; t < n; ++t)
        for (int p = 0; p < m; ++p) y(p, t) += noise_rng.cgaussian(sigma_n2);
    return y;
}

/// Downlink SINR of user i: |h_i^H w_i|^2 over the coherent-sum interference
/// of the other user columns, the sensing column, and noise. `h_concat[i]` is
/// the channel to user i stacked over the transmitter APs.
inline double user_sinr(const CMat& w, const std::vector<CVec>& h_concat, int i, double sigma_n2) {
    const int n_ue = static_cast<int>(w.cols()) - 1;
    const CVec gains = w.adjoint() * h_concat[i];  // conj(h^H w_k) for each column k
    const double num = std::norm(gains(i));
    cdouble interf = 0.0;
    for (int k = 0; k < n_ue; ++k)
        if (k != i) interf += std::conj(gains(k));
    const double den = std::norm(interf) + std::norm(gains(n_ue)) + sigma_n2;
    return num / den;
}

inline double min_user_sinr(const CMat& w, const std::vector<CVec>& h_concat, double sigma_n2) {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < static_cast<int>(w.cols()); ++i)
        worst = std::min(worst, user_sinr(w, h_concat, i, sigma_n2));
    return worst;
}

}  // namespace cfisac
