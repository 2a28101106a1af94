#pragma once

#include <stdexcept>
#include <vector>

#include "cfisac/config.hpp"
#include "cfisac/rng.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Power-law path gain with a 1 m reference distance: max(d, 1)^(-ple).
inline double path_gain(double dist, double ple) {
    return std::pow(std::max(dist, 1.0), -ple);
}

/// Uniform-linear-array response, element p = exp(j p pi cos(theta)).
inline CVec array_response(double theta, int m) {
    CVec a(m);
    const double c = kPi * std::cos(theta);
    for (int p = 0; p < m; ++p) a(p) = std::polar(1.0, p * c);
    return a;
}

/// Angle of the vector from `from` to `to`, normalized into (-pi, pi].
inline double bearing(const Point2& from, const Point2& to) {
    double th = std::atan2(to.y - from.y, to.x - from.x);
    if (th <= -kPi) th = kPi;
    return th;
}

/// One realized world: geometry, communication channels, target cross
/// sections. Sensing-path quantities are stored for every ordered AP pair
/// (transmit role, receive role) so that any receiver/transmitter split of
/// the same scenario sees consistent draws.
struct Scenario {
    std::vector<Point2> ap_positions;
    std::vector<Point2> ue_positions;
    Point2 target_position;

    std::vector<std::vector<CVec>> channels;  // [ap][ue], length M each
    RMat beta_ue;                             // n_ap x n_ue link gains
    CMat alpha;                               // n_ap x n_ap Swerling-I RCS draws (tx j, rx r)
    RVec theta_tx;                            // per AP, angle AP -> target
    RVec theta_rx;                            // per AP, angle target -> AP
    RMat beta_tr;                             // (tx j, rx r) two-hop gain products

    int n_ap() const { return static_cast<int>(ap_positions.size()); }
    int n_ue() const { return static_cast<int>(ue_positions.size()); }
    int m_antennas() const { return channels.empty() ? 0 : static_cast<int>(channels[0][0].size()); }

    /// Channel from all transmitter APs to user i, stacked in transmitter order.
    CVec concat_channel(const ApConfiguration& cfg, int user) const {
        const int m = m_antennas();
        CVec h(m * cfg.n_tx());
        for (int b = 0; b < cfg.n_tx(); ++b) h.segment(b * m, m) = channels[cfg.transmitters[b]][user];
        return h;
    }
};

/// Sensing-path geometry for one transmitter/receiver split, indexed by
/// position in the configuration's transmitter and receiver lists.
struct SensingGeometry {
    RVec theta_tx;  // per transmitter
    RVec theta_rx;  // per receiver
    RMat beta_tr;   // n_tx x n_rx
};

inline SensingGeometry sensing_geometry(const Scenario& scn, const ApConfiguration& cfg,
                                        double ple) {
    SensingGeometry g;
    g.theta_tx.resize(cfg.n_tx());
    g.theta_rx.resize(cfg.n_rx());
    g.beta_tr.resize(cfg.n_tx(), cfg.n_rx());
    for (int b = 0; b < cfg.n_tx(); ++b)
        g.theta_tx(b) = bearing(scn.ap_positions[cfg.transmitters[b]], scn.target_position);
    for (int c = 0; c < cfg.n_rx(); ++c)
        g.theta_rx(c) = bearing(scn.target_position, scn.ap_positions[cfg.receivers[c]]);
    for (int b = 0; b < cfg.n_tx(); ++b) {
        const double d_tx = distance(scn.ap_positions[cfg.transmitters[b]], scn.target_position);
        for (int c = 0; c < cfg.n_rx(); ++c) {
            const double d_rx = distance(scn.target_position, scn.ap_positions[cfg.receivers[c]]);
            g.beta_tr(b, c) = path_gain(d_tx, ple) * path_gain(d_rx, ple);
        }
    }
    return g;
}

namespace detail {

inline Point2 place_point(Rng& rng, double grid_side, const std::vector<Point2>& placed,
                          double min_sep) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Point2 p{rng.uniform(0.0, grid_side), rng.uniform(0.0, grid_side)};
        bool ok = true;
        for (const auto& q : placed)
            if (distance(p, q) < min_sep) {
                ok = false;
                break;
            }
        if (ok) return p;
    }
    throw std::runtime_error(
        "generate_scenario: placement rejection sampling failed; grid too small for the "
        "requested node count");
}

}  // namespace detail

/// Draws a full system realization. Pure function of (config, seed): nodes are
/// placed uniformly with a 1 m minimum pairwise separation, channels are
/// CN(0, beta) i.i.d. per entry, and the RCS draw is one complex Gaussian per
/// ordered AP pair (Swerling-I: fixed within a trial).
inline Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    constexpr double kMinSeparation = 1.0;

    Scenario scn;
    Rng geo_rng(derive_seed(seed, 0x67656fULL));
    std::vector<Point2> placed;
    placed.reserve(cfg.n_ap + cfg.n_ue + 1);
    for (int j = 0; j < cfg.n_ap; ++j) {
        scn.ap_positions.push_back(detail::place_point(geo_rng, cfg.grid_side, placed, kMinSeparation));
        placed.push_back(scn.ap_positions.back());
    }
    for (int i = 0; i < cfg.n_ue; ++i) {
        scn.ue_positions.push_back(detail::place_point(geo_rng, cfg.grid_side, placed, kMinSeparation));
        placed.push_back(scn.ue_positions.back());
    }
    scn.target_position = detail::place_point(geo_rng, cfg.grid_side, placed, kMinSeparation);

    scn.beta_ue.resize(cfg.n_ap, cfg.n_ue);
    scn.channels.assign(cfg.n_ap, std::vector<CVec>(cfg.n_ue));
    for (int j = 0; j < cfg.n_ap; ++j)
        for (int i = 0; i < cfg.n_ue; ++i) {
            scn.beta_ue(j, i) = path_gain(distance(scn.ap_positions[j], scn.ue_positions[i]), cfg.path_loss_exp);
            Rng ch_rng(derive_seed(seed, 0x6368ULL, j, i));
            scn.channels[j][i] = ch_rng.cgaussian_vector(cfg.m_antennas, scn.beta_ue(j, i));
        }

    scn.alpha.resize(cfg.n_ap, cfg.n_ap);
    for (int j = 0; j < cfg.n_ap; ++j) {
        Rng rcs_rng(derive_seed(seed, 0x726373ULL, j));
        for (int r = 0; r < cfg.n_ap; ++r) scn.alpha(j, r) = rcs_rng.cgaussian(cfg.alpha_var);
    }

    scn.theta_tx.resize(cfg.n_ap);
    scn.theta_rx.resize(cfg.n_ap);
    scn.beta_tr.resize(cfg.n_ap, cfg.n_ap);
    for (int j = 0; j < cfg.n_ap; ++j) {
        scn.theta_tx(j) = bearing(scn.ap_positions[j], scn.target_position);
        scn.theta_rx(j) = bearing(scn.target_position, scn.ap_positions[j]);
    }
    for (int j = 0; j < cfg.n_ap; ++j) {
        const double d_tx = distance(scn.ap_positions[j], scn.target_position);
        for (int r = 0; r < cfg.n_ap; ++r) {
            const double d_rx = distance(scn.target_position, scn.ap_positions[r]);
            scn.beta_tr(j, r) = path_gain(d_tx, cfg.path_loss_exp) * path_gain(d_rx, cfg.path_loss_exp);
        }
    }
    return scn;
}

}  // namespace cfisac
