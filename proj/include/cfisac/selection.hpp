#pragma once

#include <numeric>
#include <vector>

#include "cfisac/signals.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Precoded sensing block of one AP: the rank-1 outer product w_t s_s^H.
inline CMat sensing_block(const CVec& w_lt, const CVec& s_s) { return w_lt * s_s.adjoint(); }

/// Leakage bound in bits between one AP's sensing block and one user channel.
inline double mi_upper_bound(const CMat& x_ls, const CVec& h) {
    return std::log2(1.0 + (x_ls.adjoint() * h).squaredNorm());
}

/// Per-(user, AP) leakage matrix: entry (i, l) = ||x_l^H h_{l,i}||^2.
/// The rank-1 structure of the sensing block reduces each entry to
/// ||s_s||^2 |w_{l,t}^H h_{l,i}|^2.
inline RMat build_mi_matrix(const std::vector<CVec>& sensing_precoders,
                            const std::vector<std::vector<CVec>>& channels, const CVec& s_s) {
    const int n_ap = static_cast<int>(sensing_precoders.size());
    const int n_ue = n_ap > 0 ? static_cast<int>(channels[0].size()) : 0;
    const double s_energy = s_s.squaredNorm();
    RMat mi(n_ue, n_ap);
    for (int l = 0; l < n_ap; ++l)
        for (int i = 0; i < n_ue; ++i)
            mi(i, l) = s_energy * std::norm(sensing_precoders[l].dot(channels[l][i]));
    return mi;
}

/// Column scores for receiver selection: the Euclidean column norm is the
/// default; the plain entry sum matches the unsimplified leakage objective.
enum class MiScoring { column_norm, entry_sum };

inline RVec mi_column_scores(const RMat& mi, MiScoring scoring) {
    RVec scores(mi.cols());
    for (int l = 0; l < mi.cols(); ++l)
        scores(l) = scoring == MiScoring::column_norm ? mi.col(l).norm() : mi.col(l).sum();
    return scores;
}

/// The n_rx APs with the largest column scores become receivers; ties break
/// toward the smallest AP index.
inline std::vector<int> select_receivers(const RMat& mi, int n_rx,
                                         MiScoring scoring = MiScoring::column_norm) {
    const RVec scores = mi_column_scores(mi, scoring);
    std::vector<int> order(mi.cols());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;
    });
    std::vector<int> rx(order.begin(), order.begin() + n_rx);
    std::sort(rx.begin(), rx.end());
    return rx;
}

}  // namespace cfisac
