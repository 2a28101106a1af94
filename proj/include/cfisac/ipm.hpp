#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "cfisac/types.hpp"

namespace cfisac {

enum class SolveStatus { ok, infeasible, max_iterations };

namespace ipm {

/// The precoder subproblem solved at every outer linearization step:
///
///   maximize  Re<G, W>
///   subject to, for every user i,
///     rate floor:        2 Re{conj(z_i) h_i^H W e_i} - |z_i|^2  >=  tau_n_i
///     interference cap:  |sum_{k != i} h_i^H W e_k|^2 + |h_i^H W e_t|^2 + sigma_n^2  <=  tau_d_i
///     slack link:        tau_n_i >= gamma * tau_d_i
///   and per-antenna power ||row_r(W)||^2 <= p_max for every row.
///
/// W is complex (t_rows x n_cols) with the last column reserved for the
/// sensing stream. The solver is a primal-dual interior-point method on the
/// real-vectorized problem. The Newton systems are never materialized: the
/// KKT matrix decomposes into per-row (scalar + rank-1) blocks from the
/// power constraints, a small dense block over the slack variables, and a
/// low-rank correction from the user constraints, so each step costs a
/// handful of O(size(W)) sweeps plus an O(n_ue)-wide Woodbury core solve.
struct Subproblem {
    CMat g_obj;              // t_rows x n_cols, maximize Re<g_obj, W>
    std::vector<CVec> h;     // per user, length t_rows
    std::vector<cdouble> z;  // per user, anchor gain h_i^H w_i_prev
    double gamma_min = 1.0;
    double p_max = 1.0;
    double sigma_n2 = 1.0;

    int t_rows() const { return static_cast<int>(g_obj.rows()); }
    int n_cols() const { return static_cast<int>(g_obj.cols()); }
    int n_ue() const { return n_cols() - 1; }
};

struct Result {
    CMat w;  // unscaled solution
    SolveStatus status = SolveStatus::ok;
    double kkt_stationarity = std::numeric_limits<double>::infinity();
    double kkt_complementarity = std::numeric_limits<double>::infinity();
    int newton_iters = 0;
};

namespace detail {

/// Point in the solver's variable space: a complex matrix plus a real tail
/// holding the slack variables (and the phase-I margin variable).
struct Pt {
    CMat w;
    RVec tail;

    static Pt zero(int t, int c, int d) {
        Pt p;
        p.w = CMat::Zero(t, c);
        p.tail = RVec::Zero(d);
        return p;
    }

    void axpy(double a, const Pt& o) {
        w += a * o.w;
        tail += a * o.tail;
    }

    double dot(const Pt& o) const {
        return w.cwiseProduct(o.w.conjugate()).sum().real() + tail.dot(o.tail);
    }

    double norm() const { return std::sqrt(dot(*this)); }
};

/// h * conj(m)^T, the matrix F satisfying <F, X> = Re(h^H X m) under the
/// solver's real inner product Re tr(F^H X).
inline CMat functional(const CVec& h, const CVec& m) { return h * m.adjoint(); }

/// Problem rescaled to O(1) magnitudes: rows bounded by 1, unit channels,
/// per-user power scales folded into the constraint coefficients.
struct Scaled {
    CMat g;  // maximize Re<g, W~>, unit Frobenius norm (or zero)
    std::vector<CVec> h_unit;
    std::vector<cdouble> z_s;
    std::vector<double> rate_coef;    // E_i / (gamma * s_d_i)
    std::vector<double> interf_coef;  // E_i / s_d_i
    std::vector<double> noise_s;      // sigma_n^2 / s_d_i
    double w_scale = 1.0;
    int t = 0, c = 0, n_ue = 0;

    static Scaled build(const Subproblem& p) {
        Scaled s;
        s.t = p.t_rows();
        s.c = p.n_cols();
        s.n_ue = p.n_ue();
        s.w_scale = std::sqrt(p.p_max);
        const double gnorm = p.g_obj.norm();
        s.g = (gnorm > 0.0) ? CMat(p.g_obj / gnorm) : CMat(CMat::Zero(s.t, s.c));
        for (int i = 0; i < s.n_ue; ++i) {
            const double cn = p.h[i].norm();
            const double amp = cn * s.w_scale;   // typical |h^H w|
            const double pw = amp * amp;         // typical |h^H w|^2
            const double s_d = pw + p.sigma_n2;
            s.h_unit.push_back(cn > 0.0 ? CVec(p.h[i] / cn) : CVec(p.h[i]));
            s.z_s.push_back(amp > 0.0 ? p.z[i] / amp : cdouble(0.0));
            s.rate_coef.push_back(pw / (p.gamma_min * s_d));
            s.interf_coef.push_back(pw / s_d);
            s.noise_s.push_back(p.sigma_n2 / s_d);
        }
        return s;
    }
};

/// Constraint values plus the reusable per-user gain rows h_i^H W.
struct Eval {
    RVec f;          // length m, all must stay < 0
    CMat gains;      // n_ue x c, row i = h_i^H W
    RVec row_norm2;  // length t
    double max_f = 0.0;
};

// Constraint layout: [0, t) row power, then triples (rate floor,
// interference cap, slack link) per user. Tail layout: (tau_n_i, tau_d_i)
// pairs, then the phase-I margin variable when present.
class Solver {
public:
    Solver(const Scaled& s, bool phase1) : s_(s), phase1_(phase1) {
        tail_dim_ = 2 * s_.n_ue + (phase1 ? 1 : 0);
        m_ = s_.t + 3 * s_.n_ue;
    }

    int m() const { return m_; }
    int tail_dim() const { return tail_dim_; }
    int s_index() const { return 2 * s_.n_ue; }
    const Scaled& scaled() const { return s_; }
    bool phase1() const { return phase1_; }

    Eval evaluate(const Pt& x) const {
        Eval e;
        e.f.resize(m_);
        e.row_norm2.resize(s_.t);
        e.gains.resize(s_.n_ue, s_.c);
        const double sp = phase1_ ? x.tail(s_index()) : 0.0;
        for (int r = 0; r < s_.t; ++r) {
            e.row_norm2(r) = x.w.row(r).squaredNorm();
            e.f(r) = e.row_norm2(r) - 1.0 - sp;
        }
        for (int i = 0; i < s_.n_ue; ++i) {
            e.gains.row(i) = s_.h_unit[i].adjoint() * x.w;
            const cdouble zeta = e.gains(i, i);
            cdouble u = 0.0;
            for (int k = 0; k < s_.n_ue; ++k)
                if (k != i) u += e.gains(i, k);
            const cdouble v = e.gains(i, s_.n_ue);
            const double tau_n = x.tail(2 * i), tau_d = x.tail(2 * i + 1);
            e.f(s_.t + 3 * i) =
                tau_n + s_.rate_coef[i] * (std::norm(s_.z_s[i]) - 2.0 * (std::conj(s_.z_s[i]) * zeta).real()) -
                sp;
            e.f(s_.t + 3 * i + 1) =
                s_.interf_coef[i] * (std::norm(u) + std::norm(v)) + s_.noise_s[i] - tau_d - sp;
            e.f(s_.t + 3 * i + 2) = tau_d - tau_n - sp;
        }
        e.max_f = m_ > 0 ? e.f.maxCoeff() : 0.0;
        return e;
    }

    Pt objective_gradient() const {
        Pt g = Pt::zero(s_.t, s_.c, tail_dim_);
        if (phase1_)
            g.tail(s_index()) = 1.0;
        else
            g.w = -s_.g;  // minimize -Re<g, W>
        return g;
    }

    /// Dense gradient of constraint `idx`; used for diagnostics and the
    /// per-user Newton columns (row-power gradients stay implicit elsewhere).
    Pt constraint_gradient(int idx, const Pt& x, const Eval& e) const {
        Pt g = Pt::zero(s_.t, s_.c, tail_dim_);
        if (idx < s_.t) {
            g.w.row(idx) = 2.0 * x.w.row(idx);
        } else {
            const int i = (idx - s_.t) / 3;
            const int kind = (idx - s_.t) % 3;
            if (kind == 0) {
                CVec mvec = CVec::Zero(s_.c);
                mvec(i) = -2.0 * s_.rate_coef[i] * std::conj(s_.z_s[i]);
                g.w = functional(s_.h_unit[i], mvec);
                g.tail(2 * i) = 1.0;
            } else if (kind == 1) {
                cdouble u = 0.0;
                for (int k = 0; k < s_.n_ue; ++k)
                    if (k != i) u += e.gains(i, k);
                CVec mvec = CVec::Zero(s_.c);
                for (int k = 0; k < s_.n_ue; ++k)
                    if (k != i) mvec(k) = 2.0 * s_.interf_coef[i] * std::conj(u);
                mvec(s_.n_ue) = 2.0 * s_.interf_coef[i] * std::conj(e.gains(i, s_.n_ue));
                g.w = functional(s_.h_unit[i], mvec);
                g.tail(2 * i + 1) = -1.0;
            } else {
                g.tail(2 * i) = -1.0;
                g.tail(2 * i + 1) = 1.0;
            }
        }
        if (phase1_) g.tail(s_index()) -= 1.0;
        return g;
    }

    /// r += sum_i weights_i * grad f_i(x).
    void accumulate_weighted_gradients(const Pt& x, const Eval& e, const RVec& weights, Pt& r) const {
        double s_coef = 0.0;
        for (int rr = 0; rr < s_.t; ++rr) {
            r.w.row(rr) += weights(rr) * 2.0 * x.w.row(rr);
            s_coef += weights(rr);
        }
        for (int i = 0; i < s_.n_ue; ++i) {
            const double wa = weights(s_.t + 3 * i);
            const double wb = weights(s_.t + 3 * i + 1);
            const double wc = weights(s_.t + 3 * i + 2);
            s_coef += wa + wb + wc;
            cdouble u = 0.0;
            for (int k = 0; k < s_.n_ue; ++k)
                if (k != i) u += e.gains(i, k);
            CVec mvec = CVec::Zero(s_.c);
            mvec(i) = -2.0 * wa * s_.rate_coef[i] * std::conj(s_.z_s[i]);
            for (int k = 0; k < s_.n_ue; ++k)
                if (k != i) mvec(k) += 2.0 * wb * s_.interf_coef[i] * std::conj(u);
            mvec(s_.n_ue) += 2.0 * wb * s_.interf_coef[i] * std::conj(e.gains(i, s_.n_ue));
            r.w += functional(s_.h_unit[i], mvec);
            r.tail(2 * i) += wa - wc;
            r.tail(2 * i + 1) += wc - wb;
        }
        if (phase1_) r.tail(s_index()) -= s_coef;
    }

    /// nabla f0 + sum_i lambda_i grad f_i.
    Pt dual_residual(const Pt& x, const Eval& e, const RVec& lambda) const {
        Pt r = objective_gradient();
        accumulate_weighted_gradients(x, e, lambda, r);
        return r;
    }

    /// Second-order coefficients q_i with f_i(x + s d) = f_i + s (g_i . d) + s^2 q_i.
    RVec step_quadratics(const Pt& d) const {
        RVec q = RVec::Zero(m_);
        for (int r = 0; r < s_.t; ++r) q(r) = d.w.row(r).squaredNorm();
        for (int i = 0; i < s_.n_ue; ++i) {
            const Eigen::RowVectorXcd dg = s_.h_unit[i].adjoint() * d.w;
            cdouble du = 0.0;
            for (int k = 0; k < s_.n_ue; ++k)
                if (k != i) du += dg(k);
            q(s_.t + 3 * i + 1) = s_.interf_coef[i] * (std::norm(du) + std::norm(dg(s_.n_ue)));
        }
        return q;
    }

    /// Largest step keeping every constraint below a fraction of its current
    /// margin; exact because the constraints are at most quadratic in s.
    double max_feasible_step(const Eval& e, const RVec& dots, const RVec& q, double fraction) const {
        double s_max = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m_; ++i) {
            const double target = fraction * e.f(i);  // still negative
            const double cc = e.f(i) - target;
            const double b = dots(i);
            const double a = q(i);
            double root;
            if (a <= 1e-300) {
                if (b <= 0.0) continue;
                root = -cc / b;
            } else {
                const double disc = b * b - 4.0 * a * cc;
                if (disc <= 0.0) continue;
                root = (-b + std::sqrt(disc)) / (2.0 * a);
                if (root <= 0.0) continue;
            }
            s_max = std::min(s_max, root);
        }
        return s_max;
    }

    /// grad f_i . d for every constraint i.
    RVec gradient_dots(const Pt& x, const Eval& e, const Pt& d) const {
        RVec out(m_);
        const double ds = phase1_ ? d.tail(s_index()) : 0.0;
        for (int r = 0; r < s_.t; ++r)
            out(r) = 2.0 * x.w.row(r).conjugate().cwiseProduct(d.w.row(r)).sum().real() - ds;
        for (int i = 0; i < s_.n_ue; ++i) {
            const Eigen::RowVectorXcd dg = s_.h_unit[i].adjoint() * d.w;
            cdouble u = 0.0, du = 0.0;
            for (int k = 0; k < s_.n_ue; ++k)
                if (k != i) {
                    u += e.gains(i, k);
                    du += dg(k);
                }
            out(s_.t + 3 * i) =
                d.tail(2 * i) - 2.0 * s_.rate_coef[i] * (std::conj(s_.z_s[i]) * dg(i)).real() - ds;
            out(s_.t + 3 * i + 1) =
                2.0 * s_.interf_coef[i] *
                    ((std::conj(u) * du).real() + (std::conj(e.gains(i, s_.n_ue)) * dg(s_.n_ue)).real()) -
                d.tail(2 * i + 1) - ds;
            out(s_.t + 3 * i + 2) = d.tail(2 * i + 1) - d.tail(2 * i) - ds;
        }
        return out;
    }

    /// Direct application of the Newton matrix
    ///   H d = sum_i curv_i hess(f_i) d + sum_i outer_i g_i (g_i . d),
    /// kept as an independent cross-check of the factored solve.
    Pt apply_hessian(const Pt& x, const Eval& e, const RVec& curv, const RVec& outer,
                     const Pt& d) const {
        Pt out = Pt::zero(s_.t, s_.c, tail_dim_);
        for (int r = 0; r < s_.t; ++r) out.w.row(r) += 2.0 * curv(r) * d.w.row(r);
        for (int i = 0; i < s_.n_ue; ++i) {
            const double lb = curv(s_.t + 3 * i + 1);
            const Eigen::RowVectorXcd dg = s_.h_unit[i].adjoint() * d.w;
            cdouble du = 0.0;
            for (int k = 0; k < s_.n_ue; ++k)
                if (k != i) du += dg(k);
            CVec mvec = CVec::Zero(s_.c);
            for (int k = 0; k < s_.n_ue; ++k)
                if (k != i) mvec(k) = 2.0 * lb * s_.interf_coef[i] * std::conj(du);
            mvec(s_.n_ue) = 2.0 * lb * s_.interf_coef[i] * std::conj(dg(s_.n_ue));
            out.w += functional(s_.h_unit[i], mvec);
        }
        const RVec dots = gradient_dots(x, e, d);
        RVec weights(m_);
        for (int i = 0; i < m_; ++i) weights(i) = outer(i) * dots(i);
        accumulate_weighted_gradients(x, e, weights, out);
        return out;
    }

private:
    Scaled s_;
    bool phase1_;
    int tail_dim_ = 0;
    int m_ = 0;
};

/// Factored Newton system: per-row (scalar + rank-1) blocks, a dense block
/// over the tail variables, and a low-rank Woodbury correction.
class NewtonSystem {
public:
    /// `curv` weights the constraint Hessians, `outer` the gradient outer
    /// products g_i g_i^T.
    NewtonSystem(const Solver& sol, const Pt& x, const Eval& e, const RVec& curv, const RVec& outer)
        : sol_(sol), x_(x) {
        const Scaled& s = sol.scaled();
        const bool p1 = sol.phase1();
        row_a_.resize(s.t);
        row_b_.resize(s.t);
        tail_block_ = RMat::Zero(sol.tail_dim(), sol.tail_dim());

        Pt phase1_cross = Pt::zero(s.t, s.c, sol.tail_dim());
        double s_diag = 0.0;
        for (int r = 0; r < s.t; ++r) {
            const double w = outer(r);
            row_a_(r) = 2.0 * curv(r) + 1e-12;
            row_b_(r) = 4.0 * w;
            if (p1) {
                s_diag += w;
                phase1_cross.w.row(r) = w * 2.0 * x.w.row(r);
            }
        }
        if (p1) tail_block_(sol.s_index(), sol.s_index()) += s_diag;

        for (int i = 0; i < s.n_ue; ++i) {
            const int base = s.t + 3 * i;
            const double wa = outer(base);
            const double wb = outer(base + 1);
            const double wc = outer(base + 2);
            const double lq = curv(base + 1);

            // curvature factors of the interference cap
            CVec mu = CVec::Zero(s.c);
            for (int k = 0; k < s.n_ue; ++k)
                if (k != i) mu(k) = 1.0;
            CVec mv = CVec::Zero(s.c);
            mv(s.n_ue) = 1.0;
            push_diag(make_body(functional(s.h_unit[i], mu)), 2.0 * lq * s.interf_coef[i]);
            push_diag(make_body(functional(s.h_unit[i], cdouble(0, -1) * mu)), 2.0 * lq * s.interf_coef[i]);
            push_diag(make_body(functional(s.h_unit[i], mv)), 2.0 * lq * s.interf_coef[i]);
            push_diag(make_body(functional(s.h_unit[i], cdouble(0, -1) * mv)), 2.0 * lq * s.interf_coef[i]);

            // gradient outer products, split into body/tail pairs
            push_pair(sol.constraint_gradient(base, x, e), wa);
            push_pair(sol.constraint_gradient(base + 1, x, e), wb);
            const Pt gc = sol.constraint_gradient(base + 2, x, e);
            tail_block_ += wc * gc.tail * gc.tail.transpose();
        }
        if (p1) {
            Pt es = Pt::zero(s.t, s.c, sol.tail_dim());
            es.tail(sol.s_index()) = 1.0;
            const int j = add_col(std::move(phase1_cross));
            const int k = add_col(std::move(es));
            core_blocks_.push_back({j, k, 0.0, -1.0, -1.0, 0.0});
        }

        tail_ldlt_.compute(tail_block_);
        factor_core();
    }

    Pt solve(const Pt& rhs) const {
        Pt y = apply_binv(rhs);
        if (!cols_.empty()) {
            const int r = static_cast<int>(cols_.size());
            RVec vty(r);
            for (int j = 0; j < r; ++j) vty(j) = cols_[j].dot(y);
            const RVec corr =
                core_scale_.asDiagonal() * core_solver_.solve(RVec(core_scale_.asDiagonal() * vty));
            Pt acc = Pt::zero(static_cast<int>(x_.w.rows()), static_cast<int>(x_.w.cols()),
                              static_cast<int>(rhs.tail.size()));
            for (int j = 0; j < r; ++j) acc.axpy(corr(j), cols_[j]);
            y.axpy(-1.0, apply_binv(acc));
        }
        return y;
    }

private:
    struct CoreBlock {
        int j, k;
        double a, b, c, d;  // 2x2 [[a, b], [c, d]] on columns (j, k); j == k means 1x1 [a]
    };

    Pt make_body(const CMat& w) const {
        Pt p = Pt::zero(static_cast<int>(x_.w.rows()), static_cast<int>(x_.w.cols()), sol_.tail_dim());
        p.w = w;
        return p;
    }

    int add_col(Pt p) {
        cols_.push_back(std::move(p));
        return static_cast<int>(cols_.size()) - 1;
    }

    void push_diag(Pt col, double weight) {
        if (weight <= 0.0) return;
        const int j = add_col(std::move(col));
        core_blocks_.push_back({j, j, weight, 0, 0, 0});
    }

    void push_pair(const Pt& g, double w) {
        Pt body = g;
        body.tail.setZero();
        Pt tail = Pt::zero(static_cast<int>(x_.w.rows()), static_cast<int>(x_.w.cols()), sol_.tail_dim());
        tail.tail = g.tail;
        tail_block_ += w * g.tail * g.tail.transpose();
        const int j = add_col(std::move(body));
        const int k = add_col(std::move(tail));
        core_blocks_.push_back({j, k, w, w, w, 0.0});
    }

    void factor_core() {
        const int r = static_cast<int>(cols_.size());
        if (r == 0) return;
        // core = S^-1 + V^T B^-1 V, with S assembled from the 1x1/2x2 blocks
        RMat core = RMat::Zero(r, r);
        for (const auto& blk : core_blocks_) {
            if (blk.j == blk.k) {
                core(blk.j, blk.j) += 1.0 / blk.a;
            } else {
                const double det = blk.a * blk.d - blk.b * blk.c;
                core(blk.j, blk.j) += blk.d / det;
                core(blk.j, blk.k) += -blk.b / det;
                core(blk.k, blk.j) += -blk.c / det;
                core(blk.k, blk.k) += blk.a / det;
            }
        }
        binv_cols_.clear();
        binv_cols_.reserve(r);
        for (const auto& c : cols_) binv_cols_.push_back(apply_binv(c));
        for (int a = 0; a < r; ++a)
            for (int b = 0; b <= a; ++b) {
                const double vab = cols_[a].dot(binv_cols_[b]);
                core(a, b) += vab;
                if (a != b) core(b, a) += vab;
            }
        // symmetric equilibration evens out the wildly mixed barrier weights
        core_scale_.resize(r);
        for (int a = 0; a < r; ++a)
            core_scale_(a) = 1.0 / std::sqrt(std::max(std::abs(core(a, a)), 1e-300));
        core_solver_.compute(core_scale_.asDiagonal() * core * core_scale_.asDiagonal());
    }

    Pt apply_binv(const Pt& v) const {
        Pt out = v;
        for (int r = 0; r < row_a_.size(); ++r) {
            const double a = row_a_(r);
            const double b = row_b_(r);
            const double rn2 = x_.w.row(r).squaredNorm();
            const double proj = x_.w.row(r).conjugate().cwiseProduct(v.w.row(r)).sum().real();
            out.w.row(r) = v.w.row(r) / a - (b * proj / (a * (a + b * rn2))) * x_.w.row(r);
        }
        if (v.tail.size() > 0) out.tail = tail_ldlt_.solve(v.tail);
        return out;
    }

    const Solver& sol_;
    const Pt& x_;
    RVec row_a_, row_b_;
    RMat tail_block_;
    Eigen::LDLT<RMat> tail_ldlt_;
    std::vector<Pt> cols_;
    std::vector<Pt> binv_cols_;
    std::vector<CoreBlock> core_blocks_;
    RVec core_scale_;
    Eigen::FullPivLU<RMat> core_solver_;
};

/// Dense realification of the Newton matrix for the rare iterates where the
/// factored solve loses accuracy; LDLT with pivoting tolerates the stiff
/// active-constraint directions.
class DenseNewtonFallback {
public:
    DenseNewtonFallback(const Solver& sol, const Pt& x, const Eval& e, const RVec& curv,
                        const RVec& outer) {
        const Scaled& s = sol.scaled();
        t_ = s.t;
        c_ = s.c;
        tail_ = sol.tail_dim();
        n_ = 2 * t_ * c_ + tail_;
        RMat h(n_, n_);
        Pt basis = Pt::zero(t_, c_, tail_);
        for (int j = 0; j < n_; ++j) {
            set_coord(basis, j, 1.0);
            const Pt col = sol.apply_hessian(x, e, curv, outer, basis);
            set_coord(basis, j, 0.0);
            for (int i = 0; i < n_; ++i) h(i, j) = get_coord(col, i);
        }
        ldlt_.compute(h);
    }

    Pt solve(const Pt& rhs) const {
        RVec b(n_);
        for (int i = 0; i < n_; ++i) b(i) = get_coord(rhs, i);
        const RVec y = ldlt_.solve(b);
        Pt out = Pt::zero(t_, c_, tail_);
        for (int i = 0; i < n_; ++i) set_coord(out, i, y(i));
        return out;
    }

private:
    void set_coord(Pt& p, int idx, double v) const {
        if (idx < t_ * c_)
            p.w(idx % t_, idx / t_) = cdouble(v, p.w(idx % t_, idx / t_).imag());
        else if (idx < 2 * t_ * c_) {
            const int k = idx - t_ * c_;
            p.w(k % t_, k / t_) = cdouble(p.w(k % t_, k / t_).real(), v);
        } else {
            p.tail(idx - 2 * t_ * c_) = v;
        }
    }

    double get_coord(const Pt& p, int idx) const {
        if (idx < t_ * c_) return p.w(idx % t_, idx / t_).real();
        if (idx < 2 * t_ * c_) {
            const int k = idx - t_ * c_;
            return p.w(k % t_, k / t_).imag();
        }
        return p.tail(idx - 2 * t_ * c_);
    }

    int t_ = 0, c_ = 0, tail_ = 0, n_ = 0;
    Eigen::LDLT<RMat> ldlt_;
};

struct IterateResult {
    Pt x;
    bool converged = false;
    double kkt_stat_rel = std::numeric_limits<double>::infinity();
    double kkt_gap_rel = std::numeric_limits<double>::infinity();
    int newton_iters = 0;
};

/// Barrier method shared by both phases: Newton centering on
/// psi(x) = t f0(x) + sum_i -log(-f_i(x)) with a geometric t schedule.
/// `x0` must be strictly feasible. The dual estimate 1/(t (-f_i)) gives the
/// reported KKT residuals; the average complementarity equals 1/t exactly.
inline IterateResult run(const Solver& sol, Pt x0, double tol, int max_iters,
                         const std::function<bool(const Pt&, const Eval&)>& early_exit = nullptr) {
    constexpr double kMu = 20.0;
    constexpr double kArmijo = 0.25;
    constexpr double kBeta = 0.5;
    constexpr double kCenterTol = 1e-10;  // half squared Newton decrement

    IterateResult res;
    res.x = std::move(x0);
    const int m = sol.m();
    Eval e = sol.evaluate(res.x);

    const Pt g0 = sol.objective_gradient();
    const double g0_norm = g0.norm();
    auto barrier = [&](const Eval& ev) {
        double phi = 0.0;
        for (int i = 0; i < m; ++i) phi -= std::log(-ev.f(i));
        return phi;
    };

    double t = 1.0;
    bool centered = false;
    while (res.newton_iters < max_iters) {
        if (early_exit && early_exit(res.x, e)) {
            res.converged = true;
            return res;
        }

        // gradient of psi and the matching dual estimate
        RVec inv_f(m), curv(m), outer(m);
        for (int i = 0; i < m; ++i) {
            inv_f(i) = 1.0 / (-e.f(i));
            curv(i) = inv_f(i);
            outer(i) = inv_f(i) * inv_f(i);
        }
        Pt grad_psi = g0;
        grad_psi.w *= t;
        grad_psi.tail *= t;
        sol.accumulate_weighted_gradients(res.x, e, inv_f, grad_psi);

        res.kkt_stat_rel = grad_psi.norm() / (t * (1.0 + g0_norm));
        res.kkt_gap_rel = 1.0 / t;
        if (res.kkt_stat_rel < tol && res.kkt_gap_rel < tol) {
            res.converged = true;
            return res;
        }
        if (!std::isfinite(res.kkt_stat_rel)) return res;
        if (centered || res.kkt_stat_rel < 0.5 * tol) {
            if (t > 1e3 / tol) return res;  // path followed to the numerical floor
            t *= kMu;
            centered = false;
            continue;
        }

        NewtonSystem sys(sol, res.x, e, curv, outer);
        Pt rhs = grad_psi;
        rhs.w = -rhs.w;
        rhs.tail = -rhs.tail;
        Pt dx = sys.solve(rhs);
        ++res.newton_iters;
        {
            // verify the factored solve; fall back to a pivoted dense solve
            // when the barrier weights have degraded it
            Pt resid = sol.apply_hessian(res.x, e, curv, outer, dx);
            resid.axpy(-1.0, rhs);
            if (!(resid.norm() <= 1e-8 * (1.0 + rhs.norm()))) {
                DenseNewtonFallback dense(sol, res.x, e, curv, outer);
                Pt dx2 = dense.solve(rhs);
                Pt resid2 = sol.apply_hessian(res.x, e, curv, outer, dx2);
                resid2.axpy(-1.0, rhs);
                if (resid2.norm() < resid.norm()) dx = std::move(dx2);
            }
        }

        const double decrement2 = -grad_psi.dot(dx);
        if (!(decrement2 * 0.5 > kCenterTol)) {
            centered = true;
            continue;
        }

        const RVec dots = sol.gradient_dots(res.x, e, dx);
        const RVec quads = sol.step_quadratics(dx);
        double step = std::min(1.0, sol.max_feasible_step(e, dots, quads, 0.01));

        const double psi0 = t * g0.dot(res.x) + barrier(e);
        bool accepted = false;
        for (int ls_iter = 0; ls_iter < 80; ++ls_iter) {
            Pt xn = res.x;
            xn.axpy(step, dx);
            Eval en = sol.evaluate(xn);
            if (en.max_f < 0.0) {
                const double psi_n = t * g0.dot(xn) + barrier(en);
                if (psi_n <= psi0 - kArmijo * step * decrement2) {
                    res.x = std::move(xn);
                    e = std::move(en);
                    accepted = true;
                    break;
                }
            }
            step *= kBeta;
        }
        // a failed or microscopic step means this centering problem is at its
        // numerical floor; move on along the path
        if (!accepted || step < 1e-9) centered = true;
    }
    return res;
}

/// Strictly feasible point seeded from a hint, if the hint is deep enough
/// inside the constraint set for slack values to be read off directly.
inline std::optional<Pt> interior_from_hint(const Solver& sol, const CMat& w_hint) {
    const Scaled& s = sol.scaled();
    Pt x = Pt::zero(s.t, s.c, sol.tail_dim());
    x.w = w_hint;
    double max_rn = 0.0;
    for (int r = 0; r < s.t; ++r) max_rn = std::max(max_rn, x.w.row(r).squaredNorm());
    if (max_rn > 0.98) x.w *= std::sqrt(0.98 / max_rn);

    for (int i = 0; i < s.n_ue; ++i) {
        const cdouble zeta = s.h_unit[i].dot(x.w.col(i));
        cdouble u = 0.0;
        for (int k = 0; k < s.n_ue; ++k)
            if (k != i) u += s.h_unit[i].dot(x.w.col(k));
        const cdouble v = s.h_unit[i].dot(x.w.col(s.n_ue));
        const double rate =
            s.rate_coef[i] * (2.0 * (std::conj(s.z_s[i]) * zeta).real() - std::norm(s.z_s[i]));
        const double load = s.interf_coef[i] * (std::norm(u) + std::norm(v)) + s.noise_s[i];
        const double tau_d = load * 1.02 + 1e-4;
        if (rate * 0.999 <= tau_d * 1.001 + 1e-6) return std::nullopt;
        x.tail(2 * i + 1) = tau_d;
        x.tail(2 * i) = 0.5 * (tau_d + rate * 0.999);
    }
    const Eval e = sol.evaluate(x);
    if (e.max_f >= -1e-9) return std::nullopt;
    return x;
}

}  // namespace detail

/// Solves the subproblem. `w_anchor` seeds the interior-point search; when
/// it is not close enough to feasibility a phase-I search runs first. When
/// no strictly feasible point exists the status is `infeasible`.
inline Result solve_subproblem(const Subproblem& p, const CMat& w_anchor, double tol = 1e-6,
                               int max_newton = 300) {
    using namespace detail;
    const Scaled s = Scaled::build(p);
    Result out;

    Solver phase2(s, false);
    std::optional<Pt> start = interior_from_hint(phase2, CMat(w_anchor / s.w_scale));

    if (!start) {
        Solver phase1(s, true);
        Pt x0 = Pt::zero(s.t, s.c, phase1.tail_dim());
        x0.w = w_anchor / s.w_scale;
        double max_rn = 0.0;
        for (int r = 0; r < s.t; ++r) max_rn = std::max(max_rn, x0.w.row(r).squaredNorm());
        if (max_rn > 0.9) x0.w *= std::sqrt(0.9 / max_rn);
        for (int i = 0; i < s.n_ue; ++i) {
            x0.tail(2 * i) = 0.5;
            x0.tail(2 * i + 1) = 0.25;
        }
        {
            Pt probe = x0;  // margin variable goes strictly above all constraint values
            probe.tail(phase1.s_index()) = 0.0;
            const Eval e0 = phase1.evaluate(probe);
            x0.tail(phase1.s_index()) = e0.max_f + std::max(1.0, 0.1 * std::abs(e0.max_f));
        }
        constexpr double kMargin = 1e-7;
        auto exit_when_interior = [&](const Pt& x, const Eval& e) {
            const double sp = x.tail(phase1.s_index());
            double body = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < phase1.m(); ++i) body = std::max(body, e.f(i) + sp);
            return body < -kMargin;
        };
        IterateResult p1 = run(phase1, std::move(x0), tol, max_newton, exit_when_interior);
        out.newton_iters += p1.newton_iters;
        const Eval e1 = phase1.evaluate(p1.x);
        double body = -std::numeric_limits<double>::infinity();
        const double sp = p1.x.tail(phase1.s_index());
        for (int i = 0; i < phase1.m(); ++i) body = std::max(body, e1.f(i) + sp);
        if (body >= -kMargin) {
            out.status = SolveStatus::infeasible;
            return out;
        }
        Pt x2 = Pt::zero(s.t, s.c, phase2.tail_dim());
        x2.w = p1.x.w;
        x2.tail = p1.x.tail.head(phase2.tail_dim());
        start = std::move(x2);
    }

    IterateResult p2 = run(phase2, std::move(*start), tol, max_newton);
    out.newton_iters += p2.newton_iters;
    out.w = p2.x.w * s.w_scale;
    out.kkt_stationarity = p2.kkt_stat_rel;
    out.kkt_complementarity = p2.kkt_gap_rel;
    out.status = p2.converged ? SolveStatus::ok : SolveStatus::max_iterations;
    return out;
}

}  // namespace ipm
}  // namespace cfisac
