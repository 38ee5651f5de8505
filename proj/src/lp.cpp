#include "robroute/lp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "robroute/errors.hpp"

namespace robroute::opt {

void LpProblem::add_row_sparse(const std::vector<std::pair<int, double>>& terms, Rel rel, double rhs) {
    std::vector<double> coeffs(static_cast<std::size_t>(n_vars()), 0.0);
    for (const auto& [var, coeff] : terms) coeffs[static_cast<std::size_t>(var)] += coeff;
    add_row(std::move(coeffs), rel, rhs);
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::node_limit: return "node_limit";
        case SolveStatus::iteration_limit: return "iteration_limit";
    }
    return "?";
}

namespace {

enum class VarState : unsigned char { basic, at_lower, at_upper, free_zero };

constexpr double kPivotTol = 1e-9;

// Bounded-variable primal simplex on the full dense tableau.
//
// Layout: columns [0, ns) structural, [ns, ns+m) slacks (+1 coefficient,
// bounds by relation), [ns+m, ...) artificials added only for rows whose
// slack cannot absorb the initial residual. The initial basis matrix is the
// identity, so tableau row i starts as row i of [A | I | sigma_i e_i].
class Simplex {
  public:
    Simplex(const LpProblem& p, const LpOptions& opts) : p_(p), opts_(opts) { build(); }

    LpResult run() {
        LpResult res;
        // Phase 1: drive artificial variables (and nothing else has cost) to zero.
        if (n_art_ > 0) {
            set_phase_costs(true);
            const SolveStatus st = iterate();
            if (st == SolveStatus::iteration_limit) return limit_result();
            const double infeas = phase1_value();
            if (infeas > opts_.feas_tol * (1.0 + rhs_scale_)) {
                res.status = SolveStatus::infeasible;
                res.iterations = iterations_;
                return res;
            }
            // Pin artificials at zero for phase 2.
            for (int j = first_art_; j < total_; ++j) {
                lo_[j] = 0.0;
                hi_[j] = 0.0;
                if (state_[j] != VarState::basic) {
                    x_[j] = 0.0;
                    state_[j] = VarState::at_lower;
                }
            }
        }
        set_phase_costs(false);
        const SolveStatus st = iterate();
        if (st == SolveStatus::iteration_limit) return limit_result();
        if (st == SolveStatus::unbounded) {
            res.status = SolveStatus::unbounded;
            res.iterations = iterations_;
            return res;
        }
        res.status = SolveStatus::optimal;
        res.iterations = iterations_;
        res.x.assign(x_.begin(), x_.begin() + p_.n_vars());
        res.objective = 0.0;
        for (int j = 0; j < p_.n_vars(); ++j) res.objective += p_.objective[static_cast<std::size_t>(j)] * x_[j];
        res.duals.resize(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) res.duals[static_cast<std::size_t>(i)] = -reduced_[ns_ + i];
        return res;
    }

  private:
    const LpProblem& p_;
    LpOptions opts_;

    int m_ = 0;        // rows
    int ns_ = 0;       // structural vars
    int n_art_ = 0;    // artificials
    int first_art_ = 0;
    int total_ = 0;    // structural + slack + artificial

    std::vector<double> tab_;      // m x total, row-major
    std::vector<double> x_;        // current value per column
    std::vector<double> lo_, hi_;
    std::vector<double> cost_;     // phase-dependent
    std::vector<double> reduced_;  // reduced costs, maintained incrementally
    std::vector<int> basis_;       // column of the basic variable per row
    std::vector<VarState> state_;
    long iterations_ = 0;
    int degenerate_streak_ = 0;
    long max_iterations_ = 0;
    double rhs_scale_ = 0.0;

    double* row(int i) { return tab_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(total_); }

    void build() {
        m_ = static_cast<int>(p_.rows.size());
        ns_ = p_.n_vars();

        for (const auto& r : p_.rows) {
            require(static_cast<int>(r.coeffs.size()) == ns_, ErrorCode::DimensionMismatch,
                    "constraint row width != variable count");
            rhs_scale_ = std::max(rhs_scale_, std::fabs(r.rhs));
        }

        // Initial nonbasic values: finite lower bound if any, else finite
        // upper, else 0 (free).
        x_.assign(static_cast<std::size_t>(ns_), 0.0);
        state_.assign(static_cast<std::size_t>(ns_), VarState::free_zero);
        lo_ = p_.lower;
        hi_ = p_.upper;
        for (int j = 0; j < ns_; ++j) {
            require(lo_[j] <= hi_[j] + 1e-15, ErrorCode::InvalidArgument, "empty variable bound range");
            if (std::isfinite(lo_[j])) {
                x_[j] = lo_[j];
                state_[j] = VarState::at_lower;
            } else if (std::isfinite(hi_[j])) {
                x_[j] = hi_[j];
                state_[j] = VarState::at_upper;
            }
        }

        // Slack bounds by relation; coefficient +1 keeps the initial basis an identity.
        std::vector<double> resid(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            const auto& r = p_.rows[static_cast<std::size_t>(i)];
            double s = r.rhs;
            for (int j = 0; j < ns_; ++j) s -= r.coeffs[static_cast<std::size_t>(j)] * x_[j];
            resid[static_cast<std::size_t>(i)] = s;
            switch (r.rel) {
                case Rel::le: lo_.push_back(0.0); hi_.push_back(kInf); break;
                case Rel::ge: lo_.push_back(-kInf); hi_.push_back(0.0); break;
                case Rel::eq: lo_.push_back(0.0); hi_.push_back(0.0); break;
            }
            x_.push_back(0.0);
            state_.push_back(VarState::at_lower);
        }

        // Artificials where the slack cannot hold the residual.
        std::vector<int> art_rows;
        basis_.assign(static_cast<std::size_t>(m_), -1);
        for (int i = 0; i < m_; ++i) {
            const int sj = ns_ + i;
            const double s = resid[static_cast<std::size_t>(i)];
            if (s >= lo_[sj] - 1e-300 && s <= hi_[sj] + 1e-300) {
                basis_[static_cast<std::size_t>(i)] = sj;
                x_[sj] = s;
                state_[sj] = VarState::basic;
            } else {
                art_rows.push_back(i);
            }
        }
        n_art_ = static_cast<int>(art_rows.size());
        first_art_ = ns_ + m_;
        total_ = ns_ + m_ + n_art_;

        tab_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(total_), 0.0);
        for (int i = 0; i < m_; ++i) {
            double* t = row(i);
            const auto& r = p_.rows[static_cast<std::size_t>(i)];
            for (int j = 0; j < ns_; ++j) t[j] = r.coeffs[static_cast<std::size_t>(j)];
            t[ns_ + i] = 1.0;
        }
        for (int k = 0; k < n_art_; ++k) {
            const int i = art_rows[static_cast<std::size_t>(k)];
            const int sj = ns_ + i;
            const int aj = first_art_ + k;
            // Slack pinned at its nearest bound; artificial takes the rest with
            // a sign-matched one-sided bound so the identity basis stays valid.
            const double sb = std::isfinite(lo_[sj]) ? lo_[sj] : hi_[sj];
            x_[sj] = sb;
            state_[sj] = (sb == lo_[sj]) ? VarState::at_lower : VarState::at_upper;
            const double a = resid[static_cast<std::size_t>(i)] - sb;
            row(i)[aj] = 1.0;
            if (a >= 0.0) {
                lo_.push_back(0.0);
                hi_.push_back(kInf);
            } else {
                lo_.push_back(-kInf);
                hi_.push_back(0.0);
            }
            x_.push_back(a);
            state_.push_back(VarState::basic);
            basis_[static_cast<std::size_t>(i)] = aj;
        }

        cost_.assign(static_cast<std::size_t>(total_), 0.0);
        reduced_.assign(static_cast<std::size_t>(total_), 0.0);
        max_iterations_ = opts_.max_iterations > 0
                              ? opts_.max_iterations
                              : 5000 + 200L * static_cast<long>(m_ + total_);
    }

    void set_phase_costs(bool phase1) {
        std::fill(cost_.begin(), cost_.end(), 0.0);
        if (phase1) {
            for (int j = first_art_; j < total_; ++j) cost_[static_cast<std::size_t>(j)] = (lo_[j] == 0.0) ? 1.0 : -1.0;
        } else {
            for (int j = 0; j < ns_; ++j) cost_[static_cast<std::size_t>(j)] = p_.objective[static_cast<std::size_t>(j)];
        }
        recompute_reduced();
        degenerate_streak_ = 0;
    }

    void recompute_reduced() {
        // reduced_j = c_j - c_B^T (B^-1 A_j); the tableau already stores B^-1 A.
        std::vector<double> cb(static_cast<std::size_t>(m_));
        bool any = false;
        for (int i = 0; i < m_; ++i) {
            cb[static_cast<std::size_t>(i)] = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
            if (cb[static_cast<std::size_t>(i)] != 0.0) any = true;
        }
        reduced_ = cost_;
        if (!any) return;
        for (int i = 0; i < m_; ++i) {
            const double w = cb[static_cast<std::size_t>(i)];
            if (w == 0.0) continue;
            const double* t = row(i);
            for (int j = 0; j < total_; ++j) reduced_[static_cast<std::size_t>(j)] -= w * t[j];
        }
        for (int i = 0; i < m_; ++i) reduced_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = 0.0;
    }

    double phase1_value() const {
        double v = 0.0;
        for (int j = first_art_; j < total_; ++j) v += cost_[static_cast<std::size_t>(j)] * x_[j];
        return v;
    }

    LpResult limit_result() const {
        LpResult res;
        res.status = SolveStatus::iteration_limit;
        res.iterations = iterations_;
        return res;
    }

    // Eligible to improve: increase from lower/free with negative reduced
    // cost, or decrease from upper/free with positive reduced cost.
    bool eligible(int j, int& dir) const {
        if (state_[static_cast<std::size_t>(j)] == VarState::basic) return false;
        const double d = reduced_[static_cast<std::size_t>(j)];
        if ((state_[static_cast<std::size_t>(j)] == VarState::at_lower ||
             state_[static_cast<std::size_t>(j)] == VarState::free_zero) &&
            d < -opts_.opt_tol) {
            dir = +1;
            return true;
        }
        if ((state_[static_cast<std::size_t>(j)] == VarState::at_upper ||
             state_[static_cast<std::size_t>(j)] == VarState::free_zero) &&
            d > opts_.opt_tol) {
            dir = -1;
            return true;
        }
        return false;
    }

    SolveStatus iterate() {
        while (true) {
            if (iterations_ >= max_iterations_) return SolveStatus::iteration_limit;

            const bool bland = degenerate_streak_ >= opts_.degeneracy_threshold;
            int enter = -1, dir = 0;
            if (bland) {
                for (int j = 0; j < total_; ++j) {
                    int d;
                    if (eligible(j, d)) {
                        enter = j;
                        dir = d;
                        break;
                    }
                }
            } else {
                double best = 0.0;
                for (int j = 0; j < total_; ++j) {
                    int d;
                    if (!eligible(j, d)) continue;
                    const double mag = std::fabs(reduced_[static_cast<std::size_t>(j)]);
                    if (mag > best) {
                        best = mag;
                        enter = j;
                        dir = d;
                    }
                }
            }
            if (enter < 0) return SolveStatus::optimal;

            // Ratio test: step t >= 0 moves x_enter by dir*t, basics by -dir*t*column.
            double t_best = hi_[enter] - lo_[enter]; // bound-flip distance (inf ok)
            int leave_row = -1;
            double leave_pivot = 0.0;
            int leave_to_upper = 0;
            for (int i = 0; i < m_; ++i) {
                const double a = row(i)[enter];
                if (std::fabs(a) <= kPivotTol) continue;
                const int k = basis_[static_cast<std::size_t>(i)];
                const double rate = -static_cast<double>(dir) * a; // d x_k / dt
                double room;
                int to_upper;
                if (rate > 0.0) {
                    room = hi_[k] - x_[k];
                    to_upper = 1;
                } else {
                    room = x_[k] - lo_[k];
                    to_upper = 0;
                }
                if (!std::isfinite(room)) continue;
                if (room < 0.0) room = 0.0; // tolerate tiny bound drift
                const double t_i = room / std::fabs(rate);
                bool take = false;
                if (t_i < t_best - 1e-12) {
                    take = true;
                } else if (t_i <= t_best + 1e-12) {
                    if (leave_row < 0) {
                        take = true;
                    } else if (bland ? (k < basis_[static_cast<std::size_t>(leave_row)])
                                     : (std::fabs(a) > std::fabs(leave_pivot))) {
                        take = true;
                    }
                }
                if (take) {
                    t_best = std::min(t_best, t_i);
                    leave_row = i;
                    leave_pivot = a;
                    leave_to_upper = to_upper;
                }
            }

            if (leave_row < 0) {
                if (!std::isfinite(t_best)) return SolveStatus::unbounded;
                // Bound flip: entering variable crosses to its other bound.
                apply_step(enter, dir, t_best);
                x_[enter] = (dir > 0) ? hi_[enter] : lo_[enter];
                state_[enter] = (dir > 0) ? VarState::at_upper : VarState::at_lower;
                ++iterations_;
                degenerate_streak_ = (t_best <= 1e-12) ? degenerate_streak_ + 1 : 0;
                continue;
            }

            apply_step(enter, dir, t_best);
            pivot(leave_row, enter, leave_to_upper);
            ++iterations_;
            degenerate_streak_ = (t_best <= 1e-12) ? degenerate_streak_ + 1 : 0;
        }
    }

    void apply_step(int enter, int dir, double t) {
        if (t == 0.0) return;
        for (int i = 0; i < m_; ++i) {
            const double a = row(i)[enter];
            if (a == 0.0) continue;
            const int k = basis_[static_cast<std::size_t>(i)];
            x_[k] -= static_cast<double>(dir) * t * a;
        }
        x_[enter] += static_cast<double>(dir) * t;
    }

    void pivot(int r, int enter, int leave_to_upper) {
        const int leave = basis_[static_cast<std::size_t>(r)];
        // Snap the leaving variable exactly onto the bound it hit.
        x_[leave] = leave_to_upper ? hi_[leave] : lo_[leave];
        state_[leave] = leave_to_upper ? VarState::at_upper : VarState::at_lower;

        double* pr = row(r);
        const double piv = pr[enter];
        const double inv = 1.0 / piv;
        for (int j = 0; j < total_; ++j) pr[j] *= inv;
        pr[enter] = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* ti = row(i);
            const double f = ti[enter];
            if (f == 0.0) continue;
            for (int j = 0; j < total_; ++j) ti[j] -= f * pr[j];
            ti[enter] = 0.0;
        }
        const double dred = reduced_[static_cast<std::size_t>(enter)];
        if (dred != 0.0) {
            for (int j = 0; j < total_; ++j) reduced_[static_cast<std::size_t>(j)] -= dred * pr[j];
        }
        reduced_[static_cast<std::size_t>(enter)] = 0.0;
        basis_[static_cast<std::size_t>(r)] = enter;
        state_[static_cast<std::size_t>(enter)] = VarState::basic;
    }
};

} // namespace

LpResult solve_lp(const LpProblem& p, const LpOptions& opts) {
    Simplex s(p, opts);
    return s.run();
}

void write_lp_text(const LpProblem& p, std::ostream& out, const std::string& name) {
    out << "\\ " << name << "\nMinimize\n obj:";
    for (int j = 0; j < p.n_vars(); ++j) {
        const double c = p.objective[static_cast<std::size_t>(j)];
        if (c == 0.0) continue;
        out << (c >= 0 ? " + " : " - ") << std::fabs(c) << " y" << j;
    }
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const auto& r = p.rows[i];
        out << " c" << i << ":";
        for (int j = 0; j < p.n_vars(); ++j) {
            const double a = r.coeffs[static_cast<std::size_t>(j)];
            if (a == 0.0) continue;
            out << (a >= 0 ? " + " : " - ") << std::fabs(a) << " y" << j;
        }
        switch (r.rel) {
            case Rel::le: out << " <= "; break;
            case Rel::eq: out << " = "; break;
            case Rel::ge: out << " >= "; break;
        }
        out << r.rhs << "\n";
    }
    out << "Bounds\n";
    for (int j = 0; j < p.n_vars(); ++j) {
        const double lo = p.lower[static_cast<std::size_t>(j)];
        const double hi = p.upper[static_cast<std::size_t>(j)];
        if (!std::isfinite(lo) && !std::isfinite(hi)) {
            out << " y" << j << " free\n";
        } else if (!std::isfinite(hi)) {
            out << " y" << j << " >= " << lo << "\n";
        } else if (!std::isfinite(lo)) {
            out << " y" << j << " <= " << hi << "\n";
        } else {
            out << " " << lo << " <= y" << j << " <= " << hi << "\n";
        }
    }
    out << "End\n";
}

} // namespace robroute::opt
