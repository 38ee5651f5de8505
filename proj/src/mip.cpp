#include "robroute/mip.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "robroute/errors.hpp"

namespace robroute::opt {

namespace {

struct Node {
    long id = 0;
    int parent = -1;
    int branch_var = -1;
    double lo = 0.0, hi = 0.0;
    double bound = -kInf; // parent LP value; refined after solving
};

struct QueueEntry {
    double bound;
    long id;
    bool operator>(const QueueEntry& o) const {
        if (bound != o.bound) return bound > o.bound;
        return id > o.id;
    }
};

} // namespace

MipResult solve_mip(const MipProblem& p, CutOracle* oracle, const MipLimits& limits) {
    const int n = p.lp.n_vars();
    require(static_cast<int>(p.is_integer.size()) == n, ErrorCode::DimensionMismatch,
            "integer mask size mismatch");
    for (int j = 0; j < n; ++j) {
        if (p.is_integer[static_cast<std::size_t>(j)]) {
            require(std::isfinite(p.lp.lower[static_cast<std::size_t>(j)]) &&
                        std::isfinite(p.lp.upper[static_cast<std::size_t>(j)]),
                    ErrorCode::InvalidArgument, "integer variable needs finite bounds");
        }
    }

    std::vector<Node> arena;
    arena.push_back(Node{});
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> open;
    open.push(QueueEntry{-kInf, 0});

    std::vector<LinRow> cut_pool;
    MipResult best;
    best.status = SolveStatus::infeasible;
    bool have_incumbent = false;
    double incumbent = kInf;
    long nodes_solved = 0;
    bool hit_node_limit = false;
    bool root_unbounded = false;

    LpProblem work = p.lp;

    auto node_bounds = [&](long id, std::vector<double>& lo, std::vector<double>& hi) {
        lo = p.lp.lower;
        hi = p.lp.upper;
        long cur = id;
        while (cur > 0) {
            const Node& nd = arena[static_cast<std::size_t>(cur)];
            lo[static_cast<std::size_t>(nd.branch_var)] = std::max(lo[static_cast<std::size_t>(nd.branch_var)], nd.lo);
            hi[static_cast<std::size_t>(nd.branch_var)] = std::min(hi[static_cast<std::size_t>(nd.branch_var)], nd.hi);
            cur = nd.parent;
        }
    };

    auto prune_tol = [&]() { return have_incumbent ? limits.rel_gap * std::max(1.0, std::fabs(incumbent)) : 0.0; };

    while (!open.empty()) {
        if (nodes_solved >= limits.max_nodes) {
            hit_node_limit = true;
            break;
        }
        const QueueEntry entry = open.top();
        open.pop();
        if (have_incumbent && entry.bound >= incumbent - prune_tol()) continue;

        node_bounds(entry.id, work.lower, work.upper);
        bool bad_range = false;
        for (int j = 0; j < n && !bad_range; ++j) {
            if (work.lower[static_cast<std::size_t>(j)] > work.upper[static_cast<std::size_t>(j)]) bad_range = true;
        }
        if (bad_range) continue;

        ++nodes_solved;

        // Solve the node LP; loop with oracle separation until clean.
        work.rows = p.lp.rows;
        for (const auto& c : cut_pool) work.rows.push_back(c);
        LpResult lp = solve_lp(work, limits.lp);
        int cuts_added = 0;
        while (lp.status == SolveStatus::optimal && oracle && cuts_added < limits.cuts_per_node) {
            if (have_incumbent && lp.objective >= incumbent - prune_tol()) break;
            auto cuts = oracle->cuts(lp.x);
            // Keep only genuinely violated cuts; the oracle may over-report.
            std::vector<LinRow> violated;
            for (auto& c : cuts) {
                double lhs = 0.0;
                for (int j = 0; j < n; ++j) lhs += c.coeffs[static_cast<std::size_t>(j)] * lp.x[static_cast<std::size_t>(j)];
                const double viol = (c.rel == Rel::le)   ? lhs - c.rhs
                                    : (c.rel == Rel::ge) ? c.rhs - lhs
                                                         : std::fabs(lhs - c.rhs);
                if (viol > 1e-7 * (1.0 + std::fabs(c.rhs))) violated.push_back(std::move(c));
            }
            if (violated.empty()) break;
            for (auto& c : violated) {
                cut_pool.push_back(c);
                work.rows.push_back(std::move(c));
                ++cuts_added;
                if (cuts_added >= limits.cuts_per_node) break;
            }
            lp = solve_lp(work, limits.lp);
        }

        if (lp.status == SolveStatus::infeasible) continue;
        if (lp.status == SolveStatus::unbounded) {
            if (entry.id == 0) root_unbounded = true;
            break;
        }
        if (lp.status == SolveStatus::iteration_limit) {
            raise(ErrorCode::NumericalError, "node LP hit the simplex iteration limit");
        }
        arena[static_cast<std::size_t>(entry.id)].bound = lp.objective;
        if (have_incumbent && lp.objective >= incumbent - prune_tol()) continue;

        // Most fractional integer variable; ties by lowest index.
        int branch_var = -1;
        double best_frac = limits.integrality_tol;
        for (int j = 0; j < n; ++j) {
            if (!p.is_integer[static_cast<std::size_t>(j)]) continue;
            const double v = lp.x[static_cast<std::size_t>(j)];
            const double frac = std::fabs(v - std::round(v)); // in [0, 0.5]
            if (frac > best_frac + 1e-15) {
                best_frac = frac;
                branch_var = j;
            }
        }

        if (branch_var < 0) {
            // Integral (and oracle-clean, or the cut cap was hit; in the
            // latter case re-separate before accepting as incumbent).
            if (oracle) {
                auto cuts = oracle->cuts(lp.x);
                bool violated = false;
                for (const auto& c : cuts) {
                    double lhs = 0.0;
                    for (int j = 0; j < n; ++j) lhs += c.coeffs[static_cast<std::size_t>(j)] * lp.x[static_cast<std::size_t>(j)];
                    const double viol = (c.rel == Rel::le)   ? lhs - c.rhs
                                        : (c.rel == Rel::ge) ? c.rhs - lhs
                                                             : std::fabs(lhs - c.rhs);
                    if (viol > 1e-7 * (1.0 + std::fabs(c.rhs))) {
                        cut_pool.push_back(c);
                        violated = true;
                    }
                }
                if (violated) {
                    // Requeue this node; the pool now excludes the point.
                    open.push(QueueEntry{lp.objective, entry.id});
                    continue;
                }
            }
            if (!have_incumbent || lp.objective < incumbent) {
                have_incumbent = true;
                incumbent = lp.objective;
                best.objective = lp.objective;
                best.x = lp.x;
                // Snap integer values exactly.
                for (int j = 0; j < n; ++j) {
                    if (p.is_integer[static_cast<std::size_t>(j)]) {
                        best.x[static_cast<std::size_t>(j)] = std::round(best.x[static_cast<std::size_t>(j)]);
                    }
                }
            }
            continue;
        }

        const double v = lp.x[static_cast<std::size_t>(branch_var)];
        const double fl = std::floor(v);
        for (int side = 0; side < 2; ++side) {
            Node child;
            child.id = static_cast<long>(arena.size());
            child.parent = static_cast<int>(entry.id);
            child.branch_var = branch_var;
            if (side == 0) {
                child.lo = -kInf;
                child.hi = fl;
            } else {
                child.lo = fl + 1.0;
                child.hi = kInf;
            }
            child.bound = lp.objective;
            arena.push_back(child);
            open.push(QueueEntry{lp.objective, child.id});
        }
    }

    best.nodes = nodes_solved;
    if (root_unbounded) {
        best.status = SolveStatus::unbounded;
        return best;
    }

    double best_open_bound = kInf;
    while (!open.empty()) {
        best_open_bound = std::min(best_open_bound, open.top().bound);
        open.pop();
    }

    if (have_incumbent) {
        if (hit_node_limit && best_open_bound < incumbent - prune_tol()) {
            best.status = SolveStatus::node_limit;
            best.bound_gap = incumbent - std::max(best_open_bound, -kInf);
        } else {
            best.status = SolveStatus::optimal;
            best.bound_gap = 0.0;
        }
    } else {
        best.status = hit_node_limit ? SolveStatus::node_limit : SolveStatus::infeasible;
        if (hit_node_limit) best.bound_gap = kInf;
    }
    return best;
}

} // namespace robroute::opt
