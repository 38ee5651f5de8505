#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace robroute::opt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Rel { le, eq, ge };

/// One dense constraint row over the problem's variables.
struct LinRow {
    std::vector<double> coeffs;
    Rel rel = Rel::le;
    double rhs = 0.0;
};

/// min c^T y subject to rows and per-variable bounds (+/-inf allowed).
struct LpProblem {
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<LinRow> rows;

    int n_vars() const { return static_cast<int>(objective.size()); }

    int add_var(double lo, double hi, double cost) {
        objective.push_back(cost);
        lower.push_back(lo);
        upper.push_back(hi);
        return n_vars() - 1;
    }

    void add_row(std::vector<double> coeffs, Rel rel, double rhs) {
        rows.push_back(LinRow{std::move(coeffs), rel, rhs});
    }

    /// Sparse convenience: coefficients given as (var, coeff) pairs.
    void add_row_sparse(const std::vector<std::pair<int, double>>& terms, Rel rel, double rhs);
};

enum class SolveStatus { optimal, infeasible, unbounded, node_limit, iteration_limit };

const char* status_name(SolveStatus s);

struct LpOptions {
    double feas_tol = 1e-8;
    double opt_tol = 1e-9;
    long max_iterations = 0;  // 0 = automatic from problem size
    int degeneracy_threshold = 64; // consecutive degenerate pivots before Bland's rule
};

struct LpResult {
    SolveStatus status = SolveStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<double> duals; // one per row; 0 for slack-basic rows
    long iterations = 0;
};

/// Dense bounded-variable primal simplex (two phases, Bland fallback).
LpResult solve_lp(const LpProblem& p, const LpOptions& opts = {});

/// Debug dump in LP text format for cross-checks with external solvers.
void write_lp_text(const LpProblem& p, std::ostream& out, const std::string& name = "robroute");

} // namespace robroute::opt
