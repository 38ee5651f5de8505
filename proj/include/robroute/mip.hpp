#pragma once

#include <vector>

#include "robroute/lp.hpp"

namespace robroute::opt {

struct MipProblem {
    LpProblem lp;
    std::vector<char> is_integer; // per variable; integer vars need finite bounds
};

/// Callback contract: given a candidate point, return valid inequalities
/// violated at it. Each returned cut must hold at every feasible integer
/// point of the problem.
class CutOracle {
  public:
    virtual ~CutOracle() = default;
    virtual std::vector<LinRow> cuts(const std::vector<double>& point) = 0;
};

struct MipLimits {
    long max_nodes = 200000;
    int cuts_per_node = 50;
    double integrality_tol = 1e-6;
    double rel_gap = 1e-6;
    LpOptions lp;
};

struct MipResult {
    SolveStatus status = SolveStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
    long nodes = 0;
    double bound_gap = 0.0; // incumbent minus best remaining bound (0 when proven optimal)
};

/// Best-first branch and bound; branches on the most fractional variable
/// (ties by lowest index). Oracle cuts are kept in a global pool.
MipResult solve_mip(const MipProblem& p, CutOracle* oracle = nullptr, const MipLimits& limits = {});

} // namespace robroute::opt
