#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "robroute/scenarios.hpp"

namespace robroute {

/// Budgeted box: entries in [c_lo_j, c_lo_j + d_j] with at most gamma
/// deviating segments.
struct BudgetedSet {
    Eigen::VectorXd c_lo; // columnwise minimum observed cost
    Eigen::VectorXd d;    // columnwise max - min
    int gamma = 0;
};

BudgetedSet build_budgeted(const ScenarioMatrix& D, int gamma);

struct EllipsoidSet {
    Eigen::VectorXd center;  // sample mean (1/N fit)
    Eigen::MatrixXd shape;   // sample covariance (1/N fit) + ridge
    double lambda_size = 0.0;
    double ridge = 0.0;
};

/// Moments use the 1/N divisor; a ridge of 1e-8 * trace/n is added because
/// simulated columns can be near-constant.
EllipsoidSet build_ellipsoid(const ScenarioMatrix& D, double lambda_size,
                             double ridge_scale = 1e-8);

/// Wasserstein ball description: seeded subsample of training rows plus the
/// support interval [free flow, columnwise max of the full training split].
/// Ground metric fixed to the 1-norm, so the dual norm is the infinity norm.
struct WassersteinAmbiguity {
    Eigen::MatrixXd samples; // n_samples x n
    double epsilon = 0.0;
    double alpha = 1.0;
    Eigen::VectorXd support_lo;
    Eigen::VectorXd support_hi;
    int ground_norm_p = 1;
    int clipped_entries = 0; // numerically out-of-support entries clipped at build
};

WassersteinAmbiguity build_wasserstein(const ScenarioMatrix& train, const FreeFlowVector& freeflow,
                                       double epsilon, double alpha, int n_samples,
                                       std::uint64_t seed);

} // namespace robroute
