#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace robroute {

/// Weighted generalized intersection kernel K(u,v) = sum_k l_k - ||Q(u-v)||_1
/// with Q = Sigma^{-1/2}. Concave, so the induced acceptance region is a
/// convex polyhedron.
struct WgikKernel {
    Eigen::MatrixXd q;  // n_f x n_f, symmetric positive definite
    Eigen::VectorXd l;  // offsets, each strictly above the projected data span
};

double wgik(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const WgikKernel& kernel);

/// Trained single-kernel SVC. alpha solves the dual
///   min  a^T K a - sum_i a_i K_ii   s.t.  sum a = 1,  0 <= a_i <= 1/(N nu),
/// SV/BSV are the support and boundary-support index sets and theta the
/// boundary decision value sum_{i in SV} a_i ||Q(u' - u^i)||_1 at a BSV u'.
struct SvcModel {
    Eigen::VectorXd alpha;      // all training rows
    std::vector<int> sv_index;
    std::vector<int> bsv_index;
    double theta = 0.0;
    WgikKernel kernel;
    Eigen::MatrixXd sv_data;    // retained SV sample vectors, |SV| x n_f
    Eigen::VectorXd sv_alpha;
    double nu = 0.0;
    double box_cap = 0.0;       // 1/(N nu)
    double kkt_residual = 0.0;
    long pair_updates = 0;
};

struct SvcTrainOptions {
    double kkt_tol = 1e-6;
    long max_sweeps = 100000;    // SMO sweep cap (one sweep = N pair updates)
    double eps_sv = 1e-8;        // SV detection threshold on alpha
    double eig_floor_rel = 1e-10;
    double l_margin = 1.01;      // l_k = margin * projected span
};

SvcModel train_svc(const Eigen::MatrixXd& data, double nu, const SvcTrainOptions& opts = {});

/// The SVC dual QP: min a^T K a - sum_i a_i K_ii over the capped simplex,
/// solved by SMO-style maximal-violating-pair coordinate descent. Shared by
/// the single- and multiple-kernel trainers.
struct SvcDualResult {
    Eigen::VectorXd alpha;
    double kkt_residual = 0.0;
    long pair_updates = 0;
};

SvcDualResult solve_svc_dual(const Eigen::MatrixXd& K, double nu, double kkt_tol = 1e-6,
                             long max_sweeps = 100000);

/// Membership test sum_{i in SV} alpha_i ||Q(u - u^i)||_1 <= theta.
double svc_decision(const Eigen::VectorXd& u, const SvcModel& model);
bool svc_membership(const Eigen::VectorXd& u, const SvcModel& model, double tol = 1e-9);

/// Partition of the segment indices into subsets of size 2 (one of size 3
/// when n is odd).
struct Grouping {
    enum class Method { random, hierarchical };
    std::vector<std::vector<int>> subsets;
    Method method = Method::random;
};

/// random: seeded shuffle then consecutive pairing. hierarchical:
/// average-linkage on distance 1-|corr| cut to ceil(n/2) clusters, subsets
/// paired following cluster order.
Grouping group_dimensions(const Eigen::MatrixXd& data, Grouping::Method method, std::uint64_t seed);

/// Two-stage clustering with dimensional separation: stage 1 trains one
/// full-dimensional SVC and keeps only its SV rows; stage 2 trains a
/// per-subset SVC on the survivors.
struct TscResult {
    std::vector<SvcModel> models;   // one per subset, in grouping order
    std::vector<int> retained_rows; // stage-1 SV row indices into the input data
};

TscResult tsc_ds(const Eigen::MatrixXd& data, double nu, const Grouping& grouping,
                 const SvcTrainOptions& opts = {});

/// Shared helper: Sigma^{-1/2} by symmetric eigendecomposition with a
/// relative eigenvalue floor.
Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& sigma, double eig_floor_rel);

} // namespace robroute
