#pragma once

#include <Eigen/Dense>
#include <vector>

#include "robroute/svc.hpp"

namespace robroute {

/// Multiple-kernel SVC on a low-dimensional subset. Basis kernels are
/// K_m(u,v) = 1 - |q_m^T (u-v)| / (c_m kappa) over fixed projection
/// directions; training alternates the SVC dual with exponentiated-gradient
/// weight updates on the simplex (temperature mu: smaller mu concentrates
/// the weights on fewer kernels).
struct MklModel {
    Eigen::MatrixXd directions; // M x n_f unit rows q_m
    Eigen::VectorXd scales;     // c_m, projected data span per direction
    double kappa = 1.0;
    Eigen::VectorXd weights;    // pi over all M kernels
    std::vector<int> selected;  // SK = {m : pi_m > weight_floor}
    Eigen::VectorXd alpha;      // over training rows
    std::vector<int> sv_index;
    std::vector<int> bsv_index;
    Eigen::MatrixXd sv_data;
    Eigen::VectorXd sv_alpha;
    double rho = 0.0;           // boundary decision value
    double nu = 0.0;
    double box_cap = 0.0;
    double kkt_residual = 0.0;
    int outer_iterations = 0;
};

struct MklTrainOptions {
    double kkt_tol = 1e-6;
    long max_sweeps = 100000;
    double eps_sv = 1e-8;
    double weight_floor = 1e-6;  // SK selection threshold on pi
    double pi_tol = 1e-5;        // stop when max |pi change| falls below
    int max_outer = 60;
};

MklModel train_mkl(const Eigen::MatrixXd& data, double nu, int m_kernels, double mu,
                   const MklTrainOptions& opts = {});

/// Decision value sum_{i in SV} alpha_i sum_{m in SK} pi_m K_m(u, u^i);
/// membership is decision >= rho.
double mkl_decision(const Eigen::VectorXd& u, const MklModel& model);
bool mkl_membership(const Eigen::VectorXd& u, const MklModel& model, double tol = 1e-9);

double mkl_basis_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const MklModel& model,
                        int m);

/// TSC-DS with MKL in the second stage: stage-1 SV filtering via the
/// full-dimensional single-kernel SVC, then one MKL model per subset.
struct MklTscResult {
    std::vector<MklModel> models;
    std::vector<int> retained_rows;
};

MklTscResult tsc_ds_mkl(const Eigen::MatrixXd& data, double nu, const Grouping& grouping,
                        int m_kernels, double mu, const SvcTrainOptions& svc_opts = {},
                        const MklTrainOptions& mkl_opts = {});

} // namespace robroute
