#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "robroute/mip.hpp"
#include "robroute/mkl.hpp"
#include "robroute/network.hpp"
#include "robroute/svc.hpp"
#include "robroute/usets.hpp"

namespace robroute {

enum class Method { nominal, budgeted, ellipsoidal, svc, mkl_svc, drsp };

const char* method_name(Method m);
Method parse_method(const std::string& s);

/// Per-subset SVC models plus the dimension grouping they were trained on.
struct SvcUncertainty {
    std::vector<SvcModel> models;
    Grouping grouping;
};

struct MklUncertainty {
    std::vector<MklModel> models;
    Grouping grouping;
};

/// Point costs double as the "nominal" model for the brute-force oracle.
using UncertaintyModel =
    std::variant<Eigen::VectorXd, BudgetedSet, EllipsoidSet, SvcUncertainty, MklUncertainty,
                 WassersteinAmbiguity>;

struct SolveOptions {
    /// printed assembles the robust counterpart exactly as derived
    /// (one dual multiplier block per support vector / sample);
    /// accelerated uses an equivalent formulation that scales better:
    /// outer-approximation cuts for the SVC counterparts and the condensed
    /// support-slack program for DRSP. automatic picks by problem size.
    /// Tests pin the two routes to identical optima.
    enum class Assembly { automatic, printed, accelerated };
    Assembly assembly = Assembly::automatic;
    opt::MipLimits limits;
    bool verify = true;              // cross-check objective against worst_case_eval
    int printed_var_cap = 4000;      // automatic switches past this dual-block size
};

struct RobustSolution {
    Path path;
    double objective = 0.0;
    Method method = Method::nominal;
    double parameter = 0.0;
    opt::SolveStatus status = opt::SolveStatus::optimal;
    long nodes = 0;
    double bound_gap = 0.0;
    double wall_time_s = 0.0;
};

RobustSolution solve_nominal(const Network& net, const Eigen::VectorXd& costs, OdPair od);

/// Bertsimas-Sim decomposition: at most n+1 nominal shortest paths.
RobustSolution solve_budgeted(const Network& net, const BudgetedSet& set, OdPair od);

/// Direct MILP encoding of the budgeted min-max (dualized inner problem);
/// exists as the structural cross-check for the decomposition.
RobustSolution solve_budgeted_milp(const Network& net, const BudgetedSet& set, OdPair od,
                                   const SolveOptions& opts = {});

/// min c_hat^T x + sqrt(lambda x^T Sigma x) via outer-approximation cuts on
/// the conic term inside branch and bound.
RobustSolution solve_ellipsoidal(const Network& net, const EllipsoidSet& set, OdPair od,
                                 const SolveOptions& opts = {});

RobustSolution solve_svc_rsp(const Network& net, const SvcUncertainty& u, OdPair od,
                             const SolveOptions& opts = {});

RobustSolution solve_mkl_rsp(const Network& net, const MklUncertainty& u, OdPair od,
                             const SolveOptions& opts = {});

RobustSolution solve_drsp(const Network& net, const WassersteinAmbiguity& amb, OdPair od,
                          const SolveOptions& opts = {});

/// Worst-case evaluators at a fixed path; each one is an independent route
/// from the corresponding solver (closed form or the primal inner LP).
double worst_case_budgeted(const Path& path, const BudgetedSet& set);
double worst_case_ellipsoidal(const Path& path, const EllipsoidSet& set);
double worst_case_svc(const Path& path, const SvcUncertainty& u);
double worst_case_mkl(const Path& path, const MklUncertainty& u);
/// Full objective of the distributionally robust program at fixed x.
double drsp_objective(const Path& path, const WassersteinAmbiguity& amb);

double worst_case_eval(const Path& path, const UncertaintyModel& model);

/// Inner worst-case LP over one SVC subset (primal in (u, v_i)) and its
/// explicit dual (in (lambda_i, mu_i, eta)); both evaluated at a fixed
/// subset incidence vector. Strong duality makes the two values coincide.
double svc_inner_primal(const Eigen::VectorXd& x_sub, const SvcModel& model);
double svc_inner_dual(const Eigen::VectorXd& x_sub, const SvcModel& model);
double mkl_inner_primal(const Eigen::VectorXd& x_sub, const MklModel& model);
double mkl_inner_dual(const Eigen::VectorXd& x_sub, const MklModel& model);

/// Exact reference: minimum of worst_case_eval over every simple path.
RobustSolution brute_force_robust(const Network& net, const UncertaintyModel& model, OdPair od,
                                  int max_segments, std::size_t cap = 1000000);

/// CSV emission of solution rows:
/// method,param,od_origin,od_dest,fold,objective,path_segment_ids
void append_solution_csv(std::string& out, const RobustSolution& sol, OdPair od, int fold);
std::string solution_csv_header();

} // namespace robroute
