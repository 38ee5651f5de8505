#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robroute/rsolve.hpp"
#include "robroute/simgen.hpp"

namespace robroute {

struct MethodSpec {
    Method method = Method::nominal;
    std::vector<double> params; // Gamma / lambda / nu / epsilon grid (ignored for nominal)
};

/// The published parameter grids per method.
std::vector<double> default_parameter_grid(Method m);

struct EvalOptions {
    int folds = 5;
    std::uint64_t seed = 0;
    double drsp_alpha = 0.3;
    int drsp_samples = 500; // capped at the training-row count
    Grouping::Method grouping_method = Grouping::Method::random;
    int mkl_kernels = 16;
    double mkl_mu = 0.2;
    bool worst5_point = false; // percentile point instead of tail mean
    int jobs = 1;
    SolveOptions solve;
};

struct OdKpi {
    OdPair od;
    double avg = 0.0, worst = 0.0, worst5 = 0.0;
};

struct KpiCell {
    Method method = Method::nominal;
    double param = 0.0;
    double avg_delay = 0.0, worst_delay = 0.0, worst5_delay = 0.0;
    std::vector<OdKpi> per_od; // fold-averaged per-OD statistics
    int failures = 0;          // solver failures recorded, not fatal
};

struct KpiReport {
    std::vector<KpiCell> cells;
};

/// Random OD pool filtered to nominal paths of at least min_segments
/// segments, ranked by the scenario standard deviation of the nominal
/// path's travel time; the top `keep` survive.
std::vector<OdPair> select_od_pairs(const Network& net, const ScenarioMatrix& D,
                                    const FreeFlowVector& freeflow, int pool_size, int keep,
                                    int min_segments, std::uint64_t seed);

/// k-fold protocol: per fold build sets on training rows, solve per OD,
/// score the fixed path on every validation row, normalize by the benchmark
/// path's free-flow time, and aggregate the three delay KPIs.
KpiReport evaluate(const Network& net, const ScenarioMatrix& D, const FreeFlowVector& freeflow,
                   const std::vector<MethodSpec>& methods, const std::vector<OdPair>& ods,
                   const EvalOptions& opts);

/// kpi.csv (long format), per_od.csv (box-plot data), tradeoff.csv
/// (avg vs worst scatter points); deterministic ordering.
void emit_report(const KpiReport& report, const std::string& out_dir);
KpiReport parse_report(const std::string& out_dir); // round-trip support

struct SweepConfig {
    enum class Factor { robot_speed, robot_width, robot_behavior, ped_speed, ped_volume };
    Factor factor = Factor::robot_speed;
    std::vector<double> levels; // empty = published defaults for the factor

    std::vector<MethodSpec> methods; // empty = ellipsoidal + drsp over their grids
    sim::SimConfig sim;
    sim::DemandProfile demand;
    sim::GenerateOptions generate;
    double robot_speed_kmh = 5.0;
    double robot_width_m = 0.5;
    sim::RobotBehavior behavior = sim::RobotBehavior::normal;
    int pool_size = 200;
    int keep_ods = 50;
    int min_segments = 5;
    EvalOptions eval;
};

const char* sweep_factor_name(SweepConfig::Factor f);
SweepConfig::Factor parse_sweep_factor(const std::string& s);
std::vector<double> default_sweep_levels(SweepConfig::Factor f);

struct SweepRow {
    double level = 0.0;
    Method method = Method::nominal;
    // Improvement = SP KPI minus the method's best KPI over its grid;
    // higher means greater delay reduction.
    double avg_improvement = 0.0;
    double worst_improvement = 0.0;
    double worst5_improvement = 0.0;
    double best_param_avg = 0.0, best_param_worst = 0.0, best_param_worst5 = 0.0;
};

struct SweepTable {
    SweepConfig::Factor factor;
    std::vector<SweepRow> rows;
};

SweepTable sensitivity_sweep(const Network& net, const SweepConfig& cfg);

void emit_sweep(const SweepTable& table, const std::string& out_path);

} // namespace robroute
