#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace robroute {

enum class Direction { forward, reverse };

struct ScenarioMeta {
    int day = 0;             // 0..6
    int hour = 0;
    int obstacle_config = 0;
    Direction direction = Direction::forward;
};

/// N x n matrix of observed per-segment travel times (seconds, > 0).
class ScenarioMatrix {
  public:
    ScenarioMatrix() = default;
    ScenarioMatrix(Eigen::MatrixXd values, std::vector<ScenarioMeta> meta);

    int n_scenarios() const { return static_cast<int>(values_.rows()); }
    int n_segments() const { return static_cast<int>(values_.cols()); }
    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<ScenarioMeta>& meta() const { return meta_; }

    ScenarioMatrix select_rows(const std::vector<int>& rows) const;

  private:
    Eigen::MatrixXd values_;
    std::vector<ScenarioMeta> meta_;
};

struct FreeFlowVector {
    Eigen::VectorXd values; // seconds per segment, > 0
};

/// Reads the scenarios CSV (header day,hour,obstacle_config,direction,t_0,...)
/// and the single-row free-flow CSV; enforces positivity and the
/// free-flow <= observation invariant (1e-9 slack).
std::pair<ScenarioMatrix, FreeFlowVector> load_scenarios(const std::string& scenario_csv,
                                                         const std::string& freeflow_csv);

void save_scenarios(const ScenarioMatrix& D, const FreeFlowVector& ff,
                    const std::string& scenario_csv, const std::string& freeflow_csv);

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Sample mean and covariance with the 1/N divisor (the ellipsoid fit).
Moments empirical_moments(const Eigen::MatrixXd& data);
Moments empirical_moments(const ScenarioMatrix& D);

/// Unbiased covariance with the 1/(N-1) divisor (routed to the SVC kernel;
/// the two divisors are kept distinct deliberately).
Eigen::MatrixXd unbiased_covariance(const Eigen::MatrixXd& data);

/// Pearson correlations; zero-variance columns get 0 off-diagonal, 1 on it.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data);
Eigen::MatrixXd correlation_matrix(const ScenarioMatrix& D);

struct FoldSplit {
    int k = 0;
    std::vector<int> assignments; // per-scenario fold index

    std::vector<int> validation_indices(int fold) const;
    std::vector<int> train_indices(int fold) const;
};

/// Seeded shuffle into k folds whose sizes differ by at most one.
FoldSplit kfold_split(int n, int k, std::uint64_t seed);

/// (T - T_ff) / T_ff; negative values are legal and flag a path faster than
/// the benchmark's free flow.
double normalized_delay(double travel_time, double freeflow_time);

} // namespace robroute
