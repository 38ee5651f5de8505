#include "robroute/scenarios.hpp"

#include <cmath>
#include <fstream>

#include "robroute/csv.hpp"
#include "robroute/errors.hpp"
#include "robroute/rng.hpp"

namespace robroute {

ScenarioMatrix::ScenarioMatrix(Eigen::MatrixXd values, std::vector<ScenarioMeta> meta)
    : values_(std::move(values)), meta_(std::move(meta)) {
    require(static_cast<int>(meta_.size()) == static_cast<int>(values_.rows()),
            ErrorCode::DimensionMismatch, "meta rows != value rows");
    for (int i = 0; i < values_.rows(); ++i) {
        for (int j = 0; j < values_.cols(); ++j) {
            const double v = values_(i, j);
            require(std::isfinite(v) && v > 0.0, ErrorCode::NonPositiveTime,
                    "scenario entry (" + std::to_string(i) + "," + std::to_string(j) +
                        ") must be finite and > 0");
        }
    }
    for (const auto& m : meta_) {
        require(m.day >= 0 && m.day <= 6, ErrorCode::InvalidArgument, "day outside 0..6");
    }
}

ScenarioMatrix ScenarioMatrix::select_rows(const std::vector<int>& rows) const {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), values_.cols());
    std::vector<ScenarioMeta> m;
    m.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        v.row(static_cast<Eigen::Index>(i)) = values_.row(rows[i]);
        m.push_back(meta_[static_cast<std::size_t>(rows[i])]);
    }
    return ScenarioMatrix(std::move(v), std::move(m));
}

std::pair<ScenarioMatrix, FreeFlowVector> load_scenarios(const std::string& scenario_csv,
                                                         const std::string& freeflow_csv) {
    const auto rows = csv::read_file(scenario_csv);
    require(rows.size() >= 2, ErrorCode::ParseError, "scenario file needs a header and data rows");
    const auto& hdr = rows.front();
    require(hdr.size() >= 5 && hdr[0] == "day" && hdr[1] == "hour" && hdr[2] == "obstacle_config" &&
                hdr[3] == "direction",
            ErrorCode::ParseError,
            "scenario header must start with day,hour,obstacle_config,direction");
    const int n = static_cast<int>(hdr.size()) - 4;

    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size() - 1), n);
    std::vector<ScenarioMeta> meta;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        require(static_cast<int>(r.size()) == n + 4, ErrorCode::DimensionMismatch,
                "scenario row " + std::to_string(i) + " has wrong field count");
        ScenarioMeta m;
        m.day = static_cast<int>(csv::parse_long(r[0], scenario_csv));
        m.hour = static_cast<int>(csv::parse_long(r[1], scenario_csv));
        m.obstacle_config = static_cast<int>(csv::parse_long(r[2], scenario_csv));
        if (r[3] == "forward") {
            m.direction = Direction::forward;
        } else if (r[3] == "reverse") {
            m.direction = Direction::reverse;
        } else {
            raise(ErrorCode::ParseError, "direction must be forward|reverse");
        }
        meta.push_back(m);
        for (int j = 0; j < n; ++j) {
            values(static_cast<Eigen::Index>(i - 1), j) =
                csv::parse_double(r[static_cast<std::size_t>(j + 4)], scenario_csv);
        }
    }

    const auto ff_rows = csv::read_file(freeflow_csv);
    require(ff_rows.size() == 1, ErrorCode::ParseError, "free-flow file must be a single CSV row");
    require(static_cast<int>(ff_rows[0].size()) == n, ErrorCode::DimensionMismatch,
            "free-flow width != scenario width");
    FreeFlowVector ff;
    ff.values.resize(n);
    for (int j = 0; j < n; ++j) {
        ff.values(j) = csv::parse_double(ff_rows[0][static_cast<std::size_t>(j)], freeflow_csv);
        require(ff.values(j) > 0.0, ErrorCode::NonPositiveTime, "free-flow entries must be > 0");
    }

    ScenarioMatrix D(std::move(values), std::move(meta));
    for (int i = 0; i < D.n_scenarios(); ++i) {
        for (int j = 0; j < n; ++j) {
            require(ff.values(j) <= D.values()(i, j) + 1e-9, ErrorCode::InvalidArgument,
                    "free-flow exceeds observed time at scenario " + std::to_string(i) +
                        ", segment " + std::to_string(j));
        }
    }
    return {std::move(D), std::move(ff)};
}

void save_scenarios(const ScenarioMatrix& D, const FreeFlowVector& ff,
                    const std::string& scenario_csv, const std::string& freeflow_csv) {
    std::ofstream out(scenario_csv);
    require(out.good(), ErrorCode::IoError, "cannot write " + scenario_csv);
    out << "day,hour,obstacle_config,direction";
    for (int j = 0; j < D.n_segments(); ++j) out << ",t_" << j;
    out << '\n';
    for (int i = 0; i < D.n_scenarios(); ++i) {
        const auto& m = D.meta()[static_cast<std::size_t>(i)];
        out << m.day << ',' << m.hour << ',' << m.obstacle_config << ','
            << (m.direction == Direction::forward ? "forward" : "reverse");
        for (int j = 0; j < D.n_segments(); ++j) out << ',' << csv::format_double(D.values()(i, j));
        out << '\n';
    }
    std::ofstream fout(freeflow_csv);
    require(fout.good(), ErrorCode::IoError, "cannot write " + freeflow_csv);
    for (int j = 0; j < ff.values.size(); ++j) {
        if (j) fout << ',';
        fout << csv::format_double(ff.values(j));
    }
    fout << '\n';
}

Moments empirical_moments(const Eigen::MatrixXd& data) {
    const int n_rows = static_cast<int>(data.rows());
    require(n_rows >= 2, ErrorCode::TooFewScenarios, "need at least 2 scenarios for moments");
    Moments m;
    m.mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - m.mean.transpose();
    m.covariance = (centered.transpose() * centered) / static_cast<double>(n_rows);
    // Exact symmetry despite floating point.
    m.covariance = 0.5 * (m.covariance + m.covariance.transpose()).eval();
    return m;
}

Moments empirical_moments(const ScenarioMatrix& D) { return empirical_moments(D.values()); }

Eigen::MatrixXd unbiased_covariance(const Eigen::MatrixXd& data) {
    const int n_rows = static_cast<int>(data.rows());
    require(n_rows >= 2, ErrorCode::TooFewScenarios, "need at least 2 scenarios for covariance");
    const Eigen::VectorXd mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n_rows - 1);
    cov = 0.5 * (cov + cov.transpose()).eval();
    return cov;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
    require(data.rows() >= 2, ErrorCode::TooFewScenarios, "need at least 2 scenarios");
    const int n = static_cast<int>(data.cols());
    const Moments m = empirical_moments(data);
    Eigen::VectorXd sd(n);
    for (int j = 0; j < n; ++j) sd(j) = std::sqrt(std::max(m.covariance(j, j), 0.0));
    Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        corr(j, j) = 1.0;
        for (int k = j + 1; k < n; ++k) {
            if (sd(j) > 0.0 && sd(k) > 0.0) {
                double c = m.covariance(j, k) / (sd(j) * sd(k));
                c = std::clamp(c, -1.0, 1.0);
                corr(j, k) = corr(k, j) = c;
            }
        }
    }
    return corr;
}

Eigen::MatrixXd correlation_matrix(const ScenarioMatrix& D) { return correlation_matrix(D.values()); }

std::vector<int> FoldSplit::validation_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) out.push_back(static_cast<int>(i));
    }
    return out;
}

std::vector<int> FoldSplit::train_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) out.push_back(static_cast<int>(i));
    }
    return out;
}

FoldSplit kfold_split(int n, int k, std::uint64_t seed) {
    require(k >= 2, ErrorCode::BadFoldCount, "fold count must be >= 2");
    require(n >= k, ErrorCode::BadFoldCount, "need at least k scenarios");
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng rng(stable_hash({seed, 0x666f6c64ULL}));
    rng.shuffle(perm);

    FoldSplit split;
    split.k = k;
    split.assignments.assign(static_cast<std::size_t>(n), 0);
    const int base = n / k;
    const int extra = n % k;
    int pos = 0;
    for (int f = 0; f < k; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        for (int s = 0; s < size; ++s) split.assignments[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos++)])] = f;
    }
    return split;
}

double normalized_delay(double travel_time, double freeflow_time) {
    require(freeflow_time > 0.0, ErrorCode::NonPositiveFreeFlow, "free-flow time must be > 0");
    return (travel_time - freeflow_time) / freeflow_time;
}

} // namespace robroute
