#include "robroute/svc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robroute/errors.hpp"
#include "robroute/rng.hpp"
#include "robroute/scenarios.hpp"

namespace robroute {

double wgik(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const WgikKernel& kernel) {
    require(u.size() == v.size() && u.size() == kernel.q.cols(), ErrorCode::DimensionMismatch,
            "wgik operand size mismatch");
    return kernel.l.sum() - (kernel.q * (u - v)).lpNorm<1>();
}

Eigen::MatrixXd inverse_sqrt_psd(const Eigen::MatrixXd& sigma, double eig_floor_rel) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    require(es.info() == Eigen::Success, ErrorCode::NumericalError, "eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double max_ev = std::max(ev.maxCoeff(), 0.0);
    // Degenerate data (all rows equal) still gets a valid, very stiff Q so the
    // induced set collapses toward a point instead of erroring out.
    const double floor = (max_ev > 0.0) ? eig_floor_rel * max_ev : eig_floor_rel;
    for (int i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), floor);
    return es.eigenvectors() * ev.cwiseInverse().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

namespace {

WgikKernel make_kernel(const Eigen::MatrixXd& data, const SvcTrainOptions& opts) {
    WgikKernel k;
    k.q = inverse_sqrt_psd(unbiased_covariance(data), opts.eig_floor_rel);
    const int nf = static_cast<int>(data.cols());
    k.l.resize(nf);
    const Eigen::MatrixXd proj = data * k.q.transpose(); // row i -> (q_k^T u^i)_k
    for (int d = 0; d < nf; ++d) {
        const double span = proj.col(d).maxCoeff() - proj.col(d).minCoeff();
        k.l(d) = span > 0.0 ? opts.l_margin * span : 1.0;
    }
    return k;
}

} // namespace

SvcDualResult solve_svc_dual(const Eigen::MatrixXd& K, double nu, double kkt_tol, long max_sweeps) {
    const int n_rows = static_cast<int>(K.rows());
    require(nu > 0.0 && nu <= 1.0, ErrorCode::InvalidArgument, "nu must be in (0, 1]");
    require(n_rows >= 2 && K.cols() == K.rows(), ErrorCode::InvalidArgument,
            "kernel matrix must be square with >= 2 rows");
    const double cap = 1.0 / (static_cast<double>(n_rows) * nu);

    // Feasible start: uniform weights satisfy both the simplex and the box
    // (1/N <= 1/(N nu) for nu <= 1).
    Eigen::VectorXd alpha = Eigen::VectorXd::Constant(n_rows, 1.0 / static_cast<double>(n_rows));
    // grad_i = 2 (K alpha)_i - K_ii, maintained incrementally.
    Eigen::VectorXd grad = 2.0 * (K * alpha) - K.diagonal();

    const double cap_slack = 1e-12 * std::max(1.0, cap);
    long updates = 0;
    const long max_updates = max_sweeps * static_cast<long>(n_rows);
    double residual = 0.0;

    // Maximal-violating-pair updates: move mass from the highest gradient
    // component that can shrink to the lowest that can grow, with a
    // closed-form clipped step. The single equality constraint is preserved
    // exactly by construction.
    while (true) {
        int up = -1, down = -1;
        double g_up = std::numeric_limits<double>::infinity();
        double g_down = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_rows; ++i) {
            if (alpha(i) < cap - cap_slack && grad(i) < g_up) {
                g_up = grad(i);
                up = i;
            }
            if (alpha(i) > cap_slack && grad(i) > g_down) {
                g_down = grad(i);
                down = i;
            }
        }
        residual = (up >= 0 && down >= 0) ? g_down - g_up : 0.0;
        if (up < 0 || down < 0 || residual <= kkt_tol) break;
        if (updates >= max_updates) {
            raise(ErrorCode::NoConvergence,
                  "SVC dual stalled at KKT residual " + std::to_string(residual));
        }

        // Quadratic model along e_up - e_down.
        const double curvature = 2.0 * (K(up, up) - 2.0 * K(up, down) + K(down, down));
        double step = (curvature > 1e-14) ? residual / curvature : cap;
        step = std::min(step, cap - alpha(up));
        step = std::min(step, alpha(down));
        alpha(up) += step;
        alpha(down) -= step;
        grad += 2.0 * step * (K.col(up) - K.col(down));
        ++updates;
    }

    return SvcDualResult{std::move(alpha), residual, updates};
}

SvcModel train_svc(const Eigen::MatrixXd& data, double nu, const SvcTrainOptions& opts) {
    const int n_rows = static_cast<int>(data.rows());
    require(nu > 0.0 && nu <= 1.0, ErrorCode::InvalidArgument, "nu must be in (0, 1]");
    require(n_rows >= 2, ErrorCode::DegenerateData, "need at least 2 rows to train");

    SvcModel model;
    model.nu = nu;
    model.box_cap = 1.0 / (static_cast<double>(n_rows) * nu);
    model.kernel = make_kernel(data, opts);

    // The kernel is K_ij = sum_k l_k - ||Q(u^i - u^j)||_1 and on the simplex
    // the offsets contribute a constant to the dual objective, so the QP is
    // solved on the shift-reduced matrix -Dist. This keeps the trained alpha
    // exactly independent of the l_k choice, as the theory promises.
    Eigen::MatrixXd K(n_rows, n_rows);
    {
        const Eigen::MatrixXd proj = data * model.kernel.q.transpose();
        for (int i = 0; i < n_rows; ++i) {
            K(i, i) = 0.0;
            for (int j = i + 1; j < n_rows; ++j) {
                const double v = -(proj.row(i) - proj.row(j)).lpNorm<1>();
                K(i, j) = v;
                K(j, i) = v;
            }
        }
    }

    SvcDualResult dual = solve_svc_dual(K, nu, opts.kkt_tol, opts.max_sweeps);
    Eigen::VectorXd& alpha = dual.alpha;
    const double cap = model.box_cap;
    model.alpha = alpha;
    model.kkt_residual = dual.kkt_residual;
    model.pair_updates = dual.pair_updates;

    for (int i = 0; i < n_rows; ++i) {
        if (alpha(i) > opts.eps_sv) {
            model.sv_index.push_back(i);
            if (alpha(i) < cap - opts.eps_sv) model.bsv_index.push_back(i);
        }
    }
    require(!model.sv_index.empty(), ErrorCode::DegenerateData, "no support vectors found");

    model.sv_data.resize(static_cast<Eigen::Index>(model.sv_index.size()), data.cols());
    model.sv_alpha.resize(static_cast<Eigen::Index>(model.sv_index.size()));
    for (std::size_t s = 0; s < model.sv_index.size(); ++s) {
        model.sv_data.row(static_cast<Eigen::Index>(s)) = data.row(model.sv_index[s]);
        model.sv_alpha(static_cast<Eigen::Index>(s)) = alpha(model.sv_index[s]);
    }

    if (!model.bsv_index.empty()) {
        model.theta = svc_decision(data.row(model.bsv_index.front()).transpose(), model);
    } else {
        // All alphas at a bound: fall back to the largest SV decision value so
        // every SV stays inside the set.
        double worst = 0.0;
        for (int i : model.sv_index) {
            worst = std::max(worst, svc_decision(data.row(i).transpose(), model));
        }
        model.theta = worst;
    }
    return model;
}

double svc_decision(const Eigen::VectorXd& u, const SvcModel& model) {
    double v = 0.0;
    for (Eigen::Index s = 0; s < model.sv_data.rows(); ++s) {
        v += model.sv_alpha(s) *
             (model.kernel.q * (u - model.sv_data.row(s).transpose())).lpNorm<1>();
    }
    return v;
}

bool svc_membership(const Eigen::VectorXd& u, const SvcModel& model, double tol) {
    return svc_decision(u, model) <= model.theta + tol;
}

namespace {

// Plain O(n^3) average-linkage agglomeration; n is at most a few hundred.
std::vector<std::vector<int>> average_linkage(const Eigen::MatrixXd& dist, int target_clusters) {
    const int n = static_cast<int>(dist.rows());
    std::vector<std::vector<int>> clusters;
    for (int i = 0; i < n; ++i) clusters.push_back({i});
    while (static_cast<int>(clusters.size()) > target_clusters) {
        double best = std::numeric_limits<double>::infinity();
        int bi = -1, bj = -1;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double sum = 0.0;
                for (int a : clusters[i])
                    for (int b : clusters[j]) sum += dist(a, b);
                const double avg = sum / static_cast<double>(clusters[i].size() * clusters[j].size());
                if (avg < best - 1e-15) {
                    best = avg;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
            }
        }
        auto merged = clusters[static_cast<std::size_t>(bi)];
        merged.insert(merged.end(), clusters[static_cast<std::size_t>(bj)].begin(),
                      clusters[static_cast<std::size_t>(bj)].end());
        std::sort(merged.begin(), merged.end());
        clusters.erase(clusters.begin() + bj);
        clusters.erase(clusters.begin() + bi);
        clusters.push_back(std::move(merged));
        // Keep a stable order for determinism.
        std::sort(clusters.begin(), clusters.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
    }
    return clusters;
}

std::vector<std::vector<int>> chunk_pairs(const std::vector<int>& order) {
    // Consecutive pairs; one trailing triple when the count is odd.
    std::vector<std::vector<int>> subsets;
    const int n = static_cast<int>(order.size());
    int pos = 0;
    while (n - pos > 3) {
        subsets.push_back({order[static_cast<std::size_t>(pos)], order[static_cast<std::size_t>(pos + 1)]});
        pos += 2;
    }
    if (n - pos == 3) {
        subsets.push_back({order[static_cast<std::size_t>(pos)], order[static_cast<std::size_t>(pos + 1)],
                           order[static_cast<std::size_t>(pos + 2)]});
    } else if (n - pos == 2) {
        subsets.push_back({order[static_cast<std::size_t>(pos)], order[static_cast<std::size_t>(pos + 1)]});
    } else if (n - pos == 1) {
        subsets.push_back({order[static_cast<std::size_t>(pos)]});
    }
    return subsets;
}

} // namespace

Grouping group_dimensions(const Eigen::MatrixXd& data, Grouping::Method method, std::uint64_t seed) {
    const int n = static_cast<int>(data.cols());
    require(n >= 2, ErrorCode::InvalidArgument, "need at least 2 dimensions to group");
    Grouping g;
    g.method = method;
    if (method == Grouping::Method::random) {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        Rng rng(stable_hash({seed, 0x67727570ULL}));
        rng.shuffle(order);
        g.subsets = chunk_pairs(order);
    } else {
        const Eigen::MatrixXd corr = correlation_matrix(data);
        Eigen::MatrixXd dist = Eigen::MatrixXd::Ones(n, n) - corr.cwiseAbs();
        dist.diagonal().setZero();
        const int target = (n + 1) / 2;
        const auto clusters = average_linkage(dist, target);
        std::vector<int> order;
        for (const auto& c : clusters) order.insert(order.end(), c.begin(), c.end());
        g.subsets = chunk_pairs(order);
    }
    return g;
}

TscResult tsc_ds(const Eigen::MatrixXd& data, double nu, const Grouping& grouping,
                 const SvcTrainOptions& opts) {
    // Validate that the grouping partitions the columns exactly once.
    std::vector<char> seen(static_cast<std::size_t>(data.cols()), 0);
    for (const auto& s : grouping.subsets) {
        for (int j : s) {
            require(j >= 0 && j < static_cast<int>(data.cols()), ErrorCode::InvalidArgument,
                    "grouping index out of range");
            require(!seen[static_cast<std::size_t>(j)], ErrorCode::InvalidArgument,
                    "grouping repeats a segment");
            seen[static_cast<std::size_t>(j)] = 1;
        }
    }
    for (char c : seen) require(c, ErrorCode::InvalidArgument, "grouping misses a segment");

    TscResult res;
    const SvcModel full = train_svc(data, nu, opts);
    res.retained_rows = full.sv_index;

    Eigen::MatrixXd kept(static_cast<Eigen::Index>(res.retained_rows.size()), data.cols());
    for (std::size_t i = 0; i < res.retained_rows.size(); ++i) {
        kept.row(static_cast<Eigen::Index>(i)) = data.row(res.retained_rows[i]);
    }

    for (const auto& subset : grouping.subsets) {
        Eigen::MatrixXd sub(kept.rows(), static_cast<Eigen::Index>(subset.size()));
        for (std::size_t c = 0; c < subset.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = kept.col(subset[c]);
        res.models.push_back(train_svc(sub, nu, opts));
    }
    return res;
}

} // namespace robroute
