#include "robroute/mkl.hpp"

#include <algorithm>
#include <cmath>

#include "robroute/errors.hpp"

namespace robroute {

namespace {

Eigen::MatrixXd make_directions(int dim, int m_kernels) {
    Eigen::MatrixXd q(m_kernels, dim);
    if (dim == 1) {
        q.setOnes();
        return q;
    }
    if (dim == 2) {
        // Half-circle fan: +/-q induce the same kernel.
        for (int m = 0; m < m_kernels; ++m) {
            const double a = M_PI * static_cast<double>(m) / static_cast<double>(m_kernels);
            q(m, 0) = std::cos(a);
            q(m, 1) = std::sin(a);
        }
        return q;
    }
    require(dim == 3, ErrorCode::InvalidArgument,
            "MKL subsets must have dimension <= 3 (got " + std::to_string(dim) + ")");
    // Fixed Fibonacci hemisphere design.
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int m = 0; m < m_kernels; ++m) {
        const double z = (static_cast<double>(m) + 0.5) / static_cast<double>(m_kernels);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = golden * static_cast<double>(m);
        q(m, 0) = r * std::cos(a);
        q(m, 1) = r * std::sin(a);
        q(m, 2) = z;
    }
    return q;
}

} // namespace

double mkl_basis_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const MklModel& model,
                        int m) {
    const double proj = model.directions.row(m).dot(u - v);
    return 1.0 - std::fabs(proj) / (model.scales(m) * model.kappa);
}

MklModel train_mkl(const Eigen::MatrixXd& data, double nu, int m_kernels, double mu,
                   const MklTrainOptions& opts) {
    const int n_rows = static_cast<int>(data.rows());
    const int dim = static_cast<int>(data.cols());
    require(m_kernels >= 1, ErrorCode::InvalidArgument, "need at least one kernel");
    require(mu > 0.0, ErrorCode::InvalidArgument, "mu must be > 0");
    require(n_rows >= 2, ErrorCode::DegenerateData, "need at least 2 rows to train");

    MklModel model;
    model.nu = nu;
    model.kappa = 1.0;
    model.box_cap = 1.0 / (static_cast<double>(n_rows) * nu);
    model.directions = make_directions(dim, m_kernels);
    model.scales.resize(m_kernels);

    // Per-kernel projection columns and basis kernel matrices.
    Eigen::MatrixXd proj(n_rows, m_kernels);
    for (int m = 0; m < m_kernels; ++m) {
        proj.col(m) = data * model.directions.row(m).transpose();
        const double span = proj.col(m).maxCoeff() - proj.col(m).minCoeff();
        model.scales(m) = span > 0.0 ? span : 1.0;
    }
    std::vector<Eigen::MatrixXd> basis(static_cast<std::size_t>(m_kernels));
    for (int m = 0; m < m_kernels; ++m) {
        Eigen::MatrixXd& Km = basis[static_cast<std::size_t>(m)];
        Km.resize(n_rows, n_rows);
        const double denom = model.scales(m) * model.kappa;
        for (int i = 0; i < n_rows; ++i) {
            Km(i, i) = 1.0;
            for (int j = i + 1; j < n_rows; ++j) {
                const double v = 1.0 - std::fabs(proj(i, m) - proj(j, m)) / denom;
                Km(i, j) = v;
                Km(j, i) = v;
            }
        }
    }

    // Alternating optimization. With alpha fixed the dual objective is linear
    // in pi with slope g_m = a^T K_m a - 1, so a mirror-ascent step
    // pi <- pi * exp(g/mu) (normalized) climbs it while staying on the
    // simplex; smaller mu concentrates the weights faster.
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(m_kernels, 1.0 / static_cast<double>(m_kernels));
    Eigen::VectorXd alpha;
    double residual = 0.0;
    int outer = 0;
    for (; outer < opts.max_outer; ++outer) {
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n_rows, n_rows);
        for (int m = 0; m < m_kernels; ++m) K += pi(m) * basis[static_cast<std::size_t>(m)];
        SvcDualResult dual = solve_svc_dual(K, nu, opts.kkt_tol, opts.max_sweeps);
        alpha = std::move(dual.alpha);
        residual = dual.kkt_residual;

        Eigen::VectorXd g(m_kernels);
        for (int m = 0; m < m_kernels; ++m) {
            g(m) = alpha.dot(basis[static_cast<std::size_t>(m)] * alpha) - 1.0;
        }
        const double g_max = g.maxCoeff();
        Eigen::VectorXd next(m_kernels);
        for (int m = 0; m < m_kernels; ++m) next(m) = pi(m) * std::exp((g(m) - g_max) / mu);
        const double total = next.sum();
        require(total > 0.0, ErrorCode::NoConvergence, "kernel weights vanished");
        next /= total;
        const double delta = (next - pi).cwiseAbs().maxCoeff();
        pi = next;
        if (delta < opts.pi_tol) {
            ++outer;
            break;
        }
    }
    model.outer_iterations = outer;
    model.weights = pi;
    model.alpha = alpha;
    model.kkt_residual = residual;
    for (int m = 0; m < m_kernels; ++m) {
        if (pi(m) > opts.weight_floor) model.selected.push_back(m);
    }
    require(!model.selected.empty(), ErrorCode::NoConvergence, "no kernel selected");

    const double cap = model.box_cap;
    for (int i = 0; i < n_rows; ++i) {
        if (alpha(i) > opts.eps_sv) {
            model.sv_index.push_back(i);
            if (alpha(i) < cap - opts.eps_sv) model.bsv_index.push_back(i);
        }
    }
    require(!model.sv_index.empty(), ErrorCode::DegenerateData, "no support vectors found");
    model.sv_data.resize(static_cast<Eigen::Index>(model.sv_index.size()), dim);
    model.sv_alpha.resize(static_cast<Eigen::Index>(model.sv_index.size()));
    for (std::size_t s = 0; s < model.sv_index.size(); ++s) {
        model.sv_data.row(static_cast<Eigen::Index>(s)) = data.row(model.sv_index[s]);
        model.sv_alpha(static_cast<Eigen::Index>(s)) = alpha(model.sv_index[s]);
    }

    if (!model.bsv_index.empty()) {
        model.rho = mkl_decision(data.row(model.bsv_index.front()).transpose(), model);
    } else {
        // Contain every SV: membership is decision >= rho.
        double lowest = std::numeric_limits<double>::infinity();
        for (int i : model.sv_index) {
            lowest = std::min(lowest, mkl_decision(data.row(i).transpose(), model));
        }
        model.rho = lowest;
    }
    return model;
}

double mkl_decision(const Eigen::VectorXd& u, const MklModel& model) {
    double v = 0.0;
    for (Eigen::Index s = 0; s < model.sv_data.rows(); ++s) {
        const Eigen::VectorXd diff = u - model.sv_data.row(s).transpose();
        double k = 0.0;
        for (int m : model.selected) {
            const double p = model.directions.row(m).dot(diff);
            k += model.weights(m) * (1.0 - std::fabs(p) / (model.scales(m) * model.kappa));
        }
        v += model.sv_alpha(s) * k;
    }
    return v;
}

bool mkl_membership(const Eigen::VectorXd& u, const MklModel& model, double tol) {
    return mkl_decision(u, model) >= model.rho - tol;
}

MklTscResult tsc_ds_mkl(const Eigen::MatrixXd& data, double nu, const Grouping& grouping,
                        int m_kernels, double mu, const SvcTrainOptions& svc_opts,
                        const MklTrainOptions& mkl_opts) {
    MklTscResult res;
    const SvcModel full = train_svc(data, nu, svc_opts);
    res.retained_rows = full.sv_index;
    Eigen::MatrixXd kept(static_cast<Eigen::Index>(res.retained_rows.size()), data.cols());
    for (std::size_t i = 0; i < res.retained_rows.size(); ++i) {
        kept.row(static_cast<Eigen::Index>(i)) = data.row(res.retained_rows[i]);
    }
    for (const auto& subset : grouping.subsets) {
        Eigen::MatrixXd sub(kept.rows(), static_cast<Eigen::Index>(subset.size()));
        for (std::size_t c = 0; c < subset.size(); ++c) {
            sub.col(static_cast<Eigen::Index>(c)) = kept.col(subset[c]);
        }
        res.models.push_back(train_mkl(sub, nu, m_kernels, mu, mkl_opts));
    }
    return res;
}

} // namespace robroute
