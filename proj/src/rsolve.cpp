#include "robroute/rsolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "robroute/csv.hpp"
#include "robroute/errors.hpp"

namespace robroute {

using opt::LinRow;
using opt::LpProblem;
using opt::MipProblem;
using opt::MipResult;
using opt::Rel;
using opt::SolveStatus;

const char* method_name(Method m) {
    switch (m) {
        case Method::nominal: return "nominal";
        case Method::budgeted: return "budgeted";
        case Method::ellipsoidal: return "ellipsoidal";
        case Method::svc: return "svc";
        case Method::mkl_svc: return "mkl-svc";
        case Method::drsp: return "drsp";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    if (s == "nominal") return Method::nominal;
    if (s == "budgeted") return Method::budgeted;
    if (s == "ellipsoidal") return Method::ellipsoidal;
    if (s == "svc") return Method::svc;
    if (s == "mkl-svc" || s == "mkl_svc") return Method::mkl_svc;
    if (s == "drsp") return Method::drsp;
    raise(ErrorCode::ConfigError, "unknown method '" + s + "'");
}

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void pad_row(LinRow& row, int width) { row.coeffs.resize(static_cast<std::size_t>(width), 0.0); }

void add_flow_rows(LpProblem& lp, const Network& net, OdPair od) {
    for (LinRow row : flow_constraints(net, od)) {
        pad_row(row, lp.n_vars());
        lp.rows.push_back(std::move(row));
    }
}

void check_close(double got, double want, double rel, const char* what) {
    const double tol = rel * std::max(1.0, std::max(std::fabs(got), std::fabs(want)));
    if (std::fabs(got - want) > tol) {
        raise(ErrorCode::NumericalError,
              std::string(what) + " mismatch: solver " + std::to_string(got) +
                  " vs evaluator " + std::to_string(want));
    }
}

RobustSolution finish_milp(const Network& net, OdPair od, const MipResult& mip, Method method,
                           double parameter, const Timer& timer) {
    if (mip.status == SolveStatus::infeasible) {
        raise(ErrorCode::Unreachable, "no feasible path between the OD endpoints");
    }
    if (mip.status == SolveStatus::unbounded) {
        raise(ErrorCode::NumericalError, "robust counterpart unbounded");
    }
    if (mip.x.empty()) {
        raise(ErrorCode::NumericalError, "node limit reached before any incumbent was found");
    }
    RobustSolution sol;
    sol.method = method;
    sol.parameter = parameter;
    sol.status = mip.status;
    sol.nodes = mip.nodes;
    sol.bound_gap = mip.bound_gap;
    sol.objective = mip.objective;
    std::vector<double> x(mip.x.begin(), mip.x.begin() + net.n_segments());
    sol.path = decode_incidence(net, x, od);
    sol.wall_time_s = timer.seconds();
    return sol;
}

} // namespace

RobustSolution solve_nominal(const Network& net, const Eigen::VectorXd& costs, OdPair od) {
    Timer timer;
    std::vector<double> c(costs.data(), costs.data() + costs.size());
    auto [path, value] = shortest_path(net, c, od);
    RobustSolution sol;
    sol.path = std::move(path);
    sol.objective = value;
    sol.method = Method::nominal;
    sol.wall_time_s = timer.seconds();
    return sol;
}

// ---------------------------------------------------------------------------
// Budgeted

double worst_case_budgeted(const Path& path, const BudgetedSet& set) {
    double base = 0.0;
    std::vector<double> devs;
    devs.reserve(path.segments.size());
    for (int e : path.segments) {
        base += set.c_lo(e);
        devs.push_back(set.d(e));
    }
    std::sort(devs.begin(), devs.end(), std::greater<double>());
    const int take = std::min<int>(set.gamma, static_cast<int>(devs.size()));
    for (int i = 0; i < take; ++i) base += devs[static_cast<std::size_t>(i)];
    return base;
}

RobustSolution solve_budgeted(const Network& net, const BudgetedSet& set, OdPair od) {
    Timer timer;
    const int n = net.n_segments();
    require(set.gamma >= 0 && set.gamma <= n, ErrorCode::BadGamma, "gamma outside [0, n]");

    // Candidate thresholds: deviations in decreasing order plus zero. One
    // nominal shortest path per threshold, n+1 subproblems at most.
    std::vector<double> thresholds(set.d.data(), set.d.data() + n);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());
    thresholds.push_back(0.0);

    RobustSolution best;
    bool have = false;
    std::vector<double> costs(static_cast<std::size_t>(n));
    for (double t : thresholds) {
        for (int j = 0; j < n; ++j) {
            costs[static_cast<std::size_t>(j)] = set.c_lo(j) + std::max(set.d(j) - t, 0.0);
        }
        auto [path, value] = shortest_path(net, costs, od);
        const double candidate = static_cast<double>(set.gamma) * t + value;
        if (!have || candidate < best.objective - 1e-15) {
            best.objective = candidate;
            best.path = std::move(path);
            have = true;
        }
    }
    best.method = Method::budgeted;
    best.parameter = set.gamma;
    // The decomposition value coincides with the worst case of its argmin
    // path; re-evaluating in closed form is both a check and a cleanup.
    const double exact = worst_case_budgeted(best.path, set);
    check_close(best.objective, exact, 1e-9, "budgeted objective");
    best.objective = exact;
    best.wall_time_s = timer.seconds();
    return best;
}

RobustSolution solve_budgeted_milp(const Network& net, const BudgetedSet& set, OdPair od,
                                   const SolveOptions& opts) {
    Timer timer;
    const int n = net.n_segments();
    MipProblem mp;
    LpProblem& lp = mp.lp;
    for (int j = 0; j < n; ++j) lp.add_var(0.0, 1.0, set.c_lo(j));
    const int var_pi = lp.add_var(0.0, opt::kInf, static_cast<double>(set.gamma));
    std::vector<int> var_rho(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) var_rho[static_cast<std::size_t>(j)] = lp.add_var(0.0, opt::kInf, 1.0);

    // Dual of the inner max: pi + rho_j >= d_j x_j.
    for (int j = 0; j < n; ++j) {
        lp.add_row_sparse({{var_pi, 1.0}, {var_rho[static_cast<std::size_t>(j)], 1.0}, {j, -set.d(j)}},
                          Rel::ge, 0.0);
    }
    add_flow_rows(lp, net, od);
    mp.is_integer.assign(static_cast<std::size_t>(lp.n_vars()), 0);
    for (int j = 0; j < n; ++j) mp.is_integer[static_cast<std::size_t>(j)] = 1;

    const MipResult mip = opt::solve_mip(mp, nullptr, opts.limits);
    RobustSolution sol = finish_milp(net, od, mip, Method::budgeted, set.gamma, timer);
    if (opts.verify) {
        const double exact = worst_case_budgeted(sol.path, set);
        check_close(sol.objective, exact, 1e-6, "budgeted MILP objective");
        sol.objective = exact;
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Ellipsoidal

double worst_case_ellipsoidal(const Path& path, const EllipsoidSet& set) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(set.center.size());
    for (int e : path.segments) x(e) = 1.0;
    const double quad = x.dot(set.shape * x);
    return set.center.dot(x) + std::sqrt(std::max(set.lambda_size * quad, 0.0));
}

namespace {

class EllipsoidOracle : public opt::CutOracle {
  public:
    EllipsoidOracle(const EllipsoidSet& set, int n, int var_z)
        : set_(set), n_(n), var_z_(var_z) {}

    std::vector<LinRow> cuts(const std::vector<double>& point) override {
        Eigen::VectorXd x(n_);
        for (int j = 0; j < n_; ++j) x(j) = point[static_cast<std::size_t>(j)];
        const Eigen::VectorXd sx = set_.shape * x;
        const double f = std::sqrt(std::max(set_.lambda_size * x.dot(sx), 0.0));
        if (f <= 1e-10) return {};
        const double z = point[static_cast<std::size_t>(var_z_)];
        if (z >= f - 1e-8 * std::max(1.0, f)) return {};
        // Supporting hyperplane of the convex conic term: the tangent at x
        // passes through the origin, z >= (lambda / f) (Sigma x)^T y.
        LinRow row;
        row.coeffs.assign(static_cast<std::size_t>(var_z_) + 1, 0.0);
        const double scale = set_.lambda_size / f;
        for (int j = 0; j < n_; ++j) row.coeffs[static_cast<std::size_t>(j)] = scale * sx(j);
        row.coeffs[static_cast<std::size_t>(var_z_)] = -1.0;
        row.rel = Rel::le;
        row.rhs = 0.0;
        return {row};
    }

  private:
    const EllipsoidSet& set_;
    int n_;
    int var_z_;
};

} // namespace

RobustSolution solve_ellipsoidal(const Network& net, const EllipsoidSet& set, OdPair od,
                                 const SolveOptions& opts) {
    Timer timer;
    const int n = net.n_segments();
    require(set.lambda_size >= 0.0, ErrorCode::InvalidArgument, "lambda must be >= 0");
    MipProblem mp;
    LpProblem& lp = mp.lp;
    for (int j = 0; j < n; ++j) lp.add_var(0.0, 1.0, set.center(j));
    const int var_z = lp.add_var(0.0, opt::kInf, 1.0);
    add_flow_rows(lp, net, od);
    mp.is_integer.assign(static_cast<std::size_t>(lp.n_vars()), 0);
    for (int j = 0; j < n; ++j) mp.is_integer[static_cast<std::size_t>(j)] = 1;

    EllipsoidOracle oracle(set, n, var_z);
    const MipResult mip = opt::solve_mip(mp, &oracle, opts.limits);
    RobustSolution sol = finish_milp(net, od, mip, Method::ellipsoidal, set.lambda_size, timer);
    if (opts.verify) {
        const double exact = worst_case_ellipsoidal(sol.path, set);
        check_close(sol.objective, exact, 1e-6, "ellipsoidal objective");
        sol.objective = exact;
    }
    return sol;
}

// ---------------------------------------------------------------------------
// SVC inner LPs

namespace {

// max u^T x  s.t.  sum_i alpha_i 1^T v_i <= theta, -v_i <= Q(u - u^i) <= v_i.
double svc_inner_primal_point(const Eigen::VectorXd& x_sub, const SvcModel& model,
                              Eigen::VectorXd* maximizer) {
    const int nf = static_cast<int>(model.kernel.q.rows());
    const int nsv = static_cast<int>(model.sv_data.rows());
    LpProblem lp;
    for (int d = 0; d < nf; ++d) lp.add_var(-opt::kInf, opt::kInf, -x_sub(d)); // u (maximize)
    std::vector<int> var_v(static_cast<std::size_t>(nsv) * static_cast<std::size_t>(nf));
    for (int i = 0; i < nsv; ++i) {
        for (int d = 0; d < nf; ++d) {
            var_v[static_cast<std::size_t>(i * nf + d)] = lp.add_var(0.0, opt::kInf, 0.0);
        }
    }
    {
        std::vector<std::pair<int, double>> budget;
        for (int i = 0; i < nsv; ++i) {
            for (int d = 0; d < nf; ++d) {
                budget.push_back({var_v[static_cast<std::size_t>(i * nf + d)], model.sv_alpha(i)});
            }
        }
        lp.add_row_sparse(budget, Rel::le, model.theta);
    }
    for (int i = 0; i < nsv; ++i) {
        const Eigen::VectorXd qu = model.kernel.q * model.sv_data.row(i).transpose();
        for (int d = 0; d < nf; ++d) {
            std::vector<std::pair<int, double>> pos, neg;
            for (int e = 0; e < nf; ++e) {
                const double q = model.kernel.q(d, e);
                if (q != 0.0) {
                    pos.push_back({e, q});
                    neg.push_back({e, -q});
                }
            }
            pos.push_back({var_v[static_cast<std::size_t>(i * nf + d)], -1.0});
            neg.push_back({var_v[static_cast<std::size_t>(i * nf + d)], -1.0});
            lp.add_row_sparse(pos, Rel::le, qu(d));
            lp.add_row_sparse(neg, Rel::le, -qu(d));
        }
    }
    const auto res = opt::solve_lp(lp);
    require(res.status == SolveStatus::optimal, ErrorCode::NumericalError,
            std::string("SVC inner primal LP ") + opt::status_name(res.status));
    if (maximizer) {
        maximizer->resize(nf);
        for (int d = 0; d < nf; ++d) (*maximizer)(d) = res.x[static_cast<std::size_t>(d)];
    }
    return -res.objective;
}

} // namespace

double svc_inner_primal(const Eigen::VectorXd& x_sub, const SvcModel& model) {
    return svc_inner_primal_point(x_sub, model, nullptr);
}

double svc_inner_dual(const Eigen::VectorXd& x_sub, const SvcModel& model) {
    const int nf = static_cast<int>(model.kernel.q.rows());
    const int nsv = static_cast<int>(model.sv_data.rows());
    LpProblem lp;
    auto var_lm = [&](int i, int d) { return 2 * (i * nf + d); };
    auto var_mu = [&](int i, int d) { return 2 * (i * nf + d) + 1; };
    for (int i = 0; i < nsv; ++i) {
        const Eigen::VectorXd qu = model.kernel.q * model.sv_data.row(i).transpose();
        for (int d = 0; d < nf; ++d) {
            lp.add_var(0.0, opt::kInf, -qu(d)); // lambda_{i,d}
            lp.add_var(0.0, opt::kInf, qu(d));  // mu_{i,d}
        }
    }
    const int var_eta = lp.add_var(0.0, opt::kInf, model.theta);

    // sum_i Q (lambda_i - mu_i) + x = 0, one row per dimension.
    for (int d = 0; d < nf; ++d) {
        std::vector<std::pair<int, double>> terms;
        for (int i = 0; i < nsv; ++i) {
            for (int e = 0; e < nf; ++e) {
                const double q = model.kernel.q(d, e);
                if (q == 0.0) continue;
                terms.push_back({var_lm(i, e), q});
                terms.push_back({var_mu(i, e), -q});
            }
        }
        lp.add_row_sparse(terms, Rel::eq, -x_sub(d));
    }
    // lambda_i + mu_i = eta alpha_i 1.
    for (int i = 0; i < nsv; ++i) {
        for (int d = 0; d < nf; ++d) {
            lp.add_row_sparse({{var_lm(i, d), 1.0}, {var_mu(i, d), 1.0}, {var_eta, -model.sv_alpha(i)}},
                              Rel::eq, 0.0);
        }
    }
    const auto res = opt::solve_lp(lp);
    require(res.status == SolveStatus::optimal, ErrorCode::NumericalError,
            std::string("SVC inner dual LP ") + opt::status_name(res.status));
    return res.objective;
}

double worst_case_svc(const Path& path, const SvcUncertainty& u) {
    double total = 0.0;
    for (std::size_t f = 0; f < u.grouping.subsets.size(); ++f) {
        const auto& subset = u.grouping.subsets[f];
        Eigen::VectorXd x_sub(static_cast<Eigen::Index>(subset.size()));
        for (std::size_t d = 0; d < subset.size(); ++d) {
            x_sub(static_cast<Eigen::Index>(d)) = path.incidence[static_cast<std::size_t>(subset[d])];
        }
        total += svc_inner_primal(x_sub, u.models[f]);
    }
    return total;
}

// ---------------------------------------------------------------------------
// MKL inner LPs

double mkl_inner_primal(const Eigen::VectorXd& x_sub, const MklModel& model) {
    const int nf = static_cast<int>(model.directions.cols());
    const int nsv = static_cast<int>(model.sv_data.rows());
    const int nk = static_cast<int>(model.selected.size());
    LpProblem lp;
    for (int d = 0; d < nf; ++d) lp.add_var(-opt::kInf, opt::kInf, -x_sub(d)); // u
    std::vector<int> var_w(static_cast<std::size_t>(nsv) * static_cast<std::size_t>(nk));
    for (int i = 0; i < nsv; ++i) {
        for (int k = 0; k < nk; ++k) {
            var_w[static_cast<std::size_t>(i * nk + k)] = lp.add_var(-opt::kInf, opt::kInf, 0.0);
        }
    }
    {
        std::vector<std::pair<int, double>> budget;
        for (int i = 0; i < nsv; ++i) {
            for (int k = 0; k < nk; ++k) {
                budget.push_back({var_w[static_cast<std::size_t>(i * nk + k)],
                                  model.sv_alpha(i) * model.weights(model.selected[static_cast<std::size_t>(k)])});
            }
        }
        lp.add_row_sparse(budget, Rel::le, 1.0 - model.rho);
    }
    for (int i = 0; i < nsv; ++i) {
        for (int k = 0; k < nk; ++k) {
            const int m = model.selected[static_cast<std::size_t>(k)];
            const double denom = model.scales(m) * model.kappa;
            const double pu = model.directions.row(m).dot(model.sv_data.row(i)) / denom;
            std::vector<std::pair<int, double>> pos, neg;
            for (int d = 0; d < nf; ++d) {
                const double q = model.directions(m, d) / denom;
                pos.push_back({d, q});
                neg.push_back({d, -q});
            }
            pos.push_back({var_w[static_cast<std::size_t>(i * nk + k)], -1.0});
            neg.push_back({var_w[static_cast<std::size_t>(i * nk + k)], -1.0});
            lp.add_row_sparse(pos, Rel::le, pu);
            lp.add_row_sparse(neg, Rel::le, -pu);
        }
    }
    const auto res = opt::solve_lp(lp);
    require(res.status == SolveStatus::optimal, ErrorCode::NumericalError,
            std::string("MKL inner primal LP ") + opt::status_name(res.status));
    return -res.objective;
}

double mkl_inner_dual(const Eigen::VectorXd& x_sub, const MklModel& model) {
    const int nf = static_cast<int>(model.directions.cols());
    const int nsv = static_cast<int>(model.sv_data.rows());
    const int nk = static_cast<int>(model.selected.size());
    LpProblem lp;
    auto var_lm = [&](int i, int k) { return 2 * (i * nk + k); };
    auto var_mu = [&](int i, int k) { return 2 * (i * nk + k) + 1; };
    for (int i = 0; i < nsv; ++i) {
        for (int k = 0; k < nk; ++k) {
            const int m = model.selected[static_cast<std::size_t>(k)];
            const double denom = model.scales(m) * model.kappa;
            const double pu = model.directions.row(m).dot(model.sv_data.row(i)) / denom;
            lp.add_var(0.0, opt::kInf, -pu); // lambda_{i,m}
            lp.add_var(0.0, opt::kInf, pu);  // mu_{i,m}
        }
    }
    const int var_eta = lp.add_var(0.0, opt::kInf, 1.0 - model.rho);

    for (int d = 0; d < nf; ++d) {
        std::vector<std::pair<int, double>> terms;
        for (int i = 0; i < nsv; ++i) {
            for (int k = 0; k < nk; ++k) {
                const int m = model.selected[static_cast<std::size_t>(k)];
                const double q = model.directions(m, d) / (model.scales(m) * model.kappa);
                if (q == 0.0) continue;
                terms.push_back({var_lm(i, k), q});
                terms.push_back({var_mu(i, k), -q});
            }
        }
        lp.add_row_sparse(terms, Rel::eq, -x_sub(d));
    }
    for (int i = 0; i < nsv; ++i) {
        for (int k = 0; k < nk; ++k) {
            const int m = model.selected[static_cast<std::size_t>(k)];
            lp.add_row_sparse({{var_lm(i, k), 1.0},
                               {var_mu(i, k), 1.0},
                               {var_eta, -model.sv_alpha(i) * model.weights(m)}},
                              Rel::eq, 0.0);
        }
    }
    const auto res = opt::solve_lp(lp);
    require(res.status == SolveStatus::optimal, ErrorCode::NumericalError,
            std::string("MKL inner dual LP ") + opt::status_name(res.status));
    return res.objective;
}

double worst_case_mkl(const Path& path, const MklUncertainty& u) {
    double total = 0.0;
    for (std::size_t f = 0; f < u.grouping.subsets.size(); ++f) {
        const auto& subset = u.grouping.subsets[f];
        Eigen::VectorXd x_sub(static_cast<Eigen::Index>(subset.size()));
        for (std::size_t d = 0; d < subset.size(); ++d) {
            x_sub(static_cast<Eigen::Index>(d)) = path.incidence[static_cast<std::size_t>(subset[d])];
        }
        total += mkl_inner_primal(x_sub, u.models[f]);
    }
    return total;
}

// ---------------------------------------------------------------------------
// SVC / MKL robust counterparts

namespace {

// Outer-approximation oracle over per-subset epigraph variables z_f: a
// violated subset gets the supporting cut z_f >= u*^T x_f at the inner
// maximizer u*, which is valid since u* is a member of the subset's set.
class SubsetSupportOracle : public opt::CutOracle {
  public:
    using InnerSolve = std::function<double(std::size_t, const Eigen::VectorXd&, Eigen::VectorXd*)>;

    SubsetSupportOracle(const Grouping& grouping, int first_z, InnerSolve inner)
        : grouping_(grouping), first_z_(first_z), inner_(std::move(inner)) {}

    std::vector<LinRow> cuts(const std::vector<double>& point) override {
        std::vector<LinRow> out;
        for (std::size_t f = 0; f < grouping_.subsets.size(); ++f) {
            const auto& subset = grouping_.subsets[f];
            Eigen::VectorXd x_sub(static_cast<Eigen::Index>(subset.size()));
            for (std::size_t d = 0; d < subset.size(); ++d) {
                x_sub(static_cast<Eigen::Index>(d)) = point[static_cast<std::size_t>(subset[d])];
            }
            Eigen::VectorXd u_star;
            const double value = inner_(f, x_sub, &u_star);
            const double z = point[static_cast<std::size_t>(first_z_) + f];
            if (z >= value - 1e-8 * std::max(1.0, std::fabs(value))) continue;
            LinRow row;
            row.coeffs.assign(static_cast<std::size_t>(first_z_) + grouping_.subsets.size(), 0.0);
            for (std::size_t d = 0; d < subset.size(); ++d) {
                row.coeffs[static_cast<std::size_t>(subset[d])] = u_star(static_cast<Eigen::Index>(d));
            }
            row.coeffs[static_cast<std::size_t>(first_z_) + f] = -1.0;
            row.rel = Rel::le;
            row.rhs = 0.0;
            out.push_back(std::move(row));
        }
        return out;
    }

  private:
    const Grouping& grouping_;
    int first_z_;
    InnerSolve inner_;
};

RobustSolution solve_subset_accelerated(const Network& net, const Grouping& grouping, OdPair od,
                                        Method method, double parameter,
                                        const SubsetSupportOracle::InnerSolve& inner,
                                        const std::vector<Eigen::VectorXd>& seed_members,
                                        const SolveOptions& opts, const Timer& timer) {
    const int n = net.n_segments();
    const int n_subsets = static_cast<int>(grouping.subsets.size());
    MipProblem mp;
    LpProblem& lp = mp.lp;
    for (int j = 0; j < n; ++j) lp.add_var(0.0, 1.0, 0.0);
    const int first_z = n;
    for (int f = 0; f < n_subsets; ++f) lp.add_var(0.0, opt::kInf, 1.0); // objective sum z_f
    add_flow_rows(lp, net, od);
    // Warm cuts through a known member of each subset's set.
    for (int f = 0; f < n_subsets; ++f) {
        const auto& subset = grouping.subsets[static_cast<std::size_t>(f)];
        std::vector<std::pair<int, double>> terms;
        for (std::size_t d = 0; d < subset.size(); ++d) {
            terms.push_back({subset[d], seed_members[static_cast<std::size_t>(f)](static_cast<Eigen::Index>(d))});
        }
        terms.push_back({first_z + f, -1.0});
        lp.add_row_sparse(terms, Rel::le, 0.0);
    }
    mp.is_integer.assign(static_cast<std::size_t>(lp.n_vars()), 0);
    for (int j = 0; j < n; ++j) mp.is_integer[static_cast<std::size_t>(j)] = 1;

    SubsetSupportOracle oracle(grouping, first_z, inner);
    const MipResult mip = opt::solve_mip(mp, &oracle, opts.limits);
    return finish_milp(net, od, mip, method, parameter, timer);
}

} // namespace

RobustSolution solve_svc_rsp(const Network& net, const SvcUncertainty& u, OdPair od,
                             const SolveOptions& opts) {
    Timer timer;
    const int n = net.n_segments();
    require(!u.models.empty() && u.models.size() == u.grouping.subsets.size(),
            ErrorCode::DimensionMismatch, "one SVC model per subset required");

    long printed_vars = 0;
    for (std::size_t f = 0; f < u.models.size(); ++f) {
        printed_vars += 2L * static_cast<long>(u.models[f].sv_data.rows()) *
                        static_cast<long>(u.grouping.subsets[f].size());
    }
    const bool printed = opts.assembly == SolveOptions::Assembly::printed ||
                         (opts.assembly == SolveOptions::Assembly::automatic &&
                          printed_vars <= opts.printed_var_cap);

    RobustSolution sol;
    if (printed) {
        MipProblem mp;
        LpProblem& lp = mp.lp;
        for (int j = 0; j < n; ++j) lp.add_var(0.0, 1.0, 0.0);
        const int var_b = lp.add_var(-opt::kInf, opt::kInf, 1.0);
        struct Block {
            int var_eta;
            int first_lm; // lambda/mu interleaved per (sv, dim)
        };
        std::vector<Block> blocks;
        for (std::size_t f = 0; f < u.models.size(); ++f) {
            Block blk;
            blk.var_eta = lp.add_var(0.0, opt::kInf, 0.0);
            blk.first_lm = lp.n_vars();
            const int nsv = static_cast<int>(u.models[f].sv_data.rows());
            const int nf = static_cast<int>(u.grouping.subsets[f].size());
            for (int i = 0; i < nsv; ++i) {
                for (int d = 0; d < nf; ++d) {
                    lp.add_var(0.0, opt::kInf, 0.0); // lambda_{f,i,d}
                    lp.add_var(0.0, opt::kInf, 0.0); // mu_{f,i,d}
                }
            }
            blocks.push_back(blk);
        }

        // Bound row: sum_f [ sum_i (mu_i - lambda_i)^T Q u^i + eta_f theta_f ] <= b.
        {
            std::vector<std::pair<int, double>> terms;
            for (std::size_t f = 0; f < u.models.size(); ++f) {
                const SvcModel& m = u.models[f];
                const int nf = static_cast<int>(u.grouping.subsets[f].size());
                const int nsv = static_cast<int>(m.sv_data.rows());
                for (int i = 0; i < nsv; ++i) {
                    const Eigen::VectorXd qu = m.kernel.q * m.sv_data.row(i).transpose();
                    for (int d = 0; d < nf; ++d) {
                        const int lm = blocks[f].first_lm + 2 * (i * nf + d);
                        terms.push_back({lm, -qu(d)});     // lambda
                        terms.push_back({lm + 1, qu(d)});  // mu
                    }
                }
                terms.push_back({blocks[f].var_eta, m.theta});
            }
            terms.push_back({var_b, -1.0});
            lp.add_row_sparse(terms, Rel::le, 0.0);
        }
        // Coupling rows: sum_i Q (lambda_i - mu_i) + x_f = 0 per subset dim.
        for (std::size_t f = 0; f < u.models.size(); ++f) {
            const SvcModel& m = u.models[f];
            const auto& subset = u.grouping.subsets[f];
            const int nf = static_cast<int>(subset.size());
            const int nsv = static_cast<int>(m.sv_data.rows());
            for (int d = 0; d < nf; ++d) {
                std::vector<std::pair<int, double>> terms;
                for (int i = 0; i < nsv; ++i) {
                    for (int e = 0; e < nf; ++e) {
                        const double q = m.kernel.q(d, e);
                        if (q == 0.0) continue;
                        const int lm = blocks[f].first_lm + 2 * (i * nf + e);
                        terms.push_back({lm, q});
                        terms.push_back({lm + 1, -q});
                    }
                }
                terms.push_back({subset[static_cast<std::size_t>(d)], 1.0});
                lp.add_row_sparse(terms, Rel::eq, 0.0);
            }
            // Multiplier coupling: lambda_i + mu_i = eta_f alpha_i.
            for (int i = 0; i < nsv; ++i) {
                for (int d = 0; d < nf; ++d) {
                    const int lm = blocks[f].first_lm + 2 * (i * nf + d);
                    lp.add_row_sparse({{lm, 1.0}, {lm + 1, 1.0}, {blocks[f].var_eta, -m.sv_alpha(i)}},
                                      Rel::eq, 0.0);
                }
            }
        }
        add_flow_rows(lp, net, od);
        mp.is_integer.assign(static_cast<std::size_t>(lp.n_vars()), 0);
        for (int j = 0; j < n; ++j) mp.is_integer[static_cast<std::size_t>(j)] = 1;
        const MipResult mip = opt::solve_mip(mp, nullptr, opts.limits);
        sol = finish_milp(net, od, mip, Method::svc, u.models.front().nu, timer);
    } else {
        // Warm cuts need genuine members of each subset's set: a boundary SV
        // when one exists (interior SVs at the box cap can lie outside).
        std::vector<Eigen::VectorXd> seeds;
        for (const auto& m : u.models) {
            int pick = 0;
            if (!m.bsv_index.empty()) {
                const auto it = std::find(m.sv_index.begin(), m.sv_index.end(), m.bsv_index.front());
                pick = static_cast<int>(it - m.sv_index.begin());
            }
            seeds.push_back(m.sv_data.row(pick).transpose());
        }
        auto inner = [&u](std::size_t f, const Eigen::VectorXd& x_sub, Eigen::VectorXd* u_star) {
            return svc_inner_primal_point(x_sub, u.models[f], u_star);
        };
        sol = solve_subset_accelerated(net, u.grouping, od, Method::svc, u.models.front().nu, inner,
                                       seeds, opts, timer);
    }
    if (opts.verify) {
        const double exact = worst_case_svc(sol.path, u);
        check_close(sol.objective, exact, 1e-6, "svc objective");
        sol.objective = exact;
    }
    return sol;
}

RobustSolution solve_mkl_rsp(const Network& net, const MklUncertainty& u, OdPair od,
                             const SolveOptions& opts) {
    Timer timer;
    const int n = net.n_segments();
    require(!u.models.empty() && u.models.size() == u.grouping.subsets.size(),
            ErrorCode::DimensionMismatch, "one MKL model per subset required");

    long printed_vars = 0;
    for (const auto& m : u.models) {
        printed_vars += 2L * static_cast<long>(m.sv_data.rows()) * static_cast<long>(m.selected.size());
    }
    const bool printed = opts.assembly == SolveOptions::Assembly::printed ||
                         (opts.assembly == SolveOptions::Assembly::automatic &&
                          printed_vars <= opts.printed_var_cap);

    RobustSolution sol;
    if (printed) {
        MipProblem mp;
        LpProblem& lp = mp.lp;
        for (int j = 0; j < n; ++j) lp.add_var(0.0, 1.0, 0.0);
        const int var_b = lp.add_var(-opt::kInf, opt::kInf, 1.0);
        struct Block {
            int var_eta;
            int first_lm; // lambda/mu interleaved per (sv, kernel)
        };
        std::vector<Block> blocks;
        for (const auto& m : u.models) {
            Block blk;
            blk.var_eta = lp.add_var(0.0, opt::kInf, 0.0);
            blk.first_lm = lp.n_vars();
            const int cells = static_cast<int>(m.sv_data.rows()) * static_cast<int>(m.selected.size());
            for (int c = 0; c < cells; ++c) {
                lp.add_var(0.0, opt::kInf, 0.0);
                lp.add_var(0.0, opt::kInf, 0.0);
            }
            blocks.push_back(blk);
        }

        {
            std::vector<std::pair<int, double>> terms;
            for (std::size_t f = 0; f < u.models.size(); ++f) {
                const MklModel& m = u.models[f];
                const int nk = static_cast<int>(m.selected.size());
                for (int i = 0; i < static_cast<int>(m.sv_data.rows()); ++i) {
                    for (int k = 0; k < nk; ++k) {
                        const int mm = m.selected[static_cast<std::size_t>(k)];
                        const double pu = m.directions.row(mm).dot(m.sv_data.row(i)) /
                                          (m.scales(mm) * m.kappa);
                        const int lm = blocks[f].first_lm + 2 * (i * nk + k);
                        terms.push_back({lm, -pu});
                        terms.push_back({lm + 1, pu});
                    }
                }
                terms.push_back({blocks[f].var_eta, 1.0 - m.rho});
            }
            terms.push_back({var_b, -1.0});
            lp.add_row_sparse(terms, Rel::le, 0.0);
        }
        for (std::size_t f = 0; f < u.models.size(); ++f) {
            const MklModel& m = u.models[f];
            const auto& subset = u.grouping.subsets[f];
            const int nf = static_cast<int>(subset.size());
            const int nk = static_cast<int>(m.selected.size());
            const int nsv = static_cast<int>(m.sv_data.rows());
            for (int d = 0; d < nf; ++d) {
                std::vector<std::pair<int, double>> terms;
                for (int i = 0; i < nsv; ++i) {
                    for (int k = 0; k < nk; ++k) {
                        const int mm = m.selected[static_cast<std::size_t>(k)];
                        const double q = m.directions(mm, d) / (m.scales(mm) * m.kappa);
                        if (q == 0.0) continue;
                        const int lm = blocks[f].first_lm + 2 * (i * nk + k);
                        terms.push_back({lm, q});
                        terms.push_back({lm + 1, -q});
                    }
                }
                terms.push_back({subset[static_cast<std::size_t>(d)], 1.0});
                lp.add_row_sparse(terms, Rel::eq, 0.0);
            }
            for (int i = 0; i < nsv; ++i) {
                for (int k = 0; k < nk; ++k) {
                    const int mm = m.selected[static_cast<std::size_t>(k)];
                    const int lm = blocks[f].first_lm + 2 * (i * nk + k);
                    lp.add_row_sparse(
                        {{lm, 1.0}, {lm + 1, 1.0}, {blocks[f].var_eta, -m.sv_alpha(i) * m.weights(mm)}},
                        Rel::eq, 0.0);
                }
            }
        }
        add_flow_rows(lp, net, od);
        mp.is_integer.assign(static_cast<std::size_t>(lp.n_vars()), 0);
        for (int j = 0; j < n; ++j) mp.is_integer[static_cast<std::size_t>(j)] = 1;
        const MipResult mip = opt::solve_mip(mp, nullptr, opts.limits);
        sol = finish_milp(net, od, mip, Method::mkl_svc, u.models.front().nu, timer);
    } else {
        std::vector<Eigen::VectorXd> seeds;
        for (const auto& m : u.models) {
            int pick = 0;
            if (!m.bsv_index.empty()) {
                const auto it = std::find(m.sv_index.begin(), m.sv_index.end(), m.bsv_index.front());
                pick = static_cast<int>(it - m.sv_index.begin());
            }
            seeds.push_back(m.sv_data.row(pick).transpose());
        }
        auto inner = [&u](std::size_t f, const Eigen::VectorXd& x_sub, Eigen::VectorXd* u_star) {
            // The small LP has no cheap maximizer accessor; re-solve primal
            // with the point extraction below.
            const MklModel& m = u.models[f];
            const int nf = static_cast<int>(m.directions.cols());
            LpProblem lp;
            for (int d = 0; d < nf; ++d) lp.add_var(-opt::kInf, opt::kInf, -x_sub(d));
            const int nsv = static_cast<int>(m.sv_data.rows());
            const int nk = static_cast<int>(m.selected.size());
            std::vector<int> var_w(static_cast<std::size_t>(nsv * nk));
            for (int c = 0; c < nsv * nk; ++c) var_w[static_cast<std::size_t>(c)] = lp.add_var(-opt::kInf, opt::kInf, 0.0);
            std::vector<std::pair<int, double>> budget;
            for (int i = 0; i < nsv; ++i) {
                for (int k = 0; k < nk; ++k) {
                    budget.push_back({var_w[static_cast<std::size_t>(i * nk + k)],
                                      m.sv_alpha(i) * m.weights(m.selected[static_cast<std::size_t>(k)])});
                }
            }
            lp.add_row_sparse(budget, Rel::le, 1.0 - m.rho);
            for (int i = 0; i < nsv; ++i) {
                for (int k = 0; k < nk; ++k) {
                    const int mm = m.selected[static_cast<std::size_t>(k)];
                    const double denom = m.scales(mm) * m.kappa;
                    const double pu = m.directions.row(mm).dot(m.sv_data.row(i)) / denom;
                    std::vector<std::pair<int, double>> pos, neg;
                    for (int d = 0; d < nf; ++d) {
                        const double q = m.directions(mm, d) / denom;
                        pos.push_back({d, q});
                        neg.push_back({d, -q});
                    }
                    pos.push_back({var_w[static_cast<std::size_t>(i * nk + k)], -1.0});
                    neg.push_back({var_w[static_cast<std::size_t>(i * nk + k)], -1.0});
                    lp.add_row_sparse(pos, Rel::le, pu);
                    lp.add_row_sparse(neg, Rel::le, -pu);
                }
            }
            const auto res = opt::solve_lp(lp);
            require(res.status == SolveStatus::optimal, ErrorCode::NumericalError,
                    "MKL inner primal LP failed");
            if (u_star) {
                u_star->resize(nf);
                for (int d = 0; d < nf; ++d) (*u_star)(d) = res.x[static_cast<std::size_t>(d)];
            }
            return -res.objective;
        };
        sol = solve_subset_accelerated(net, u.grouping, od, Method::mkl_svc, u.models.front().nu,
                                       inner, seeds, opts, timer);
    }
    if (opts.verify) {
        const double exact = worst_case_mkl(sol.path, u);
        check_close(sol.objective, exact, 1e-6, "mkl objective");
        sol.objective = exact;
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Wasserstein DRSP

double drsp_objective(const Path& path, const WassersteinAmbiguity& amb) {
    const int n_samples = static_cast<int>(amb.samples.rows());
    // At fixed binary x the support multipliers collapse: every on-path
    // component shares m = max(0, 1 - lambda) and contributes the slack to
    // the upper support bound, so the program reduces to (t, lambda, s).
    Eigen::VectorXd x = Eigen::VectorXd::Zero(amb.samples.cols());
    for (int e : path.segments) x(e) = 1.0;
    Eigen::VectorXd c = amb.samples * x;            // xi_i^T x
    Eigen::VectorXd slack(n_samples);               // sum_on-path (b_j - xi_ij)
    const double bx = amb.support_hi.dot(x);
    for (int i = 0; i < n_samples; ++i) slack(i) = bx - c(i);

    LpProblem lp;
    const int var_t = lp.add_var(-opt::kInf, opt::kInf, 1.0);
    const int var_l = lp.add_var(0.0, 1.0, amb.epsilon / amb.alpha);
    std::vector<int> var_s(static_cast<std::size_t>(n_samples));
    const double sw = 1.0 / (amb.alpha * static_cast<double>(n_samples));
    for (int i = 0; i < n_samples; ++i) var_s[static_cast<std::size_t>(i)] = lp.add_var(0.0, opt::kInf, sw);
    // s_i >= c_i + (1 - lambda) slack_i - t.
    for (int i = 0; i < n_samples; ++i) {
        lp.add_row_sparse({{var_s[static_cast<std::size_t>(i)], 1.0}, {var_t, 1.0}, {var_l, slack(i)}},
                          Rel::ge, c(i) + slack(i));
    }
    const auto res = opt::solve_lp(lp);
    require(res.status == SolveStatus::optimal, ErrorCode::NumericalError,
            std::string("DRSP evaluation LP ") + opt::status_name(res.status));
    return res.objective;
}

RobustSolution solve_drsp(const Network& net, const WassersteinAmbiguity& amb, OdPair od,
                          const SolveOptions& opts) {
    Timer timer;
    const int n = net.n_segments();
    const int n_samples = static_cast<int>(amb.samples.rows());
    require(static_cast<int>(amb.samples.cols()) == n, ErrorCode::DimensionMismatch,
            "sample width != segment count");

    const long printed_vars = 2L * n * n_samples;
    const bool printed = opts.assembly == SolveOptions::Assembly::printed ||
                         (opts.assembly == SolveOptions::Assembly::automatic &&
                          printed_vars <= opts.printed_var_cap);

    MipProblem mp;
    LpProblem& lp = mp.lp;
    for (int j = 0; j < n; ++j) lp.add_var(0.0, 1.0, 0.0);
    const int var_t = lp.add_var(-opt::kInf, opt::kInf, 1.0);
    const int var_l = lp.add_var(0.0, opt::kInf, amb.epsilon / amb.alpha);
    const double sw = 1.0 / (amb.alpha * static_cast<double>(n_samples));
    std::vector<int> var_s(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) var_s[static_cast<std::size_t>(i)] = lp.add_var(0.0, opt::kInf, sw);

    if (printed) {
        // Literal program: multipliers gamma_i, eta_i per sample and segment,
        // infinity-norm rows linearized componentwise.
        std::vector<int> var_g(static_cast<std::size_t>(n_samples) * static_cast<std::size_t>(n));
        std::vector<int> var_e(static_cast<std::size_t>(n_samples) * static_cast<std::size_t>(n));
        for (int i = 0; i < n_samples; ++i) {
            for (int j = 0; j < n; ++j) {
                var_g[static_cast<std::size_t>(i * n + j)] = lp.add_var(0.0, opt::kInf, 0.0);
                var_e[static_cast<std::size_t>(i * n + j)] = lp.add_var(0.0, opt::kInf, 0.0);
            }
        }
        for (int i = 0; i < n_samples; ++i) {
            // (x + gamma_i - eta_i)^T xi_i - gamma_i^T a + eta_i^T b - t <= s_i.
            std::vector<std::pair<int, double>> terms;
            for (int j = 0; j < n; ++j) {
                const double xi = amb.samples(i, j);
                terms.push_back({j, xi});
                terms.push_back({var_g[static_cast<std::size_t>(i * n + j)], xi - amb.support_lo(j)});
                terms.push_back({var_e[static_cast<std::size_t>(i * n + j)], amb.support_hi(j) - xi});
            }
            terms.push_back({var_t, -1.0});
            terms.push_back({var_s[static_cast<std::size_t>(i)], -1.0});
            lp.add_row_sparse(terms, Rel::le, 0.0);
            // |gamma_ij + x_j - eta_ij| <= lambda componentwise.
            for (int j = 0; j < n; ++j) {
                const int g = var_g[static_cast<std::size_t>(i * n + j)];
                const int e = var_e[static_cast<std::size_t>(i * n + j)];
                lp.add_row_sparse({{g, 1.0}, {j, 1.0}, {e, -1.0}, {var_l, -1.0}}, Rel::le, 0.0);
                lp.add_row_sparse({{g, -1.0}, {j, -1.0}, {e, 1.0}, {var_l, -1.0}}, Rel::le, 0.0);
            }
        }
    } else {
        // Condensed equivalent for x >= 0: m_j = max(0, x_j - lambda) carries
        // the support correction (b_j - xi_ij) shared across samples.
        std::vector<int> var_m(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) var_m[static_cast<std::size_t>(j)] = lp.add_var(0.0, opt::kInf, 0.0);
        for (int j = 0; j < n; ++j) {
            lp.add_row_sparse({{j, 1.0}, {var_l, -1.0}, {var_m[static_cast<std::size_t>(j)], -1.0}},
                              Rel::le, 0.0);
        }
        for (int i = 0; i < n_samples; ++i) {
            std::vector<std::pair<int, double>> terms;
            for (int j = 0; j < n; ++j) {
                terms.push_back({j, amb.samples(i, j)});
                terms.push_back({var_m[static_cast<std::size_t>(j)], amb.support_hi(j) - amb.samples(i, j)});
            }
            terms.push_back({var_t, -1.0});
            terms.push_back({var_s[static_cast<std::size_t>(i)], -1.0});
            lp.add_row_sparse(terms, Rel::le, 0.0);
        }
    }
    add_flow_rows(lp, net, od);
    mp.is_integer.assign(static_cast<std::size_t>(lp.n_vars()), 0);
    for (int j = 0; j < n; ++j) mp.is_integer[static_cast<std::size_t>(j)] = 1;

    const MipResult mip = opt::solve_mip(mp, nullptr, opts.limits);
    RobustSolution sol = finish_milp(net, od, mip, Method::drsp, amb.epsilon, timer);
    if (opts.verify) {
        const double exact = drsp_objective(sol.path, amb);
        check_close(sol.objective, exact, 1e-6, "drsp objective");
        sol.objective = exact;
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Generic evaluation and the brute-force reference

double worst_case_eval(const Path& path, const UncertaintyModel& model) {
    return std::visit(
        [&path](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Eigen::VectorXd>) {
                double s = 0.0;
                for (int e : path.segments) s += m(e);
                return s;
            } else if constexpr (std::is_same_v<T, BudgetedSet>) {
                return worst_case_budgeted(path, m);
            } else if constexpr (std::is_same_v<T, EllipsoidSet>) {
                return worst_case_ellipsoidal(path, m);
            } else if constexpr (std::is_same_v<T, SvcUncertainty>) {
                return worst_case_svc(path, m);
            } else if constexpr (std::is_same_v<T, MklUncertainty>) {
                return worst_case_mkl(path, m);
            } else {
                return drsp_objective(path, m);
            }
        },
        model);
}

RobustSolution brute_force_robust(const Network& net, const UncertaintyModel& model, OdPair od,
                                  int max_segments, std::size_t cap) {
    Timer timer;
    const auto paths = enumerate_paths(net, od, max_segments, cap);
    require(!paths.empty(), ErrorCode::Unreachable, "no path within the segment budget");
    RobustSolution best;
    bool have = false;
    for (const Path& p : paths) {
        const double v = worst_case_eval(p, model);
        if (!have || v < best.objective - 1e-15) {
            best.objective = v;
            best.path = p;
            have = true;
        }
    }
    best.wall_time_s = timer.seconds();
    return best;
}

std::string solution_csv_header() {
    return "method,param,od_origin,od_dest,fold,objective,path_segment_ids";
}

void append_solution_csv(std::string& out, const RobustSolution& sol, OdPair od, int fold) {
    out += method_name(sol.method);
    out += ',';
    out += csv::format_double(sol.parameter);
    out += ',';
    out += std::to_string(od.origin);
    out += ',';
    out += std::to_string(od.destination);
    out += ',';
    out += std::to_string(fold);
    out += ',';
    out += csv::format_double(sol.objective);
    out += ',';
    for (std::size_t i = 0; i < sol.path.segments.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(sol.path.segments[i]);
    }
    out += '\n';
}

} // namespace robroute
