#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "robroute/errors.hpp"
#include "robroute/svc.hpp"
#include "robroute/rng.hpp"
#include "robroute/scenarios.hpp"
#include "testutil.hpp"

using namespace robroute;

namespace {

Eigen::MatrixXd gaussian_cloud(std::uint64_t seed, int n, int dim = 2) {
    Rng rng(stable_hash({seed, 0x67617573ULL}));
    Eigen::MatrixXd m(n, dim);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dim; ++d) m(i, d) = 10.0 + 2.0 * rng.normal() + 0.5 * d;
    }
    return m;
}

// Projection onto {a : sum a = 1, 0 <= a <= cap} by bisection on the shift.
Eigen::VectorXd project_capped_simplex(Eigen::VectorXd v, double cap) {
    double lo = v.minCoeff() - 1.0, hi = v.maxCoeff() + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double tau = 0.5 * (lo + hi);
        double s = 0.0;
        for (int i = 0; i < v.size(); ++i) s += std::clamp(v(i) - tau, 0.0, cap);
        if (s > 1.0) {
            lo = tau;
        } else {
            hi = tau;
        }
    }
    const double tau = 0.5 * (lo + hi);
    for (int i = 0; i < v.size(); ++i) v(i) = std::clamp(v(i) - tau, 0.0, cap);
    return v;
}

double dual_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& a) {
    return a.dot(K * a) - a.dot(K.diagonal());
}

// Independent reference: projected gradient on the same QP.
Eigen::VectorXd projected_gradient_qp(const Eigen::MatrixXd& K, double nu, int iters) {
    const int n = static_cast<int>(K.rows());
    const double cap = 1.0 / (n * nu);
    Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
    const double lipschitz = 2.0 * K.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
    const double step = 1.0 / lipschitz;
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd grad = 2.0 * (K * a) - K.diagonal();
        a = project_capped_simplex(a - step * grad, cap);
    }
    return a;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& data, const WgikKernel& k) {
    const int n = static_cast<int>(data.rows());
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            K(i, j) = wgik(data.row(i).transpose(), data.row(j).transpose(), k);
        }
    }
    return K;
}

} // namespace

TEST_CASE("wgik: value at zero distance is sum of offsets") {
    WgikKernel k;
    k.q = Eigen::MatrixXd::Identity(2, 2);
    k.l = Eigen::VectorXd::Constant(2, 3.0);
    Eigen::VectorXd u(2);
    u << 1.0, 2.0;
    CHECK(wgik(u, u, k) == doctest::Approx(6.0));
}

TEST_CASE("wgik: identity weights hand example") {
    WgikKernel k;
    k.q = Eigen::MatrixXd::Identity(2, 2);
    k.l = Eigen::VectorXd::Constant(2, 2.0);
    Eigen::VectorXd u(2), v(2);
    u << 0.0, 0.0;
    v << 1.0, 1.0;
    CHECK(wgik(u, v, k) == doctest::Approx(2.0));
    CHECK(wgik(u, v, k) == doctest::Approx(wgik(v, u, k)));
}

TEST_CASE("wgik: dimension mismatch") {
    WgikKernel k;
    k.q = Eigen::MatrixXd::Identity(2, 2);
    k.l = Eigen::VectorXd::Constant(2, 2.0);
    Eigen::VectorXd u(3), v(3);
    u.setZero();
    v.setZero();
    CHECK_THROWS_AS(wgik(u, v, k), Error);
}

TEST_CASE("train_svc: feasibility, KKT, and the nu property on 2-D clouds") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto data = gaussian_cloud(seed, 200);
        const double nu = 0.1;
        const SvcModel model = train_svc(data, nu);

        CHECK(std::fabs(model.alpha.sum() - 1.0) < 1e-8);
        CHECK(model.alpha.minCoeff() >= -1e-12);
        CHECK(model.alpha.maxCoeff() <= model.box_cap + 1e-10);
        CHECK(model.kkt_residual <= 1e-6);

        int outliers = 0;
        for (int i = 0; i < data.rows(); ++i) {
            if (!svc_membership(data.row(i).transpose(), model, 1e-7)) ++outliers;
        }
        CHECK(outliers <= static_cast<int>(nu * data.rows()) + 1);
        CHECK(static_cast<double>(model.sv_index.size()) >= nu * data.rows() - 1);
    }
}

TEST_CASE("train_svc: nu = 1 forces the uniform solution, all points SVs") {
    const auto data = gaussian_cloud(10, 40);
    const SvcModel model = train_svc(data, 1.0);
    for (int i = 0; i < data.rows(); ++i) {
        CHECK(model.alpha(i) == doctest::Approx(1.0 / 40.0));
    }
    CHECK(model.sv_index.size() == 40);
}

TEST_CASE("train_svc: theta is independent of the BSV index") {
    const auto data = gaussian_cloud(3, 120);
    const SvcModel model = train_svc(data, 0.15);
    REQUIRE(model.bsv_index.size() >= 2);
    for (int b : model.bsv_index) {
        const double t = svc_decision(data.row(b).transpose(), model);
        CHECK(std::fabs(t - model.theta) < 1e-6 * std::max(1.0, model.theta));
    }
}

TEST_CASE("train_svc: scaling l_k leaves alpha unchanged") {
    const auto data = gaussian_cloud(4, 80);
    SvcTrainOptions opts;
    const SvcModel a = train_svc(data, 0.2, opts);
    opts.l_margin *= 2.0; // still satisfies the strict span condition
    const SvcModel b = train_svc(data, 0.2, opts);
    CHECK((a.alpha - b.alpha).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("membership: boundary, far point, and theta monotonicity") {
    const auto data = gaussian_cloud(5, 100);
    SvcModel model = train_svc(data, 0.1);
    REQUIRE(!model.bsv_index.empty());
    CHECK(svc_membership(data.row(model.bsv_index.front()).transpose(), model, 1e-6));

    const Eigen::VectorXd far = data.colwise().mean().transpose() * 10.0;
    CHECK(!svc_membership(far, model));

    // Relaxing theta keeps members members.
    SvcModel relaxed = model;
    relaxed.theta *= 2.0;
    for (int i = 0; i < data.rows(); ++i) {
        if (svc_membership(data.row(i).transpose(), model)) {
            CHECK(svc_membership(data.row(i).transpose(), relaxed));
        }
    }
}

TEST_CASE("train_svc: coordinate descent matches projected gradient on N=30") {
    const auto data = gaussian_cloud(6, 30);
    const SvcModel model = train_svc(data, 0.2);
    const Eigen::MatrixXd K = kernel_matrix(data, model.kernel);
    const Eigen::VectorXd ref = projected_gradient_qp(K, 0.2, 30000);
    const double got = dual_objective(K, model.alpha);
    const double want = dual_objective(K, ref);
    CHECK(std::fabs(got - want) < 1e-5 * std::max(1.0, std::fabs(want)));
    CHECK(got <= want + 1e-7); // coordinate descent should not be worse
}

TEST_CASE("train_svc: degenerate identical rows collapse the set to a point") {
    Eigen::MatrixXd data(5, 2);
    for (int i = 0; i < 5; ++i) {
        data(i, 0) = 3.0;
        data(i, 1) = 4.0;
    }
    const SvcModel model = train_svc(data, 0.5);
    CHECK(model.theta == doctest::Approx(0.0).epsilon(1e-9));
    Eigen::VectorXd point(2), off(2);
    point << 3.0, 4.0;
    off << 3.1, 4.0;
    CHECK(svc_membership(point, model, 1e-9));
    CHECK(!svc_membership(off, model));
}

TEST_CASE("group_dimensions: 99 segments give 49 subsets, one of size 3") {
    const auto data = testutil::random_scenarios(1, 12, 99);
    const Grouping g = group_dimensions(data.values(), Grouping::Method::random, 5);
    CHECK(g.subsets.size() == 49);
    int threes = 0, twos = 0;
    std::vector<char> seen(99, 0);
    for (const auto& s : g.subsets) {
        if (s.size() == 3) ++threes;
        if (s.size() == 2) ++twos;
        for (int j : s) {
            CHECK(!seen[j]);
            seen[j] = 1;
        }
    }
    CHECK(threes == 1);
    CHECK(twos == 48);
    for (char c : seen) CHECK(c == 1);
}

TEST_CASE("group_dimensions: determinism and hierarchical pairing of clones") {
    const auto a = group_dimensions(testutil::random_scenarios(2, 10, 8).values(),
                                    Grouping::Method::random, 42);
    const auto b = group_dimensions(testutil::random_scenarios(2, 10, 8).values(),
                                    Grouping::Method::random, 42);
    CHECK(a.subsets == b.subsets);

    // Columns 0/1 and 2/3 duplicated: hierarchical grouping pairs them.
    Rng rng(8);
    Eigen::MatrixXd m(40, 4);
    for (int i = 0; i < 40; ++i) {
        const double u = rng.uniform(10.0, 20.0);
        const double v = rng.uniform(30.0, 50.0);
        m(i, 0) = u;
        m(i, 1) = u * 2.0 + 1.0;
        m(i, 2) = v;
        m(i, 3) = v * 0.5;
    }
    const Grouping h = group_dimensions(m, Grouping::Method::hierarchical, 0);
    REQUIRE(h.subsets.size() == 2);
    auto sorted = h.subsets;
    for (auto& s : sorted) std::sort(s.begin(), s.end());
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted[0] == std::vector<int>{0, 1});
    CHECK(sorted[1] == std::vector<int>{2, 3});
}

TEST_CASE("tsc_ds: stage-1 filtering keeps only SV rows") {
    const auto data = gaussian_cloud(7, 150, 4);
    Grouping g;
    g.subsets = {{0, 1}, {2, 3}};
    const TscResult res = tsc_ds(data, 0.1, g);
    REQUIRE(res.models.size() == 2);
    CHECK(static_cast<int>(res.retained_rows.size()) < 150);
    CHECK(static_cast<int>(res.retained_rows.size()) >= static_cast<int>(0.1 * 150) - 1);
    for (const auto& m : res.models) {
        CHECK(std::fabs(m.alpha.sum() - 1.0) < 1e-8);
    }
}

TEST_CASE("tsc_ds: F=1 equals plain training on the survivors") {
    const auto data = gaussian_cloud(9, 60, 2);
    Grouping g;
    g.subsets = {{0, 1}};
    const TscResult res = tsc_ds(data, 0.2, g);
    const SvcModel full = train_svc(data, 0.2);
    Eigen::MatrixXd kept(static_cast<Eigen::Index>(full.sv_index.size()), 2);
    for (std::size_t i = 0; i < full.sv_index.size(); ++i) kept.row(i) = data.row(full.sv_index[i]);
    const SvcModel direct = train_svc(kept, 0.2);
    CHECK((res.models[0].alpha - direct.alpha).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(res.models[0].theta == doctest::Approx(direct.theta));
}

TEST_CASE("tsc_ds: grouping validation") {
    const auto data = gaussian_cloud(11, 20, 3);
    Grouping bad;
    bad.subsets = {{0, 1}}; // misses column 2
    CHECK_THROWS_AS(tsc_ds(data, 0.2, bad), Error);
    bad.subsets = {{0, 1}, {1, 2}}; // repeats column 1
    CHECK_THROWS_AS(tsc_ds(data, 0.2, bad), Error);
}
