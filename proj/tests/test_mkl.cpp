#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robroute/errors.hpp"
#include "robroute/mkl.hpp"
#include "robroute/rng.hpp"

using namespace robroute;

namespace {

Eigen::MatrixXd isotropic_cloud(std::uint64_t seed, int n) {
    Rng rng(stable_hash({seed, 0x69736fULL}));
    Eigen::MatrixXd m(n, 2);
    for (int i = 0; i < n; ++i) {
        m(i, 0) = 20.0 + rng.normal();
        m(i, 1) = 20.0 + rng.normal();
    }
    return m;
}

Eigen::MatrixXd stretched_cloud(std::uint64_t seed, int n) {
    Rng rng(stable_hash({seed, 0x737472ULL}));
    Eigen::MatrixXd m(n, 2);
    for (int i = 0; i < n; ++i) {
        m(i, 0) = 20.0 + 6.0 * rng.normal();
        m(i, 1) = 20.0 + 0.3 * rng.normal();
    }
    return m;
}

} // namespace

TEST_CASE("mkl: basis kernel is 1 at zero distance") {
    const auto data = isotropic_cloud(1, 50);
    const MklModel model = train_mkl(data, 0.2, 8, 0.2);
    Eigen::VectorXd u = data.row(0).transpose();
    for (int m = 0; m < 8; ++m) {
        CHECK(mkl_basis_kernel(u, u, model, m) == doctest::Approx(1.0));
    }
}

TEST_CASE("mkl: dual feasibility and boundary rho") {
    const auto data = isotropic_cloud(2, 120);
    const MklModel model = train_mkl(data, 0.1, 16, 0.2);
    CHECK(std::fabs(model.alpha.sum() - 1.0) < 1e-8);
    CHECK(model.alpha.maxCoeff() <= model.box_cap + 1e-10);
    CHECK(model.kkt_residual <= 1e-6);
    CHECK(std::fabs(model.weights.sum() - 1.0) < 1e-9);
    REQUIRE(!model.bsv_index.empty());
    const double d = mkl_decision(data.row(model.bsv_index.front()).transpose(), model);
    CHECK(d == doctest::Approx(model.rho));
}

TEST_CASE("mkl: isotropic data spreads the weights") {
    const auto data = isotropic_cloud(3, 150);
    const MklModel model = train_mkl(data, 0.1, 16, 0.2);
    CHECK(model.weights.maxCoeff() < 0.5);
    CHECK(static_cast<int>(model.selected.size()) >= 4);
}

TEST_CASE("mkl: tiny mu concentrates on few kernels") {
    const auto data = stretched_cloud(4, 150);
    const MklModel sparse = train_mkl(data, 0.1, 16, 0.01);
    const MklModel spread = train_mkl(data, 0.1, 16, 0.5);
    CHECK(sparse.weights.maxCoeff() >= spread.weights.maxCoeff() - 1e-9);
    CHECK(sparse.selected.size() <= spread.selected.size());
}

TEST_CASE("mkl: membership separates the cloud from far points") {
    const auto data = isotropic_cloud(5, 100);
    const MklModel model = train_mkl(data, 0.1, 12, 0.2);
    int members = 0;
    for (int i = 0; i < data.rows(); ++i) {
        if (mkl_membership(data.row(i).transpose(), model, 1e-7)) ++members;
    }
    CHECK(members >= 85); // at most ~nu N outliers plus tolerance
    const Eigen::VectorXd far = data.colwise().mean().transpose() * 5.0;
    CHECK(!mkl_membership(far, model));
}

TEST_CASE("mkl: validation") {
    const auto data = isotropic_cloud(6, 30);
    CHECK_THROWS_AS(train_mkl(data, 0.2, 0, 0.2), Error);
    CHECK_THROWS_AS(train_mkl(data, 0.2, 8, 0.0), Error);
    Eigen::MatrixXd wide(10, 4);
    wide.setOnes();
    CHECK_THROWS_AS(train_mkl(wide, 0.2, 8, 0.2), Error); // dim > 3 unsupported
}

TEST_CASE("mkl tsc: stage-1 filtering then per-subset models") {
    Rng rng(7);
    Eigen::MatrixXd data(120, 4);
    for (int i = 0; i < 120; ++i) {
        for (int j = 0; j < 4; ++j) data(i, j) = 15.0 + 2.0 * rng.normal();
    }
    Grouping g;
    g.subsets = {{0, 3}, {1, 2}};
    const MklTscResult res = tsc_ds_mkl(data, 0.1, g, 8, 0.2);
    REQUIRE(res.models.size() == 2);
    CHECK(static_cast<int>(res.retained_rows.size()) < 120);
    for (const auto& m : res.models) {
        CHECK(std::fabs(m.weights.sum() - 1.0) < 1e-9);
        CHECK(!m.selected.empty());
    }
}
