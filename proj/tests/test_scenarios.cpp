#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "robroute/errors.hpp"
#include "robroute/scenarios.hpp"
#include "testutil.hpp"

using namespace robroute;

namespace {

ScenarioMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int n = static_cast<int>(rows.begin()->size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), n);
    int i = 0;
    for (const auto& r : rows) {
        int j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return ScenarioMatrix(m, std::vector<ScenarioMeta>(rows.size()));
}

} // namespace

TEST_CASE("moments: hand-computed 2x2 example (1/N divisor)") {
    const auto D = from_rows({{1.0, 2.0}, {3.0, 4.0}});
    const Moments m = empirical_moments(D);
    CHECK(m.mean(0) == doctest::Approx(2.0));
    CHECK(m.mean(1) == doctest::Approx(3.0));
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) CHECK(m.covariance(i, j) == doctest::Approx(1.0));
    }
}

TEST_CASE("moments: identical rows give the zero matrix") {
    const auto D = from_rows({{5.0, 7.0}, {5.0, 7.0}, {5.0, 7.0}});
    const Moments m = empirical_moments(D);
    CHECK(m.covariance.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("moments: single column (0,2,4) has variance 8/3") {
    // Positivity only applies to scenario matrices; raw data API is free.
    Eigen::MatrixXd m(3, 1);
    m << 0.0, 2.0, 4.0;
    const Moments mo = empirical_moments(m);
    CHECK(mo.mean(0) == doctest::Approx(2.0));
    CHECK(mo.covariance(0, 0) == doctest::Approx(8.0 / 3.0));
    // The unbiased variant used by the SVC kernel divides by N-1 instead.
    CHECK(unbiased_covariance(m)(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("moments: too few scenarios") {
    Eigen::MatrixXd m(1, 2);
    m << 1.0, 2.0;
    try {
        empirical_moments(m);
        FAIL("expected TooFewScenarios");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooFewScenarios);
    }
}

TEST_CASE("moments: brute-force double sum oracle on random 5x4 matrices") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto D = testutil::random_scenarios(seed, 5, 4);
        const Moments m = empirical_moments(D);
        // Direct double sum, no matrix algebra.
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
        for (int i = 0; i < 5; ++i) mean += D.values().row(i).transpose();
        mean /= 5.0;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
        for (int i = 0; i < 5; ++i) {
            const Eigen::VectorXd d = D.values().row(i).transpose() - mean;
            cov += d * d.transpose();
        }
        cov /= 5.0;
        CHECK((m.covariance - cov).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("correlation: duplicated and negated columns") {
    Eigen::MatrixXd m(4, 3);
    // col1 = col0 duplicated; col2 = -col0 (centered sign flip).
    m << 1, 1, -1, 2, 2, -2, 4, 4, -4, 9, 9, -9;
    const Eigen::MatrixXd corr = correlation_matrix(m);
    CHECK(corr(0, 1) == doctest::Approx(1.0));
    CHECK(corr(0, 2) == doctest::Approx(-1.0));
    CHECK(corr(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("correlation: zero-variance column gets zero off-diagonal") {
    Eigen::MatrixXd m(3, 2);
    m << 1, 5, 2, 5, 3, 5;
    const Eigen::MatrixXd corr = correlation_matrix(m);
    CHECK(corr(0, 1) == 0.0);
    CHECK(corr(1, 1) == 1.0);
}

TEST_CASE("correlation: independent columns decorrelate statistically") {
    Rng rng(123);
    Eigen::MatrixXd m(10000, 2);
    for (int i = 0; i < m.rows(); ++i) {
        m(i, 0) = rng.normal();
        m(i, 1) = rng.normal();
    }
    CHECK(std::fabs(correlation_matrix(m)(0, 1)) < 0.05);
}

TEST_CASE("correlation: invariant to positive affine rescaling") {
    const auto D = testutil::random_scenarios(4, 20, 3);
    Eigen::MatrixXd scaled = D.values();
    scaled.col(0) = scaled.col(0) * 3.5;
    scaled.col(1) = scaled.col(1) * 0.2;
    scaled.col(2).array() += 100.0;
    const Eigen::MatrixXd a = correlation_matrix(D.values());
    const Eigen::MatrixXd b = correlation_matrix(scaled);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("kfold: sizes and determinism") {
    const FoldSplit s = kfold_split(10, 5, 77);
    for (int f = 0; f < 5; ++f) CHECK(s.validation_indices(f).size() == 2);
    const FoldSplit again = kfold_split(10, 5, 77);
    CHECK(s.assignments == again.assignments);

    // Union covers all indices exactly once.
    std::set<int> seen;
    for (int f = 0; f < 5; ++f) {
        for (int idx : s.validation_indices(f)) CHECK(seen.insert(idx).second);
    }
    CHECK(seen.size() == 10);
}

TEST_CASE("kfold: 2016 scenarios give 1612/1613 training rows") {
    const FoldSplit s = kfold_split(2016, 5, 1);
    for (int f = 0; f < 5; ++f) {
        const auto train = s.train_indices(f).size();
        CHECK((train == 1612 || train == 1613));
    }
}

TEST_CASE("kfold: bad fold count") {
    CHECK_THROWS_AS(kfold_split(10, 1, 0), Error);
    CHECK_THROWS_AS(kfold_split(3, 5, 0), Error);
}

TEST_CASE("normalized delay") {
    CHECK(normalized_delay(100.0, 100.0) == doctest::Approx(0.0));
    CHECK(normalized_delay(150.0, 100.0) == doctest::Approx(0.5));
    CHECK(normalized_delay(90.0, 100.0) == doctest::Approx(-0.1));
    CHECK_THROWS_AS(normalized_delay(10.0, 0.0), Error);
}

TEST_CASE("scenario csv: round trip and invariant enforcement") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto sc = (dir / "rr_scen.csv").string();
    const auto ff = (dir / "rr_ff.csv").string();

    {
        std::ofstream s(sc);
        s << "day,hour,obstacle_config,direction,t_0,t_1\n";
        s << "0,10,0,forward,10,20\n";
        s << "1,11,0,reverse,12,22\n";
        std::ofstream f(ff);
        f << "8,18\n";
    }
    const auto [D, ffv] = load_scenarios(sc, ff);
    CHECK(D.n_scenarios() == 2);
    CHECK(D.n_segments() == 2);
    CHECK(D.values()(0, 1) == doctest::Approx(20.0));
    CHECK(D.meta()[1].direction == Direction::reverse);
    CHECK(ffv.values(0) == doctest::Approx(8.0));

    // Round trip through save.
    const auto sc2 = (dir / "rr_scen2.csv").string();
    const auto ff2 = (dir / "rr_ff2.csv").string();
    save_scenarios(D, ffv, sc2, ff2);
    const auto [D2, ffv2] = load_scenarios(sc2, ff2);
    CHECK((D2.values() - D.values()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ffv2.values - ffv.values).cwiseAbs().maxCoeff() == 0.0);

    // Zero entry rejected.
    {
        std::ofstream s(sc);
        s << "day,hour,obstacle_config,direction,t_0,t_1\n";
        s << "0,10,0,forward,0,20\n";
    }
    try {
        load_scenarios(sc, ff);
        FAIL("expected NonPositiveTime");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveTime);
    }

    // Free flow exceeding an observation rejected.
    {
        std::ofstream s(sc);
        s << "day,hour,obstacle_config,direction,t_0,t_1\n";
        s << "0,10,0,forward,10,20\n";
        std::ofstream f(ff);
        f << "11,18\n";
    }
    CHECK_THROWS_AS(load_scenarios(sc, ff), Error);

    for (const auto& p : {sc, ff, sc2, ff2}) std::filesystem::remove(p);
}
