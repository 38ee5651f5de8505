#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "robroute/errors.hpp"
#include "robroute/evalkit.hpp"
#include "testutil.hpp"

using namespace robroute;

namespace {

// Hand-built two-route instance: route A (segments 0,2) is better on
// average; route B (segments 1,3) has the smaller worst case.
struct TradeoffInstance {
    Network net = testutil::diamond_network();
    ScenarioMatrix D;
    FreeFlowVector ff;

    TradeoffInstance() {
        Eigen::MatrixXd v(4, 4);
        // columns: seg0, seg1, seg2, seg3 (A = 0+2, B = 1+3)
        v.row(0) << 10, 14, 10, 14; // A = 20, B = 28
        v.row(1) << 10, 14, 10, 14;
        v.row(2) << 10, 14, 10, 14;
        v.row(3) << 30, 15, 30, 15; // A = 60, B = 30 (rare blow-up on A)
        D = ScenarioMatrix(v, std::vector<ScenarioMeta>(4));
        ff.values.resize(4);
        ff.values << 9, 9, 9, 9;
    }
};

} // namespace

TEST_CASE("select_od_pairs: filters by path length and ranks by variability") {
    const Network net = testutil::random_network(1, 8, 14);
    const auto D = testutil::random_scenarios(1, 30, net.n_segments());
    const auto ff = testutil::freeflow_below(D);
    const auto ods = select_od_pairs(net, D, ff, 12, 4, 2, 7);
    CHECK(ods.size() == 4);
    std::vector<double> ffv(ff.values.data(), ff.values.data() + ff.values.size());
    for (const auto& od : ods) {
        const auto path = shortest_path(net, ffv, od).first;
        CHECK(path.segments.size() >= 2);
    }
    // Determinism.
    const auto again = select_od_pairs(net, D, ff, 12, 4, 2, 7);
    for (std::size_t i = 0; i < ods.size(); ++i) {
        CHECK(ods[i].origin == again[i].origin);
        CHECK(ods[i].destination == again[i].destination);
    }
}

TEST_CASE("select_od_pairs: insufficient candidates") {
    const Network net = testutil::tiny_network();
    const auto D = testutil::random_scenarios(2, 10, 1);
    const auto ff = testutil::freeflow_below(D);
    try {
        select_od_pairs(net, D, ff, 5, 5, 1, 0);
        FAIL("expected InsufficientCandidates");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientCandidates);
    }
}

TEST_CASE("evaluate: constructed trade-off, nominal picks A, budgeted picks B") {
    TradeoffInstance inst;
    // Direct check of the solver choice on the full data first.
    const auto nom = solve_nominal(inst.net, inst.ff.values, {0, 3});
    CHECK(nom.path.segments == std::vector<int>{0, 2});
    const auto set = build_budgeted(inst.D, 1);
    const auto rob = solve_budgeted(inst.net, set, {0, 3});
    CHECK(rob.path.segments == std::vector<int>{1, 3});

    // Two folds over the 4 scenarios: the report reflects the trade-off.
    std::vector<MethodSpec> methods = {MethodSpec{Method::nominal, {}},
                                       MethodSpec{Method::budgeted, {1.0}}};
    EvalOptions opts;
    opts.folds = 2;
    opts.seed = 5;
    const std::vector<OdPair> ods = {{0, 3}};
    const KpiReport report = evaluate(inst.net, inst.D, inst.ff, methods, ods, opts);
    REQUIRE(report.cells.size() == 2);
    const auto& nominal_cell = report.cells[0];
    const auto& budgeted_cell = report.cells[1];
    CHECK(nominal_cell.method == Method::nominal);
    CHECK(budgeted_cell.method == Method::budgeted);
    // The robust path has a lower worst case but a higher average.
    CHECK(budgeted_cell.worst_delay <= nominal_cell.worst_delay + 1e-12);
}

TEST_CASE("evaluate: single repeated scenario makes all KPIs equal") {
    const Network net = testutil::diamond_network();
    Eigen::MatrixXd v(5, 4);
    for (int i = 0; i < 5; ++i) v.row(i) << 10, 11, 10, 11;
    const ScenarioMatrix D(v, std::vector<ScenarioMeta>(5));
    FreeFlowVector ff;
    ff.values.resize(4);
    ff.values << 9, 9, 9, 9;
    EvalOptions opts;
    opts.folds = 5;
    const KpiReport r = evaluate(net, D, ff, {MethodSpec{Method::nominal, {}}}, {{0, 3}}, opts);
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].avg_delay == doctest::Approx(r.cells[0].worst_delay));
    CHECK(r.cells[0].avg_delay == doctest::Approx(r.cells[0].worst5_delay));
}

TEST_CASE("evaluate: per-OD ordering worst >= worst5 >= avg") {
    const Network net = testutil::random_network(4, 7, 12);
    const auto D = testutil::random_scenarios(4, 40, net.n_segments());
    const auto ff = testutil::freeflow_below(D);
    const auto ods = select_od_pairs(net, D, ff, 10, 3, 2, 4);
    EvalOptions opts;
    opts.folds = 4;
    const KpiReport r = evaluate(net, D, ff,
                                 {MethodSpec{Method::nominal, {}},
                                  MethodSpec{Method::budgeted, {1.0, 2.0}}},
                                 ods, opts);
    for (const auto& cell : r.cells) {
        for (const auto& od : cell.per_od) {
            if (std::isnan(od.avg)) continue;
            CHECK(od.worst >= od.worst5 - 1e-12);
            CHECK(od.worst5 >= od.avg - 1e-12);
        }
    }
}

TEST_CASE("emit_report: round trip and headers-only on empty input") {
    const auto dir = (std::filesystem::temp_directory_path() / "rr_report").string();
    KpiReport empty;
    emit_report(empty, dir);
    const auto files = {dir + "/kpi.csv", dir + "/per_od.csv", dir + "/tradeoff.csv"};
    for (const auto& f : files) CHECK(std::filesystem::exists(f));

    KpiReport r;
    KpiCell cell;
    cell.method = Method::ellipsoidal;
    cell.param = 3.0;
    cell.avg_delay = 0.125;
    cell.worst_delay = 0.5;
    cell.worst5_delay = 0.25;
    OdKpi ok;
    ok.od = {1, 7};
    ok.avg = 0.125;
    ok.worst = 0.5;
    ok.worst5 = 0.25;
    cell.per_od.push_back(ok);
    r.cells.push_back(cell);
    emit_report(r, dir);
    const KpiReport back = parse_report(dir);
    REQUIRE(back.cells.size() == 1);
    CHECK(back.cells[0].method == Method::ellipsoidal);
    CHECK(back.cells[0].param == 3.0);
    CHECK(back.cells[0].avg_delay == 0.125);
    CHECK(back.cells[0].worst_delay == 0.5);
    REQUIRE(back.cells[0].per_od.size() == 1);
    CHECK(back.cells[0].per_od[0].od.destination == 7);
    std::filesystem::remove_all(dir);
}

TEST_CASE("default grids match the published ranges") {
    CHECK(default_parameter_grid(Method::budgeted) ==
          std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    CHECK(default_parameter_grid(Method::ellipsoidal) ==
          std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    CHECK(default_parameter_grid(Method::svc) ==
          std::vector<double>{0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20});
    CHECK(default_parameter_grid(Method::drsp) ==
          std::vector<double>{0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
}

TEST_CASE("sweep levels match the published configurations") {
    CHECK(default_sweep_levels(SweepConfig::Factor::robot_speed) ==
          std::vector<double>{5.0, 7.5, 10.0});
    CHECK(default_sweep_levels(SweepConfig::Factor::robot_width) ==
          std::vector<double>{0.5, 0.75, 1.0});
    CHECK(default_sweep_levels(SweepConfig::Factor::ped_speed) ==
          std::vector<double>{0.9, 1.0, 1.1});
    CHECK(default_sweep_levels(SweepConfig::Factor::ped_volume) ==
          std::vector<double>{1.0, 1.5, 2.0});
}

TEST_CASE("sensitivity_sweep: tiny end-to-end run emits one row per level and method") {
    const Network net = make_grid_network(2, 3, 10, 3);
    SweepConfig cfg;
    cfg.factor = SweepConfig::Factor::ped_volume;
    cfg.levels = {1.0, 1.5, 2.0};
    cfg.methods = {MethodSpec{Method::ellipsoidal, {1.0, 4.0}}};
    cfg.sim.dt = 0.2;
    cfg.sim.seed = 2;
    cfg.demand.days = {0};
    cfg.demand.hours = {12};
    cfg.demand.base_rate = 0.02;
    cfg.generate.obstacle_fractions = {0.0, 0.3};
    cfg.generate.jobs = 2;
    cfg.pool_size = 6;
    cfg.keep_ods = 2;
    cfg.min_segments = 2;
    cfg.eval.folds = 2;
    cfg.eval.jobs = 2;
    const SweepTable table = sensitivity_sweep(net, cfg);
    CHECK(table.rows.size() == 3);
    for (const auto& row : table.rows) {
        CHECK(row.method == Method::ellipsoidal);
        CHECK(std::isfinite(row.worst_improvement));
    }
    const auto path = (std::filesystem::temp_directory_path() / "rr_sweep.csv").string();
    emit_sweep(table, path);
    CHECK(std::filesystem::exists(path));
    std::filesystem::remove(path);
}
