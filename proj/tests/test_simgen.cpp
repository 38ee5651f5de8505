#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robroute/errors.hpp"
#include "robroute/simgen.hpp"
#include "testutil.hpp"

using namespace robroute;
using namespace robroute::sim;

TEST_CASE("table parameters: published pedestrian and robot rows") {
    const SfmParams ped = pedestrian_default_params();
    CHECK(ped.tau == 0.4);
    CHECK(ped.react_to_n == 8);
    CHECK(ped.a_soc_iso == 2.72);
    CHECK(ped.b_soc_iso == 0.2);
    CHECK(ped.lambda_aniso == 0.176);
    CHECK(ped.a_soc_mean == 0.4);
    CHECK(ped.b_soc_mean == 2.8);
    CHECK(ped.vd == 3.0);
    CHECK(ped.noise == 1.2);

    const SfmParams robot = robot_default_params();
    CHECK(robot.tau == 0.8);
    CHECK(robot.a_soc_iso == 2.1);
    CHECK(robot.b_soc_iso == 0.35);
    CHECK(robot.lambda_aniso == 0.45);
    CHECK(robot.a_soc_mean == 0.4);
    CHECK(robot.b_soc_mean == 2.8);
    CHECK(robot.vd == 3.0);
    CHECK(robot.noise == 1.2);

    // Behavior rows: conservative = robot with tau 1.0; aggressive = ped row.
    CHECK(robot_behavior_params(RobotBehavior::conservative).tau == 1.0);
    CHECK(robot_behavior_params(RobotBehavior::aggressive).a_soc_iso == 2.72);
    CHECK(robot_behavior_params(RobotBehavior::normal).tau == 0.8);
}

TEST_CASE("default robot: 5 km/h, 0.538 m wide") {
    const AgentState r = default_robot();
    CHECK(r.desired_speed == doctest::Approx(5.0 / 3.6));
    CHECK(r.radius == doctest::Approx(0.269));
    CHECK(r.kind == AgentKind::robot);
}

TEST_CASE("total_force: lone agent at desired velocity feels nothing") {
    AgentState a = default_robot();
    a.position = {50.0, 1.5};
    a.velocity = {a.desired_speed, 0.0};
    SceneGeometry g{100.0, 3.0, nullptr};
    const Vec2 f = total_force(a, {}, g, false, nullptr);
    // Wall repulsion cancels at the centerline; driving term is zero.
    CHECK(std::fabs(f.x) < 1e-12);
    CHECK(std::fabs(f.y) < 1e-12);
}

TEST_CASE("total_force: agent at rest accelerates at v0/tau") {
    AgentState a = default_robot();
    a.position = {50.0, 1.5};
    a.velocity = {0.0, 0.0};
    SceneGeometry g{100.0, 3.0, nullptr};
    const Vec2 f = total_force(a, {}, g, false, nullptr);
    CHECK(f.x == doctest::Approx(a.desired_speed / a.params.tau));
    CHECK(std::fabs(f.y) < 1e-12);
}

TEST_CASE("total_force: neighbor directly behind vanishes when lambda = 0") {
    AgentState a = default_robot();
    a.params.lambda_aniso = 0.0;
    a.params.a_soc_mean = 0.0; // isolate the isotropic term
    a.position = {50.0, 1.5};
    a.velocity = {a.desired_speed, 0.0};

    AgentState behind = a;
    behind.position = {49.0, 1.5};
    SceneGeometry g{100.0, 3.0, nullptr};
    const Vec2 with_neighbor = total_force(a, {behind}, g, false, nullptr);
    const Vec2 without = total_force(a, {}, g, false, nullptr);
    // cos(pi) = -1 makes w(0) = 0: the rear neighbor contributes nothing.
    CHECK(std::fabs(with_neighbor.x - without.x) < 1e-12);
    CHECK(std::fabs(with_neighbor.y - without.y) < 1e-12);

    // In front it pushes backward.
    AgentState front = a;
    front.position = {51.0, 1.5};
    const Vec2 with_front = total_force(a, {front}, g, false, nullptr);
    CHECK(with_front.x < without.x - 1e-6);
}

TEST_CASE("simulate_segment: free flow equals length over speed") {
    CorridorScene scene;
    scene.length = 100.0;
    scene.width = 3.0;
    scene.ped_arrival_rate = 0.0;
    SimConfig cfg;
    cfg.dt = 0.1;
    const AgentState robot = default_robot(5.0);
    const auto res = simulate_segment(scene, robot, cfg);
    CHECK(!res.timeout);
    CHECK(std::fabs(res.time - 72.0) <= 2.0 * cfg.dt);
}

TEST_CASE("simulate_segment: an obstacle forces a detour and costs time") {
    CorridorScene scene;
    scene.length = 100.0;
    scene.width = 3.0;
    scene.ped_arrival_rate = 0.0;
    Obstacle o;
    o.center = {50.0, 1.5}; // dead center, must be skirted
    o.side = 1.4;
    scene.obstacles.push_back(o);
    SimConfig cfg;
    const auto res = simulate_segment(scene, default_robot(5.0), cfg);
    CHECK(!res.timeout);
    CHECK(res.time > 72.0 + 1e-6);
}

TEST_CASE("simulate_segment: pedestrian flow slows the robot (paired seeds)") {
    SimConfig cfg;
    int slower = 0, ties = 0;
    const int trials = 30;
    for (int s = 0; s < trials; ++s) {
        CorridorScene calm;
        calm.length = 60.0;
        calm.width = 3.0;
        calm.ped_arrival_rate = 0.0;
        calm.seed = static_cast<std::uint64_t>(s);
        CorridorScene busy = calm;
        busy.ped_arrival_rate = 0.5;
        const double t0 = simulate_segment(calm, default_robot(5.0), cfg).time;
        const double t1 = simulate_segment(busy, default_robot(5.0), cfg).time;
        if (t1 > t0 + 1e-9) {
            ++slower;
        } else if (t1 == t0) {
            ++ties;
        }
    }
    // Sign test: P(Bin(30, 0.5) >= k) < 0.05 needs k >= 20.
    CHECK(slower >= 20);
    (void)ties;
}

TEST_CASE("simulate_segment: deterministic and dt-convergent without crowds") {
    CorridorScene scene;
    scene.length = 80.0;
    scene.width = 3.0;
    scene.ped_arrival_rate = 0.0;
    Obstacle o;
    o.center = {40.0, 0.7};
    o.side = 1.4;
    scene.obstacles.push_back(o);

    SimConfig cfg;
    const double a = simulate_segment(scene, default_robot(5.0), cfg).time;
    const double b = simulate_segment(scene, default_robot(5.0), cfg).time;
    CHECK(a == b);

    SimConfig half = cfg;
    half.dt = 0.05;
    const double c = simulate_segment(scene, default_robot(5.0), half).time;
    CHECK(std::fabs(a - c) / a < 0.01);
}

TEST_CASE("simulate_segment: blocked geometry") {
    CorridorScene scene;
    scene.length = 30.0;
    scene.width = 1.2;
    Obstacle o;
    o.center = {15.0, 0.6};
    o.side = 1.1; // gaps of ~5 cm on both sides
    scene.obstacles.push_back(o);
    try {
        simulate_segment(scene, default_robot(5.0, 0.538), SimConfig{});
        FAIL("expected BlockedGeometry");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BlockedGeometry);
    }
}

TEST_CASE("simulate_segment: horizon timeout flag") {
    CorridorScene scene;
    scene.length = 50.0;
    scene.width = 3.0;
    SimConfig cfg;
    cfg.horizon = 5.0; // robot cannot finish 50 m in 5 s
    const auto res = simulate_segment(scene, default_robot(5.0), cfg);
    CHECK(res.timeout);
    CHECK(res.time == doctest::Approx(5.0));
}

TEST_CASE("place_obstacles: fractions, determinism, edge placement") {
    const Network net = testutil::random_network(3, 8, 14);
    int sidewalks = 0;
    for (const auto& s : net.segments()) {
        if (s.kind == SegmentKind::sidewalk) ++sidewalks;
    }

    const auto empty = place_obstacles(net, 0.0, 1);
    for (const auto& v : empty.per_segment) CHECK(v.empty());

    const auto full = place_obstacles(net, 1.0, 1);
    int placed = 0;
    for (const auto& v : full.per_segment) placed += static_cast<int>(v.size());
    CHECK(placed == sidewalks);

    const auto again = place_obstacles(net, 1.0, 1);
    for (std::size_t j = 0; j < full.per_segment.size(); ++j) {
        REQUIRE(again.per_segment[j].size() == full.per_segment[j].size());
        for (std::size_t k = 0; k < full.per_segment[j].size(); ++k) {
            CHECK(again.per_segment[j][k].center.x == full.per_segment[j][k].center.x);
            CHECK(again.per_segment[j][k].side == full.per_segment[j][k].side);
        }
    }
    for (const auto& v : full.per_segment) {
        for (const auto& o : v) {
            CHECK(o.side >= 1.0);
            CHECK(o.side <= 1.4);
            // Edge placement: square touches one wall.
            const bool bottom = std::fabs(o.center.y - o.side / 2.0) < 1e-9;
            const bool top = std::fabs(o.center.y - (3.0 - o.side / 2.0)) < 1e-9;
            CHECK((bottom || top));
        }
    }
}

TEST_CASE("generate_scenario_matrix: row accounting matches the protocol") {
    // 7 days x 12 hours x 12 configs x 2 directions = 2016 rows; run a tiny
    // 1-segment network with zero demand so each simulation is trivial.
    Network net({0, 1}, {Segment{0, 0, 1, 4.0, SegmentKind::sidewalk}});
    DemandProfile demand;
    demand.base_rate = 0.0;
    AgentState robot = default_robot(5.0);
    SimConfig cfg;
    cfg.seed = 9;
    GenerateOptions opts;
    opts.jobs = 2;
    const auto [D, ff] = generate_scenario_matrix(net, demand, robot, cfg, opts);
    CHECK(D.n_scenarios() == 2016);
    CHECK(D.n_segments() == 1);
    CHECK(ff.values(0) == doctest::Approx(4.0 / (5.0 / 3.6)).epsilon(1e-6));
    // Free flow never exceeds any observation.
    for (int i = 0; i < D.n_scenarios(); ++i) {
        CHECK(D.values()(i, 0) >= ff.values(0) - 1e-9);
    }
    // 12 obstacle configurations by default: fractions 0..0.5 twice each.
    CHECK(opts.obstacle_fractions.size() == 12);
}

TEST_CASE("generate_scenario_matrix: deterministic across thread counts") {
    const Network net = testutil::random_network(12, 4, 6);
    DemandProfile demand;
    demand.base_rate = 0.05;
    demand.days = {0};
    demand.hours = {12};
    SimConfig cfg;
    cfg.seed = 31;
    GenerateOptions opts;
    opts.obstacle_fractions = {0.0, 0.3};
    opts.jobs = 1;
    const auto [a, affv] = generate_scenario_matrix(net, demand, default_robot(), cfg, opts);
    opts.jobs = 2;
    const auto [b, bffv] = generate_scenario_matrix(net, demand, default_robot(), cfg, opts);
    CHECK((a.values() - b.values()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((affv.values - bffv.values).cwiseAbs().maxCoeff() == 0.0);
}
