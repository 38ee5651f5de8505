#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "robroute/network.hpp"
#include "robroute/rng.hpp"
#include "robroute/scenarios.hpp"

namespace robroute::sim {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const;
    Vec2 normalized() const;
};

/// Social force model parameters (the published pedestrian/robot rows).
struct SfmParams {
    double tau = 0.4;          // relaxation time, s
    int react_to_n = 8;        // isotropic-force neighbor cap
    double a_soc_iso = 2.72;
    double b_soc_iso = 0.2;
    double lambda_aniso = 0.176; // anisotropy in [0, 1]
    double a_soc_mean = 0.4;
    double b_soc_mean = 2.8;
    double vd = 3.0;           // step-width factor generalizing the distance
    double noise = 1.2;        // fluctuation magnitude, m/s^2
};

SfmParams pedestrian_default_params();
SfmParams robot_default_params();

enum class RobotBehavior { conservative, normal, aggressive };
RobotBehavior parse_robot_behavior(const std::string& s);
/// normal = robot row; aggressive = pedestrian row; conservative = robot row
/// with tau raised to 1.0 (assumption documented in the README).
SfmParams robot_behavior_params(RobotBehavior behavior);

enum class AgentKind { pedestrian, robot };

struct AgentState {
    Vec2 position;
    Vec2 velocity;
    double desired_speed = 1.389; // m/s (5 km/h)
    Vec2 desired_direction{1.0, 0.0};
    double radius = 0.269; // half body width
    AgentKind kind = AgentKind::pedestrian;
    SfmParams params;
};

AgentState default_robot(double speed_kmh = 5.0, double width_m = 0.538,
                         RobotBehavior behavior = RobotBehavior::normal);

/// Axis-aligned square obstacle inside the corridor.
struct Obstacle {
    Vec2 center;
    double side = 1.0;
};

/// One corridor standing in for one network segment: walls at y = 0 and
/// y = width, pedestrians entering at both ends.
struct CorridorScene {
    double length = 100.0;
    double width = 3.0;
    std::vector<Obstacle> obstacles;
    double ped_arrival_rate = 0.0; // persons/s per direction
    double ped_speed_scale = 1.0;  // multiplies sampled walking speeds
    std::uint64_t seed = 0;
};

struct SimConfig {
    double dt = 0.1;        // s
    double horizon = 900.0; // s
    std::uint64_t seed = 0;
    double noise_dwell_s = 2.0; // below-speed duration before the noise force kicks in
};

struct SceneGeometry {
    double length = 0.0;
    double width = 0.0;
    const std::vector<Obstacle>* obstacles = nullptr;
};

/// Driving + social (isotropic with the anisotropy weight, mean with the
/// rear half ignored) + wall + optional noise acceleration for one agent.
/// Neighbors must be pre-sorted by distance; only the nearest react_to_n
/// enter the isotropic term.
Vec2 total_force(const AgentState& agent, const std::vector<AgentState>& neighbors,
                 const SceneGeometry& geometry, bool noise_active, Rng* rng);

struct TraversalResult {
    double time = 0.0;
    bool timeout = false;
};

/// Robot traverses the corridor; travel time from crossing the far end
/// (sub-step interpolated). Throws BlockedGeometry when no gap fits.
TraversalResult simulate_segment(const CorridorScene& scene, AgentState robot,
                                 const SimConfig& cfg);

struct ObstacleConfig {
    std::vector<std::vector<Obstacle>> per_segment; // indexed by segment id
    double fraction = 0.0;
};

/// ceil(fraction * #sidewalks) segments get one square each, side uniform in
/// [1, 1.4] m, at the sidewalk edge by default (interior with the flag).
ObstacleConfig place_obstacles(const Network& net, double fraction, std::uint64_t seed,
                               bool edge_placement = true);

struct DemandProfile {
    std::vector<int> days = {0, 1, 2, 3, 4, 5, 6};
    std::vector<int> hours = {10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21};
    double base_rate = 0.08;  // persons/s per direction at weight 1
    double multiplier = 1.0;  // global scaling (demand.multiplier config key)
    double ped_speed_scale = 1.0;

    double weight(int day, int hour) const;
};

struct GenerateOptions {
    std::vector<double> obstacle_fractions = {0.0, 0.0, 0.1, 0.1, 0.2, 0.2,
                                              0.3, 0.3, 0.4, 0.4, 0.5, 0.5};
    bool edge_placement = true;
    int jobs = 0; // 0 = hardware concurrency
    int* timeout_count = nullptr;
};

/// One row per (day, hour, obstacle config, direction); the free-flow vector
/// comes from an extra run without obstacles or pedestrians. Each task seeds
/// from a stable hash of (master seed, meta, segment), so results are
/// identical regardless of scheduling.
std::pair<ScenarioMatrix, FreeFlowVector> generate_scenario_matrix(const Network& net,
                                                                   const DemandProfile& demand,
                                                                   const AgentState& robot,
                                                                   const SimConfig& cfg,
                                                                   const GenerateOptions& opts = {});

} // namespace robroute::sim
