#include "robroute/simgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "robroute/errors.hpp"

namespace robroute::sim {

double Vec2::norm() const { return std::sqrt(x * x + y * y); }

Vec2 Vec2::normalized() const {
    const double n = norm();
    return n > 1e-12 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
}

SfmParams pedestrian_default_params() { return SfmParams{}; }

SfmParams robot_default_params() {
    SfmParams p;
    p.tau = 0.8;
    p.react_to_n = 8;
    p.a_soc_iso = 2.1;
    p.b_soc_iso = 0.35;
    p.lambda_aniso = 0.45;
    p.a_soc_mean = 0.4;
    p.b_soc_mean = 2.8;
    p.vd = 3.0;
    p.noise = 1.2;
    return p;
}

RobotBehavior parse_robot_behavior(const std::string& s) {
    if (s == "conservative") return RobotBehavior::conservative;
    if (s == "normal") return RobotBehavior::normal;
    if (s == "aggressive") return RobotBehavior::aggressive;
    raise(ErrorCode::ConfigError, "robot.behavior must be conservative|normal|aggressive");
}

SfmParams robot_behavior_params(RobotBehavior behavior) {
    switch (behavior) {
        case RobotBehavior::normal: return robot_default_params();
        case RobotBehavior::aggressive: return pedestrian_default_params();
        case RobotBehavior::conservative: {
            SfmParams p = robot_default_params();
            p.tau = 1.0;
            return p;
        }
    }
    return robot_default_params();
}

AgentState default_robot(double speed_kmh, double width_m, RobotBehavior behavior) {
    AgentState a;
    a.kind = AgentKind::robot;
    a.desired_speed = speed_kmh / 3.6;
    a.radius = width_m / 2.0;
    a.params = robot_behavior_params(behavior);
    a.desired_direction = {1.0, 0.0};
    a.velocity = {a.desired_speed, 0.0};
    return a;
}

namespace {

constexpr double kMinGapClearance = 0.1; // m beyond the robot width

Vec2 nearest_point_on_square(const Obstacle& o, Vec2 p) {
    const double h = o.side / 2.0;
    return {std::clamp(p.x, o.center.x - h, o.center.x + h),
            std::clamp(p.y, o.center.y - h, o.center.y + h)};
}

// Repulsion of the isotropic form against one boundary point.
Vec2 boundary_repulsion(const AgentState& agent, Vec2 point) {
    const Vec2 diff = agent.position - point;
    const double dist = std::max(diff.norm() - agent.radius, 0.01);
    const Vec2 dir = diff.normalized();
    const double mag = agent.params.a_soc_iso * std::exp(-dist / agent.params.b_soc_iso);
    return dir * mag;
}

} // namespace

Vec2 total_force(const AgentState& agent, const std::vector<AgentState>& neighbors,
                 const SceneGeometry& geometry, bool noise_active, Rng* rng) {
    // Driving term: relax toward the desired velocity.
    const Vec2 v_des = agent.desired_direction * agent.desired_speed;
    Vec2 force = (v_des - agent.velocity) * (1.0 / agent.params.tau);

    // Heading used for the anisotropy angle; fall back to the desired
    // direction when the agent is (nearly) stationary.
    Vec2 heading = agent.velocity.norm() > 0.05 ? agent.velocity.normalized()
                                                : agent.desired_direction;

    const int iso_cap = agent.params.react_to_n;
    int iso_used = 0;
    for (const AgentState& other : neighbors) {
        const Vec2 diff = agent.position - other.position; // beta -> alpha
        const double center_dist = diff.norm();
        if (center_dist < 1e-9) continue;
        const Vec2 n_ab = diff * (1.0 / center_dist);
        const double surface = std::max(center_dist - agent.radius - other.radius, 0.01);
        const double cos_phi = heading.dot(Vec2{-n_ab.x, -n_ab.y}); // toward the influencer

        if (iso_used < iso_cap) {
            const double w = agent.params.lambda_aniso +
                             (1.0 - agent.params.lambda_aniso) * (1.0 + cos_phi) / 2.0;
            force = force + n_ab * (agent.params.a_soc_iso * w *
                                    std::exp(-surface / agent.params.b_soc_iso));
            ++iso_used;
        }

        // Mean force: rear half ignored; the step-width factor VD stretches
        // the distance along the relative velocity (ellipse construction).
        if (cos_phi >= 0.0) {
            double d_eff = surface;
            if (agent.params.vd > 0.0) {
                const Vec2 rel = (other.velocity - agent.velocity) * agent.params.vd;
                const double a = center_dist + (diff - rel).norm();
                const double b2 = a * a - rel.dot(rel);
                const double ellipse = 0.5 * std::sqrt(std::max(b2, 0.0));
                d_eff = std::max(ellipse - agent.radius - other.radius, 0.01);
            }
            force = force + n_ab * (agent.params.a_soc_mean *
                                    std::exp(-d_eff / agent.params.b_soc_mean));
        }
    }

    // Walls and obstacles, same exponential form (no anisotropy weight).
    force = force + boundary_repulsion(agent, Vec2{agent.position.x, 0.0});
    force = force + boundary_repulsion(agent, Vec2{agent.position.x, geometry.width});
    if (geometry.obstacles) {
        for (const Obstacle& o : *geometry.obstacles) {
            force = force + boundary_repulsion(agent, nearest_point_on_square(o, agent.position));
        }
    }

    if (noise_active && rng && agent.params.noise > 0.0) {
        const double ang = rng->uniform(0.0, 2.0 * M_PI);
        const double mag = rng->uniform(0.0, agent.params.noise);
        force = force + Vec2{std::cos(ang), std::sin(ang)} * mag;
    }
    return force;
}

namespace {

struct SimAgent {
    AgentState state;
    double below_speed_s = 0.0;
    int travel_dir = 1; // +1 toward +x
};

// Widest free y-interval at an obstacle's cross-section.
std::pair<double, double> widest_gap(const Obstacle& o, double width) {
    const double lo = o.center.y - o.side / 2.0;
    const double hi = o.center.y + o.side / 2.0;
    const double below = std::max(lo, 0.0);
    const double above = std::max(width - hi, 0.0);
    if (below >= above) return {0.0, std::max(lo, 0.0)};
    return {std::min(hi, width), width};
}

// Steer the desired direction toward the widest gap of the next obstacle
// ahead; plain forward travel otherwise.
Vec2 steered_direction(const SimAgent& agent, const CorridorScene& scene) {
    const double look = 6.0;
    const Obstacle* next = nullptr;
    double best_dx = look;
    for (const Obstacle& o : scene.obstacles) {
        const double dx = (o.center.x - agent.state.position.x) * agent.travel_dir;
        const double reach = o.side / 2.0 + look;
        if (dx > -o.side / 2.0 && dx < reach && dx < best_dx) {
            best_dx = dx;
            next = &o;
        }
    }
    Vec2 dir{static_cast<double>(agent.travel_dir), 0.0};
    if (next) {
        const auto [gap_lo, gap_hi] = widest_gap(*next, scene.width);
        const double target = 0.5 * (gap_lo + gap_hi);
        const double pull = std::clamp(0.35 * (target - agent.state.position.y), -0.9, 0.9);
        dir = Vec2{static_cast<double>(agent.travel_dir), pull}.normalized();
    }
    return dir;
}

double sample_ped_speed(Rng& rng, double scale) {
    // Half men (3.49-5.83 km/h), half women (2.56-4.28 km/h).
    const bool male = rng.uniform() < 0.5;
    const double kmh = male ? rng.uniform(3.49, 5.83) : rng.uniform(2.56, 4.28);
    return scale * kmh / 3.6;
}

SimAgent make_pedestrian(Rng& rng, const CorridorScene& scene, int dir, double x) {
    SimAgent a;
    a.travel_dir = dir;
    a.state.kind = AgentKind::pedestrian;
    a.state.params = pedestrian_default_params();
    a.state.desired_speed = sample_ped_speed(rng, scene.ped_speed_scale);
    a.state.radius = 0.269;
    const double y = rng.uniform(a.state.radius, scene.width - a.state.radius);
    a.state.position = {x, y};
    a.state.desired_direction = {static_cast<double>(dir), 0.0};
    a.state.velocity = a.state.desired_direction * a.state.desired_speed;
    return a;
}

} // namespace

TraversalResult simulate_segment(const CorridorScene& scene, AgentState robot,
                                 const SimConfig& cfg) {
    require(cfg.dt > 0.0 && cfg.dt <= 0.5, ErrorCode::InvalidArgument, "dt must be in (0, 0.5]");
    require(cfg.horizon > 0.0, ErrorCode::InvalidArgument, "horizon must be > 0");
    require(scene.width > 2.0 * robot.radius, ErrorCode::BlockedGeometry,
            "corridor narrower than the robot");
    for (const Obstacle& o : scene.obstacles) {
        const auto [lo, hi] = widest_gap(o, scene.width);
        if (hi - lo < 2.0 * robot.radius + kMinGapClearance) {
            raise(ErrorCode::BlockedGeometry, "no obstacle gap fits the robot");
        }
    }

    Rng rng(stable_hash({scene.seed, cfg.seed, 0x73696d00ULL}));

    // Pre-generate Poisson arrivals for both ends over the horizon.
    struct Arrival {
        double time;
        int dir;
    };
    std::vector<Arrival> arrivals;
    if (scene.ped_arrival_rate > 0.0) {
        for (int dir : {+1, -1}) {
            double t = rng.exponential(scene.ped_arrival_rate);
            while (t < cfg.horizon) {
                arrivals.push_back({t, dir});
                t += rng.exponential(scene.ped_arrival_rate);
            }
        }
        std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
            if (a.time != b.time) return a.time < b.time;
            return a.dir > b.dir;
        });
    }

    std::vector<SimAgent> agents;
    SimAgent rb;
    rb.state = robot;
    rb.travel_dir = 1;
    rb.state.position = {0.0, scene.width / 2.0};
    rb.state.desired_direction = {1.0, 0.0};
    rb.state.velocity = {robot.desired_speed, 0.0};
    agents.push_back(rb);

    // Warm start: the corridor is already populated at the entry time, at
    // the density implied by the arrival rate and mean walking speed.
    if (scene.ped_arrival_rate > 0.0) {
        const double mean_speed = std::max(0.1, 1.17 * scene.ped_speed_scale);
        const int warm = static_cast<int>(
            std::floor(2.0 * scene.ped_arrival_rate * scene.length / mean_speed));
        for (int i = 0; i < warm; ++i) {
            const int dir = (rng.uniform() < 0.5) ? 1 : -1;
            agents.push_back(make_pedestrian(rng, scene, dir, rng.uniform(0.0, scene.length)));
        }
    }

    SceneGeometry geometry{scene.length, scene.width, &scene.obstacles};
    std::size_t next_arrival = 0;
    double prev_x = 0.0;
    const int max_steps = static_cast<int>(std::ceil(cfg.horizon / cfg.dt));

    std::vector<Vec2> forces;
    std::vector<AgentState> neighbors;
    for (int step = 0; step < max_steps; ++step) {
        const double t = step * cfg.dt;
        while (next_arrival < arrivals.size() && arrivals[next_arrival].time <= t) {
            const auto& ar = arrivals[next_arrival++];
            const double x0 = ar.dir > 0 ? 0.0 : scene.length;
            agents.push_back(make_pedestrian(rng, scene, ar.dir, x0));
        }

        forces.assign(agents.size(), Vec2{});
        for (std::size_t i = 0; i < agents.size(); ++i) {
            SimAgent& a = agents[i];
            a.state.desired_direction = steered_direction(a, scene);
            neighbors.clear();
            for (std::size_t j = 0; j < agents.size(); ++j) {
                if (j != i) neighbors.push_back(agents[j].state);
            }
            std::sort(neighbors.begin(), neighbors.end(),
                      [&a](const AgentState& l, const AgentState& r) {
                          const double dl = (l.position - a.state.position).norm();
                          const double dr = (r.position - a.state.position).norm();
                          if (dl != dr) return dl < dr;
                          return l.position.x < r.position.x;
                      });
            const bool noise_active = a.below_speed_s >= cfg.noise_dwell_s;
            forces[i] = total_force(a.state, neighbors, geometry, noise_active, &rng);
        }

        prev_x = agents[0].state.position.x;
        for (std::size_t i = 0; i < agents.size(); ++i) {
            SimAgent& a = agents[i];
            a.state.position = a.state.position + a.state.velocity * cfg.dt;
            a.state.velocity = a.state.velocity + forces[i] * cfg.dt;
            // Speed caps: the robot's desired speed is fixed with no
            // deviation; pedestrians get the usual 1.3x ceiling.
            const double cap = (a.state.kind == AgentKind::robot) ? a.state.desired_speed
                                                                  : 1.3 * a.state.desired_speed;
            const double sp = a.state.velocity.norm();
            if (sp > cap) a.state.velocity = a.state.velocity * (cap / sp);
            // Hard wall clamp keeps coarse steps from tunneling.
            const double ylo = a.state.radius;
            const double yhi = scene.width - a.state.radius;
            if (a.state.position.y < ylo) {
                a.state.position.y = ylo;
                if (a.state.velocity.y < 0.0) a.state.velocity.y = 0.0;
            } else if (a.state.position.y > yhi) {
                a.state.position.y = yhi;
                if (a.state.velocity.y > 0.0) a.state.velocity.y = 0.0;
            }
            if (sp < 0.9 * a.state.desired_speed) {
                a.below_speed_s += cfg.dt;
            } else {
                a.below_speed_s = 0.0;
            }
        }

        // Robot done? Interpolate the crossing instant inside the step.
        const double x_now = agents[0].state.position.x;
        if (x_now >= scene.length) {
            const double vx = (x_now - prev_x) / cfg.dt;
            const double frac = vx > 1e-12 ? (scene.length - prev_x) / vx : 0.0;
            return {t + frac, false};
        }

        // Drop pedestrians that left the corridor.
        std::size_t keep = 1;
        for (std::size_t i = 1; i < agents.size(); ++i) {
            const double x = agents[i].state.position.x;
            if (x > -1.0 && x < scene.length + 1.0) {
                if (keep != i) agents[keep] = agents[i];
                ++keep;
            }
        }
        agents.resize(keep);
    }
    return {cfg.horizon, true};
}

ObstacleConfig place_obstacles(const Network& net, double fraction, std::uint64_t seed,
                               bool edge_placement) {
    require(fraction >= 0.0 && fraction <= 1.0, ErrorCode::InvalidArgument,
            "obstacle fraction must be in [0, 1]");
    std::vector<int> sidewalks;
    for (const Segment& s : net.segments()) {
        if (s.kind == SegmentKind::sidewalk) sidewalks.push_back(s.id);
    }
    ObstacleConfig cfg;
    cfg.fraction = fraction;
    cfg.per_segment.assign(static_cast<std::size_t>(net.n_segments()), {});
    const int count = static_cast<int>(std::ceil(fraction * static_cast<double>(sidewalks.size())));
    if (count == 0) return cfg;

    Rng rng(stable_hash({seed, 0x6f627374ULL}));
    std::vector<int> chosen = rng.sample_without_replacement(static_cast<int>(sidewalks.size()), count);
    std::sort(chosen.begin(), chosen.end());
    const double width = 3.0; // sidewalk corridor width used by the generator
    for (int pick : chosen) {
        const Segment& s = net.segment(sidewalks[static_cast<std::size_t>(pick)]);
        Obstacle o;
        o.side = rng.uniform(1.0, 1.4);
        const double margin = std::min(5.0, s.length_m / 4.0);
        o.center.x = rng.uniform(margin, s.length_m - margin);
        if (edge_placement) {
            const bool bottom = rng.uniform() < 0.5;
            o.center.y = bottom ? o.side / 2.0 : width - o.side / 2.0;
        } else {
            const double h = o.side / 2.0;
            o.center.y = rng.uniform(h + 0.05, width - h - 0.05);
        }
        cfg.per_segment[static_cast<std::size_t>(s.id)].push_back(o);
    }
    return cfg;
}

double DemandProfile::weight(int day, int hour) const {
    // Weekday/weekend and time-of-day shape; midday and late afternoon peak.
    static constexpr double day_w[7] = {1.0, 1.0, 1.0, 1.05, 1.1, 0.9, 0.7};
    const double dw = (day >= 0 && day < 7) ? day_w[day] : 1.0;
    const double h = static_cast<double>(hour);
    const double morning = std::exp(-0.5 * std::pow((h - 12.0) / 2.0, 2));
    const double evening = std::exp(-0.5 * std::pow((h - 17.5) / 2.0, 2));
    const double hw = 0.35 + 0.65 * std::max(morning, evening);
    return dw * hw * multiplier;
}

namespace {

void parallel_for(int total, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 1 || total <= 1) {
        for (int i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= total) break;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

double corridor_width(SegmentKind kind) { return kind == SegmentKind::crossing ? 4.0 : 3.0; }

} // namespace

std::pair<ScenarioMatrix, FreeFlowVector> generate_scenario_matrix(const Network& net,
                                                                   const DemandProfile& demand,
                                                                   const AgentState& robot,
                                                                   const SimConfig& cfg,
                                                                   const GenerateOptions& opts) {
    const int n = net.n_segments();
    for (double f : opts.obstacle_fractions) {
        require(f >= 0.0 && f <= 1.0, ErrorCode::InvalidArgument, "obstacle fraction outside [0,1]");
    }

    std::vector<ObstacleConfig> configs;
    for (std::size_t ci = 0; ci < opts.obstacle_fractions.size(); ++ci) {
        configs.push_back(place_obstacles(net, opts.obstacle_fractions[ci],
                                          stable_hash({cfg.seed, 0x636f6e66ULL, ci}),
                                          opts.edge_placement));
    }

    std::vector<ScenarioMeta> meta;
    for (int day : demand.days) {
        for (int hour : demand.hours) {
            for (std::size_t ci = 0; ci < configs.size(); ++ci) {
                for (int dir = 0; dir < 2; ++dir) {
                    ScenarioMeta m;
                    m.day = day;
                    m.hour = hour;
                    m.obstacle_config = static_cast<int>(ci);
                    m.direction = dir == 0 ? Direction::forward : Direction::reverse;
                    meta.push_back(m);
                }
            }
        }
    }
    const int n_scen = static_cast<int>(meta.size());

    Eigen::MatrixXd values(n_scen, n);
    std::atomic<int> timeouts{0};
    const int total_tasks = n_scen * n;
    parallel_for(total_tasks, opts.jobs, [&](int task) {
        const int si = task / n;
        const int j = task % n;
        const ScenarioMeta& m = meta[static_cast<std::size_t>(si)];
        const Segment& seg = net.segment(j);

        CorridorScene scene;
        scene.length = seg.length_m;
        scene.width = corridor_width(seg.kind);
        scene.ped_arrival_rate = demand.base_rate * demand.weight(m.day, m.hour);
        scene.ped_speed_scale = demand.ped_speed_scale;
        if (seg.kind == SegmentKind::sidewalk) {
            scene.obstacles = configs[static_cast<std::size_t>(m.obstacle_config)]
                                  .per_segment[static_cast<std::size_t>(j)];
            if (m.direction == Direction::reverse) {
                for (Obstacle& o : scene.obstacles) o.center.x = scene.length - o.center.x;
            }
        }
        scene.seed = stable_hash({cfg.seed, static_cast<std::uint64_t>(m.day),
                                  static_cast<std::uint64_t>(m.hour),
                                  static_cast<std::uint64_t>(m.obstacle_config),
                                  static_cast<std::uint64_t>(m.direction == Direction::reverse),
                                  static_cast<std::uint64_t>(j)});
        const TraversalResult r = simulate_segment(scene, robot, cfg);
        if (r.timeout) timeouts.fetch_add(1);
        values(si, j) = r.time;
    });
    if (opts.timeout_count) *opts.timeout_count = timeouts.load();

    FreeFlowVector ff;
    ff.values.resize(n);
    for (int j = 0; j < n; ++j) {
        const Segment& seg = net.segment(j);
        CorridorScene scene;
        scene.length = seg.length_m;
        scene.width = corridor_width(seg.kind);
        scene.ped_arrival_rate = 0.0;
        scene.seed = stable_hash({cfg.seed, 0x66726565ULL, static_cast<std::uint64_t>(j)});
        ff.values(j) = simulate_segment(scene, robot, cfg).time;
    }

    return {ScenarioMatrix(std::move(values), std::move(meta)), std::move(ff)};
}

} // namespace robroute::sim
