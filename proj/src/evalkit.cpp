#include "robroute/evalkit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "robroute/csv.hpp"
#include "robroute/errors.hpp"

namespace robroute {

std::vector<double> default_parameter_grid(Method m) {
    switch (m) {
        case Method::nominal: return {0.0};
        case Method::budgeted: return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        case Method::ellipsoidal: return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        case Method::svc:
        case Method::mkl_svc:
            return {0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20};
        case Method::drsp: return {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    }
    return {};
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

} // namespace

std::vector<OdPair> select_od_pairs(const Network& net, const ScenarioMatrix& D,
                                    const FreeFlowVector& freeflow, int pool_size, int keep,
                                    int min_segments, std::uint64_t seed) {
    require(pool_size >= keep, ErrorCode::InvalidArgument, "pool_size must be >= keep");
    Rng rng(stable_hash({seed, 0x6f647365ULL}));
    const auto& nodes = net.nodes();
    std::vector<double> ff(freeflow.values.data(), freeflow.values.data() + freeflow.values.size());

    std::set<std::pair<int, int>> taken;
    struct Candidate {
        OdPair od;
        double sd;
    };
    std::vector<Candidate> pool;
    const long max_attempts = 200L * pool_size;
    long attempts = 0;
    while (static_cast<int>(pool.size()) < pool_size && attempts < max_attempts) {
        ++attempts;
        const int s = nodes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(nodes.size()) - 1))];
        const int t = nodes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(nodes.size()) - 1))];
        if (s == t || taken.count({s, t})) continue;
        Path path;
        try {
            path = shortest_path(net, ff, OdPair{s, t}).first;
        } catch (const Error&) {
            continue; // unreachable pair
        }
        if (static_cast<int>(path.segments.size()) < min_segments) continue;
        taken.insert({s, t});
        // Standard deviation across scenarios of this nominal path's time.
        Eigen::VectorXd x = Eigen::VectorXd::Zero(net.n_segments());
        for (int e : path.segments) x(e) = 1.0;
        const Eigen::VectorXd times = D.values() * x;
        const double mean = times.mean();
        const double var = (times.array() - mean).square().sum() / static_cast<double>(times.size());
        pool.push_back({OdPair{s, t}, std::sqrt(var)});
    }
    require(static_cast<int>(pool.size()) >= keep, ErrorCode::InsufficientCandidates,
            "found only " + std::to_string(pool.size()) + " qualifying OD pairs");

    std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
        if (a.sd != b.sd) return a.sd > b.sd;
        if (a.od.origin != b.od.origin) return a.od.origin < b.od.origin;
        return a.od.destination < b.od.destination;
    });
    std::vector<OdPair> out;
    for (int i = 0; i < keep; ++i) out.push_back(pool[static_cast<std::size_t>(i)].od);
    return out;
}

namespace {

struct OdScore {
    double avg = 0.0, worst = 0.0, worst5 = 0.0;
    bool failed = false;
};

OdScore score_path(const Path& path, const Eigen::MatrixXd& validation, double bench_ff,
                   bool worst5_point) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(validation.cols());
    for (int e : path.segments) x(e) = 1.0;
    Eigen::VectorXd times = validation * x;
    std::vector<double> delays(static_cast<std::size_t>(times.size()));
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        delays[static_cast<std::size_t>(i)] = normalized_delay(times(i), bench_ff);
    }
    OdScore s;
    s.avg = 0.0;
    for (double d : delays) s.avg += d;
    s.avg /= static_cast<double>(delays.size());
    std::sort(delays.begin(), delays.end(), std::greater<double>());
    s.worst = delays.front();
    const int k = std::max<int>(1, static_cast<int>(std::ceil(0.05 * static_cast<double>(delays.size()))));
    if (worst5_point) {
        s.worst5 = delays[static_cast<std::size_t>(k - 1)];
    } else {
        double sum = 0.0;
        for (int i = 0; i < k; ++i) sum += delays[static_cast<std::size_t>(i)];
        s.worst5 = sum / static_cast<double>(k);
    }
    return s;
}

} // namespace

KpiReport evaluate(const Network& net, const ScenarioMatrix& D, const FreeFlowVector& freeflow,
                   const std::vector<MethodSpec>& methods, const std::vector<OdPair>& ods,
                   const EvalOptions& opts) {
    const int n_ods = static_cast<int>(ods.size());
    require(n_ods > 0, ErrorCode::InvalidArgument, "no OD pairs");
    const FoldSplit folds = kfold_split(D.n_scenarios(), opts.folds, opts.seed);

    std::vector<double> ffv(freeflow.values.data(), freeflow.values.data() + freeflow.values.size());
    // Benchmark path and its free-flow time per OD (the conventional
    // shortest path under free flow).
    std::vector<double> bench_ff(static_cast<std::size_t>(n_ods));
    for (int o = 0; o < n_ods; ++o) {
        const Path p = shortest_path(net, ffv, ods[static_cast<std::size_t>(o)]).first;
        double t = 0.0;
        for (int e : p.segments) t += ffv[static_cast<std::size_t>(e)];
        bench_ff[static_cast<std::size_t>(o)] = t;
    }

    // Flatten (method, param) cells.
    struct CellKey {
        Method method;
        double param;
    };
    std::vector<CellKey> keys;
    for (const auto& spec : methods) {
        if (spec.method == Method::nominal) {
            keys.push_back({Method::nominal, 0.0});
            continue;
        }
        const auto grid = spec.params.empty() ? default_parameter_grid(spec.method) : spec.params;
        for (double p : grid) keys.push_back({spec.method, p});
    }

    struct Accum {
        std::vector<OdScore> per_od_sum; // summed over folds
        std::vector<int> per_od_folds;
        int failures = 0;
    };
    std::vector<Accum> acc(keys.size());
    for (auto& a : acc) {
        a.per_od_sum.assign(static_cast<std::size_t>(n_ods), {});
        a.per_od_folds.assign(static_cast<std::size_t>(n_ods), 0);
    }

    for (int fold = 0; fold < opts.folds; ++fold) {
        const auto train_idx = folds.train_indices(fold);
        const auto val_idx = folds.validation_indices(fold);
        const ScenarioMatrix train = D.select_rows(train_idx);
        Eigen::MatrixXd validation(static_cast<Eigen::Index>(val_idx.size()), D.n_segments());
        for (std::size_t i = 0; i < val_idx.size(); ++i) {
            validation.row(static_cast<Eigen::Index>(i)) = D.values().row(val_idx[i]);
        }

        // Shared per-fold artifacts for the SVC family.
        Grouping grouping;
        bool need_grouping = false;
        for (const auto& k : keys) {
            if (k.method == Method::svc || k.method == Method::mkl_svc) need_grouping = true;
        }
        if (need_grouping) {
            grouping = group_dimensions(train.values(), opts.grouping_method,
                                        stable_hash({opts.seed, static_cast<std::uint64_t>(fold)}));
        }

        for (std::size_t c = 0; c < keys.size(); ++c) {
            const auto& key = keys[c];
            // Build the model once per (fold, method, param).
            UncertaintyModel model = Eigen::VectorXd(freeflow.values);
            try {
                switch (key.method) {
                    case Method::nominal: break;
                    case Method::budgeted:
                        model = build_budgeted(train, static_cast<int>(key.param));
                        break;
                    case Method::ellipsoidal:
                        model = build_ellipsoid(train, key.param);
                        break;
                    case Method::svc: {
                        TscResult tsc = tsc_ds(train.values(), key.param, grouping);
                        model = SvcUncertainty{std::move(tsc.models), grouping};
                        break;
                    }
                    case Method::mkl_svc: {
                        MklTscResult tsc = tsc_ds_mkl(train.values(), key.param, grouping,
                                                      opts.mkl_kernels, opts.mkl_mu);
                        model = MklUncertainty{std::move(tsc.models), grouping};
                        break;
                    }
                    case Method::drsp: {
                        const int n_samples = std::min(opts.drsp_samples, train.n_scenarios());
                        model = build_wasserstein(train, freeflow, key.param, opts.drsp_alpha,
                                                  n_samples, opts.seed);
                        break;
                    }
                }
            } catch (const Error&) {
                acc[c].failures += n_ods;
                continue;
            }

            std::vector<OdScore> scores(static_cast<std::size_t>(n_ods));
            parallel_for(n_ods, opts.jobs, [&](int o) {
                const OdPair od = ods[static_cast<std::size_t>(o)];
                try {
                    RobustSolution sol;
                    switch (key.method) {
                        case Method::nominal:
                            sol = solve_nominal(net, freeflow.values, od);
                            break;
                        case Method::budgeted:
                            sol = solve_budgeted(net, std::get<BudgetedSet>(model), od);
                            break;
                        case Method::ellipsoidal:
                            sol = solve_ellipsoidal(net, std::get<EllipsoidSet>(model), od, opts.solve);
                            break;
                        case Method::svc:
                            sol = solve_svc_rsp(net, std::get<SvcUncertainty>(model), od, opts.solve);
                            break;
                        case Method::mkl_svc:
                            sol = solve_mkl_rsp(net, std::get<MklUncertainty>(model), od, opts.solve);
                            break;
                        case Method::drsp:
                            sol = solve_drsp(net, std::get<WassersteinAmbiguity>(model), od, opts.solve);
                            break;
                    }
                    scores[static_cast<std::size_t>(o)] =
                        score_path(sol.path, validation, bench_ff[static_cast<std::size_t>(o)],
                                   opts.worst5_point);
                } catch (const Error&) {
                    scores[static_cast<std::size_t>(o)].failed = true;
                }
            });
            for (int o = 0; o < n_ods; ++o) {
                if (scores[static_cast<std::size_t>(o)].failed) {
                    ++acc[c].failures;
                    continue;
                }
                auto& sum = acc[c].per_od_sum[static_cast<std::size_t>(o)];
                sum.avg += scores[static_cast<std::size_t>(o)].avg;
                sum.worst += scores[static_cast<std::size_t>(o)].worst;
                sum.worst5 += scores[static_cast<std::size_t>(o)].worst5;
                ++acc[c].per_od_folds[static_cast<std::size_t>(o)];
            }
        }
    }

    KpiReport report;
    for (std::size_t c = 0; c < keys.size(); ++c) {
        KpiCell cell;
        cell.method = keys[c].method;
        cell.param = keys[c].param;
        cell.failures = acc[c].failures;
        double sa = 0.0, sw = 0.0, s5 = 0.0;
        int counted = 0;
        for (int o = 0; o < n_ods; ++o) {
            const int fcount = acc[c].per_od_folds[static_cast<std::size_t>(o)];
            OdKpi ok;
            ok.od = ods[static_cast<std::size_t>(o)];
            if (fcount > 0) {
                const auto& sum = acc[c].per_od_sum[static_cast<std::size_t>(o)];
                ok.avg = sum.avg / fcount;
                ok.worst = sum.worst / fcount;
                ok.worst5 = sum.worst5 / fcount;
                sa += ok.avg;
                sw += ok.worst;
                s5 += ok.worst5;
                ++counted;
            } else {
                ok.avg = ok.worst = ok.worst5 = std::nan("");
            }
            cell.per_od.push_back(ok);
        }
        if (counted > 0) {
            cell.avg_delay = sa / counted;
            cell.worst_delay = sw / counted;
            cell.worst5_delay = s5 / counted;
        } else {
            cell.avg_delay = cell.worst_delay = cell.worst5_delay = std::nan("");
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

void emit_report(const KpiReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream kpi(out_dir + "/kpi.csv");
    require(kpi.good(), ErrorCode::IoError, "cannot write kpi.csv in " + out_dir);
    kpi << "method,param,avg_delay,worst_delay,worst5_delay,failures\n";
    for (const auto& cell : report.cells) {
        kpi << method_name(cell.method) << ',' << csv::format_double(cell.param) << ','
            << csv::format_double(cell.avg_delay) << ',' << csv::format_double(cell.worst_delay)
            << ',' << csv::format_double(cell.worst5_delay) << ',' << cell.failures << '\n';
    }
    std::ofstream per_od(out_dir + "/per_od.csv");
    require(per_od.good(), ErrorCode::IoError, "cannot write per_od.csv");
    per_od << "method,param,od_origin,od_dest,avg_delay,worst_delay,worst5_delay\n";
    for (const auto& cell : report.cells) {
        for (const auto& ok : cell.per_od) {
            per_od << method_name(cell.method) << ',' << csv::format_double(cell.param) << ','
                   << ok.od.origin << ',' << ok.od.destination << ',' << csv::format_double(ok.avg)
                   << ',' << csv::format_double(ok.worst) << ',' << csv::format_double(ok.worst5)
                   << '\n';
        }
    }
    std::ofstream tr(out_dir + "/tradeoff.csv");
    require(tr.good(), ErrorCode::IoError, "cannot write tradeoff.csv");
    tr << "method,param,avg_delay,worst_delay\n";
    for (const auto& cell : report.cells) {
        tr << method_name(cell.method) << ',' << csv::format_double(cell.param) << ','
           << csv::format_double(cell.avg_delay) << ',' << csv::format_double(cell.worst_delay)
           << '\n';
    }
}

KpiReport parse_report(const std::string& out_dir) {
    KpiReport report;
    const auto kpi_rows = csv::read_file(out_dir + "/kpi.csv");
    for (std::size_t i = 1; i < kpi_rows.size(); ++i) {
        const auto& r = kpi_rows[i];
        KpiCell cell;
        cell.method = parse_method(r[0]);
        cell.param = csv::parse_double(r[1], "kpi.csv");
        cell.avg_delay = csv::parse_double(r[2], "kpi.csv");
        cell.worst_delay = csv::parse_double(r[3], "kpi.csv");
        cell.worst5_delay = csv::parse_double(r[4], "kpi.csv");
        cell.failures = static_cast<int>(csv::parse_long(r[5], "kpi.csv"));
        report.cells.push_back(cell);
    }
    const auto od_rows = csv::read_file(out_dir + "/per_od.csv");
    for (std::size_t i = 1; i < od_rows.size(); ++i) {
        const auto& r = od_rows[i];
        const Method m = parse_method(r[0]);
        const double param = csv::parse_double(r[1], "per_od.csv");
        for (auto& cell : report.cells) {
            if (cell.method == m && cell.param == param) {
                OdKpi ok;
                ok.od.origin = static_cast<int>(csv::parse_long(r[2], "per_od.csv"));
                ok.od.destination = static_cast<int>(csv::parse_long(r[3], "per_od.csv"));
                ok.avg = csv::parse_double(r[4], "per_od.csv");
                ok.worst = csv::parse_double(r[5], "per_od.csv");
                ok.worst5 = csv::parse_double(r[6], "per_od.csv");
                cell.per_od.push_back(ok);
                break;
            }
        }
    }
    return report;
}

const char* sweep_factor_name(SweepConfig::Factor f) {
    switch (f) {
        case SweepConfig::Factor::robot_speed: return "robot_speed";
        case SweepConfig::Factor::robot_width: return "robot_width";
        case SweepConfig::Factor::robot_behavior: return "robot_behavior";
        case SweepConfig::Factor::ped_speed: return "ped_speed";
        case SweepConfig::Factor::ped_volume: return "ped_volume";
    }
    return "?";
}

SweepConfig::Factor parse_sweep_factor(const std::string& s) {
    if (s == "robot_speed") return SweepConfig::Factor::robot_speed;
    if (s == "robot_width") return SweepConfig::Factor::robot_width;
    if (s == "robot_behavior") return SweepConfig::Factor::robot_behavior;
    if (s == "ped_speed") return SweepConfig::Factor::ped_speed;
    if (s == "ped_volume") return SweepConfig::Factor::ped_volume;
    raise(ErrorCode::ConfigError, "unknown sweep factor '" + s + "'");
}

std::vector<double> default_sweep_levels(SweepConfig::Factor f) {
    switch (f) {
        case SweepConfig::Factor::robot_speed: return {5.0, 7.5, 10.0};       // km/h
        case SweepConfig::Factor::robot_width: return {0.5, 0.75, 1.0};       // m
        case SweepConfig::Factor::robot_behavior: return {0.0, 1.0, 2.0};     // cons/normal/aggr
        case SweepConfig::Factor::ped_speed: return {0.9, 1.0, 1.1};          // speed multiplier
        case SweepConfig::Factor::ped_volume: return {1.0, 1.5, 2.0};         // volume multiplier
    }
    return {};
}

SweepTable sensitivity_sweep(const Network& net, const SweepConfig& cfg) {
    SweepTable table;
    table.factor = cfg.factor;
    const auto levels = cfg.levels.empty() ? default_sweep_levels(cfg.factor) : cfg.levels;
    require(levels.size() == 3, ErrorCode::ConfigError, "sweeps use exactly 3 levels");
    std::vector<MethodSpec> methods = cfg.methods;
    if (methods.empty()) {
        methods = {MethodSpec{Method::ellipsoidal, default_parameter_grid(Method::ellipsoidal)},
                   MethodSpec{Method::drsp, default_parameter_grid(Method::drsp)}};
    }

    for (double level : levels) {
        double speed_kmh = cfg.robot_speed_kmh;
        double width_m = cfg.robot_width_m;
        sim::RobotBehavior behavior = cfg.behavior;
        sim::DemandProfile demand = cfg.demand;
        switch (cfg.factor) {
            case SweepConfig::Factor::robot_speed: speed_kmh = level; break;
            case SweepConfig::Factor::robot_width: width_m = level; break;
            case SweepConfig::Factor::robot_behavior:
                behavior = level <= 0.5 ? sim::RobotBehavior::conservative
                           : level <= 1.5 ? sim::RobotBehavior::normal
                                          : sim::RobotBehavior::aggressive;
                break;
            case SweepConfig::Factor::ped_speed: demand.ped_speed_scale = level; break;
            case SweepConfig::Factor::ped_volume: demand.multiplier *= level; break;
        }

        const sim::AgentState robot = sim::default_robot(speed_kmh, width_m, behavior);
        auto [D, ff] = sim::generate_scenario_matrix(net, demand, robot, cfg.sim, cfg.generate);
        const auto ods = select_od_pairs(net, D, ff, cfg.pool_size, cfg.keep_ods, cfg.min_segments,
                                         cfg.eval.seed);

        std::vector<MethodSpec> all = methods;
        all.insert(all.begin(), MethodSpec{Method::nominal, {}});
        const KpiReport report = evaluate(net, D, ff, all, ods, cfg.eval);

        double sp_avg = 0.0, sp_worst = 0.0, sp_worst5 = 0.0;
        for (const auto& cell : report.cells) {
            if (cell.method == Method::nominal) {
                sp_avg = cell.avg_delay;
                sp_worst = cell.worst_delay;
                sp_worst5 = cell.worst5_delay;
            }
        }
        for (const auto& spec : methods) {
            SweepRow row;
            row.level = level;
            row.method = spec.method;
            double best_avg = std::numeric_limits<double>::infinity();
            double best_worst = best_avg, best_worst5 = best_avg;
            for (const auto& cell : report.cells) {
                if (cell.method != spec.method || std::isnan(cell.avg_delay)) continue;
                if (cell.avg_delay < best_avg) {
                    best_avg = cell.avg_delay;
                    row.best_param_avg = cell.param;
                }
                if (cell.worst_delay < best_worst) {
                    best_worst = cell.worst_delay;
                    row.best_param_worst = cell.param;
                }
                if (cell.worst5_delay < best_worst5) {
                    best_worst5 = cell.worst5_delay;
                    row.best_param_worst5 = cell.param;
                }
            }
            row.avg_improvement = sp_avg - best_avg;
            row.worst_improvement = sp_worst - best_worst;
            row.worst5_improvement = sp_worst5 - best_worst5;
            table.rows.push_back(row);
        }
    }
    return table;
}

void emit_sweep(const SweepTable& table, const std::string& out_path) {
    std::ofstream out(out_path);
    require(out.good(), ErrorCode::IoError, "cannot write " + out_path);
    out << "factor,level,method,avg_improvement,worst_improvement,worst5_improvement,"
           "best_param_avg,best_param_worst,best_param_worst5\n";
    for (const auto& r : table.rows) {
        out << sweep_factor_name(table.factor) << ',' << csv::format_double(r.level) << ','
            << method_name(r.method) << ',' << csv::format_double(r.avg_improvement) << ','
            << csv::format_double(r.worst_improvement) << ','
            << csv::format_double(r.worst5_improvement) << ','
            << csv::format_double(r.best_param_avg) << ',' << csv::format_double(r.best_param_worst)
            << ',' << csv::format_double(r.best_param_worst5) << '\n';
    }
}

} // namespace robroute
