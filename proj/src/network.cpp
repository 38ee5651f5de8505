#include "robroute/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>

#include "robroute/csv.hpp"
#include "robroute/errors.hpp"
#include "robroute/rng.hpp"

namespace robroute {

const char* segment_kind_name(SegmentKind k) {
    return k == SegmentKind::sidewalk ? "sidewalk" : "crossing";
}

SegmentKind parse_segment_kind(const std::string& s) {
    if (s == "sidewalk") return SegmentKind::sidewalk;
    if (s == "crossing") return SegmentKind::crossing;
    raise(ErrorCode::ParseError, "unknown segment kind '" + s + "'");
}

Network::Network(std::vector<int> nodes, std::vector<Segment> segments)
    : nodes_(std::move(nodes)), segments_(std::move(segments)) {
    std::sort(nodes_.begin(), nodes_.end());
    require(std::adjacent_find(nodes_.begin(), nodes_.end()) == nodes_.end(),
            ErrorCode::InvalidArgument, "duplicate node ids");
    require(!nodes_.empty(), ErrorCode::InvalidArgument, "empty node set");
    const int max_node = nodes_.back();
    require(nodes_.front() >= 0, ErrorCode::InvalidArgument, "node ids must be nonnegative");
    node_slot_.assign(static_cast<std::size_t>(max_node) + 1, -1);
    for (std::size_t i = 0; i < nodes_.size(); ++i) node_slot_[static_cast<std::size_t>(nodes_[i])] = static_cast<int>(i);

    out_.assign(nodes_.size(), {});
    in_.assign(nodes_.size(), {});
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const Segment& s = segments_[i];
        require(s.id == static_cast<int>(i), ErrorCode::InvalidArgument,
                "segment ids must be dense 0..n-1 in order");
        require(s.tail != s.head, ErrorCode::InvalidArgument, "self-loop segment");
        require(s.length_m > 0.0 && std::isfinite(s.length_m), ErrorCode::InvalidArgument,
                "segment length must be positive");
        require(has_node(s.tail) && has_node(s.head), ErrorCode::InvalidArgument,
                "segment endpoint is not a declared node");
        out_[static_cast<std::size_t>(slot(s.tail))].push_back(s.id);
        in_[static_cast<std::size_t>(slot(s.head))].push_back(s.id);
    }
    for (auto& v : out_) std::sort(v.begin(), v.end());
    for (auto& v : in_) std::sort(v.begin(), v.end());
}

bool Network::has_node(int node) const {
    return node >= 0 && node < static_cast<int>(node_slot_.size()) &&
           node_slot_[static_cast<std::size_t>(node)] >= 0;
}

int Network::slot(int node) const {
    require(has_node(node), ErrorCode::InvalidArgument, "unknown node id " + std::to_string(node));
    return node_slot_[static_cast<std::size_t>(node)];
}

const std::vector<int>& Network::out_segments(int node) const { return out_[static_cast<std::size_t>(slot(node))]; }
const std::vector<int>& Network::in_segments(int node) const { return in_[static_cast<std::size_t>(slot(node))]; }

Network Network::from_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    require(!rows.empty(), ErrorCode::ParseError, "empty network file " + path);
    const auto& hdr = rows.front();
    require(hdr.size() == 5 && hdr[0] == "id" && hdr[1] == "tail" && hdr[2] == "head" &&
                hdr[3] == "length_m" && hdr[4] == "kind",
            ErrorCode::ParseError, "network header must be id,tail,head,length_m,kind");
    std::vector<Segment> segs;
    std::set<int> node_set;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        require(r.size() == 5, ErrorCode::ParseError, "network row with wrong field count");
        Segment s;
        s.id = static_cast<int>(csv::parse_long(r[0], path));
        s.tail = static_cast<int>(csv::parse_long(r[1], path));
        s.head = static_cast<int>(csv::parse_long(r[2], path));
        s.length_m = csv::parse_double(r[3], path);
        s.kind = parse_segment_kind(r[4]);
        node_set.insert(s.tail);
        node_set.insert(s.head);
        segs.push_back(s);
    }
    return Network(std::vector<int>(node_set.begin(), node_set.end()), std::move(segs));
}

void Network::to_csv(const std::string& path) const {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path);
    out << "id,tail,head,length_m,kind\n";
    for (const Segment& s : segments_) {
        out << s.id << ',' << s.tail << ',' << s.head << ',' << csv::format_double(s.length_m)
            << ',' << segment_kind_name(s.kind) << '\n';
    }
}

Path Network::make_path(std::vector<int> segment_ids) const {
    Path p;
    p.incidence.assign(static_cast<std::size_t>(n_segments()), 0);
    std::set<int> visited;
    for (std::size_t i = 0; i < segment_ids.size(); ++i) {
        const int e = segment_ids[i];
        require(e >= 0 && e < n_segments(), ErrorCode::InvalidArgument, "segment id out of range");
        const Segment& s = segment(e);
        if (i == 0) {
            visited.insert(s.tail);
        } else {
            require(segment(segment_ids[i - 1]).head == s.tail, ErrorCode::InvalidArgument,
                    "segments do not chain head->tail");
        }
        require(visited.insert(s.head).second, ErrorCode::InvalidArgument, "path revisits a node");
        p.incidence[static_cast<std::size_t>(e)] = 1;
    }
    p.segments = std::move(segment_ids);
    return p;
}

std::pair<Path, double> shortest_path(const Network& net, const std::vector<double>& costs, OdPair od) {
    require(static_cast<int>(costs.size()) == net.n_segments(), ErrorCode::DimensionMismatch,
            "cost vector length != segment count");
    for (double c : costs) {
        require(c >= 0.0 && std::isfinite(c), ErrorCode::NegativeCost, "segment costs must be nonnegative");
    }
    require(net.has_node(od.origin) && net.has_node(od.destination), ErrorCode::InvalidArgument,
            "OD endpoints must be network nodes");
    require(od.origin != od.destination, ErrorCode::InvalidArgument, "origin equals destination");

    const double inf = std::numeric_limits<double>::infinity();
    // Indexed by node id directly (ids can be sparse but are small in practice).
    int max_id = 0;
    for (int v : net.nodes()) max_id = std::max(max_id, v);
    std::vector<double> dist(static_cast<std::size_t>(max_id) + 1, inf);
    std::vector<int> pred_node(dist.size(), -1), pred_seg(dist.size(), -1);
    std::vector<char> done(dist.size(), 0);

    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[static_cast<std::size_t>(od.origin)] = 0.0;
    pq.push({0.0, od.origin});

    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (done[static_cast<std::size_t>(u)]) continue;
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        done[static_cast<std::size_t>(u)] = 1;
        if (u == od.destination) break;
        for (int e : net.out_segments(u)) {
            const Segment& s = net.segment(e);
            const int v = s.head;
            if (done[static_cast<std::size_t>(v)]) continue;
            const double nd = d + costs[static_cast<std::size_t>(e)];
            const double old = dist[static_cast<std::size_t>(v)];
            const bool better =
                nd < old ||
                (nd == old && (u < pred_node[static_cast<std::size_t>(v)] ||
                               (u == pred_node[static_cast<std::size_t>(v)] && e < pred_seg[static_cast<std::size_t>(v)])));
            if (better) {
                const bool push_needed = nd < old;
                dist[static_cast<std::size_t>(v)] = nd;
                pred_node[static_cast<std::size_t>(v)] = u;
                pred_seg[static_cast<std::size_t>(v)] = e;
                if (push_needed) pq.push({nd, v});
            }
        }
    }

    require(std::isfinite(dist[static_cast<std::size_t>(od.destination)]), ErrorCode::Unreachable,
            "destination " + std::to_string(od.destination) + " unreachable from " +
                std::to_string(od.origin));

    std::vector<int> chain;
    for (int v = od.destination; v != od.origin;) {
        const int e = pred_seg[static_cast<std::size_t>(v)];
        chain.push_back(e);
        v = pred_node[static_cast<std::size_t>(v)];
    }
    std::reverse(chain.begin(), chain.end());
    return {net.make_path(std::move(chain)), dist[static_cast<std::size_t>(od.destination)]};
}

namespace {

void enumerate_rec(const Network& net, int node, int target, int max_segments, std::size_t cap,
                   std::vector<int>& chain, std::vector<char>& visited, std::vector<Path>& out) {
    if (node == target) {
        if (out.size() >= cap) {
            raise(ErrorCode::ExplosionGuard,
                  "path count exceeds cap of " + std::to_string(cap));
        }
        out.push_back(net.make_path(chain));
        return;
    }
    if (static_cast<int>(chain.size()) >= max_segments) return;
    for (int e : net.out_segments(node)) {
        const Segment& s = net.segment(e);
        if (visited[static_cast<std::size_t>(s.head)]) continue;
        visited[static_cast<std::size_t>(s.head)] = 1;
        chain.push_back(e);
        enumerate_rec(net, s.head, target, max_segments, cap, chain, visited, out);
        chain.pop_back();
        visited[static_cast<std::size_t>(s.head)] = 0;
    }
}

} // namespace

std::vector<Path> enumerate_paths(const Network& net, OdPair od, int max_segments, std::size_t cap) {
    require(net.has_node(od.origin) && net.has_node(od.destination), ErrorCode::InvalidArgument,
            "OD endpoints must be network nodes");
    std::vector<Path> out;
    if (max_segments < 1) return out;
    int max_id = 0;
    for (int v : net.nodes()) max_id = std::max(max_id, v);
    std::vector<char> visited(static_cast<std::size_t>(max_id) + 1, 0);
    visited[static_cast<std::size_t>(od.origin)] = 1;
    std::vector<int> chain;
    enumerate_rec(net, od.origin, od.destination, max_segments, cap, chain, visited, out);
    return out;
}

std::vector<opt::LinRow> flow_constraints(const Network& net, OdPair od) {
    require(net.has_node(od.origin) && net.has_node(od.destination), ErrorCode::InvalidArgument,
            "OD endpoints must be network nodes");
    require(od.origin != od.destination, ErrorCode::InvalidArgument, "origin equals destination");
    std::vector<opt::LinRow> rows;
    rows.reserve(net.nodes().size());
    for (int node : net.nodes()) {
        opt::LinRow row;
        row.coeffs.assign(static_cast<std::size_t>(net.n_segments()), 0.0);
        for (int e : net.out_segments(node)) row.coeffs[static_cast<std::size_t>(e)] += 1.0;
        for (int e : net.in_segments(node)) row.coeffs[static_cast<std::size_t>(e)] -= 1.0;
        row.rel = opt::Rel::eq;
        row.rhs = (node == od.origin) ? 1.0 : (node == od.destination) ? -1.0 : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

Path decode_incidence(const Network& net, const std::vector<double>& x, OdPair od) {
    std::vector<int> chain;
    int node = od.origin;
    std::set<int> seen{node};
    while (node != od.destination) {
        int next_seg = -1;
        for (int e : net.out_segments(node)) {
            if (x[static_cast<std::size_t>(e)] > 0.5) {
                next_seg = e;
                break; // out lists are ascending: lowest id wins
            }
        }
        require(next_seg >= 0, ErrorCode::NumericalError, "incidence vector has no outgoing arc");
        chain.push_back(next_seg);
        node = net.segment(next_seg).head;
        require(seen.insert(node).second, ErrorCode::NumericalError,
                "incidence vector revisits a node on the walk");
    }
    return net.make_path(std::move(chain));
}

namespace {

// Single strongly connected component check (Kosaraju on the arc subset).
bool strongly_connected(int n_nodes, const std::vector<std::pair<int, int>>& arcs,
                        const std::vector<char>& keep) {
    std::vector<std::vector<int>> fwd(static_cast<std::size_t>(n_nodes)), rev(static_cast<std::size_t>(n_nodes));
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        if (!keep[i]) continue;
        fwd[static_cast<std::size_t>(arcs[i].first)].push_back(arcs[i].second);
        rev[static_cast<std::size_t>(arcs[i].second)].push_back(arcs[i].first);
    }
    auto bfs = [&](const std::vector<std::vector<int>>& adj) {
        std::vector<char> vis(static_cast<std::size_t>(n_nodes), 0);
        std::vector<int> stack{0};
        vis[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v : adj[static_cast<std::size_t>(u)]) {
                if (!vis[static_cast<std::size_t>(v)]) {
                    vis[static_cast<std::size_t>(v)] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n_nodes;
    };
    return bfs(fwd) && bfs(rev);
}

} // namespace

Network make_grid_network(int rows, int cols, int n_segments, std::uint64_t seed) {
    require(rows >= 2 && cols >= 2, ErrorCode::InvalidArgument, "grid needs rows, cols >= 2");
    const int n_nodes = rows * cols;
    auto node_at = [cols](int r, int c) { return r * cols + c; };

    std::vector<std::pair<int, int>> arcs;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) {
                arcs.push_back({node_at(r, c), node_at(r, c + 1)});
                arcs.push_back({node_at(r, c + 1), node_at(r, c)});
            }
            if (r + 1 < rows) {
                arcs.push_back({node_at(r, c), node_at(r + 1, c)});
                arcs.push_back({node_at(r + 1, c), node_at(r, c)});
            }
        }
    }
    require(n_segments >= n_nodes, ErrorCode::InvalidArgument,
            "n_segments too small for a strongly connected grid");
    require(n_segments <= static_cast<int>(arcs.size()), ErrorCode::InvalidArgument,
            "n_segments exceeds grid arc count " + std::to_string(arcs.size()));

    Rng rng(stable_hash({seed, 0x6e657477ULL}));
    std::vector<int> order(arcs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);

    std::vector<char> keep(arcs.size(), 1);
    int kept = static_cast<int>(arcs.size());
    for (int idx : order) {
        if (kept <= n_segments) break;
        keep[static_cast<std::size_t>(idx)] = 0;
        if (strongly_connected(n_nodes, arcs, keep)) {
            --kept;
        } else {
            keep[static_cast<std::size_t>(idx)] = 1;
        }
    }
    require(kept == n_segments, ErrorCode::InvalidArgument,
            "could not thin grid to requested segment count");

    std::vector<Segment> segs;
    std::vector<int> nodes(static_cast<std::size_t>(n_nodes));
    for (int i = 0; i < n_nodes; ++i) nodes[static_cast<std::size_t>(i)] = i;
    int id = 0;
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        if (!keep[i]) continue;
        Segment s;
        s.id = id++;
        s.tail = arcs[i].first;
        s.head = arcs[i].second;
        // Roughly one third crossings, matching the observed sidewalk/crossing mix.
        s.kind = (rng.uniform() < 0.34) ? SegmentKind::crossing : SegmentKind::sidewalk;
        s.length_m = (s.kind == SegmentKind::crossing) ? rng.uniform(8.0, 20.0) : rng.uniform(40.0, 120.0);
        segs.push_back(s);
    }
    return Network(std::move(nodes), std::move(segs));
}

} // namespace robroute
