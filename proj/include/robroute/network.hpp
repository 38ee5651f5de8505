#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robroute/lp.hpp"

namespace robroute {

enum class SegmentKind { sidewalk, crossing };

const char* segment_kind_name(SegmentKind k);
SegmentKind parse_segment_kind(const std::string& s);

struct Segment {
    int id = 0;
    int tail = 0;
    int head = 0;
    double length_m = 0.0;
    SegmentKind kind = SegmentKind::sidewalk;
};

struct OdPair {
    int origin = 0;
    int destination = 0;
};

/// Simple directed path: ordered segment ids plus the 0/1 incidence vector.
struct Path {
    std::vector<int> segments;
    std::vector<std::uint8_t> incidence;

    double dot(const std::vector<double>& costs) const {
        double s = 0.0;
        for (int e : segments) s += costs[static_cast<std::size_t>(e)];
        return s;
    }
};

/// Directed sidewalk graph. Immutable after construction; segment ids are
/// dense 0..n-1 and parallel arcs are allowed.
class Network {
  public:
    Network(std::vector<int> nodes, std::vector<Segment> segments);

    static Network from_csv(const std::string& path);
    void to_csv(const std::string& path) const;

    int n_segments() const { return static_cast<int>(segments_.size()); }
    const std::vector<Segment>& segments() const { return segments_; }
    const Segment& segment(int id) const { return segments_[static_cast<std::size_t>(id)]; }
    const std::vector<int>& nodes() const { return nodes_; }
    bool has_node(int node) const;

    /// Outgoing segment ids of a node, ascending.
    const std::vector<int>& out_segments(int node) const;
    const std::vector<int>& in_segments(int node) const;

    Path make_path(std::vector<int> segment_ids) const;

  private:
    std::vector<int> nodes_;
    std::vector<Segment> segments_;
    std::vector<std::vector<int>> out_, in_;
    std::vector<int> node_slot_; // node id -> dense slot
    int slot(int node) const;
};

/// Nominal shortest path (Eq. of the classic problem). Ties are broken by
/// the lexicographically smallest (predecessor node, segment) pair so the
/// result is deterministic across platforms.
std::pair<Path, double> shortest_path(const Network& net, const std::vector<double>& costs, OdPair od);

/// All simple origin->destination paths with at most max_segments segments,
/// in lexicographic segment-id order. Throws ExplosionGuard past the cap.
std::vector<Path> enumerate_paths(const Network& net, OdPair od, int max_segments,
                                  std::size_t cap = 1000000);

/// Node-balance equalities over the segment incidence variables (+1 at the
/// origin, -1 at the destination, 0 elsewhere), ready for the MILP core.
std::vector<opt::LinRow> flow_constraints(const Network& net, OdPair od);

/// Decode a 0/1 incidence vector into the simple path it contains (ignores
/// disconnected zero-cost cycles, which flow balance cannot exclude).
Path decode_incidence(const Network& net, const std::vector<double>& x, OdPair od);

/// Synthetic grid generator: rows x cols lattice, arcs both ways, thinned to
/// n_segments while staying strongly connected. Lengths and kinds are seeded.
Network make_grid_network(int rows, int cols, int n_segments, std::uint64_t seed);

} // namespace robroute
