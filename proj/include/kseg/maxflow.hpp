#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

namespace kseg {

/// Terminal or n-link capacity that can never saturate.
inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

enum class Side : std::uint8_t { S, T };

/// Capacitated s-t graph. Terminals are implicit; each n-link is stored as a
/// forward/backward arc pair.
class FlowGraph {
public:
    using NodeId = int;
    using ArcId = int;  // pair index; arcs 2k (p->q) and 2k+1 (q->p)

    struct Arc {
        NodeId head;
        double capacity;
    };

    NodeId add_node();
    NodeId add_nodes(int count);
    /// Adds the pair p->q (cap_pq) and q->p (cap_qp); returns the pair id.
    ArcId add_nlink(NodeId p, NodeId q, double cap_pq, double cap_qp);
    /// Accumulates onto existing terminal capacities.
    void add_tlink(NodeId p, double cap_s, double cap_t);

    int node_count() const noexcept { return static_cast<int>(source_cap_.size()); }
    int nlink_count() const noexcept { return static_cast<int>(arcs_.size() / 2); }

    double source_capacity(NodeId p) const { return source_cap_.at(static_cast<std::size_t>(p)); }
    double sink_capacity(NodeId p) const { return sink_cap_.at(static_cast<std::size_t>(p)); }
    NodeId tail(int arc) const { return arcs_[static_cast<std::size_t>(arc ^ 1)].head; }
    const Arc& arc(int arc) const { return arcs_[static_cast<std::size_t>(arc)]; }
    int arc_count() const noexcept { return static_cast<int>(arcs_.size()); }

private:
    void check_node(NodeId p) const;
    static void check_capacity(double c);

    std::vector<double> source_cap_;
    std::vector<double> sink_cap_;
    std::vector<Arc> arcs_;
};

struct CutResult {
    double flow_value = 0.0;
    std::vector<Side> side;
    /// Net flow p->q on each n-link pair (negative means q->p).
    std::vector<double> nlink_flow;
    std::vector<double> source_flow;
    std::vector<double> sink_flow;
};

/// Boykov-Kolmogorov augmenting paths with search-tree reuse. side(p) is S
/// iff p is reachable from the source in the final residual graph. Throws
/// UnboundedFlow if an s-t path of infinite capacity exists.
CutResult max_flow(const FlowGraph& g);

/// Shortest augmenting paths (Edmonds-Karp). Slow; kept as a reference.
CutResult augmenting_path_max_flow(const FlowGraph& g);

/// Capacity of the s-t cut induced by a labeling.
double cut_capacity(const FlowGraph& g, const std::vector<Side>& side);

/// DIMACS max-flow text: nodes 1..n are graph nodes, n+1 is s, n+2 is t.
/// Infinite capacities are written as "inf".
void write_dimacs(std::ostream& out, const FlowGraph& g);
FlowGraph read_dimacs(std::istream& in);

}  // namespace kseg
