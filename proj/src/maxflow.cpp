#include "kseg/maxflow.hpp"

#include "kseg/error.hpp"

#include <algorithm>
#include <span>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

namespace kseg {

void FlowGraph::check_node(NodeId p) const {
    if (p < 0 || p >= node_count()) {
        throw Error(ErrorCode::InvalidNode, "invalid node id " + std::to_string(p));
    }
}

void FlowGraph::check_capacity(double c) {
    if (std::isnan(c) || c < 0.0) throw Error(ErrorCode::Validation, "capacities must be >= 0");
}

FlowGraph::NodeId FlowGraph::add_node() {
    source_cap_.push_back(0.0);
    sink_cap_.push_back(0.0);
    return node_count() - 1;
}

FlowGraph::NodeId FlowGraph::add_nodes(int count) {
    const NodeId first = node_count();
    source_cap_.resize(source_cap_.size() + static_cast<std::size_t>(count), 0.0);
    sink_cap_.resize(sink_cap_.size() + static_cast<std::size_t>(count), 0.0);
    return first;
}

FlowGraph::ArcId FlowGraph::add_nlink(NodeId p, NodeId q, double cap_pq, double cap_qp) {
    check_node(p);
    check_node(q);
    if (p == q) throw Error(ErrorCode::InvalidNode, "n-link endpoints must differ");
    check_capacity(cap_pq);
    check_capacity(cap_qp);
    arcs_.push_back({q, cap_pq});
    arcs_.push_back({p, cap_qp});
    return nlink_count() - 1;
}

void FlowGraph::add_tlink(NodeId p, double cap_s, double cap_t) {
    check_node(p);
    check_capacity(cap_s);
    check_capacity(cap_t);
    source_cap_[static_cast<std::size_t>(p)] += cap_s;
    sink_cap_[static_cast<std::size_t>(p)] += cap_t;
}

namespace {

// Outgoing arcs per node in insertion order (CSR).
struct Adjacency {
    std::vector<int> start;
    std::vector<int> arcs;

    explicit Adjacency(const FlowGraph& g) : start(static_cast<std::size_t>(g.node_count()) + 1, 0) {
        for (int a = 0; a < g.arc_count(); ++a) ++start[static_cast<std::size_t>(g.tail(a)) + 1];
        for (std::size_t i = 1; i < start.size(); ++i) start[i] += start[i - 1];
        arcs.resize(static_cast<std::size_t>(g.arc_count()));
        std::vector<int> fill(start.begin(), start.end() - 1);
        for (int a = 0; a < g.arc_count(); ++a) arcs[static_cast<std::size_t>(fill[static_cast<std::size_t>(g.tail(a))]++)] = a;
    }

    std::span<const int> out(int node) const {
        return std::span(arcs).subspan(static_cast<std::size_t>(start[static_cast<std::size_t>(node)]),
                                       static_cast<std::size_t>(start[static_cast<std::size_t>(node) + 1] -
                                                                start[static_cast<std::size_t>(node)]));
    }
};

void push_arc_flow(std::vector<double>& nlink_flow, int arc, double amount) {
    nlink_flow[static_cast<std::size_t>(arc >> 1)] += (arc & 1) ? -amount : amount;
}

// Labels by residual reachability from the source.
std::vector<Side> residual_sides(const FlowGraph& g, const Adjacency& adj, const std::vector<double>& residual,
                                 const std::vector<double>& source_residual) {
    const int n = g.node_count();
    std::vector<Side> side(static_cast<std::size_t>(n), Side::T);
    std::queue<int> queue;
    for (int i = 0; i < n; ++i) {
        if (source_residual[static_cast<std::size_t>(i)] > 0.0) {
            side[static_cast<std::size_t>(i)] = Side::S;
            queue.push(i);
        }
    }
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop();
        for (int a : adj.out(i)) {
            const int j = g.arc(a).head;
            if (residual[static_cast<std::size_t>(a)] > 0.0 && side[static_cast<std::size_t>(j)] == Side::T) {
                side[static_cast<std::size_t>(j)] = Side::S;
                queue.push(j);
            }
        }
    }
    return side;
}

[[noreturn]] void throw_unbounded() {
    throw Error(ErrorCode::UnboundedFlow, "an s-t path of infinite capacity exists; the flow is unbounded");
}

class BkSolver {
public:
    explicit BkSolver(const FlowGraph& g)
        : g_(g), adj_(g), n_(g.node_count()), residual_(static_cast<std::size_t>(g.arc_count())),
          rs_(static_cast<std::size_t>(n_)), rt_(static_cast<std::size_t>(n_)),
          parent_(static_cast<std::size_t>(n_), kNone), in_sink_(static_cast<std::size_t>(n_), 0),
          active_(static_cast<std::size_t>(n_), 0), ts_(static_cast<std::size_t>(n_), 0),
          dist_(static_cast<std::size_t>(n_), 0) {
        for (int a = 0; a < g.arc_count(); ++a) residual_[static_cast<std::size_t>(a)] = g.arc(a).capacity;
        result_.nlink_flow.assign(static_cast<std::size_t>(g.nlink_count()), 0.0);
        result_.source_flow.assign(static_cast<std::size_t>(n_), 0.0);
        result_.sink_flow.assign(static_cast<std::size_t>(n_), 0.0);
    }

    CutResult solve() {
        init_trees();
        for (;;) {
            const int i = next_active();
            if (i < 0) break;
            const int mid = grow(i);
            ++time_;
            if (mid < 0) continue;
            if (parent_[static_cast<std::size_t>(i)] != kNone && !active_[static_cast<std::size_t>(i)]) {
                active_[static_cast<std::size_t>(i)] = 1;
                queue_.push_front(i);
            }
            augment(mid);
            adopt();
        }
        result_.side = residual_sides(g_, adj_, residual_, rs_);
        return std::move(result_);
    }

private:
    static constexpr int kTerminal = -1;
    static constexpr int kOrphan = -2;
    static constexpr int kNone = -3;
    static constexpr int kInfiniteDist = std::numeric_limits<int>::max();

    int head(int a) const { return g_.arc(a).head; }
    std::size_t u(int i) const { return static_cast<std::size_t>(i); }

    void activate(int i) {
        if (!active_[u(i)]) {
            active_[u(i)] = 1;
            queue_.push_back(i);
        }
    }

    int next_active() {
        while (!queue_.empty()) {
            const int i = queue_.front();
            queue_.pop_front();
            active_[u(i)] = 0;
            if (parent_[u(i)] != kNone) return i;
        }
        return -1;
    }

    void init_trees() {
        for (int i = 0; i < n_; ++i) {
            double s = g_.source_capacity(i);
            double t = g_.sink_capacity(i);
            if (std::isinf(s) && std::isinf(t)) throw_unbounded();
            const double d = std::min(s, t);
            if (d > 0.0) {
                result_.flow_value += d;
                result_.source_flow[u(i)] += d;
                result_.sink_flow[u(i)] += d;
                s -= d;
                t -= d;
            }
            rs_[u(i)] = s;
            rt_[u(i)] = t;
            if (s > 0.0) {
                in_sink_[u(i)] = 0;
                parent_[u(i)] = kTerminal;
                dist_[u(i)] = 1;
                activate(i);
            } else if (t > 0.0) {
                in_sink_[u(i)] = 1;
                parent_[u(i)] = kTerminal;
                dist_[u(i)] = 1;
                activate(i);
            }
        }
    }

    // Expands the tree containing i; returns an S->T arc joining the trees or -1.
    int grow(int i) {
        const bool sink_tree = in_sink_[u(i)] != 0;
        for (int a : adj_.out(i)) {
            const double cap = sink_tree ? residual_[u(a ^ 1)] : residual_[u(a)];
            if (!(cap > 0.0)) continue;
            const int j = head(a);
            if (parent_[u(j)] == kNone) {
                in_sink_[u(j)] = sink_tree ? 1 : 0;
                parent_[u(j)] = a ^ 1;
                ts_[u(j)] = ts_[u(i)];
                dist_[u(j)] = dist_[u(i)] + 1;
                activate(j);
            } else if ((in_sink_[u(j)] != 0) != sink_tree) {
                return sink_tree ? (a ^ 1) : a;
            } else if (ts_[u(j)] <= ts_[u(i)] && dist_[u(j)] > dist_[u(i)]) {
                parent_[u(j)] = a ^ 1;
                ts_[u(j)] = ts_[u(i)];
                dist_[u(j)] = dist_[u(i)] + 1;
            }
        }
        return -1;
    }

    void make_orphan_front(int i) {
        parent_[u(i)] = kOrphan;
        orphans_.push_front(i);
    }

    void make_orphan_back(int i) {
        parent_[u(i)] = kOrphan;
        orphans_.push_back(i);
    }

    void augment(int mid) {
        double bottleneck = residual_[u(mid)];
        int i = head(mid ^ 1);
        for (;;) {
            const int a = parent_[u(i)];
            if (a == kTerminal) break;
            bottleneck = std::min(bottleneck, residual_[u(a ^ 1)]);
            i = head(a);
        }
        bottleneck = std::min(bottleneck, rs_[u(i)]);
        int j = head(mid);
        for (;;) {
            const int a = parent_[u(j)];
            if (a == kTerminal) break;
            bottleneck = std::min(bottleneck, residual_[u(a)]);
            j = head(a);
        }
        bottleneck = std::min(bottleneck, rt_[u(j)]);
        if (std::isinf(bottleneck)) throw_unbounded();

        residual_[u(mid)] -= bottleneck;
        residual_[u(mid ^ 1)] += bottleneck;
        push_arc_flow(result_.nlink_flow, mid, bottleneck);

        i = head(mid ^ 1);
        for (;;) {
            const int a = parent_[u(i)];
            if (a == kTerminal) break;
            residual_[u(a)] += bottleneck;
            residual_[u(a ^ 1)] -= bottleneck;
            push_arc_flow(result_.nlink_flow, a ^ 1, bottleneck);
            if (residual_[u(a ^ 1)] == 0.0) make_orphan_front(i);
            i = head(a);
        }
        rs_[u(i)] -= bottleneck;
        result_.source_flow[u(i)] += bottleneck;
        if (rs_[u(i)] == 0.0) make_orphan_front(i);

        j = head(mid);
        for (;;) {
            const int a = parent_[u(j)];
            if (a == kTerminal) break;
            residual_[u(a ^ 1)] += bottleneck;
            residual_[u(a)] -= bottleneck;
            push_arc_flow(result_.nlink_flow, a, bottleneck);
            if (residual_[u(a)] == 0.0) make_orphan_front(j);
            j = head(a);
        }
        rt_[u(j)] -= bottleneck;
        result_.sink_flow[u(j)] += bottleneck;
        if (rt_[u(j)] == 0.0) make_orphan_front(j);

        result_.flow_value += bottleneck;
    }

    // Distance from j to its tree terminal via valid parents, or kInfiniteDist
    // when the chain runs into an orphan. Marks the chain with the current time.
    int origin_distance(int j) {
        int d = 0;
        int k = j;
        for (;;) {
            if (ts_[u(k)] == time_) {
                d += dist_[u(k)];
                break;
            }
            const int a = parent_[u(k)];
            ++d;
            if (a == kTerminal) {
                ts_[u(k)] = time_;
                dist_[u(k)] = 1;
                break;
            }
            if (a == kOrphan) return kInfiniteDist;
            k = head(a);
        }
        int mark = d;
        for (k = j; ts_[u(k)] != time_; k = head(parent_[u(k)])) {
            ts_[u(k)] = time_;
            dist_[u(k)] = mark--;
        }
        return d;
    }

    void adopt() {
        while (!orphans_.empty()) {
            const int i = orphans_.front();
            orphans_.pop_front();
            const bool sink_tree = in_sink_[u(i)] != 0;

            int best_arc = -1;
            int best_dist = kInfiniteDist;
            for (int a : adj_.out(i)) {
                // Residual capacity on the arc that would carry flow along the new parent link.
                const double cap = sink_tree ? residual_[u(a)] : residual_[u(a ^ 1)];
                if (!(cap > 0.0)) continue;
                const int j = head(a);
                if ((in_sink_[u(j)] != 0) != sink_tree || parent_[u(j)] == kNone) continue;
                const int d = origin_distance(j);
                if (d < best_dist) {
                    best_dist = d;
                    best_arc = a;
                }
            }

            if (best_arc >= 0) {
                parent_[u(i)] = best_arc;
                ts_[u(i)] = time_;
                dist_[u(i)] = best_dist + 1;
                continue;
            }

            for (int a : adj_.out(i)) {
                const int j = head(a);
                if ((in_sink_[u(j)] != 0) != sink_tree || parent_[u(j)] == kNone) continue;
                const double cap = sink_tree ? residual_[u(a)] : residual_[u(a ^ 1)];
                if (cap > 0.0) activate(j);
                const int pa = parent_[u(j)];
                if (pa != kTerminal && pa != kOrphan && head(pa) == i) make_orphan_back(j);
            }
            parent_[u(i)] = kNone;
        }
    }

    const FlowGraph& g_;
    Adjacency adj_;
    int n_;
    std::vector<double> residual_;
    std::vector<double> rs_;
    std::vector<double> rt_;
    std::vector<int> parent_;
    std::vector<std::uint8_t> in_sink_;
    std::vector<std::uint8_t> active_;
    std::vector<int> ts_;
    std::vector<int> dist_;
    std::deque<int> queue_;
    std::deque<int> orphans_;
    int time_ = 0;
    CutResult result_;
};

}  // namespace

CutResult max_flow(const FlowGraph& g) { return BkSolver(g).solve(); }

CutResult augmenting_path_max_flow(const FlowGraph& g) {
    const int n = g.node_count();
    const Adjacency adj(g);
    std::vector<double> residual(static_cast<std::size_t>(g.arc_count()));
    for (int a = 0; a < g.arc_count(); ++a) residual[static_cast<std::size_t>(a)] = g.arc(a).capacity;
    std::vector<double> rs(static_cast<std::size_t>(n)), rt(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rs[static_cast<std::size_t>(i)] = g.source_capacity(i);
        rt[static_cast<std::size_t>(i)] = g.sink_capacity(i);
    }

    CutResult result;
    result.nlink_flow.assign(static_cast<std::size_t>(g.nlink_count()), 0.0);
    result.source_flow.assign(static_cast<std::size_t>(n), 0.0);
    result.sink_flow.assign(static_cast<std::size_t>(n), 0.0);

    constexpr int kUnseen = -2;
    constexpr int kFromSource = -1;
    std::vector<int> pred(static_cast<std::size_t>(n));
    for (;;) {
        std::fill(pred.begin(), pred.end(), kUnseen);
        std::queue<int> queue;
        for (int i = 0; i < n; ++i) {
            if (rs[static_cast<std::size_t>(i)] > 0.0) {
                pred[static_cast<std::size_t>(i)] = kFromSource;
                queue.push(i);
            }
        }
        int last = -1;
        while (!queue.empty() && last < 0) {
            const int i = queue.front();
            queue.pop();
            if (rt[static_cast<std::size_t>(i)] > 0.0) {
                last = i;
                break;
            }
            for (int a : adj.out(i)) {
                const int j = g.arc(a).head;
                if (residual[static_cast<std::size_t>(a)] > 0.0 && pred[static_cast<std::size_t>(j)] == kUnseen) {
                    pred[static_cast<std::size_t>(j)] = a;
                    queue.push(j);
                }
            }
        }
        if (last < 0) break;

        double bottleneck = rt[static_cast<std::size_t>(last)];
        int k = last;
        while (pred[static_cast<std::size_t>(k)] != kFromSource) {
            const int a = pred[static_cast<std::size_t>(k)];
            bottleneck = std::min(bottleneck, residual[static_cast<std::size_t>(a)]);
            k = g.tail(a);
        }
        bottleneck = std::min(bottleneck, rs[static_cast<std::size_t>(k)]);
        if (std::isinf(bottleneck)) throw_unbounded();

        rt[static_cast<std::size_t>(last)] -= bottleneck;
        result.sink_flow[static_cast<std::size_t>(last)] += bottleneck;
        k = last;
        while (pred[static_cast<std::size_t>(k)] != kFromSource) {
            const int a = pred[static_cast<std::size_t>(k)];
            residual[static_cast<std::size_t>(a)] -= bottleneck;
            residual[static_cast<std::size_t>(a ^ 1)] += bottleneck;
            push_arc_flow(result.nlink_flow, a, bottleneck);
            k = g.tail(a);
        }
        rs[static_cast<std::size_t>(k)] -= bottleneck;
        result.source_flow[static_cast<std::size_t>(k)] += bottleneck;
        result.flow_value += bottleneck;
    }
    result.side = residual_sides(g, adj, residual, rs);
    return result;
}

double cut_capacity(const FlowGraph& g, const std::vector<Side>& side) {
    if (static_cast<int>(side.size()) != g.node_count()) {
        throw Error(ErrorCode::DimensionMismatch, "labeling size does not match node count");
    }
    double total = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
        total += side[static_cast<std::size_t>(i)] == Side::S ? g.sink_capacity(i) : g.source_capacity(i);
    }
    for (int a = 0; a < g.arc_count(); ++a) {
        if (side[static_cast<std::size_t>(g.tail(a))] == Side::S && side[static_cast<std::size_t>(g.arc(a).head)] == Side::T) {
            total += g.arc(a).capacity;
        }
    }
    return total;
}

namespace {

std::string format_capacity(double c) {
    if (std::isinf(c)) return "inf";
    std::ostringstream os;
    os.precision(17);
    os << c;
    return os.str();
}

double parse_capacity(const std::string& token) {
    if (token == "inf") return kInfinite;
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw Error(ErrorCode::Format, "bad DIMACS capacity: " + token);
        return v;
    } catch (const std::logic_error&) {
        throw Error(ErrorCode::Format, "bad DIMACS capacity: " + token);
    }
}

}  // namespace

void write_dimacs(std::ostream& out, const FlowGraph& g) {
    const int n = g.node_count();
    int arcs = g.arc_count();
    for (int i = 0; i < n; ++i) {
        if (g.source_capacity(i) > 0.0) ++arcs;
        if (g.sink_capacity(i) > 0.0) ++arcs;
    }
    const int s = n + 1;
    const int t = n + 2;
    out << "p max " << n + 2 << ' ' << arcs << '\n';
    out << "n " << s << " s\n";
    out << "n " << t << " t\n";
    for (int i = 0; i < n; ++i) {
        if (g.source_capacity(i) > 0.0) out << "a " << s << ' ' << i + 1 << ' ' << format_capacity(g.source_capacity(i)) << '\n';
        if (g.sink_capacity(i) > 0.0) out << "a " << i + 1 << ' ' << t << ' ' << format_capacity(g.sink_capacity(i)) << '\n';
    }
    for (int a = 0; a < g.arc_count(); ++a) {
        out << "a " << g.tail(a) + 1 << ' ' << g.arc(a).head + 1 << ' ' << format_capacity(g.arc(a).capacity) << '\n';
    }
}

FlowGraph read_dimacs(std::istream& in) {
    FlowGraph g;
    int total_nodes = -1;
    int s = -1;
    int t = -1;
    std::string line;
    struct RawArc {
        int u, v;
        double cap;
    };
    std::vector<RawArc> raw;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind) || kind == "c") continue;
        if (kind == "p") {
            std::string problem;
            int arcs = 0;
            if (!(ls >> problem >> total_nodes >> arcs) || problem != "max" || total_nodes < 2) {
                throw Error(ErrorCode::Format, "bad DIMACS problem line");
            }
        } else if (kind == "n") {
            int id = 0;
            std::string which;
            if (!(ls >> id >> which)) throw Error(ErrorCode::Format, "bad DIMACS node line");
            (which == "s" ? s : t) = id;
        } else if (kind == "a") {
            RawArc a{};
            std::string cap;
            if (!(ls >> a.u >> a.v >> cap)) throw Error(ErrorCode::Format, "bad DIMACS arc line");
            a.cap = parse_capacity(cap);
            raw.push_back(a);
        } else {
            throw Error(ErrorCode::Format, "unknown DIMACS line: " + line);
        }
    }
    if (total_nodes < 2 || s < 1 || t < 1 || s == t) throw Error(ErrorCode::Format, "DIMACS terminals missing");

    // Non-terminal ids keep their relative order.
    std::vector<int> remap(static_cast<std::size_t>(total_nodes) + 1, -1);
    for (int id = 1; id <= total_nodes; ++id) {
        if (id != s && id != t) remap[static_cast<std::size_t>(id)] = g.add_node();
    }
    for (const auto& a : raw) {
        if (a.u < 1 || a.v < 1 || a.u > total_nodes || a.v > total_nodes) {
            throw Error(ErrorCode::Format, "DIMACS arc endpoint out of range");
        }
        if (a.u == s && a.v != t) {
            g.add_tlink(remap[static_cast<std::size_t>(a.v)], a.cap, 0.0);
        } else if (a.v == t && a.u != s) {
            g.add_tlink(remap[static_cast<std::size_t>(a.u)], 0.0, a.cap);
        } else if (a.u != s && a.u != t && a.v != s && a.v != t) {
            g.add_nlink(remap[static_cast<std::size_t>(a.u)], remap[static_cast<std::size_t>(a.v)], a.cap, 0.0);
        } else {
            throw Error(ErrorCode::Format, "unsupported DIMACS arc touching terminals");
        }
    }
    return g;
}

}  // namespace kseg
