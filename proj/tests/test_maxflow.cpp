#include "kseg/error.hpp"
#include "kseg/maxflow.hpp"
#include "kseg/rng.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <sstream>

using namespace kseg;

namespace {

struct RandomGraph {
    FlowGraph g;
};

FlowGraph random_graph(Rng& rng) {
    FlowGraph g;
    const int n = 1 + static_cast<int>(rng.uniform() * 8);
    g.add_nodes(n);
    for (int p = 0; p < n; ++p) {
        g.add_tlink(p, std::floor(rng.uniform() * 11), std::floor(rng.uniform() * 11));
    }
    if (n >= 2) {
        const int pairs = static_cast<int>(rng.uniform() * 9);  // <= 16 arcs
        for (int k = 0; k < pairs; ++k) {
            const int p = static_cast<int>(rng.uniform() * n);
            int q = static_cast<int>(rng.uniform() * (n - 1));
            if (q >= p) ++q;
            g.add_nlink(p, q, std::floor(rng.uniform() * 11), std::floor(rng.uniform() * 11));
        }
    }
    return g;
}

double brute_force_min_cut(const FlowGraph& g) {
    const int n = g.node_count();
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<Side> side(static_cast<std::size_t>(n));
        for (int p = 0; p < n; ++p) side[static_cast<std::size_t>(p)] = (mask >> p) & 1 ? Side::S : Side::T;
        best = std::min(best, cut_capacity(g, side));
    }
    return best;
}

void expect_conservation(const FlowGraph& g, const CutResult& r) {
    std::vector<double> balance(static_cast<std::size_t>(g.node_count()), 0.0);
    for (int p = 0; p < g.node_count(); ++p) {
        balance[static_cast<std::size_t>(p)] += r.source_flow[static_cast<std::size_t>(p)] - r.sink_flow[static_cast<std::size_t>(p)];
        EXPECT_LE(r.source_flow[static_cast<std::size_t>(p)], g.source_capacity(p) + 1e-9);
        EXPECT_LE(r.sink_flow[static_cast<std::size_t>(p)], g.sink_capacity(p) + 1e-9);
    }
    for (int k = 0; k < g.nlink_count(); ++k) {
        const int p = g.tail(2 * k);
        const int q = g.arc(2 * k).head;
        const double f = r.nlink_flow[static_cast<std::size_t>(k)];
        EXPECT_LE(f, g.arc(2 * k).capacity + 1e-9);
        EXPECT_LE(-f, g.arc(2 * k + 1).capacity + 1e-9);
        balance[static_cast<std::size_t>(p)] -= f;
        balance[static_cast<std::size_t>(q)] += f;
    }
    for (double b : balance) EXPECT_NEAR(b, 0.0, 1e-9);
}

}  // namespace

TEST(FlowGraph, ConstructionAndErrors) {
    FlowGraph g;
    EXPECT_EQ(g.add_node(), 0);
    EXPECT_EQ(g.add_nodes(3), 1);
    EXPECT_EQ(g.node_count(), 4);
    EXPECT_EQ(g.add_nlink(0, 1, 2, 3), 0);
    EXPECT_EQ(g.tail(0), 0);
    EXPECT_EQ(g.tail(1), 1);
    g.add_tlink(2, 1, 2);
    g.add_tlink(2, 3, 4);
    EXPECT_EQ(g.source_capacity(2), 4);
    EXPECT_EQ(g.sink_capacity(2), 6);
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    EXPECT_EQ(code_of([&] { g.add_nlink(0, 9, 1, 1); }), ErrorCode::InvalidNode);
    EXPECT_EQ(code_of([&] { g.add_nlink(1, 1, 1, 1); }), ErrorCode::InvalidNode);
    EXPECT_EQ(code_of([&] { g.add_tlink(-1, 1, 1); }), ErrorCode::InvalidNode);
    EXPECT_THROW(g.add_tlink(0, -1, 0), Error);
}

TEST(MaxFlow, InfiniteSourceSeedIsAlwaysS) {
    FlowGraph g;
    g.add_nodes(2);
    g.add_tlink(0, kInfinite, 0);
    g.add_tlink(1, 0, 4);
    g.add_nlink(0, 1, 3, 3);
    const CutResult r = max_flow(g);
    EXPECT_EQ(r.side[0], Side::S);
    EXPECT_EQ(r.flow_value, 3);
}

TEST(MaxFlow, ZeroCapacityLinkNeverCarriesFlow) {
    FlowGraph g;
    g.add_nodes(2);
    g.add_tlink(0, 5, 0);
    g.add_tlink(1, 0, 5);
    g.add_nlink(0, 1, 0, 0);
    const CutResult r = max_flow(g);
    EXPECT_EQ(r.flow_value, 0);
    EXPECT_EQ(r.nlink_flow[0], 0);
}

TEST(MaxFlow, TwoSeedsSeparatedByOneLink) {
    FlowGraph g;
    g.add_nodes(2);
    g.add_tlink(0, kInfinite, 0);
    g.add_tlink(1, 0, kInfinite);
    g.add_nlink(0, 1, 5, 5);
    const CutResult r = max_flow(g);
    EXPECT_EQ(r.flow_value, 5);
    EXPECT_EQ(r.side[0], Side::S);
    EXPECT_EQ(r.side[1], Side::T);
}

TEST(MaxFlow, Diamond) {
    FlowGraph g;
    const int a = g.add_node();
    const int b = g.add_node();
    g.add_tlink(a, 3, 2);
    g.add_tlink(b, 2, 3);
    g.add_nlink(a, b, 1, 0);
    EXPECT_EQ(max_flow(g).flow_value, 5);
    EXPECT_EQ(brute_force_min_cut(g), 5);
}

TEST(MaxFlow, SingleNodeAndEmptyGraph) {
    FlowGraph g;
    g.add_node();
    g.add_tlink(0, 3, 1);
    const CutResult r = max_flow(g);
    EXPECT_EQ(r.flow_value, 1);
    EXPECT_EQ(r.side[0], Side::S);
    EXPECT_EQ(max_flow(FlowGraph{}).flow_value, 0);
}

TEST(MaxFlow, IsolatedNodeDefaultsToT) {
    FlowGraph g;
    g.add_nodes(2);
    g.add_tlink(0, 1, 0);
    EXPECT_EQ(max_flow(g).side[1], Side::T);
}

TEST(MaxFlow, UnboundedFlowIsReported) {
    FlowGraph g;
    g.add_nodes(2);
    g.add_tlink(0, kInfinite, 0);
    g.add_tlink(1, 0, kInfinite);
    g.add_nlink(0, 1, kInfinite, 0);
    try {
        max_flow(g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnboundedFlow);
    }
    FlowGraph h;
    h.add_node();
    h.add_tlink(0, kInfinite, kInfinite);
    EXPECT_THROW(max_flow(h), Error);
}

TEST(MaxFlow, RandomGraphsMatchExhaustiveCut) {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const FlowGraph g = random_graph(rng);
        const CutResult r = max_flow(g);
        const double oracle = brute_force_min_cut(g);
        ASSERT_EQ(r.flow_value, oracle) << "trial " << trial;
        EXPECT_EQ(cut_capacity(g, r.side), r.flow_value);
        EXPECT_EQ(augmenting_path_max_flow(g).flow_value, oracle);
        expect_conservation(g, r);
        EXPECT_EQ(max_flow(g).side, r.side);
    }
}

TEST(MaxFlow, RealCapacitiesLargerGrids) {
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        FlowGraph g;
        const int w = 12, h = 9;
        g.add_nodes(w * h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int p = y * w + x;
                if (x + 1 < w) g.add_nlink(p, p + 1, rng.uniform(), rng.uniform());
                if (y + 1 < h) g.add_nlink(p, p + w, rng.uniform(), rng.uniform());
                if (x == 0) g.add_tlink(p, kInfinite, 0);
                else if (x == w - 1) g.add_tlink(p, 0, kInfinite);
                else g.add_tlink(p, rng.uniform() * 0.3, rng.uniform() * 0.3);
            }
        const CutResult r = max_flow(g);
        const CutResult ref = augmenting_path_max_flow(g);
        EXPECT_NEAR(r.flow_value, ref.flow_value, 1e-9);
        EXPECT_NEAR(cut_capacity(g, r.side), r.flow_value, 1e-9);
        expect_conservation(g, r);
    }
}

TEST(Dimacs, RoundTrip) {
    FlowGraph g;
    g.add_nodes(3);
    g.add_tlink(0, kInfinite, 0);
    g.add_tlink(2, 0, 4.5);
    g.add_nlink(0, 1, 2, 1);
    g.add_nlink(1, 2, 3, 0);
    std::stringstream ss;
    write_dimacs(ss, g);
    EXPECT_NE(ss.str().find("inf"), std::string::npos);
    const FlowGraph back = read_dimacs(ss);
    EXPECT_EQ(back.node_count(), 3);
    EXPECT_EQ(max_flow(back).flow_value, max_flow(g).flow_value);
    EXPECT_EQ(max_flow(back).side, max_flow(g).side);
}
