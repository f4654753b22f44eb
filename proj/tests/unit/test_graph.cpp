#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "fanns/graph.hpp"

using namespace fanns;

namespace {

AttributedDataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    std::vector<float> vecs(n * dim);
    for (auto& x : vecs) x = u(rng);
    std::vector<double> attrs(n, 0.0);
    return AttributedDataset::with_numeric(std::move(vecs), dim, std::move(attrs));
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Exact unfiltered top-k by full scan, used as the recall reference.
std::vector<NodeId> exact_topk(const AttributedDataset& ds, const float* q, int k) {
    std::vector<std::pair<double, NodeId>> all;
    for (NodeId i = 0; i < ds.size(); ++i) {
        double acc = 0.0;
        const float* r = ds.row(i);
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            const double diff = static_cast<double>(r[j]) - static_cast<double>(q[j]);
            acc += diff * diff;
        }
        all.emplace_back(acc, i);
    }
    std::sort(all.begin(), all.end());
    std::vector<NodeId> ids;
    for (int i = 0; i < k; ++i) ids.push_back(all[static_cast<std::size_t>(i)].second);
    return ids;
}

}  // namespace

TEST_CASE("bounded heap keeps exactly the k best entries") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(0.0f, 10.0f);
    for (const std::size_t cap : {1u, 3u, 8u}) {
        BoundedHeap h(cap);
        std::vector<Scored> all;
        for (NodeId i = 0; i < 50; ++i) {
            const Scored s{u(rng), i};
            all.push_back(s);
            h.insert(s);
            CHECK(h.size() == std::min<std::size_t>(all.size(), cap));
        }
        std::sort(all.begin(), all.end(), scored_less);
        all.resize(cap);
        const auto got = h.sorted();
        REQUIRE(got.size() == cap);
        for (std::size_t i = 0; i < cap; ++i) {
            CHECK(got[i].id == all[i].id);
            CHECK(got[i].dist_sq == all[i].dist_sq);
        }
    }
}

TEST_CASE("bounded heap breaks ties by id") {
    BoundedHeap h(2);
    h.insert({1.0f, 9});
    h.insert({1.0f, 2});
    h.insert({1.0f, 5});
    const auto got = h.sorted();
    REQUIRE(got.size() == 2);
    CHECK(got[0].id == 2);
    CHECK(got[1].id == 5);
}

TEST_CASE("zero capacity heap accepts nothing") {
    BoundedHeap h(0);
    CHECK_FALSE(h.insert({1.0f, 0}));
    CHECK(h.empty());
}

TEST_CASE("greedy routing never pays for the same node twice") {
    const auto ds = random_dataset(800, 16, 5);
    const auto g = build_graph(ds, BuildParams{12, 80, 5, 1});
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (int t = 0; t < 20; ++t) {
        std::vector<float> q(16);
        for (auto& x : q) x = u(rng);
        std::set<NodeId> ticked;
        bool dup = false;
        std::function<void(NodeId)> obs = [&](NodeId id) {
            if (!ticked.insert(id).second) dup = true;
        };
        NdcCounter cnt;
        cnt.observer = &obs;
        RoutingCache cache;
        const auto land = greedy_route(g, ds, q.data(), cnt, &cache);
        CHECK_FALSE(dup);
        CHECK(cnt.count == static_cast<std::int64_t>(ticked.size()));
        // Every evaluated distance is retained for reuse on layer 0.
        CHECK(cache.size() == ticked.size());
        CHECK(cache.count(land.node) == 1);
        CHECK(land.dist_sq ==
              doctest::Approx(distance_sq(q.data(), ds.row(land.node), 16)).epsilon(1e-6));
        // The landing node is at least as close as the entry point.
        const float entry_d = distance_sq(q.data(), ds.row(g.entry_point), 16);
        CHECK(land.dist_sq <= entry_d + 1e-6f);
    }
}

TEST_CASE("degree caps hold on every layer") {
    const auto ds = random_dataset(600, 8, 9);
    BuildParams p;
    p.M = 6;
    p.ef_construction = 60;
    p.seed = 1;
    const auto g = build_graph(ds, p);
    CHECK(g.M == 6);
    CHECK(g.M0 == 12);
    for (std::size_t li = 0; li < g.layers.size(); ++li) {
        const auto& layer = g.layers[li];
        const std::uint32_t cap = li == 0 ? g.M0 : g.M;
        REQUIRE(layer.offsets.size() == layer.nodes.size() + 1);
        for (std::size_t i = 0; i + 1 < layer.offsets.size(); ++i)
            CHECK(layer.offsets[i + 1] - layer.offsets[i] <= cap);
    }
    // Layer 0 holds every node in id order.
    REQUIRE(g.layers[0].nodes.size() == 600);
    for (NodeId i = 0; i < 600; ++i) CHECK(g.layers[0].nodes[i] == i);
}

TEST_CASE("the base layer stays almost fully reachable") {
    const auto ds = random_dataset(1000, 16, 13);
    const auto g = build_graph(ds, BuildParams{16, 100, 13, 1});
    CHECK(reachable_from_entry(g) >= 950);
}

TEST_CASE("beam search recall beats 0.9 on random data") {
    const auto ds = random_dataset(1000, 16, 17);
    const auto g = build_graph(ds, BuildParams{16, 120, 17, 1});
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    double hit = 0.0, total = 0.0;
    for (int t = 0; t < 50; ++t) {
        std::vector<float> q(16);
        for (auto& x : q) x = u(rng);
        const auto want = exact_topk(ds, q.data(), 10);
        const auto got = beam_search_unfiltered(g, ds, q.data(), 10, 64);
        CHECK(got.ndc > 0);
        for (const auto& nb : got.results)
            if (std::find(want.begin(), want.end(), nb.id) != want.end()) hit += 1.0;
        total += 10.0;
    }
    CHECK(hit / total >= 0.9);
}

TEST_CASE("beam search respects an ndc budget") {
    const auto ds = random_dataset(500, 8, 19);
    const auto g = build_graph(ds, BuildParams{8, 60, 19, 1});
    std::vector<float> q(8, 0.1f);
    const auto out = beam_search_unfiltered(g, ds, q.data(), 5, 32, 40);
    CHECK(out.ndc <= 40 + g.M0);  // budget is checked at pop boundaries
}

TEST_CASE("identical build parameters give byte-identical graph files") {
    const auto ds = random_dataset(400, 8, 23);
    const BuildParams p{8, 50, 23, 1};
    const auto g1 = build_graph(ds, p);
    const auto g2 = build_graph(ds, p);
    save_graph("t_graph_a.bin", g1);
    save_graph("t_graph_b.bin", g2);
    CHECK(file_bytes("t_graph_a.bin") == file_bytes("t_graph_b.bin"));
    std::remove("t_graph_a.bin");
    std::remove("t_graph_b.bin");
}

TEST_CASE("graph files roundtrip and reject corruption") {
    const auto ds = random_dataset(200, 4, 29);
    const auto g = build_graph(ds, BuildParams{8, 40, 29, 1});
    save_graph("t_graph_rt.bin", g);
    const auto back = load_graph("t_graph_rt.bin");
    CHECK(back.n == g.n);
    CHECK(back.M == g.M);
    CHECK(back.M0 == g.M0);
    CHECK(back.entry_point == g.entry_point);
    REQUIRE(back.layers.size() == g.layers.size());
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
        CHECK(back.layers[i].nodes == g.layers[i].nodes);
        CHECK(back.layers[i].offsets == g.layers[i].offsets);
        CHECK(back.layers[i].adj == g.layers[i].adj);
    }

    // Flip the magic number.
    auto bytes = file_bytes("t_graph_rt.bin");
    bytes[0] = static_cast<char>(bytes[0] ^ 0xff);
    std::ofstream out("t_graph_bad.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS_AS(load_graph("t_graph_bad.bin"), FormatError);
    CHECK_THROWS_AS(load_graph("no/such/graph.bin"), IoError);
    std::remove("t_graph_rt.bin");
    std::remove("t_graph_bad.bin");
}

TEST_CASE("neighbor lists are valid node ids") {
    const auto ds = random_dataset(300, 4, 31);
    const auto g = build_graph(ds, BuildParams{8, 40, 31, 1});
    for (const auto& layer : g.layers)
        for (const NodeId nb : layer.adj) CHECK(nb < 300);
}
