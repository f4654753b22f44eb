#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fanns/dataset.hpp"

namespace fanns {

// Counts every distance evaluation; the optional observer is a test hook
// that must see exactly one call per counted evaluation.
struct NdcCounter {
    std::int64_t count = 0;
    const std::function<void(NodeId)>* observer = nullptr;

    void tick(NodeId id) {
        ++count;
        if (observer) (*observer)(id);
    }
};

// (squared distance, id); id breaks ties everywhere.
struct Scored {
    float dist_sq = 0.0f;
    NodeId id = 0;
};

inline bool scored_less(const Scored& a, const Scored& b) {
    if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
    return a.id < b.id;
}

// Fixed-capacity max-heap keeping the best (lowest) entries.
class BoundedHeap {
public:
    explicit BoundedHeap(std::size_t cap = 0) : cap_(cap) {}

    std::size_t capacity() const { return cap_; }
    std::size_t size() const { return heap_.size(); }
    bool full() const { return heap_.size() >= cap_; }
    bool empty() const { return heap_.empty(); }
    const Scored& worst() const { return heap_.front(); }
    const std::vector<Scored>& raw() const { return heap_; }

    // Returns true when the entry was kept.
    bool insert(const Scored& s);
    std::vector<Scored> sorted() const;

private:
    std::size_t cap_;
    std::vector<Scored> heap_;
};

struct BuildParams {
    int M = 16;
    int ef_construction = 200;
    std::uint64_t seed = 0;
    int threads = 1;
};

// Layered proximity graph. Layer 0 holds every node; upper layers hold the
// sampled subset, node lists sorted by id. Adjacency is CSR per layer.
struct ProximityGraph {
    std::uint32_t n = 0;
    std::uint32_t dim = 0;
    std::uint32_t M = 0;
    std::uint32_t M0 = 0;
    std::uint32_t ef_construction = 0;
    std::uint64_t seed = 0;
    NodeId entry_point = 0;

    struct Layer {
        std::vector<NodeId> nodes;
        std::vector<std::uint32_t> offsets;
        std::vector<NodeId> adj;
    };
    std::vector<Layer> layers;  // [0] is the base layer

    int top_layer() const { return static_cast<int>(layers.size()) - 1; }
    double level_norm() const;
    std::span<const NodeId> neighbors(int layer, NodeId id) const;
};

ProximityGraph build_graph(const AttributedDataset& ds, const BuildParams& params);

void save_graph(const std::string& path, const ProximityGraph& g);
ProximityGraph load_graph(const std::string& path);

// Distances already evaluated for this query (filled during routing);
// consulted before computing so no (query, node) pair is ever paid twice.
using RoutingCache = std::unordered_map<NodeId, float>;

struct RouteResult {
    NodeId node = 0;
    float dist_sq = 0.0f;
};

// Greedy descent over the upper layers; returns the base-layer landing node.
RouteResult greedy_route(const ProximityGraph& g, const AttributedDataset& ds, const float* q,
                         NdcCounter& cnt, RoutingCache* cache = nullptr);

struct BeamResult {
    std::vector<Neighbor> results;
    std::int64_t ndc = 0;
};

inline constexpr std::int64_t kUnlimitedNdc = std::numeric_limits<std::int64_t>::max();

// Best-first search over layer 0 with a bounded candidate pool; stops when
// the frontier head is worse than the pool's worst entry or the budget runs
// out. Filter-agnostic.
BeamResult beam_search_unfiltered(const ProximityGraph& g, const AttributedDataset& ds,
                                  const float* q, int k, int beam_width,
                                  std::int64_t max_ndc = kUnlimitedNdc);

// Nodes reachable from the entry point over directed layer-0 edges.
std::size_t reachable_from_entry(const ProximityGraph& g);

}  // namespace fanns
