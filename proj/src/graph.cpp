#include "fanns/graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "fanns/simd/l2.hpp"

namespace fanns {

bool BoundedHeap::insert(const Scored& s) {
    if (heap_.size() < cap_) {
        heap_.push_back(s);
        std::push_heap(heap_.begin(), heap_.end(), scored_less);
        return true;
    }
    if (cap_ == 0 || !scored_less(s, heap_.front())) return false;
    std::pop_heap(heap_.begin(), heap_.end(), scored_less);
    heap_.back() = s;
    std::push_heap(heap_.begin(), heap_.end(), scored_less);
    return true;
}

std::vector<Scored> BoundedHeap::sorted() const {
    std::vector<Scored> out = heap_;
    std::sort(out.begin(), out.end(), scored_less);
    return out;
}

double ProximityGraph::level_norm() const {
    return M > 1 ? 1.0 / std::log(static_cast<double>(M)) : 1.0;
}

std::span<const NodeId> ProximityGraph::neighbors(int layer, NodeId id) const {
    const Layer& L = layers[static_cast<std::size_t>(layer)];
    std::size_t idx;
    if (layer == 0) {
        idx = id;
    } else {
        const auto it = std::lower_bound(L.nodes.begin(), L.nodes.end(), id);
        if (it == L.nodes.end() || *it != id) return {};
        idx = static_cast<std::size_t>(it - L.nodes.begin());
    }
    return {L.adj.data() + L.offsets[idx], L.offsets[idx + 1] - L.offsets[idx]};
}

namespace {

float dsq(const AttributedDataset& ds, const float* q, NodeId v) {
    return simd::l2_sq(q, ds.row(v), ds.dim());
}

// Mutable adjacency plus the locking needed for parallel inserts. With one
// thread no lock is ever taken and insertion order is the id order, which
// makes the single-threaded build the determinism reference.
class GraphBuilder {
public:
    GraphBuilder(const AttributedDataset& ds, const BuildParams& p)
        : ds_(ds),
          p_(p),
          m_(std::max(2, p.M)),
          m0_(2 * std::max(2, p.M)),
          ef_(std::max(1, p.ef_construction)),
          parallel_(p.threads > 1),
          links_(ds.size()),
          locks_(ds.size()) {
        const double ml = 1.0 / std::log(static_cast<double>(m_));
        std::mt19937_64 rng(p.seed);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        levels_.resize(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double u = uni(rng);
            while (u <= 0.0) u = uni(rng);
            levels_[i] = static_cast<int>(std::floor(-std::log(u) * ml));
        }
    }

    ProximityGraph build() {
        const std::size_t n = ds_.size();
        if (n == 0) throw FormatError("cannot build graph on empty dataset");
        if (p_.threads <= 1) {
            Workspace ws(n);
            for (NodeId i = 0; i < n; ++i) insert(i, ws);
        } else {
            std::atomic<NodeId> next{0};
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(p_.threads));
            for (int t = 0; t < p_.threads; ++t) {
                pool.emplace_back([&] {
                    Workspace ws(n);
                    for (;;) {
                        const NodeId i = next.fetch_add(1);
                        if (i >= n) break;
                        insert(i, ws);
                    }
                });
            }
            for (auto& th : pool) th.join();
        }
        return finalize();
    }

private:
    struct Workspace {
        explicit Workspace(std::size_t n) : stamp(n, 0) {}
        std::vector<std::uint32_t> stamp;
        std::uint32_t epoch = 0;
    };

    std::vector<NodeId> neighbor_snapshot(NodeId u, int layer) {
        if (!parallel_) return links_[u][static_cast<std::size_t>(layer)];
        std::lock_guard<std::mutex> lk(locks_[u]);
        return links_[u][static_cast<std::size_t>(layer)];
    }

    std::vector<Scored> search_layer(const float* q, Scored seed, int layer, int ef,
                                     Workspace& ws) {
        if (++ws.epoch == 0) {
            std::fill(ws.stamp.begin(), ws.stamp.end(), 0);
            ws.epoch = 1;
        }
        ws.stamp[seed.id] = ws.epoch;
        std::vector<Scored> frontier{seed};
        const auto frontier_cmp = [](const Scored& a, const Scored& b) {
            return scored_less(b, a);
        };
        BoundedHeap pool(static_cast<std::size_t>(ef));
        pool.insert(seed);
        while (!frontier.empty()) {
            const Scored cur = frontier.front();
            if (pool.full() && scored_less(pool.worst(), cur)) break;
            std::pop_heap(frontier.begin(), frontier.end(), frontier_cmp);
            frontier.pop_back();
            for (const NodeId v : neighbor_snapshot(cur.id, layer)) {
                if (ws.stamp[v] == ws.epoch) continue;
                ws.stamp[v] = ws.epoch;
                const Scored cand{dsq(ds_, q, v), v};
                if (!pool.full() || scored_less(cand, pool.worst())) {
                    pool.insert(cand);
                    frontier.push_back(cand);
                    std::push_heap(frontier.begin(), frontier.end(), frontier_cmp);
                }
            }
        }
        return pool.sorted();
    }

    // Relative-proximity pruning: keep a candidate only if it is closer to
    // the query than to every neighbor already kept.
    std::vector<Scored> select_heuristic(const std::vector<Scored>& sorted, std::size_t target) {
        std::vector<Scored> sel;
        sel.reserve(target);
        for (const Scored& c : sorted) {
            if (sel.size() >= target) break;
            bool good = true;
            for (const Scored& s : sel) {
                if (dsq(ds_, ds_.row(c.id), s.id) < c.dist_sq) {
                    good = false;
                    break;
                }
            }
            if (good) sel.push_back(c);
        }
        return sel;
    }

    void add_reverse_link(NodeId s, int layer, NodeId nw, std::size_t cap) {
        std::unique_lock<std::mutex> lk(locks_[s], std::defer_lock);
        if (parallel_) lk.lock();
        auto& L = links_[s][static_cast<std::size_t>(layer)];
        if (std::find(L.begin(), L.end(), nw) != L.end()) return;
        if (L.size() < cap) {
            L.push_back(nw);
            return;
        }
        std::vector<Scored> cands;
        cands.reserve(L.size() + 1);
        for (const NodeId v : L) cands.push_back({dsq(ds_, ds_.row(s), v), v});
        cands.push_back({dsq(ds_, ds_.row(s), nw), nw});
        std::sort(cands.begin(), cands.end(), scored_less);
        const auto kept = select_heuristic(cands, cap);
        L.clear();
        for (const Scored& k : kept) L.push_back(k.id);
    }

    void insert(NodeId i, Workspace& ws) {
        const int lvl = levels_[i];
        links_[i].assign(static_cast<std::size_t>(lvl) + 1, {});

        NodeId cur;
        int top;
        {
            std::unique_lock<std::mutex> lk(entry_lock_, std::defer_lock);
            if (parallel_) lk.lock();
            if (!has_entry_) {
                entry_ = i;
                top_ = lvl;
                has_entry_ = true;
                return;
            }
            cur = entry_;
            top = top_;
        }

        float cur_d = dsq(ds_, ds_.row(i), cur);
        for (int l = top; l > lvl; --l) {
            for (;;) {
                Scored best{cur_d, cur};
                for (const NodeId v : neighbor_snapshot(cur, l)) {
                    const Scored cand{dsq(ds_, ds_.row(i), v), v};
                    if (scored_less(cand, best)) best = cand;
                }
                if (best.id == cur) break;
                cur = best.id;
                cur_d = best.dist_sq;
            }
        }

        for (int l = std::min(top, lvl); l >= 0; --l) {
            const auto cand = search_layer(ds_.row(i), Scored{cur_d, cur}, l, ef_, ws);
            const std::size_t cap = l == 0 ? m0_ : m_;
            const auto sel = select_heuristic(cand, m_);
            {
                std::unique_lock<std::mutex> lk(locks_[i], std::defer_lock);
                if (parallel_) lk.lock();
                auto& L = links_[i][static_cast<std::size_t>(l)];
                L.clear();
                for (const Scored& s : sel) L.push_back(s.id);
            }
            for (const Scored& s : sel) add_reverse_link(s.id, l, i, cap);
            if (!cand.empty()) {
                cur = cand.front().id;
                cur_d = cand.front().dist_sq;
            }
        }

        if (lvl > top) {
            std::unique_lock<std::mutex> lk(entry_lock_, std::defer_lock);
            if (parallel_) lk.lock();
            if (lvl > top_) {
                top_ = lvl;
                entry_ = i;
            }
        }
    }

    ProximityGraph finalize() {
        ProximityGraph g;
        g.n = static_cast<std::uint32_t>(ds_.size());
        g.dim = static_cast<std::uint32_t>(ds_.dim());
        g.M = static_cast<std::uint32_t>(m_);
        g.M0 = static_cast<std::uint32_t>(m0_);
        g.ef_construction = static_cast<std::uint32_t>(ef_);
        g.seed = p_.seed;
        g.entry_point = entry_;
        g.layers.resize(static_cast<std::size_t>(top_) + 1);
        for (int l = 0; l <= top_; ++l) {
            auto& layer = g.layers[static_cast<std::size_t>(l)];
            for (NodeId i = 0; i < g.n; ++i)
                if (levels_[i] >= l) layer.nodes.push_back(i);
            layer.offsets.reserve(layer.nodes.size() + 1);
            layer.offsets.push_back(0);
            for (const NodeId i : layer.nodes) {
                const auto& L = links_[i][static_cast<std::size_t>(l)];
                layer.adj.insert(layer.adj.end(), L.begin(), L.end());
                layer.offsets.push_back(static_cast<std::uint32_t>(layer.adj.size()));
            }
        }
        return g;
    }

    const AttributedDataset& ds_;
    BuildParams p_;
    std::size_t m_;
    std::size_t m0_;
    int ef_;
    bool parallel_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<NodeId>>> links_;
    std::vector<std::mutex> locks_;
    std::mutex entry_lock_;
    NodeId entry_ = 0;
    int top_ = -1;
    bool has_entry_ = false;
};

}  // namespace

ProximityGraph build_graph(const AttributedDataset& ds, const BuildParams& params) {
    if (params.M < 2) throw FormatError("M must be at least 2");
    if (params.ef_construction < 1) throw FormatError("ef_construction must be at least 1");
    GraphBuilder b(ds, params);
    return b.build();
}

RouteResult greedy_route(const ProximityGraph& g, const AttributedDataset& ds, const float* q,
                         NdcCounter& cnt, RoutingCache* cache) {
    if (g.n == 0) throw FormatError("empty graph");
    NodeId cur = g.entry_point;
    float cur_d = dsq(ds, q, cur);
    cnt.tick(cur);
    if (cache) cache->emplace(cur, cur_d);
    for (int l = g.top_layer(); l >= 1; --l) {
        for (;;) {
            Scored best{cur_d, cur};
            for (const NodeId v : g.neighbors(l, cur)) {
                if (cache && cache->count(v)) continue;
                const float d = dsq(ds, q, v);
                cnt.tick(v);
                if (cache) cache->emplace(v, d);
                const Scored cand{d, v};
                if (scored_less(cand, best)) best = cand;
            }
            if (best.id == cur) break;
            cur = best.id;
            cur_d = best.dist_sq;
        }
    }
    return {cur, cur_d};
}

BeamResult beam_search_unfiltered(const ProximityGraph& g, const AttributedDataset& ds,
                                  const float* q, int k, int beam_width, std::int64_t max_ndc) {
    if (k < 1) throw FormatError("k must be positive");
    NdcCounter cnt;
    RoutingCache cache;
    const RouteResult land = greedy_route(g, ds, q, cnt, &cache);

    const std::size_t pool_cap = std::max<std::size_t>(static_cast<std::size_t>(beam_width),
                                                       static_cast<std::size_t>(k));
    BoundedHeap pool(pool_cap);
    std::vector<Scored> frontier;
    const auto frontier_cmp = [](const Scored& a, const Scored& b) { return scored_less(b, a); };
    std::vector<std::uint8_t> visited(g.n, 0);

    const Scored seed{land.dist_sq, land.node};
    visited[seed.id] = 1;
    pool.insert(seed);
    frontier.push_back(seed);

    while (!frontier.empty() && cnt.count < max_ndc) {
        const Scored cur = frontier.front();
        if (pool.full() && scored_less(pool.worst(), cur)) break;
        std::pop_heap(frontier.begin(), frontier.end(), frontier_cmp);
        frontier.pop_back();
        for (const NodeId v : g.neighbors(0, cur.id)) {
            if (visited[v]) continue;
            visited[v] = 1;
            float d;
            const auto it = cache.find(v);
            if (it != cache.end()) {
                d = it->second;
            } else {
                d = dsq(ds, q, v);
                cnt.tick(v);
            }
            const Scored cand{d, v};
            if (!pool.full() || scored_less(cand, pool.worst())) {
                pool.insert(cand);
                frontier.push_back(cand);
                std::push_heap(frontier.begin(), frontier.end(), frontier_cmp);
            }
        }
    }

    auto best = pool.sorted();
    if (best.size() > static_cast<std::size_t>(k)) best.resize(static_cast<std::size_t>(k));
    BeamResult out;
    out.ndc = cnt.count;
    out.results.reserve(best.size());
    for (const Scored& s : best) out.results.push_back({s.id, std::sqrt(s.dist_sq)});
    return out;
}

namespace {

constexpr std::uint32_t kGraphMagic = 0x46475332u;  // "2SGF" little-endian
constexpr std::uint32_t kGraphVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_vec(std::ofstream& out, const std::vector<T>& v) {
    put(out, static_cast<std::uint32_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw FormatError(path + ": truncated graph file");
    return v;
}

template <typename T>
std::vector<T> get_vec(std::ifstream& in, const std::string& path) {
    const auto count = get<std::uint32_t>(in, path);
    std::vector<T> v(count);
    if (count > 0 && !in.read(reinterpret_cast<char*>(v.data()),
                              static_cast<std::streamsize>(count * sizeof(T))))
        throw FormatError(path + ": truncated graph file");
    return v;
}

}  // namespace

void save_graph(const std::string& path, const ProximityGraph& g) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    put(out, kGraphMagic);
    put(out, kGraphVersion);
    put(out, g.n);
    put(out, g.dim);
    put(out, g.M);
    put(out, g.M0);
    put(out, g.ef_construction);
    put(out, g.seed);
    put(out, static_cast<std::uint32_t>(g.layers.size()));
    for (const auto& layer : g.layers) {
        put_vec(out, layer.nodes);
        put_vec(out, layer.offsets);
        put_vec(out, layer.adj);
    }
    put(out, g.entry_point);
    if (!out) throw IoError("write failed: " + path);
}

ProximityGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    if (get<std::uint32_t>(in, path) != kGraphMagic)
        throw FormatError(path + ": not a graph file");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kGraphVersion)
        throw FormatError(path + ": unsupported graph version " + std::to_string(version));
    ProximityGraph g;
    g.n = get<std::uint32_t>(in, path);
    g.dim = get<std::uint32_t>(in, path);
    g.M = get<std::uint32_t>(in, path);
    g.M0 = get<std::uint32_t>(in, path);
    g.ef_construction = get<std::uint32_t>(in, path);
    g.seed = get<std::uint64_t>(in, path);
    const auto n_layers = get<std::uint32_t>(in, path);
    g.layers.resize(n_layers);
    for (auto& layer : g.layers) {
        layer.nodes = get_vec<NodeId>(in, path);
        layer.offsets = get_vec<std::uint32_t>(in, path);
        layer.adj = get_vec<NodeId>(in, path);
        if (layer.offsets.size() != layer.nodes.size() + 1 ||
            (layer.offsets.empty() ? 0 : layer.offsets.back()) != layer.adj.size())
            throw FormatError(path + ": inconsistent layer tables");
    }
    g.entry_point = get<NodeId>(in, path);
    return g;
}

std::size_t reachable_from_entry(const ProximityGraph& g) {
    if (g.n == 0) return 0;
    std::vector<std::uint8_t> seen(g.n, 0);
    std::vector<NodeId> stack{g.entry_point};
    seen[g.entry_point] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        ++count;
        for (const NodeId v : g.neighbors(0, u)) {
            if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
        }
    }
    return count;
}

}  // namespace fanns
