#include "fanns/search.hpp"

#include <algorithm>
#include <cmath>

#include "fanns/gbdt.hpp"
#include "fanns/simd/l2.hpp"

namespace fanns {

TerminationPolicy TerminationPolicy::fixed_budget(std::int64_t max_ndc) {
    TerminationPolicy p;
    p.kind = Kind::FixedBudget;
    p.max_ndc = max_ndc;
    return p;
}

TerminationPolicy TerminationPolicy::fixed_beam(int beam_width) {
    TerminationPolicy p;
    p.kind = Kind::FixedBeam;
    p.beam_width = beam_width;
    return p;
}

TerminationPolicy TerminationPolicy::predicted(const BoostedTreesModel* model,
                                               std::int64_t probe_f, double alpha) {
    TerminationPolicy p;
    p.kind = Kind::Predicted;
    p.model = model;
    p.probe_f = probe_f;
    p.alpha = alpha;
    return p;
}

namespace {

bool is_valid(SearchState& s, NodeId v) {
    if (!(s.flags[v] & kValidChecked)) {
        if (s.ds->matches(v, s.query->constraint)) s.flags[v] |= kValid;
        s.flags[v] |= kValidChecked;
    }
    return (s.flags[v] & kValid) != 0;
}

// Scores v exactly once: first the routing cache is consulted, then the
// kernel runs and the counter ticks. Marks the node inspected.
float score(SearchState& s, NodeId v) {
    if (s.flags[v] & kInspected) return s.dist_of[v];
    float d;
    const auto it = s.routing_cache.find(v);
    if (it != s.routing_cache.end()) {
        d = it->second;
    } else {
        d = simd::l2_sq(s.query->vec.data(), s.ds->row(v), s.ds->dim());
        s.cnt.tick(v);
    }
    s.dist_of[v] = d;
    s.flags[v] |= kInspected;
    ++s.inspected_total;
    if (is_valid(s, v)) ++s.inspected_valid;
    return d;
}

void result_insert(SearchState& s, const Scored& sc) {
    const bool kept = s.results.insert(sc);
    if (kept && s.track_truth && s.full_recall_ndc < 0 && !s.truth_sorted.empty() &&
        std::binary_search(s.truth_sorted.begin(), s.truth_sorted.end(), sc.id)) {
        if (++s.truth_hits == static_cast<std::int64_t>(s.truth_sorted.size()))
            s.full_recall_ndc = s.cnt.count;
    }
}

const auto queue_cmp = [](const Scored& a, const Scored& b) { return scored_less(b, a); };

void admit(SearchState& s, NodeId v) {
    s.flags[v] |= kAdmitted;
    const float d = score(s, v);
    s.queue.push_back({d, v});
    std::push_heap(s.queue.begin(), s.queue.end(), queue_cmp);
    ++s.admitted_total;
    if (is_valid(s, v)) {
        ++s.admitted_valid;
        result_insert(s, {d, v});
    }
}

void expand_post(SearchState& s, NodeId u) {
    for (const NodeId v : s.graph->neighbors(0, u))
        if (!(s.flags[v] & kAdmitted)) admit(s, v);
}

// Pre-filtering: every neighbor is inspected (scored and counted) but only
// valid ones join the queue. A mostly-invalid 1-hop list triggers a 2-hop
// sweep so the traversal can cross invalid regions.
void expand_pre(SearchState& s, NodeId u) {
    const auto nbrs = s.graph->neighbors(0, u);
    if (nbrs.empty()) return;
    std::size_t valid_count = 0;
    for (const NodeId v : nbrs) {
        score(s, v);
        if (is_valid(s, v)) {
            ++valid_count;
            if (!(s.flags[v] & kAdmitted)) admit(s, v);
        }
    }
    if (static_cast<double>(valid_count) <
        s.two_hop_threshold * static_cast<double>(nbrs.size())) {
        for (const NodeId v : nbrs) {
            for (const NodeId w : s.graph->neighbors(0, v)) {
                score(s, w);
                if (is_valid(s, w) && !(s.flags[w] & kAdmitted)) admit(s, w);
            }
        }
    }
}

}  // namespace

SearchState init_search(const ProximityGraph& g, const AttributedDataset& ds,
                        const FilteredQuery& q, SearchMode mode, std::size_t pool_cap,
                        double two_hop_threshold) {
    if (q.vec.size() != ds.dim())
        throw DimensionMismatchError("query dimension does not match dataset");
    if (g.n != ds.size()) throw DimensionMismatchError("graph size does not match dataset");
    if (q.k < 1) throw FormatError("k must be positive");

    SearchState s;
    s.graph = &g;
    s.ds = &ds;
    s.query = &q;
    s.mode = mode;
    s.two_hop_threshold = two_hop_threshold;
    s.results = BoundedHeap(pool_cap);
    s.flags.assign(g.n, 0);
    s.dist_of.resize(g.n);

    const RouteResult land = greedy_route(g, ds, q.vec.data(), s.cnt, &s.routing_cache);
    s.start_node = land.node;
    s.start_dist_sq = land.dist_sq;
    admit(s, land.node);  // the seed enters the queue regardless of the filter
    return s;
}

void enable_truth_tracking(SearchState& s, std::span<const NodeId> truth) {
    s.truth_sorted.assign(truth.begin(), truth.end());
    std::sort(s.truth_sorted.begin(), s.truth_sorted.end());
    s.track_truth = true;
    s.truth_hits = 0;
    s.full_recall_ndc = -1;
    if (s.truth_sorted.empty()) return;
    for (const Scored& sc : s.results.raw())
        if (std::binary_search(s.truth_sorted.begin(), s.truth_sorted.end(), sc.id))
            ++s.truth_hits;
    if (s.truth_hits == static_cast<std::int64_t>(s.truth_sorted.size()))
        s.full_recall_ndc = s.cnt.count;
}

void expand_until(SearchState& s, std::int64_t ndc_budget, bool distance_stop) {
    while (!s.queue.empty()) {
        if (s.cnt.count >= ndc_budget) break;
        if (s.stop_when_recall_complete && s.full_recall_ndc >= 0) break;
        const Scored head = s.queue.front();
        if (distance_stop && s.results.full() && scored_less(s.results.worst(), head)) break;
        std::pop_heap(s.queue.begin(), s.queue.end(), queue_cmp);
        s.queue.pop_back();
        ++s.hops;
        if (s.mode == SearchMode::Post)
            expand_post(s, head.id);
        else
            expand_pre(s, head.id);
    }
}

namespace {

SearchOutcome run_policy(const ProximityGraph& g, const AttributedDataset& ds,
                         const FilteredQuery& q, const TerminationPolicy& policy,
                         SearchMode mode) {
    std::size_t pool_cap = static_cast<std::size_t>(q.k);
    if (policy.kind == TerminationPolicy::Kind::FixedBeam)
        pool_cap = std::max<std::size_t>(pool_cap, static_cast<std::size_t>(policy.beam_width));

    SearchState s = init_search(g, ds, q, mode, pool_cap, policy.two_hop_threshold);
    SearchOutcome out;

    switch (policy.kind) {
        case TerminationPolicy::Kind::FixedBudget:
            expand_until(s, policy.max_ndc);
            break;
        case TerminationPolicy::Kind::FixedBeam:
            expand_until(s, policy.max_ndc, /*distance_stop=*/true);
            break;
        case TerminationPolicy::Kind::Predicted: {
            if (!policy.model && !policy.forced_budget)
                throw FormatError("predicted policy requires a model");
            const std::int64_t f = std::max<std::int64_t>(1, policy.probe_f);
            expand_until(s, f);
            s.probe_boundary_ndc = s.cnt.count;
            s.probe_exhausted = s.queue.empty();
            out.ndc_probe = s.cnt.count;

            FeatureSchema schema{mode, FeatureMask::None};
            if (policy.model) {
                schema = FeatureSchema::parse(policy.model->schema_id());
                if (schema.mode != mode)
                    throw SchemaMismatchError("model schema " + policy.model->schema_id() +
                                              " does not match search mode");
            }
            RuntimeFeatures feats = extract_features(s, schema.mask);

            std::int64_t budget;
            if (policy.forced_budget) {
                budget = *policy.forced_budget;
            } else {
                const std::int64_t cap =
                    policy.hard_cap > 0 ? policy.hard_cap : 64 * f;
                const double pred = policy.model->predict_checked(feats.values, feats.schema.id());
                double w = policy.alpha * std::exp(std::min(pred, 45.0));
                w = std::min(w, static_cast<double>(cap));
                budget = std::max<std::int64_t>(std::llround(w), s.cnt.count);
            }
            out.predicted_budget = budget;
            out.probe_features = std::move(feats);
            expand_until(s, budget);
            break;
        }
    }

    out.ndc_total = s.cnt.count;
    out.hops = s.hops;
    out.queue_exhausted = s.queue.empty();
    auto best = s.results.sorted();
    if (best.size() > static_cast<std::size_t>(q.k)) best.resize(static_cast<std::size_t>(q.k));
    out.results.reserve(best.size());
    for (const Scored& sc : best) out.results.push_back({sc.id, std::sqrt(sc.dist_sq)});
    if (policy.collect_visited) {
        for (NodeId v = 0; v < s.flags.size(); ++v)
            if (s.flags[v] & kAdmitted) out.visited.push_back(v);
    }
    return out;
}

}  // namespace

SearchOutcome post_filter_search(const ProximityGraph& g, const AttributedDataset& ds,
                                 const FilteredQuery& q, const TerminationPolicy& policy) {
    return run_policy(g, ds, q, policy, SearchMode::Post);
}

SearchOutcome pre_filter_search(const ProximityGraph& g, const AttributedDataset& ds,
                                const FilteredQuery& q, const TerminationPolicy& policy) {
    return run_policy(g, ds, q, policy, SearchMode::Pre);
}

FullRecallResult run_to_full_recall(const ProximityGraph& g, const AttributedDataset& ds,
                                    const FilteredQuery& q, std::span<const NodeId> truth) {
    SearchState s = init_search(g, ds, q, SearchMode::Post, static_cast<std::size_t>(q.k));
    enable_truth_tracking(s, truth);
    FullRecallResult out;
    if (s.truth_sorted.empty()) {
        expand_until(s, kUnlimitedNdc);
        out.w = s.cnt.count;
        out.empty_truth = true;
        return out;
    }
    s.stop_when_recall_complete = true;
    expand_until(s, kUnlimitedNdc);
    if (s.full_recall_ndc >= 0) {
        out.w = s.full_recall_ndc;
    } else {
        out.w = s.cnt.count;
        out.disconnected = true;
    }
    return out;
}

}  // namespace fanns
