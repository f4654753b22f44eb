#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fanns/features.hpp"
#include "fanns/graph.hpp"

namespace fanns {

class BoostedTreesModel;

struct TerminationPolicy {
    enum class Kind { FixedBudget, FixedBeam, Predicted };
    Kind kind = Kind::FixedBudget;

    // FixedBudget: stop once ndc >= max_ndc.
    std::int64_t max_ndc = kUnlimitedNdc;

    // FixedBeam: bounded valid-candidate pool with a distance-based stop.
    int beam_width = 0;

    // Predicted: probe for probe_f ndc, then run to the model's budget
    // clamped to [ndc at boundary, hard_cap].
    const BoostedTreesModel* model = nullptr;
    std::int64_t probe_f = 500;
    double alpha = 1.0;
    std::int64_t hard_cap = 0;  // 0 means 64 * probe_f
    std::optional<std::int64_t> forced_budget;  // test hook, overrides the model

    bool collect_visited = false;
    double two_hop_threshold = 0.25;  // pre-filter fallback trigger

    static TerminationPolicy fixed_budget(std::int64_t max_ndc);
    static TerminationPolicy fixed_beam(int beam_width);
    static TerminationPolicy predicted(const BoostedTreesModel* model, std::int64_t probe_f,
                                       double alpha);
};

// Node flag bits inside SearchState.
inline constexpr std::uint8_t kInspected = 1;   // distance known
inline constexpr std::uint8_t kAdmitted = 2;    // pushed to the queue
inline constexpr std::uint8_t kValid = 4;
inline constexpr std::uint8_t kValidChecked = 8;

struct SearchState {
    const ProximityGraph* graph = nullptr;
    const AttributedDataset* ds = nullptr;
    const FilteredQuery* query = nullptr;
    SearchMode mode = SearchMode::Post;
    double two_hop_threshold = 0.25;

    std::vector<Scored> queue;  // min-heap over (dist_sq, id)
    BoundedHeap results;        // valid nodes only
    std::vector<std::uint8_t> flags;
    std::vector<float> dist_of;  // valid when kInspected is set
    RoutingCache routing_cache;
    NdcCounter cnt;

    NodeId start_node = 0;
    float start_dist_sq = 0.0f;
    std::int64_t hops = 0;

    // Ratio bookkeeping: admitted_* covers the queue-admitted set (rho_pilot),
    // inspected_* every scored node including pre-mode rejections (rho_visited).
    std::int64_t admitted_total = 0;
    std::int64_t admitted_valid = 0;
    std::int64_t inspected_total = 0;
    std::int64_t inspected_valid = 0;

    // Probe bookkeeping, set by the caller at the boundary.
    std::int64_t probe_boundary_ndc = -1;
    bool probe_exhausted = false;

    // Optional ground-truth tracking for W_q measurement.
    std::vector<NodeId> truth_sorted;
    bool track_truth = false;
    bool stop_when_recall_complete = false;
    std::int64_t truth_hits = 0;
    std::int64_t full_recall_ndc = -1;
};

// Phase 0: greedy routing plus unconditional seeding of the queue with the
// landing node. pool_cap bounds the valid result heap.
SearchState init_search(const ProximityGraph& g, const AttributedDataset& ds,
                        const FilteredQuery& q, SearchMode mode, std::size_t pool_cap,
                        double two_hop_threshold = 0.25);

void enable_truth_tracking(SearchState& s, std::span<const NodeId> truth);

// Pops and expands until ndc >= budget or the queue empties. The budget is
// checked at pop boundaries, so a node's neighbor list is never split.
// distance_stop additionally ends the search once the frontier head is
// worse than the worst pooled result (pool full).
void expand_until(SearchState& s, std::int64_t ndc_budget, bool distance_stop = false);

struct SearchOutcome {
    std::vector<Neighbor> results;
    std::int64_t ndc_total = 0;
    std::int64_t ndc_probe = 0;
    std::int64_t hops = 0;
    bool queue_exhausted = false;
    std::optional<std::int64_t> predicted_budget;
    std::optional<RuntimeFeatures> probe_features;
    std::vector<NodeId> visited;  // filled when policy.collect_visited
};

SearchOutcome post_filter_search(const ProximityGraph& g, const AttributedDataset& ds,
                                 const FilteredQuery& q, const TerminationPolicy& policy);

// Same two-phase structure, but only predicate-passing nodes are admitted to
// the queue (plus the seed) and expansion inspects 2-hop neighborhoods when
// fewer than two_hop_threshold of a popped node's 1-hop list is valid.
SearchOutcome pre_filter_search(const ProximityGraph& g, const AttributedDataset& ds,
                                const FilteredQuery& q, const TerminationPolicy& policy);

struct FullRecallResult {
    std::int64_t w = 0;
    bool disconnected = false;  // queue exhausted before the result covered the truth
    bool empty_truth = false;
};

// Unbounded post-filter expansion; w is the ndc at the first moment the
// result set covers the ground truth.
FullRecallResult run_to_full_recall(const ProximityGraph& g, const AttributedDataset& ds,
                                    const FilteredQuery& q, std::span<const NodeId> truth);

}  // namespace fanns
