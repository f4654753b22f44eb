#pragma once

#include <span>
#include <string>
#include <vector>

#include "fanns/dataset.hpp"
#include "fanns/gbdt.hpp"
#include "fanns/graph.hpp"
#include "fanns/search.hpp"

namespace fanns {

// Exact filtered k-nn per query via linear scan.
std::vector<std::vector<NodeId>> generate_ground_truth(const AttributedDataset& ds,
                                                       std::span<const FilteredQuery> queries);

struct HarvestParams {
    SearchMode mode = SearchMode::Post;
    std::int64_t probe_f = 500;
    double two_hop_threshold = 0.25;
    int threads = 1;  // queries are independent; row order stays by query
};

// One row per query: features snapshotted at the probe boundary plus the log
// of the full-recall cost, clamped from below to the boundary ndc. Flags mark
// clamping, disconnection, probe exhaustion and empty ground truth.
TrainingSet harvest_training_set(const ProximityGraph& g, const AttributedDataset& ds,
                                 std::span<const FilteredQuery> queries,
                                 const std::vector<std::vector<NodeId>>& truth,
                                 const HarvestParams& params);

// Zeroes the filter-derived columns and retags the schema with "+nofilter".
TrainingSet apply_filter_mask(const TrainingSet& ts);

void write_training_set_csv(const TrainingSet& ts, const std::string& path);
TrainingSet read_training_set_csv(const std::string& path);

}  // namespace fanns
