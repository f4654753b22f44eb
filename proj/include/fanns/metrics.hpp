#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fanns/dataset.hpp"
#include "fanns/gbdt.hpp"
#include "fanns/graph.hpp"
#include "fanns/search.hpp"

namespace fanns {

// |results ∩ truth| / |truth|; an empty truth set counts as fully recalled.
double recall_at_k(std::span<const Neighbor> results, std::span<const NodeId> truth);

// Average ranks for ties (1-based midranks).
std::vector<double> average_ranks(std::span<const double> v);

// Rank correlation; empty when either side has zero rank variance.
std::optional<double> spearman_rho(std::span<const double> a, std::span<const double> b);

struct RegressionReport {
    std::size_t n = 0;
    double log_rmse = 0.0;
    std::optional<double> r2;        // empty when the target is constant
    std::optional<double> spearman;
};

// Both inputs already live in log space.
RegressionReport regression_report(std::span<const double> predicted,
                                   std::span<const double> target);

struct SweepConfig {
    TerminationPolicy::Kind kind = TerminationPolicy::Kind::FixedBudget;
    std::vector<double> knobs;  // beam widths, ndc budgets, or alpha values
    SearchMode mode = SearchMode::Post;
    double two_hop_threshold = 0.25;
    const BoostedTreesModel* model = nullptr;  // predicted runs only
    std::int64_t probe_f = 500;
    std::int64_t hard_cap = 0;
    int timing_runs = 3;
};

struct SweepRow {
    double knob = 0.0;
    double recall = 0.0;
    double mean_ndc = 0.0;
    std::vector<double> lat_ms;  // per timing run, per-query average
    double mean_latency_ms = 0.0;
};

// Runs every knob timing_runs times; recall and ndc come from the first run
// and the total ndc is required to be identical across runs.
std::vector<SweepRow> run_sweep(const ProximityGraph& g, const AttributedDataset& ds,
                                std::span<const FilteredQuery> queries,
                                const std::vector<std::vector<NodeId>>& truth,
                                const SweepConfig& cfg);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& config_hash);

struct MisalignmentReport {
    std::vector<double> sigma_global;  // predicate selectivity over the base
    std::vector<double> rho_local;     // valid fraction of the true top-m
    double mean_sigma = 0.0;
    double mean_rho = 0.0;
    std::optional<double> spearman;  // rank agreement between the two columns
};

MisalignmentReport misalignment_report(const AttributedDataset& ds,
                                       std::span<const FilteredQuery> queries, int m);

void write_misalignment_csv(const std::string& path, const MisalignmentReport& rep);

}  // namespace fanns
