#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fanns/dataset.hpp"

namespace fanns {

// Attribute value bounds for the range schemes.
inline constexpr double kAttrLo = 1.0;
inline constexpr double kAttrHi = 10000.0;

// Scheme names: independent-range, cluster-range, anti-range, mixed-range,
// independent-labels, cluster-labels. The *-range cluster schemes draw each
// item's attribute from its cluster's band; they differ only in where the
// query windows land (own band, antipodal band, or alternating).
struct WorkloadSpec {
    std::string scheme = "cluster-range";
    std::size_t base_n = 50000;
    std::size_t train_n = 20000;
    std::size_t eval_n = 1000;
    std::size_t dim = 32;
    std::size_t clusters = 16;
    double sigma = 0.05;
    std::vector<double> buckets{0.01, 0.05, 0.10, 0.20};
    int k = 10;
    std::uint64_t seed = 42;
    // "default" centers range windows per scheme; "uniform" drops them at
    // random ranks instead (stress mode for the range schemes).
    std::string placement = "default";
};

struct Workload {
    AttributedDataset base;
    std::vector<FilteredQuery> train;
    std::vector<FilteredQuery> eval;
    std::vector<std::uint32_t> base_cluster;
    std::vector<std::uint32_t> train_cluster;
    std::vector<std::uint32_t> eval_cluster;
    std::vector<float> centers;  // clusters x dim, diagnostics only
};

bool is_known_scheme(const std::string& scheme);

// Vectors depend only on seed/base_n/train_n/eval_n/dim/clusters/sigma, never
// on the scheme, so one graph built over the base serves every scheme.
Workload generate_workload(const WorkloadSpec& spec);

// Directory layout: base.fvecs, base.attrs.jsonl, {train,eval}.fvecs,
// {train,eval}.filters.jsonl, workload.json.
void save_workload(const Workload& w, const WorkloadSpec& spec, const std::string& dir);
WorkloadSpec load_workload_spec(const std::string& dir);
AttributedDataset load_workload_dataset(const std::string& dir);
std::vector<FilteredQuery> load_workload_queries(const std::string& dir, const std::string& split);

}  // namespace fanns
