#pragma once

#include <string>
#include <vector>

#include "fanns/common.hpp"

namespace fanns {

struct SearchState;

enum class SearchMode { Post, Pre };

// Masking zeroes a feature group while keeping the row width fixed, so a
// model trained with a mask stays aligned with masked extraction.
enum class FeatureMask { None, Filter };

struct FeatureSchema {
    SearchMode mode = SearchMode::Post;
    FeatureMask mask = FeatureMask::None;

    std::string id() const;
    static FeatureSchema parse(const std::string& id);  // throws SchemaMismatchError
    std::vector<std::string> names() const;
    std::size_t size() const;

    bool operator==(const FeatureSchema&) const = default;
};

// One probe-boundary feature row. Values follow schema.names() order;
// statistics of an empty queue or result set are the sentinel -1.
struct RuntimeFeatures {
    FeatureSchema schema;
    std::vector<double> values;

    double at(const std::string& name) const;  // throws SchemaMismatchError on unknown name
};

inline constexpr double kFeatureSentinel = -1.0;
inline constexpr double kDistanceEpsilon = 1e-12;

// Nearest-rank percentile over an ascending list: element at rank ceil(p/100*n).
double nearest_rank_percentile(const std::vector<double>& ascending, double p);

// Population variance (divisor n, not n-1).
double population_variance(const std::vector<double>& xs);

// Snapshot of the search state at the probe boundary. Pure: the state is
// not mutated, so expansion can resume as if no extraction happened.
RuntimeFeatures extract_features(const SearchState& state, FeatureMask mask);

}  // namespace fanns
