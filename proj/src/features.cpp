#include "fanns/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fanns/search.hpp"

namespace fanns {

std::string FeatureSchema::id() const {
    std::string s = mode == SearchMode::Post ? "post.v1" : "pre.v1";
    if (mask == FeatureMask::Filter) s += "+nofilter";
    return s;
}

FeatureSchema FeatureSchema::parse(const std::string& id) {
    FeatureSchema s;
    std::string base = id;
    if (const auto plus = id.find('+'); plus != std::string::npos) {
        const std::string suffix = id.substr(plus + 1);
        if (suffix != "nofilter") throw SchemaMismatchError("unknown schema mask: " + id);
        s.mask = FeatureMask::Filter;
        base = id.substr(0, plus);
    }
    if (base == "post.v1")
        s.mode = SearchMode::Post;
    else if (base == "pre.v1")
        s.mode = SearchMode::Pre;
    else
        throw SchemaMismatchError("unknown feature schema: " + id);
    return s;
}

std::vector<std::string> FeatureSchema::names() const {
    std::vector<std::string> n{"d_start", "n_hops", "rho_pilot", "rho_queue"};
    if (mode == SearchMode::Pre) n.push_back("rho_visited");
    for (const char* group : {"queue", "nn"}) {
        const std::string g = group;
        n.push_back("d_" + g + "_first");
        n.push_back("d_" + g + "_last");
        n.push_back("r_" + g + "_first");
        n.push_back("r_" + g + "_last");
        n.push_back("avg_" + g);
        n.push_back("var_" + g);
        n.push_back("perc_" + g + "_25");
        n.push_back("perc_" + g + "_50");
        n.push_back("perc_" + g + "_75");
    }
    return n;
}

std::size_t FeatureSchema::size() const { return mode == SearchMode::Pre ? 23 : 22; }

double RuntimeFeatures::at(const std::string& name) const {
    const auto names = schema.names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw SchemaMismatchError("unknown feature name: " + name);
}

double nearest_rank_percentile(const std::vector<double>& ascending, double p) {
    const auto n = static_cast<double>(ascending.size());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
    if (rank < 1) rank = 1;
    if (rank > ascending.size()) rank = ascending.size();
    return ascending[rank - 1];
}

double population_variance(const std::vector<double>& xs) {
    double sum = 0.0;
    for (const double x : xs) sum += x;
    const double avg = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (const double x : xs) ss += (x - avg) * (x - avg);
    return ss / static_cast<double>(xs.size());
}

namespace {

// first, last, r_first, r_last, avg, population var, p25, p50, p75
std::array<double, 9> group_stats(const std::vector<double>& xs, double d_start) {
    if (xs.empty()) {
        std::array<double, 9> out;
        out.fill(kFeatureSentinel);
        return out;
    }
    const double denom = std::max(d_start, kDistanceEpsilon);
    double sum = 0.0;
    for (const double x : xs) sum += x;
    const double avg = sum / static_cast<double>(xs.size());
    return {xs.front(),
            xs.back(),
            xs.front() / denom,
            xs.back() / denom,
            avg,
            population_variance(xs),
            nearest_rank_percentile(xs, 25),
            nearest_rank_percentile(xs, 50),
            nearest_rank_percentile(xs, 75)};
}

}  // namespace

RuntimeFeatures extract_features(const SearchState& state, FeatureMask mask) {
    RuntimeFeatures out;
    out.schema = FeatureSchema{state.mode, mask};

    const double d_start = std::sqrt(static_cast<double>(state.start_dist_sq));

    std::vector<Scored> queue_snapshot = state.queue;
    std::sort(queue_snapshot.begin(), queue_snapshot.end(), scored_less);
    std::vector<double> queue_d;
    queue_d.reserve(queue_snapshot.size());
    std::size_t queue_valid = 0;
    for (const Scored& sc : queue_snapshot) {
        queue_d.push_back(std::sqrt(static_cast<double>(sc.dist_sq)));
        if (state.flags[sc.id] & kValid) ++queue_valid;
    }

    std::vector<double> nn_d;
    for (const Scored& sc : state.results.sorted())
        nn_d.push_back(std::sqrt(static_cast<double>(sc.dist_sq)));

    const bool masked = mask == FeatureMask::Filter;
    double rho_pilot = state.admitted_total > 0 ? static_cast<double>(state.admitted_valid) /
                                                      static_cast<double>(state.admitted_total)
                                                : kFeatureSentinel;
    // In pre-filter mode the queue only ever holds predicate-passing nodes,
    // so the ratio is the structural constant 1 even when the queue is empty.
    double rho_queue;
    if (state.mode == SearchMode::Pre)
        rho_queue = 1.0;
    else
        rho_queue = queue_snapshot.empty() ? kFeatureSentinel
                                           : static_cast<double>(queue_valid) /
                                                 static_cast<double>(queue_snapshot.size());
    double rho_visited = state.inspected_total > 0
                             ? static_cast<double>(state.inspected_valid) /
                                   static_cast<double>(state.inspected_total)
                             : kFeatureSentinel;
    if (masked) {
        rho_pilot = 0.0;
        rho_queue = 0.0;
        rho_visited = 0.0;
    }

    out.values.reserve(out.schema.size());
    out.values.push_back(d_start);
    out.values.push_back(static_cast<double>(state.hops));
    out.values.push_back(rho_pilot);
    out.values.push_back(rho_queue);
    if (state.mode == SearchMode::Pre) out.values.push_back(rho_visited);
    for (const double v : group_stats(queue_d, d_start)) out.values.push_back(v);
    for (const double v : group_stats(nn_d, d_start)) out.values.push_back(v);
    return out;
}

}  // namespace fanns
