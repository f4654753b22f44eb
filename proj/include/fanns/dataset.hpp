#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fanns/common.hpp"

namespace fanns {

enum class AttrKind { LabelSet, Numeric };

// Per-item attribute payload. Exactly one side is meaningful, chosen by kind.
struct Attribute {
    AttrKind kind = AttrKind::Numeric;
    std::vector<LabelId> labels;  // sorted, unique
    double value = 0.0;

    static Attribute label_set(std::vector<LabelId> ls);
    static Attribute numeric(double v) { return Attribute{AttrKind::Numeric, {}, v}; }
};

enum class PredicateKind { Containment, Equality, Range };

const char* predicate_kind_name(PredicateKind k);

// Containment/Equality operate on label sets, Range on numeric values.
// Range is closed on both ends.
struct FilterConstraint {
    PredicateKind kind = PredicateKind::Range;
    std::vector<LabelId> labels;
    double lo = 0.0;
    double hi = 0.0;

    static FilterConstraint containment(std::vector<LabelId> ls);
    static FilterConstraint equality(std::vector<LabelId> ls);
    static FilterConstraint range(double lo, double hi);
};

struct FilteredQuery {
    std::vector<float> vec;
    FilterConstraint constraint;
    int k = 10;
};

struct Neighbor {
    NodeId id = 0;
    float dist = 0.0f;
};

// (distance, id) lexicographic order used for every tie-break in the library.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
}

// Row-major float vectors plus one attribute column of uniform kind.
// Immutable after construction; concurrent reads are safe.
class AttributedDataset {
public:
    AttributedDataset() = default;

    static AttributedDataset with_numeric(std::vector<float> vectors, std::size_t dim,
                                          std::vector<double> values);
    static AttributedDataset with_labels(std::vector<float> vectors, std::size_t dim,
                                         std::vector<std::vector<LabelId>> labels);

    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }
    AttrKind attr_kind() const { return kind_; }

    const float* row(NodeId i) const { return vectors_.data() + static_cast<std::size_t>(i) * dim_; }
    std::span<const float> row_span(NodeId i) const { return {row(i), dim_}; }
    const std::vector<float>& raw_vectors() const { return vectors_; }

    double numeric(NodeId i) const;
    const std::vector<LabelId>& labels(NodeId i) const;
    Attribute attribute(NodeId i) const;

    // Predicate check against item i; throws AttributeKindError when the
    // constraint kind does not match the stored attribute kind.
    bool matches(NodeId i, const FilterConstraint& c) const;

private:
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    AttrKind kind_ = AttrKind::Numeric;
    std::vector<float> vectors_;
    std::vector<double> numeric_;
    std::vector<std::vector<LabelId>> labels_;
};

// True Euclidean distance through the dispatched kernel.
float distance(std::span<const float> a, std::span<const float> b);
float distance_sq(const float* a, const float* b, std::size_t d);

bool evaluate_predicate(const Attribute& attr, const FilterConstraint& c);

// Fraction of the dataset satisfying c (full scan).
double global_selectivity(const AttributedDataset& ds, const FilterConstraint& c);

// Fraction of the exact unfiltered top-m neighbors of q that satisfy the
// constraint. Ties break toward lower ids; m is clamped to the dataset size.
double local_correlation(const AttributedDataset& ds, const FilteredQuery& q, int m);

// Exact filtered top-k, ascending (distance, id). May return fewer than k
// rows when fewer items match.
std::vector<Neighbor> brute_force_filtered_knn(const AttributedDataset& ds,
                                               const FilteredQuery& q);

}  // namespace fanns
