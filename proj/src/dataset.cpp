#include "fanns/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "fanns/simd/l2.hpp"

namespace fanns {

namespace {

std::vector<LabelId> sorted_unique(std::vector<LabelId> ls) {
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    return ls;
}

}  // namespace

Attribute Attribute::label_set(std::vector<LabelId> ls) {
    return Attribute{AttrKind::LabelSet, sorted_unique(std::move(ls)), 0.0};
}

FilterConstraint FilterConstraint::containment(std::vector<LabelId> ls) {
    return FilterConstraint{PredicateKind::Containment, sorted_unique(std::move(ls)), 0.0, 0.0};
}

FilterConstraint FilterConstraint::equality(std::vector<LabelId> ls) {
    return FilterConstraint{PredicateKind::Equality, sorted_unique(std::move(ls)), 0.0, 0.0};
}

FilterConstraint FilterConstraint::range(double lo, double hi) {
    if (!(lo <= hi)) throw FormatError("range constraint requires lo <= hi");
    return FilterConstraint{PredicateKind::Range, {}, lo, hi};
}

const char* predicate_kind_name(PredicateKind k) {
    switch (k) {
        case PredicateKind::Containment: return "containment";
        case PredicateKind::Equality: return "equality";
        case PredicateKind::Range: return "range";
    }
    return "unknown";
}

AttributedDataset AttributedDataset::with_numeric(std::vector<float> vectors, std::size_t dim,
                                                  std::vector<double> values) {
    if (dim == 0) throw FormatError("dataset dim must be positive");
    if (vectors.size() != values.size() * dim)
        throw FormatError("vector buffer size does not match attribute count");
    AttributedDataset ds;
    ds.n_ = values.size();
    ds.dim_ = dim;
    ds.kind_ = AttrKind::Numeric;
    ds.vectors_ = std::move(vectors);
    ds.numeric_ = std::move(values);
    return ds;
}

AttributedDataset AttributedDataset::with_labels(std::vector<float> vectors, std::size_t dim,
                                                 std::vector<std::vector<LabelId>> labels) {
    if (dim == 0) throw FormatError("dataset dim must be positive");
    if (vectors.size() != labels.size() * dim)
        throw FormatError("vector buffer size does not match attribute count");
    AttributedDataset ds;
    ds.n_ = labels.size();
    ds.dim_ = dim;
    ds.kind_ = AttrKind::LabelSet;
    ds.vectors_ = std::move(vectors);
    ds.labels_.resize(ds.n_);
    for (std::size_t i = 0; i < ds.n_; ++i) ds.labels_[i] = sorted_unique(std::move(labels[i]));
    return ds;
}

double AttributedDataset::numeric(NodeId i) const {
    if (kind_ != AttrKind::Numeric) throw AttributeKindError("dataset holds label attributes");
    return numeric_[i];
}

const std::vector<LabelId>& AttributedDataset::labels(NodeId i) const {
    if (kind_ != AttrKind::LabelSet) throw AttributeKindError("dataset holds numeric attributes");
    return labels_[i];
}

Attribute AttributedDataset::attribute(NodeId i) const {
    if (kind_ == AttrKind::Numeric) return Attribute::numeric(numeric_[i]);
    Attribute a;
    a.kind = AttrKind::LabelSet;
    a.labels = labels_[i];
    return a;
}

bool AttributedDataset::matches(NodeId i, const FilterConstraint& c) const {
    switch (c.kind) {
        case PredicateKind::Range:
            if (kind_ != AttrKind::Numeric)
                throw AttributeKindError("range predicate on label attributes");
            return numeric_[i] >= c.lo && numeric_[i] <= c.hi;
        case PredicateKind::Containment: {
            if (kind_ != AttrKind::LabelSet)
                throw AttributeKindError("containment predicate on numeric attributes");
            const auto& ls = labels_[i];
            return std::includes(ls.begin(), ls.end(), c.labels.begin(), c.labels.end());
        }
        case PredicateKind::Equality: {
            if (kind_ != AttrKind::LabelSet)
                throw AttributeKindError("equality predicate on numeric attributes");
            return labels_[i] == c.labels;
        }
    }
    return false;
}

float distance_sq(const float* a, const float* b, std::size_t d) {
    return simd::l2_sq(a, b, d);
}

float distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw DimensionMismatchError("distance on vectors of different dimension");
    return std::sqrt(simd::l2_sq(a.data(), b.data(), a.size()));
}

bool evaluate_predicate(const Attribute& attr, const FilterConstraint& c) {
    switch (c.kind) {
        case PredicateKind::Range:
            if (attr.kind != AttrKind::Numeric)
                throw AttributeKindError("range predicate on label attribute");
            return attr.value >= c.lo && attr.value <= c.hi;
        case PredicateKind::Containment:
            if (attr.kind != AttrKind::LabelSet)
                throw AttributeKindError("containment predicate on numeric attribute");
            return std::includes(attr.labels.begin(), attr.labels.end(), c.labels.begin(),
                                 c.labels.end());
        case PredicateKind::Equality:
            if (attr.kind != AttrKind::LabelSet)
                throw AttributeKindError("equality predicate on numeric attribute");
            return attr.labels == c.labels;
    }
    return false;
}

double global_selectivity(const AttributedDataset& ds, const FilterConstraint& c) {
    if (ds.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (NodeId i = 0; i < ds.size(); ++i)
        if (ds.matches(i, c)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

namespace {

struct WorstFirst {
    bool operator()(const Neighbor& a, const Neighbor& b) const { return neighbor_less(a, b); }
};

// Bounded top-k scan shared by the exact oracles below.
template <typename Admit>
std::vector<Neighbor> scan_top_k(const AttributedDataset& ds, const float* q, std::size_t k,
                                 Admit admit) {
    std::priority_queue<Neighbor, std::vector<Neighbor>, WorstFirst> heap;
    for (NodeId i = 0; i < ds.size(); ++i) {
        if (!admit(i)) continue;
        const Neighbor cand{i, distance_sq(q, ds.row(i), ds.dim())};
        if (heap.size() < k) {
            heap.push(cand);
        } else if (neighbor_less(cand, heap.top())) {
            heap.pop();
            heap.push(cand);
        }
    }
    std::vector<Neighbor> out(heap.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
        *it = heap.top();
        heap.pop();
    }
    for (auto& nb : out) nb.dist = std::sqrt(nb.dist);
    return out;
}

}  // namespace

double local_correlation(const AttributedDataset& ds, const FilteredQuery& q, int m) {
    if (q.vec.size() != ds.dim())
        throw DimensionMismatchError("query dimension does not match dataset");
    if (m <= 0) throw FormatError("local_correlation requires m >= 1");
    const std::size_t mm = std::min<std::size_t>(static_cast<std::size_t>(m), ds.size());
    if (mm == 0) return 0.0;
    const auto top = scan_top_k(ds, q.vec.data(), mm, [](NodeId) { return true; });
    std::size_t valid = 0;
    for (const auto& nb : top)
        if (ds.matches(nb.id, q.constraint)) ++valid;
    return static_cast<double>(valid) / static_cast<double>(top.size());
}

std::vector<Neighbor> brute_force_filtered_knn(const AttributedDataset& ds,
                                               const FilteredQuery& q) {
    if (q.vec.size() != ds.dim())
        throw DimensionMismatchError("query dimension does not match dataset");
    if (q.k <= 0) throw FormatError("k must be positive");
    return scan_top_k(ds, q.vec.data(), static_cast<std::size_t>(q.k),
                      [&](NodeId i) { return ds.matches(i, q.constraint); });
}

}  // namespace fanns
