#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fanns/dataset.hpp"

// File formats:
//   *.fvecs          per row: int32 dim (LE), dim float32 (LE)
//   attributes.jsonl one JSON object per line: {"labels":[...]} or {"value":x}
//   filters.jsonl    one JSON object per line: {"kind":"range","l":..,"r":..}
//                    or {"kind":"contain"|"equal","labels":[...]}
//   ground truth     per query: uint32 count (LE), count uint32 ids (LE)

namespace fanns::io {

struct FloatMatrix {
    std::vector<float> data;
    std::size_t rows = 0;
    std::size_t dim = 0;
    const float* row(std::size_t i) const { return data.data() + i * dim; }
};

FloatMatrix read_fvecs(const std::string& path);
void write_fvecs(const std::string& path, const float* data, std::size_t rows, std::size_t dim);

struct AttrColumn {
    AttrKind kind = AttrKind::Numeric;
    std::vector<double> numeric;
    std::vector<std::vector<LabelId>> labels;
    std::size_t size() const {
        return kind == AttrKind::Numeric ? numeric.size() : labels.size();
    }
};

AttrColumn read_attributes_jsonl(const std::string& path);
void write_attributes_jsonl(const std::string& path, const AttrColumn& col);

std::vector<FilterConstraint> read_filters_jsonl(const std::string& path);
void write_filters_jsonl(const std::string& path, const std::vector<FilterConstraint>& filters);

void write_ground_truth(const std::string& path, const std::vector<std::vector<NodeId>>& truth);
std::vector<std::vector<NodeId>> read_ground_truth(const std::string& path);

AttributedDataset load_dataset(const std::string& vectors_path, const std::string& attrs_path);

std::vector<FilteredQuery> load_queries(const std::string& vectors_path,
                                        const std::string& filters_path, int k);

}  // namespace fanns::io
