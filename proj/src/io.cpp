#include "fanns/io.hpp"

#include <cstdint>
#include <fstream>

#include <json.hpp>

namespace fanns::io {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    return out;
}

}  // namespace

FloatMatrix read_fvecs(const std::string& path) {
    auto in = open_in(path);
    FloatMatrix m;
    std::int32_t d = 0;
    while (in.read(reinterpret_cast<char*>(&d), sizeof(d))) {
        if (d <= 0) throw FormatError(path + ": non-positive row dimension");
        if (m.dim == 0) m.dim = static_cast<std::size_t>(d);
        if (static_cast<std::size_t>(d) != m.dim)
            throw FormatError(path + ": inconsistent row dimensions");
        const std::size_t off = m.data.size();
        m.data.resize(off + m.dim);
        if (!in.read(reinterpret_cast<char*>(m.data.data() + off),
                     static_cast<std::streamsize>(m.dim * sizeof(float))))
            throw FormatError(path + ": truncated row");
        ++m.rows;
    }
    return m;
}

void write_fvecs(const std::string& path, const float* data, std::size_t rows, std::size_t dim) {
    auto out = open_out(path);
    const std::int32_t d = static_cast<std::int32_t>(dim);
    for (std::size_t i = 0; i < rows; ++i) {
        out.write(reinterpret_cast<const char*>(&d), sizeof(d));
        out.write(reinterpret_cast<const char*>(data + i * dim),
                  static_cast<std::streamsize>(dim * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
}

AttrColumn read_attributes_jsonl(const std::string& path) {
    auto in = open_in(path);
    AttrColumn col;
    bool kind_known = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const bool is_label = j.contains("labels");
        const bool is_value = j.contains("value");
        if (is_label == is_value)
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": expected exactly one of labels/value");
        if (!kind_known) {
            col.kind = is_label ? AttrKind::LabelSet : AttrKind::Numeric;
            kind_known = true;
        }
        if (is_label != (col.kind == AttrKind::LabelSet))
            throw FormatError(path + ":" + std::to_string(lineno) + ": mixed attribute kinds");
        if (is_label)
            col.labels.push_back(j.at("labels").get<std::vector<LabelId>>());
        else
            col.numeric.push_back(j.at("value").get<double>());
    }
    return col;
}

void write_attributes_jsonl(const std::string& path, const AttrColumn& col) {
    auto out = open_out(path);
    if (col.kind == AttrKind::LabelSet) {
        for (const auto& ls : col.labels) out << json{{"labels", ls}}.dump() << '\n';
    } else {
        for (const double v : col.numeric) out << json{{"value", v}}.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<FilterConstraint> read_filters_jsonl(const std::string& path) {
    auto in = open_in(path);
    std::vector<FilterConstraint> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "range") {
                out.push_back(FilterConstraint::range(j.at("l").get<double>(),
                                                      j.at("r").get<double>()));
            } else if (kind == "contain") {
                out.push_back(
                    FilterConstraint::containment(j.at("labels").get<std::vector<LabelId>>()));
            } else if (kind == "equal") {
                out.push_back(
                    FilterConstraint::equality(j.at("labels").get<std::vector<LabelId>>()));
            } else {
                throw FormatError(path + ":" + std::to_string(lineno) + ": unknown kind " + kind);
            }
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_filters_jsonl(const std::string& path, const std::vector<FilterConstraint>& filters) {
    auto out = open_out(path);
    for (const auto& f : filters) {
        json j;
        switch (f.kind) {
            case PredicateKind::Range:
                j["kind"] = "range";
                j["l"] = f.lo;
                j["r"] = f.hi;
                break;
            case PredicateKind::Containment:
                j["kind"] = "contain";
                j["labels"] = f.labels;
                break;
            case PredicateKind::Equality:
                j["kind"] = "equal";
                j["labels"] = f.labels;
                break;
        }
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_ground_truth(const std::string& path, const std::vector<std::vector<NodeId>>& truth) {
    auto out = open_out(path);
    for (const auto& ids : truth) {
        const std::uint32_t count = static_cast<std::uint32_t>(ids.size());
        out.write(reinterpret_cast<const char*>(&count), sizeof(count));
        out.write(reinterpret_cast<const char*>(ids.data()),
                  static_cast<std::streamsize>(ids.size() * sizeof(NodeId)));
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<std::vector<NodeId>> read_ground_truth(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::vector<NodeId>> truth;
    std::uint32_t count = 0;
    while (in.read(reinterpret_cast<char*>(&count), sizeof(count))) {
        std::vector<NodeId> ids(count);
        if (count > 0 &&
            !in.read(reinterpret_cast<char*>(ids.data()),
                     static_cast<std::streamsize>(count * sizeof(NodeId))))
            throw FormatError(path + ": truncated ground truth entry");
        truth.push_back(std::move(ids));
    }
    return truth;
}

AttributedDataset load_dataset(const std::string& vectors_path, const std::string& attrs_path) {
    auto m = read_fvecs(vectors_path);
    auto col = read_attributes_jsonl(attrs_path);
    if (col.size() != m.rows)
        throw FormatError("attribute count " + std::to_string(col.size()) +
                          " does not match vector count " + std::to_string(m.rows));
    if (col.kind == AttrKind::Numeric)
        return AttributedDataset::with_numeric(std::move(m.data), m.dim, std::move(col.numeric));
    return AttributedDataset::with_labels(std::move(m.data), m.dim, std::move(col.labels));
}

std::vector<FilteredQuery> load_queries(const std::string& vectors_path,
                                        const std::string& filters_path, int k) {
    auto m = read_fvecs(vectors_path);
    auto filters = read_filters_jsonl(filters_path);
    if (filters.size() != m.rows)
        throw FormatError("filter count does not match query vector count");
    std::vector<FilteredQuery> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        out[i].vec.assign(m.row(i), m.row(i) + m.dim);
        out[i].constraint = std::move(filters[i]);
        out[i].k = k;
    }
    return out;
}

}  // namespace fanns::io
