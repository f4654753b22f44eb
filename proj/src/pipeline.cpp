#include "fanns/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fanns {

std::vector<std::vector<NodeId>> generate_ground_truth(const AttributedDataset& ds,
                                                       std::span<const FilteredQuery> queries) {
    std::vector<std::vector<NodeId>> truth;
    truth.reserve(queries.size());
    for (const auto& q : queries) {
        const auto nn = brute_force_filtered_knn(ds, q);
        std::vector<NodeId> ids;
        ids.reserve(nn.size());
        for (const auto& n : nn) ids.push_back(n.id);
        truth.push_back(std::move(ids));
    }
    return truth;
}

TrainingSet harvest_training_set(const ProximityGraph& g, const AttributedDataset& ds,
                                 std::span<const FilteredQuery> queries,
                                 const std::vector<std::vector<NodeId>>& truth,
                                 const HarvestParams& params) {
    if (truth.size() != queries.size())
        throw FormatError("ground truth count does not match query count");
    const FeatureSchema schema{params.mode, FeatureMask::None};
    TrainingSet ts;
    ts.schema_id = schema.id();
    ts.feature_names = schema.names();
    const std::size_t nf = ts.feature_names.size();
    ts.x.resize(queries.size() * nf);
    ts.y.resize(queries.size());
    ts.flags.resize(queries.size());

    auto harvest_one = [&](std::size_t qi) {
        const FilteredQuery& q = queries[qi];
        SearchState s = init_search(g, ds, q, params.mode, static_cast<std::size_t>(q.k),
                                    params.two_hop_threshold);
        enable_truth_tracking(s, truth[qi]);

        expand_until(s, params.probe_f);
        s.probe_boundary_ndc = s.cnt.count;
        s.probe_exhausted = s.queue.empty();
        const RuntimeFeatures feats = extract_features(s, FeatureMask::None);

        std::uint32_t flags = 0;
        if (s.probe_exhausted) flags |= kRowProbeExhausted;

        std::int64_t w_raw;
        if (s.truth_sorted.empty()) {
            expand_until(s, kUnlimitedNdc);
            w_raw = s.cnt.count;
            flags |= kRowEmptyTruth;
        } else {
            s.stop_when_recall_complete = true;
            expand_until(s, kUnlimitedNdc);
            if (s.full_recall_ndc >= 0) {
                w_raw = s.full_recall_ndc;
            } else {
                w_raw = s.cnt.count;
                flags |= kRowDisconnected;
            }
        }
        const std::int64_t w = std::max(w_raw, s.probe_boundary_ndc);
        if (w_raw < s.probe_boundary_ndc) flags |= kRowClampedToProbe;

        std::copy(feats.values.begin(), feats.values.end(),
                  ts.x.begin() + static_cast<std::ptrdiff_t>(qi * nf));
        ts.y[qi] = std::log(static_cast<double>(w));
        ts.flags[qi] = flags;
    };

    const int workers = std::max(1, params.threads);
    if (workers == 1 || queries.size() < 2) {
        for (std::size_t qi = 0; qi < queries.size(); ++qi) harvest_one(qi);
        return ts;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex err_mu;
    std::exception_ptr first_error;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t qi = next.fetch_add(1);
                if (qi >= queries.size()) return;
                try {
                    harvest_one(qi);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return ts;
}

TrainingSet apply_filter_mask(const TrainingSet& ts) {
    const FeatureSchema schema = FeatureSchema::parse(ts.schema_id);
    if (schema.mask == FeatureMask::Filter)
        throw SchemaMismatchError("schema already masked: " + ts.schema_id);
    TrainingSet out = ts;
    const FeatureSchema masked{schema.mode, FeatureMask::Filter};
    out.schema_id = masked.id();
    const std::size_t nf = ts.feature_names.size();
    for (std::size_t f = 0; f < nf; ++f) {
        const std::string& name = ts.feature_names[f];
        if (name != "rho_pilot" && name != "rho_queue" && name != "rho_visited") continue;
        for (std::size_t r = 0; r < out.rows(); ++r) out.x[r * nf + f] = 0.0;
    }
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw FormatError(path + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

}  // namespace

void write_training_set_csv(const TrainingSet& ts, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << "# schema_id=" << ts.schema_id << '\n';
    for (const auto& name : ts.feature_names) out << name << ',';
    out << "log_w,flags\n";
    const std::size_t nf = ts.features();
    for (std::size_t r = 0; r < ts.rows(); ++r) {
        for (std::size_t f = 0; f < nf; ++f) out << format_double(ts.x[r * nf + f]) << ',';
        out << format_double(ts.y[r]) << ',' << ts.flags[r] << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

TrainingSet read_training_set_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# schema_id=", 0) != 0)
        throw FormatError(path + ":1: expected '# schema_id=' line");
    TrainingSet ts;
    ts.schema_id = line.substr(std::string("# schema_id=").size());

    if (!std::getline(in, line)) throw FormatError(path + ":2: missing header");
    auto header = split_csv(line);
    if (header.size() < 3 || header[header.size() - 2] != "log_w" || header.back() != "flags")
        throw FormatError(path + ":2: header must end with log_w,flags");
    header.resize(header.size() - 2);

    // Known schemas pin the column set; ad-hoc schemas keep the header as-is.
    try {
        const auto names = FeatureSchema::parse(ts.schema_id).names();
        if (names != header)
            throw FormatError(path + ":2: header does not match schema " + ts.schema_id);
    } catch (const SchemaMismatchError&) {
    }
    ts.feature_names = std::move(header);

    const std::size_t nf = ts.features();
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != nf + 2)
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(nf + 2) + " columns, got " +
                              std::to_string(cells.size()));
        for (std::size_t f = 0; f < nf; ++f)
            ts.x.push_back(parse_double(cells[f], path, line_no));
        ts.y.push_back(parse_double(cells[nf], path, line_no));
        const double fl = parse_double(cells[nf + 1], path, line_no);
        ts.flags.push_back(static_cast<std::uint32_t>(fl));
    }
    return ts;
}

}  // namespace fanns
