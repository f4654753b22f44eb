#include "fanns/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace fanns {

double recall_at_k(std::span<const Neighbor> results, std::span<const NodeId> truth) {
    if (truth.empty()) return 1.0;
    std::vector<NodeId> sorted(truth.begin(), truth.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t hits = 0;
    for (const auto& r : results)
        if (std::binary_search(sorted.begin(), sorted.end(), r.id)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = mid;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> spearman_rho(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw FormatError("spearman inputs differ in length");
    const std::size_t n = a.size();
    if (n < 2) return std::nullopt;
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(n);
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = ra[i] - ma;
        const double db = rb[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

RegressionReport regression_report(std::span<const double> predicted,
                                   std::span<const double> target) {
    if (predicted.size() != target.size())
        throw FormatError("regression report inputs differ in length");
    RegressionReport rep;
    rep.n = target.size();
    if (rep.n == 0) return rep;
    double sse = 0.0;
    double mean_t = std::accumulate(target.begin(), target.end(), 0.0) /
                    static_cast<double>(rep.n);
    double sst = 0.0;
    for (std::size_t i = 0; i < rep.n; ++i) {
        const double e = predicted[i] - target[i];
        sse += e * e;
        const double d = target[i] - mean_t;
        sst += d * d;
    }
    rep.log_rmse = std::sqrt(sse / static_cast<double>(rep.n));
    if (sst > 0.0) rep.r2 = 1.0 - sse / sst;
    rep.spearman = spearman_rho(predicted, target);
    return rep;
}

namespace {

TerminationPolicy policy_for(const SweepConfig& cfg, double knob) {
    TerminationPolicy p;
    switch (cfg.kind) {
        case TerminationPolicy::Kind::FixedBudget:
            p = TerminationPolicy::fixed_budget(static_cast<std::int64_t>(std::llround(knob)));
            break;
        case TerminationPolicy::Kind::FixedBeam:
            p = TerminationPolicy::fixed_beam(static_cast<int>(std::llround(knob)));
            break;
        case TerminationPolicy::Kind::Predicted:
            p = TerminationPolicy::predicted(cfg.model, cfg.probe_f, knob);
            p.hard_cap = cfg.hard_cap;
            break;
    }
    p.two_hop_threshold = cfg.two_hop_threshold;
    return p;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ProximityGraph& g, const AttributedDataset& ds,
                                std::span<const FilteredQuery> queries,
                                const std::vector<std::vector<NodeId>>& truth,
                                const SweepConfig& cfg) {
    if (truth.size() != queries.size())
        throw FormatError("ground truth count does not match query count");
    if (cfg.kind == TerminationPolicy::Kind::Predicted && cfg.model == nullptr)
        throw FormatError("predicted sweep needs a model");
    if (cfg.timing_runs < 1) throw FormatError("timing_runs must be positive");

    std::vector<SweepRow> rows;
    for (const double knob : cfg.knobs) {
        const TerminationPolicy policy = policy_for(cfg, knob);
        SweepRow row;
        row.knob = knob;
        std::int64_t ndc_first = 0;
        for (int run = 0; run < cfg.timing_runs; ++run) {
            std::int64_t ndc_sum = 0;
            double recall_sum = 0.0;
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                const SearchOutcome out =
                    cfg.mode == SearchMode::Post
                        ? post_filter_search(g, ds, queries[qi], policy)
                        : pre_filter_search(g, ds, queries[qi], policy);
                ndc_sum += out.ndc_total;
                if (run == 0) recall_sum += recall_at_k(out.results, truth[qi]);
            }
            const auto t1 = std::chrono::steady_clock::now();
            const double ms =
                std::chrono::duration<double, std::milli>(t1 - t0).count() /
                static_cast<double>(queries.empty() ? 1 : queries.size());
            row.lat_ms.push_back(ms);
            if (run == 0) {
                ndc_first = ndc_sum;
                row.recall = recall_sum / static_cast<double>(queries.empty() ? 1 : queries.size());
                row.mean_ndc = static_cast<double>(ndc_sum) /
                               static_cast<double>(queries.empty() ? 1 : queries.size());
            } else if (ndc_sum != ndc_first) {
                throw Error("non-deterministic ndc across timing runs");
            }
        }
        row.mean_latency_ms = std::accumulate(row.lat_ms.begin(), row.lat_ms.end(), 0.0) /
                              static_cast<double>(row.lat_ms.size());
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& config_hash) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << "# config_hash=" << config_hash << '\n';
    const std::size_t runs = rows.empty() ? 0 : rows.front().lat_ms.size();
    out << "knob,recall,mean_ndc";
    for (std::size_t r = 0; r < runs; ++r) out << ",lat_ms_run_" << r;
    out << ",mean_latency_ms\n";
    char buf[64];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
        out << buf;
    };
    for (const auto& row : rows) {
        put(row.knob, ',');
        put(row.recall, ',');
        put(row.mean_ndc, ',');
        for (const double v : row.lat_ms) put(v, ',');
        put(row.mean_latency_ms, '\n');
    }
    if (!out) throw IoError("write failed: " + path);
}

MisalignmentReport misalignment_report(const AttributedDataset& ds,
                                       std::span<const FilteredQuery> queries, int m) {
    MisalignmentReport rep;
    rep.sigma_global.reserve(queries.size());
    rep.rho_local.reserve(queries.size());
    for (const auto& q : queries) {
        rep.sigma_global.push_back(global_selectivity(ds, q.constraint));
        rep.rho_local.push_back(local_correlation(ds, q, m));
    }
    if (!queries.empty()) {
        const auto n = static_cast<double>(queries.size());
        rep.mean_sigma =
            std::accumulate(rep.sigma_global.begin(), rep.sigma_global.end(), 0.0) / n;
        rep.mean_rho = std::accumulate(rep.rho_local.begin(), rep.rho_local.end(), 0.0) / n;
        rep.spearman = spearman_rho(rep.sigma_global, rep.rho_local);
    }
    return rep;
}

void write_misalignment_csv(const std::string& path, const MisalignmentReport& rep) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << "query,sigma_global,rho_local\n";
    char buf[96];
    for (std::size_t i = 0; i < rep.sigma_global.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, rep.sigma_global[i],
                      rep.rho_local[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace fanns
