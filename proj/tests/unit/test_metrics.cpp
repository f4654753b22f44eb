#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "fanns/metrics.hpp"
#include "fanns/pipeline.hpp"

using namespace fanns;

namespace {

AttributedDataset random_numeric_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> uv(-1.0f, 1.0f);
    std::uniform_real_distribution<double> ua(0.0, 100.0);
    std::vector<float> vecs(n * dim);
    std::vector<double> attrs(n);
    for (auto& x : vecs) x = uv(rng);
    for (auto& a : attrs) a = ua(rng);
    return AttributedDataset::with_numeric(std::move(vecs), dim, std::move(attrs));
}

std::vector<FilteredQuery> random_range_queries(std::size_t n, std::size_t dim, int k,
                                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> uv(-1.0f, 1.0f);
    std::uniform_real_distribution<double> ua(0.0, 100.0);
    std::vector<FilteredQuery> qs(n);
    for (auto& q : qs) {
        q.vec.resize(dim);
        for (auto& x : q.vec) x = uv(rng);
        const double a = ua(rng), b = ua(rng);
        q.constraint = FilterConstraint::range(std::min(a, b), std::max(a, b));
        q.k = k;
    }
    return qs;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Rank-then-Pearson reference for the correlation tests, kept deliberately
// simple: no tie handling, valid for distinct inputs only.
double spearman_reference(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    auto plain_ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[idx[i]] = static_cast<double>(i + 1);
        return r;
    };
    const auto ra = plain_ranks(a), rb = plain_ranks(b);
    const double m = (static_cast<double>(n) + 1.0) / 2.0;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (ra[i] - m) * (rb[i] - m);
        saa += (ra[i] - m) * (ra[i] - m);
        sbb += (rb[i] - m) * (rb[i] - m);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("recall counts truth hits") {
    std::vector<Neighbor> res;
    for (const NodeId id : {1u, 2u, 3u, 4u, 5u, 6u, 7u}) res.push_back({id, 0.0f});
    const std::vector<NodeId> truth{2, 4, 6, 8, 10, 12, 14};
    CHECK(recall_at_k(res, truth) == doctest::Approx(3.0 / 7.0).epsilon(1e-15));

    std::vector<Neighbor> five;
    for (const NodeId id : {2u, 4u, 6u, 8u, 10u}) five.push_back({id, 0.0f});
    CHECK(recall_at_k(five, truth) == doctest::Approx(5.0 / 7.0).epsilon(1e-15));

    CHECK(recall_at_k(res, {}) == 1.0);
    CHECK(recall_at_k({}, truth) == 0.0);
}

TEST_CASE("average ranks use midranks for ties") {
    const std::vector<double> v{10.0, 20.0, 20.0, 30.0};
    const auto r = average_ranks(v);
    REQUIRE(r.size() == 4);
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 2.5);
    CHECK(r[2] == 2.5);
    CHECK(r[3] == 4.0);
    const std::vector<double> all_same{7.0, 7.0, 7.0};
    const auto rs = average_ranks(all_same);
    for (const double x : rs) CHECK(x == 2.0);
}

TEST_CASE("spearman hand values") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{2, 1, 4, 3, 5};
    CHECK(spearman_rho(a, b).value() == doctest::Approx(0.8).epsilon(1e-12));
    const std::vector<double> rev{5, 4, 3, 2, 1};
    CHECK(spearman_rho(a, rev).value() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(spearman_rho(a, a).value() == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<double> flat{3, 3, 3, 3, 3};
    CHECK_FALSE(spearman_rho(a, flat).has_value());
    const std::vector<double> wrong{1, 2};
    CHECK_THROWS_AS(spearman_rho(a, wrong), FormatError);
}

TEST_CASE("spearman agrees with a rank-then-pearson reference") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(100), b(100);
    for (std::size_t i = 0; i < 100; ++i) {
        a[i] = u(rng);
        b[i] = 0.3 * a[i] + u(rng);  // correlated but noisy, all values distinct
    }
    CHECK(spearman_rho(a, b).value() ==
          doctest::Approx(spearman_reference(a, b)).epsilon(1e-9));
}

TEST_CASE("regression report on perfect and degenerate inputs") {
    const std::vector<double> t{1.0, 2.0, 3.0, 4.0};
    const auto perfect = regression_report(t, t);
    CHECK(perfect.n == 4);
    CHECK(perfect.log_rmse == 0.0);
    CHECK(perfect.r2.value() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(perfect.spearman.value() == doctest::Approx(1.0).epsilon(1e-15));

    const std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
    const auto degenerate = regression_report(t, flat);
    CHECK_FALSE(degenerate.r2.has_value());  // constant target has no variance to explain
}

TEST_CASE("mse on log values equals msle on raw values") {
    std::mt19937_64 rng(62);
    std::uniform_real_distribution<double> u(0.1, 1000.0);
    std::vector<double> log_p(1000), log_t(1000);
    double msle = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) {
        const double p = u(rng), t = u(rng);
        log_p[i] = std::log(p);
        log_t[i] = std::log(t);
        const double e = std::log(p) - std::log(t);
        msle += e * e;
    }
    msle /= 1000.0;
    const auto rep = regression_report(log_p, log_t);
    CHECK(std::abs(rep.log_rmse * rep.log_rmse - msle) <= 1e-12);
}

TEST_CASE("sweep: exhaustive beam reaches full recall") {
    const auto ds = random_numeric_dataset(300, 8, 63);
    const auto g = build_graph(ds, BuildParams{16, 200, 63, 1});
    REQUIRE(reachable_from_entry(g) == 300);
    const auto qs = random_range_queries(30, 8, 5, 64);
    const auto truth = generate_ground_truth(ds, qs);

    SweepConfig cfg;
    cfg.kind = TerminationPolicy::Kind::FixedBeam;
    cfg.knobs = {300.0};
    cfg.timing_runs = 3;
    const auto rows = run_sweep(g, ds, qs, truth, cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].recall == 1.0);
    CHECK(rows[0].lat_ms.size() == 3);
    CHECK(rows[0].mean_ndc > 0.0);
    CHECK(rows[0].mean_latency_ms ==
          doctest::Approx((rows[0].lat_ms[0] + rows[0].lat_ms[1] + rows[0].lat_ms[2]) / 3.0)
              .epsilon(1e-12));
}

TEST_CASE("sweep: alpha zero reduces the predicted policy to the probe") {
    const auto ds = random_numeric_dataset(400, 8, 65);
    const auto g = build_graph(ds, BuildParams{8, 60, 65, 1});
    const auto qs = random_range_queries(25, 8, 5, 66);
    const auto truth = generate_ground_truth(ds, qs);

    // Constant model; with alpha 0 its prediction is irrelevant.
    TrainingSet ts;
    ts.schema_id = "post.v1";
    ts.feature_names = FeatureSchema{SearchMode::Post, FeatureMask::None}.names();
    for (int i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 22; ++j) ts.x.push_back(static_cast<double>(i + j));
        ts.y.push_back(std::log(50.0));
        ts.flags.push_back(0);
    }
    GbdtParams gp;
    gp.trees = 2;
    gp.max_depth = 2;
    gp.min_samples_leaf = 1;
    gp.subsample = 1.0;
    const auto model = BoostedTreesModel::train(ts, gp);

    SweepConfig pred;
    pred.kind = TerminationPolicy::Kind::Predicted;
    pred.knobs = {0.0};
    pred.model = &model;
    pred.probe_f = 60;
    pred.timing_runs = 1;
    const auto a = run_sweep(g, ds, qs, truth, pred);

    SweepConfig fixed;
    fixed.kind = TerminationPolicy::Kind::FixedBudget;
    fixed.knobs = {60.0};
    fixed.timing_runs = 1;
    const auto b = run_sweep(g, ds, qs, truth, fixed);

    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    CHECK(a[0].mean_ndc == b[0].mean_ndc);
    CHECK(a[0].recall == b[0].recall);
}

TEST_CASE("sweep validates its inputs") {
    const auto ds = random_numeric_dataset(50, 4, 67);
    const auto g = build_graph(ds, BuildParams{8, 40, 67, 1});
    const auto qs = random_range_queries(5, 4, 3, 68);
    const auto truth = generate_ground_truth(ds, qs);

    SweepConfig cfg;
    cfg.knobs = {10.0};
    std::vector<std::vector<NodeId>> short_truth(truth.begin(), truth.end() - 1);
    CHECK_THROWS_AS(run_sweep(g, ds, qs, short_truth, cfg), FormatError);

    SweepConfig no_model;
    no_model.kind = TerminationPolicy::Kind::Predicted;
    no_model.knobs = {1.0};
    CHECK_THROWS_AS(run_sweep(g, ds, qs, truth, no_model), FormatError);

    SweepConfig zero_runs;
    zero_runs.knobs = {10.0};
    zero_runs.timing_runs = 0;
    CHECK_THROWS_AS(run_sweep(g, ds, qs, truth, zero_runs), FormatError);
}

TEST_CASE("sweep csv layout is frozen") {
    std::vector<SweepRow> rows(1);
    rows[0].knob = 32.0;
    rows[0].recall = 0.5;
    rows[0].mean_ndc = 123.0;
    rows[0].lat_ms = {0.25, 0.5, 0.75};
    rows[0].mean_latency_ms = 0.5;
    write_sweep_csv("t_metrics_sweep.csv", rows, "deadbeef");
    const auto text = read_text("t_metrics_sweep.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    CHECK(line == "# config_hash=deadbeef");
    std::getline(in, line);
    CHECK(line == "knob,recall,mean_ndc,lat_ms_run_0,lat_ms_run_1,lat_ms_run_2,mean_latency_ms");
    std::getline(in, line);
    CHECK(line == "32,0.5,123,0.25,0.5,0.75,0.5");
    std::remove("t_metrics_sweep.csv");
}

TEST_CASE("misalignment report columns match direct scans") {
    const auto ds = random_numeric_dataset(300, 4, 69);
    const auto qs = random_range_queries(40, 4, 5, 70);
    const auto rep = misalignment_report(ds, qs, 10);
    REQUIRE(rep.sigma_global.size() == 40);
    REQUIRE(rep.rho_local.size() == 40);
    double ms = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        CHECK(rep.sigma_global[i] == global_selectivity(ds, qs[i].constraint));
        CHECK(rep.rho_local[i] == local_correlation(ds, qs[i], 10));
        ms += rep.sigma_global[i];
        mr += rep.rho_local[i];
    }
    CHECK(rep.mean_sigma == doctest::Approx(ms / 40.0).epsilon(1e-12));
    CHECK(rep.mean_rho == doctest::Approx(mr / 40.0).epsilon(1e-12));

    write_misalignment_csv("t_metrics_mis.csv", rep);
    std::istringstream in(read_text("t_metrics_mis.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "query,sigma_global,rho_local");
    std::size_t data_lines = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++data_lines;
    CHECK(data_lines == 40);
    std::remove("t_metrics_mis.csv");
}
