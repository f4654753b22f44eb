#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "fanns/metrics.hpp"
#include "fanns/workload.hpp"

using namespace fanns;

namespace {

WorkloadSpec small_spec(const std::string& scheme) {
    WorkloadSpec spec;
    spec.scheme = scheme;
    spec.base_n = 4000;
    spec.train_n = 40;
    spec.eval_n = 40;
    spec.dim = 8;
    spec.clusters = 10;
    spec.sigma = 0.05;
    spec.buckets = {0.05, 0.10, 0.20};
    spec.k = 10;
    spec.seed = 7;
    return spec;
}

std::size_t matches(const AttributedDataset& ds, const FilterConstraint& c) {
    std::size_t m = 0;
    for (NodeId i = 0; i < ds.size(); ++i)
        if (ds.matches(i, c)) ++m;
    return m;
}

}  // namespace

TEST_CASE("known schemes are exactly the six documented ones") {
    for (const char* s : {"independent-range", "cluster-range", "anti-range", "mixed-range",
                          "independent-labels", "cluster-labels"})
        CHECK(is_known_scheme(s));
    CHECK_FALSE(is_known_scheme("correlated-range"));
    CHECK_FALSE(is_known_scheme(""));
}

TEST_CASE("range queries hit their selectivity bucket exactly") {
    for (const char* scheme : {"independent-range", "cluster-range", "anti-range",
                               "mixed-range"}) {
        const auto spec = small_spec(scheme);
        const auto w = generate_workload(spec);
        REQUIRE(w.eval.size() == 40);
        for (std::size_t j = 0; j < w.eval.size(); ++j) {
            const double bucket = spec.buckets[j % spec.buckets.size()];
            const auto want = static_cast<std::size_t>(
                std::llround(bucket * static_cast<double>(spec.base_n)));
            CHECK(matches(w.base, w.eval[j].constraint) == want);
        }
        for (std::size_t j = 0; j < w.train.size(); ++j) {
            const double bucket = spec.buckets[j % spec.buckets.size()];
            const auto want = static_cast<std::size_t>(
                std::llround(bucket * static_cast<double>(spec.base_n)));
            CHECK(matches(w.base, w.train[j].constraint) == want);
        }
    }
}

TEST_CASE("uniform placement keeps selectivity exact too") {
    auto spec = small_spec("cluster-range");
    spec.placement = "uniform";
    const auto w = generate_workload(spec);
    for (std::size_t j = 0; j < w.eval.size(); ++j) {
        const double bucket = spec.buckets[j % spec.buckets.size()];
        const auto want = static_cast<std::size_t>(
            std::llround(bucket * static_cast<double>(spec.base_n)));
        CHECK(matches(w.base, w.eval[j].constraint) == want);
    }
}

TEST_CASE("vectors and attributes are invariant across the cluster band schemes") {
    const auto a = generate_workload(small_spec("cluster-range"));
    const auto b = generate_workload(small_spec("anti-range"));
    const auto c = generate_workload(small_spec("mixed-range"));
    CHECK(a.base.raw_vectors() == b.base.raw_vectors());
    CHECK(a.base.raw_vectors() == c.base.raw_vectors());
    for (NodeId i = 0; i < a.base.size(); ++i) {
        CHECK(a.base.numeric(i) == b.base.numeric(i));
        CHECK(a.base.numeric(i) == c.base.numeric(i));
    }
    CHECK(a.base_cluster == b.base_cluster);
    for (std::size_t j = 0; j < a.eval.size(); ++j) {
        CHECK(a.eval[j].vec == b.eval[j].vec);
        CHECK(a.eval[j].vec == c.eval[j].vec);
    }
}

TEST_CASE("mixed-range alternates between aligned and antipodal windows") {
    const auto aligned = generate_workload(small_spec("cluster-range"));
    const auto anti = generate_workload(small_spec("anti-range"));
    const auto mixed = generate_workload(small_spec("mixed-range"));
    for (std::size_t j = 0; j < mixed.eval.size(); ++j) {
        const auto& want = (j % 2 == 1) ? anti.eval[j].constraint : aligned.eval[j].constraint;
        CHECK(mixed.eval[j].constraint.lo == want.lo);
        CHECK(mixed.eval[j].constraint.hi == want.hi);
    }
}

TEST_CASE("anti-range misaligns the filter against the local neighborhood") {
    auto spec = small_spec("anti-range");
    spec.buckets = {0.20};
    spec.eval_n = 200;
    const auto w = generate_workload(spec);
    const auto rep = misalignment_report(w.base, w.eval, 10);
    std::size_t below = 0;
    for (std::size_t j = 0; j < w.eval.size(); ++j)
        if (rep.rho_local[j] < rep.sigma_global[j]) ++below;
    CHECK(below >= 180);  // at least 90 percent of queries
    CHECK(rep.mean_rho < 0.5 * rep.mean_sigma);
}

TEST_CASE("cluster-range aligns the filter with the local neighborhood") {
    auto spec = small_spec("cluster-range");
    spec.buckets = {0.20};
    spec.eval_n = 200;
    const auto w = generate_workload(spec);
    const auto rep = misalignment_report(w.base, w.eval, 10);
    CHECK(rep.mean_rho > 3.0 * rep.mean_sigma * 0.5);
    CHECK(rep.mean_rho > 0.9);  // own-band windows cover the whole neighborhood
}

TEST_CASE("independent-range local validity tracks global selectivity") {
    auto spec = small_spec("independent-range");
    spec.eval_n = 500;
    spec.train_n = 0;
    const auto w = generate_workload(spec);
    const auto rep = misalignment_report(w.base, w.eval, 20);
    CHECK(std::abs(rep.mean_rho - rep.mean_sigma) <= 0.02);
}

TEST_CASE("independent-range attribute mean sits near the middle of the range") {
    WorkloadSpec spec;
    spec.scheme = "independent-range";
    spec.base_n = 50000;
    spec.train_n = 100;
    spec.eval_n = 100;
    spec.dim = 4;
    spec.clusters = 1;
    spec.sigma = 0.05;
    spec.buckets = {0.10};
    spec.seed = 9;
    const auto w = generate_workload(spec);
    double mean = 0.0;
    for (NodeId i = 0; i < w.base.size(); ++i) mean += w.base.numeric(i);
    mean /= static_cast<double>(w.base.size());
    CHECK(std::abs(mean - 5000.5) <= 50.0);
    double lo = 1e18, hi = -1e18;
    for (NodeId i = 0; i < w.base.size(); ++i) {
        lo = std::min(lo, w.base.numeric(i));
        hi = std::max(hi, w.base.numeric(i));
    }
    CHECK(lo >= kAttrLo);
    CHECK(hi <= kAttrHi);
}

TEST_CASE("cluster band attributes stay inside their band") {
    const auto spec = small_spec("cluster-range");
    const auto w = generate_workload(spec);
    const double band_w = (kAttrHi - kAttrLo + 1.0) / static_cast<double>(spec.clusters);
    for (NodeId i = 0; i < w.base.size(); ++i) {
        const double lo = kAttrLo + band_w * w.base_cluster[i];
        CHECK(w.base.numeric(i) >= lo);
        CHECK(w.base.numeric(i) <= lo + band_w - 1.0);
    }
}

TEST_CASE("independent-labels uses the documented tier frequencies") {
    WorkloadSpec spec = small_spec("independent-labels");
    spec.base_n = 20000;
    const auto w = generate_workload(spec);
    std::vector<std::size_t> counts(19, 0);
    for (NodeId i = 0; i < w.base.size(); ++i) {
        const auto& ls = w.base.labels(i);
        REQUIRE(ls.size() == 1);  // singleton labels by construction
        REQUIRE(ls[0] < 19);
        ++counts[ls[0]];
    }
    auto frac = [&](LabelId l) {
        return static_cast<double>(counts[l]) / static_cast<double>(spec.base_n);
    };
    for (LabelId l = 0; l < 10; ++l) CHECK(std::abs(frac(l) - 0.01) <= 0.004);
    for (LabelId l = 10; l < 14; ++l) CHECK(std::abs(frac(l) - 0.05) <= 0.010);
    for (LabelId l = 14; l < 17; ++l) CHECK(std::abs(frac(l) - 0.10) <= 0.015);
    for (LabelId l = 17; l < 19; ++l) CHECK(std::abs(frac(l) - 0.20) <= 0.020);

    // Every query filter names exactly one live label.
    for (const auto& q : w.eval) {
        REQUIRE(q.constraint.labels.size() == 1);
        CHECK(q.constraint.labels[0] < 19);
        CHECK(matches(w.base, q.constraint) > 0);
    }
}

TEST_CASE("cluster-labels filters stay inside the query's own cluster pool") {
    const auto spec = small_spec("cluster-labels");
    const auto w = generate_workload(spec);
    for (std::size_t j = 0; j < w.eval.size(); ++j) {
        const LabelId base = 3 * w.eval_cluster[j];
        REQUIRE(!w.eval[j].constraint.labels.empty());
        CHECK(w.eval[j].constraint.labels.size() <= 3);
        for (const LabelId l : w.eval[j].constraint.labels) {
            CHECK(l >= base);
            CHECK(l < base + 3);
        }
        const auto kind = w.eval[j].constraint.kind;
        if (j % 2 == 1)
            CHECK(kind == PredicateKind::Equality);
        else
            CHECK(kind == PredicateKind::Containment);
        // Own-label filters always have matching base items in the cluster.
        CHECK(matches(w.base, w.eval[j].constraint) > 0);
    }
}

TEST_CASE("zero sigma collapses every row onto its center") {
    auto spec = small_spec("cluster-range");
    spec.sigma = 0.0;
    spec.base_n = 500;
    const auto w = generate_workload(spec);
    REQUIRE(w.centers.size() == spec.clusters * spec.dim);
    for (NodeId i = 0; i < w.base.size(); ++i) {
        const float* row = w.base.row(i);
        const float* ctr = w.centers.data() + w.base_cluster[i] * spec.dim;
        for (std::size_t d = 0; d < spec.dim; ++d) CHECK(row[d] == ctr[d]);
    }
}

TEST_CASE("small noise keeps rows recoverable by nearest center") {
    WorkloadSpec spec;
    spec.scheme = "cluster-range";
    spec.base_n = 2000;
    spec.train_n = 10;
    spec.eval_n = 10;
    spec.dim = 32;
    spec.clusters = 50;
    spec.sigma = 0.02;
    spec.buckets = {0.10};
    spec.seed = 3;
    const auto w = generate_workload(spec);
    std::size_t recovered = 0;
    for (NodeId i = 0; i < w.base.size(); ++i) {
        double best = 1e30;
        std::uint32_t best_c = 0;
        for (std::uint32_t cc = 0; cc < 50; ++cc) {
            double acc = 0.0;
            const float* ctr = w.centers.data() + cc * 32;
            const float* row = w.base.row(i);
            for (std::size_t d = 0; d < 32; ++d) {
                const double diff = static_cast<double>(row[d]) - static_cast<double>(ctr[d]);
                acc += diff * diff;
            }
            if (acc < best) {
                best = acc;
                best_c = cc;
            }
        }
        if (best_c == w.base_cluster[i]) ++recovered;
    }
    CHECK(static_cast<double>(recovered) >= 0.99 * static_cast<double>(w.base.size()));
}

TEST_CASE("generation is a pure function of the spec") {
    const auto a = generate_workload(small_spec("mixed-range"));
    const auto b = generate_workload(small_spec("mixed-range"));
    CHECK(a.base.raw_vectors() == b.base.raw_vectors());
    for (NodeId i = 0; i < a.base.size(); ++i) CHECK(a.base.numeric(i) == b.base.numeric(i));
    REQUIRE(a.eval.size() == b.eval.size());
    for (std::size_t j = 0; j < a.eval.size(); ++j) {
        CHECK(a.eval[j].vec == b.eval[j].vec);
        CHECK(a.eval[j].constraint.lo == b.eval[j].constraint.lo);
        CHECK(a.eval[j].constraint.hi == b.eval[j].constraint.hi);
    }

    auto other = small_spec("mixed-range");
    other.seed = 8;
    const auto d = generate_workload(other);
    CHECK(a.base.raw_vectors() != d.base.raw_vectors());
}

TEST_CASE("workload directories roundtrip") {
    namespace fs = std::filesystem;
    const std::string dir = "t_workload_dir";
    const auto spec = small_spec("anti-range");
    const auto w = generate_workload(spec);
    save_workload(w, spec, dir);

    const auto spec2 = load_workload_spec(dir);
    CHECK(spec2.scheme == spec.scheme);
    CHECK(spec2.base_n == spec.base_n);
    CHECK(spec2.buckets == spec.buckets);
    CHECK(spec2.seed == spec.seed);
    CHECK(spec2.placement == "default");

    const auto ds = load_workload_dataset(dir);
    CHECK(ds.size() == w.base.size());
    CHECK(ds.raw_vectors() == w.base.raw_vectors());
    for (NodeId i = 0; i < ds.size(); ++i) CHECK(ds.numeric(i) == w.base.numeric(i));

    const auto eval = load_workload_queries(dir, "eval");
    REQUIRE(eval.size() == w.eval.size());
    for (std::size_t j = 0; j < eval.size(); ++j) {
        CHECK(eval[j].vec == w.eval[j].vec);
        CHECK(eval[j].constraint.lo == w.eval[j].constraint.lo);
        CHECK(eval[j].constraint.hi == w.eval[j].constraint.hi);
        CHECK(eval[j].k == spec.k);
    }
    CHECK_THROWS_AS(load_workload_queries(dir, "test"), FormatError);
    fs::remove_all(dir);
    CHECK_THROWS_AS(load_workload_spec(dir), IoError);
}

TEST_CASE("spec validation rejects malformed inputs") {
    auto bad = small_spec("nope");
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
    bad = small_spec("cluster-range");
    bad.base_n = 0;
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
    bad = small_spec("cluster-range");
    bad.buckets = {1.5};
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
    bad = small_spec("cluster-range");
    bad.buckets.clear();
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
    bad = small_spec("cluster-range");
    bad.sigma = -0.1;
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
    bad = small_spec("anti-range");
    bad.clusters = 5;  // odd cluster count has no antipodal band
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
    bad = small_spec("cluster-range");
    bad.clusters = 7;  // 10000 % 7 != 0
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
    bad = small_spec("cluster-range");
    bad.placement = "center";
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
    bad = small_spec("cluster-range");
    bad.k = 0;
    CHECK_THROWS_AS(generate_workload(bad), WorkloadError);
}
