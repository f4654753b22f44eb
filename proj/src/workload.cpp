#include "fanns/workload.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "fanns/io.hpp"

namespace fanns {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t derive_seed(std::uint64_t seed, const char* tag) {
    Fnv64 h;
    h.update(&seed, sizeof seed);
    h.update(tag, std::char_traits<char>::length(tag));
    return h.digest();
}

bool is_range_scheme(const std::string& s) {
    return s == "independent-range" || s == "cluster-range" || s == "anti-range" ||
           s == "mixed-range";
}

bool is_cluster_band_scheme(const std::string& s) {
    return s == "cluster-range" || s == "anti-range" || s == "mixed-range";
}

// Label tiers for independent-labels: ten 1% labels, four 5%, three 10%,
// two 20%. Exactly one label per item, so equality and containment agree.
struct Tier {
    double prob;
    LabelId first;
    LabelId count;
};
constexpr Tier kTiers[] = {{0.01, 0, 10}, {0.05, 10, 4}, {0.10, 14, 3}, {0.20, 17, 2}};

void validate_spec(const WorkloadSpec& spec) {
    if (!is_known_scheme(spec.scheme)) throw WorkloadError("unknown scheme: " + spec.scheme);
    if (spec.base_n == 0 || spec.dim == 0 || spec.clusters == 0)
        throw WorkloadError("base_n, dim and clusters must be positive");
    if (spec.k < 1) throw WorkloadError("k must be positive");
    if (spec.buckets.empty()) throw WorkloadError("buckets must be non-empty");
    for (const double b : spec.buckets)
        if (!(b > 0.0 && b <= 1.0)) throw WorkloadError("buckets must lie in (0, 1]");
    if (!(spec.sigma >= 0.0)) throw WorkloadError("sigma must be non-negative");
    const auto span = static_cast<std::size_t>(kAttrHi - kAttrLo + 1);
    if (is_cluster_band_scheme(spec.scheme) && span % spec.clusters != 0)
        throw WorkloadError("attribute span must divide evenly into cluster bands");
    if ((spec.scheme == "anti-range" || spec.scheme == "mixed-range") && spec.clusters % 2 != 0)
        throw WorkloadError(spec.scheme + " needs an even cluster count");
    if (spec.placement != "default" && spec.placement != "uniform")
        throw WorkloadError("unknown placement: " + spec.placement);
}

// First rank i in [0, n - t] around start whose t-wide rank window cuts the
// sorted attribute array only between duplicate groups, so the value range
// [s[i], s[i + t - 1]] matches exactly t items.
std::size_t find_clean_window(const std::vector<double>& s, std::size_t t, std::int64_t start) {
    const auto n = static_cast<std::int64_t>(s.size());
    const std::int64_t tt = static_cast<std::int64_t>(t);
    const std::int64_t hi = n - tt;
    const std::int64_t i0 = std::clamp<std::int64_t>(start, 0, hi);
    auto clean = [&](std::int64_t i) {
        if (i > 0 && s[static_cast<std::size_t>(i) - 1] == s[static_cast<std::size_t>(i)])
            return false;
        const std::int64_t j = i + tt;
        if (j < n && s[static_cast<std::size_t>(j) - 1] == s[static_cast<std::size_t>(j)])
            return false;
        return true;
    };
    for (std::int64_t d = 0; d <= n; ++d) {
        if (i0 + d <= hi && clean(i0 + d)) return static_cast<std::size_t>(i0 + d);
        if (d > 0 && i0 - d >= 0 && clean(i0 - d)) return static_cast<std::size_t>(i0 - d);
    }
    throw WorkloadError("no exact-selectivity window exists for this attribute column");
}

}  // namespace

bool is_known_scheme(const std::string& scheme) {
    return is_range_scheme(scheme) || scheme == "independent-labels" ||
           scheme == "cluster-labels";
}

Workload generate_workload(const WorkloadSpec& spec) {
    validate_spec(spec);
    const std::size_t n = spec.base_n + spec.train_n + spec.eval_n;
    const std::size_t c = spec.clusters;
    const std::size_t dim = spec.dim;

    // Vector side: centers, then per row a cluster pick and Gaussian noise.
    std::mt19937_64 rng_v(derive_seed(spec.seed, "vectors"));
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(c - 1));
    std::normal_distribution<float> noise(0.0f, spec.sigma > 0.0 ? static_cast<float>(spec.sigma)
                                                                 : 1.0f);
    std::vector<float> centers(c * dim);
    for (auto& v : centers) v = unit(rng_v);
    std::vector<float> vecs(n * dim);
    std::vector<std::uint32_t> cluster(n);
    for (std::size_t i = 0; i < n; ++i) {
        cluster[i] = pick(rng_v);
        const float* ctr = centers.data() + cluster[i] * dim;
        float* row = vecs.data() + i * dim;
        if (spec.sigma > 0.0) {
            for (std::size_t d = 0; d < dim; ++d) row[d] = ctr[d] + noise(rng_v);
        } else {
            std::copy(ctr, ctr + dim, row);
        }
    }

    // Attribute side.
    std::mt19937_64 rng_a(derive_seed(spec.seed, "attrs"));
    const auto band_w = static_cast<std::int64_t>((kAttrHi - kAttrLo + 1) / static_cast<double>(c));
    auto band_lo = [&](std::uint32_t cl) {
        return static_cast<std::int64_t>(kAttrLo) + static_cast<std::int64_t>(cl) * band_w;
    };
    std::vector<double> attr_num;
    std::vector<std::vector<LabelId>> attr_labels;
    const bool numeric = is_range_scheme(spec.scheme);
    if (spec.scheme == "independent-range") {
        std::uniform_int_distribution<std::int64_t> any(static_cast<std::int64_t>(kAttrLo),
                                                        static_cast<std::int64_t>(kAttrHi));
        attr_num.resize(n);
        for (std::size_t i = 0; i < n; ++i) attr_num[i] = static_cast<double>(any(rng_a));
    } else if (is_cluster_band_scheme(spec.scheme)) {
        attr_num.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t lo = band_lo(cluster[i]);
            std::uniform_int_distribution<std::int64_t> in_band(lo, lo + band_w - 1);
            attr_num[i] = static_cast<double>(in_band(rng_a));
        }
    } else if (spec.scheme == "independent-labels") {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        attr_labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double x = u(rng_a);
            for (const Tier& t : kTiers) {
                const double tier_mass = t.prob * t.count;
                if (x < tier_mass || &t == &kTiers[3]) {
                    auto off = static_cast<LabelId>(x / t.prob);
                    if (off >= t.count) off = t.count - 1;
                    attr_labels[i] = {static_cast<LabelId>(t.first + off)};
                    break;
                }
                x -= tier_mass;
            }
        }
    } else {  // cluster-labels: one to three labels from the cluster's pool
        std::uniform_int_distribution<int> cnt(1, 3);
        attr_labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            int pool[3] = {0, 1, 2};
            std::shuffle(std::begin(pool), std::end(pool), rng_a);
            const int m = cnt(rng_a);
            std::vector<LabelId> ls;
            for (int j = 0; j < m; ++j)
                ls.push_back(static_cast<LabelId>(3 * cluster[i] + static_cast<std::uint32_t>(pool[j])));
            std::sort(ls.begin(), ls.end());
            attr_labels[i] = std::move(ls);
        }
    }

    // Base dataset.
    std::vector<float> base_vecs(vecs.begin(), vecs.begin() + static_cast<std::ptrdiff_t>(spec.base_n * dim));
    Workload w;
    if (numeric) {
        w.base = AttributedDataset::with_numeric(
            std::move(base_vecs), dim, {attr_num.begin(), attr_num.begin() + static_cast<std::ptrdiff_t>(spec.base_n)});
    } else {
        w.base = AttributedDataset::with_labels(
            std::move(base_vecs), dim,
            {attr_labels.begin(), attr_labels.begin() + static_cast<std::ptrdiff_t>(spec.base_n)});
    }
    w.base_cluster.assign(cluster.begin(), cluster.begin() + static_cast<std::ptrdiff_t>(spec.base_n));
    w.centers = std::move(centers);

    std::vector<double> sorted_attr;
    if (numeric) {
        sorted_attr.assign(attr_num.begin(), attr_num.begin() + static_cast<std::ptrdiff_t>(spec.base_n));
        std::sort(sorted_attr.begin(), sorted_attr.end());
    }

    std::mt19937_64 rng_q(derive_seed(spec.seed, "queries"));
    auto make_query = [&](std::size_t row, std::size_t j) {
        FilteredQuery q;
        q.k = spec.k;
        q.vec.assign(vecs.begin() + static_cast<std::ptrdiff_t>(row * dim),
                     vecs.begin() + static_cast<std::ptrdiff_t>((row + 1) * dim));
        const double bucket = spec.buckets[j % spec.buckets.size()];
        if (numeric) {
            const auto b = static_cast<std::int64_t>(sorted_attr.size());
            auto t = static_cast<std::size_t>(std::llround(bucket * static_cast<double>(b)));
            t = std::clamp<std::size_t>(t, 1, sorted_attr.size());
            std::int64_t rank;
            if (spec.placement == "uniform") {
                std::uniform_int_distribution<std::int64_t> anywhere(0, b - 1);
                rank = anywhere(rng_q);
            } else if (spec.scheme == "independent-range") {
                rank = std::lower_bound(sorted_attr.begin(), sorted_attr.end(), attr_num[row]) -
                       sorted_attr.begin();
            } else {
                std::uint32_t cl = cluster[row];
                const bool anti = spec.scheme == "anti-range" ||
                                  (spec.scheme == "mixed-range" && j % 2 == 1);
                if (anti) cl = static_cast<std::uint32_t>((cl + c / 2) % c);
                const double center_val =
                    static_cast<double>(band_lo(cl)) + static_cast<double>(band_w) / 2.0;
                rank = std::lower_bound(sorted_attr.begin(), sorted_attr.end(), center_val) -
                       sorted_attr.begin();
            }
            std::size_t i;
            try {
                i = find_clean_window(sorted_attr, t, rank - static_cast<std::int64_t>(t) / 2);
            } catch (const WorkloadError&) {
                throw WorkloadError("selectivity bucket " + std::to_string(bucket) +
                                    " is unreachable on this attribute column");
            }
            q.constraint = FilterConstraint::range(sorted_attr[i], sorted_attr[i + t - 1]);
        } else {
            // Label filters come from the query item's own labels: containment
            // takes a random non-empty subset, equality the full set.
            const std::vector<LabelId>& own = attr_labels[row];
            if (j % 2 == 1) {
                q.constraint = FilterConstraint::equality(own);
            } else {
                std::vector<LabelId> subset = own;
                std::shuffle(subset.begin(), subset.end(), rng_q);
                std::uniform_int_distribution<std::size_t> sz(1, own.size());
                subset.resize(sz(rng_q));
                std::sort(subset.begin(), subset.end());
                q.constraint = FilterConstraint::containment(std::move(subset));
            }
        }
        return q;
    };

    w.train.reserve(spec.train_n);
    for (std::size_t j = 0; j < spec.train_n; ++j) {
        const std::size_t row = spec.base_n + j;
        w.train.push_back(make_query(row, j));
        w.train_cluster.push_back(cluster[row]);
    }
    w.eval.reserve(spec.eval_n);
    for (std::size_t j = 0; j < spec.eval_n; ++j) {
        const std::size_t row = spec.base_n + spec.train_n + j;
        w.eval.push_back(make_query(row, j));
        w.eval_cluster.push_back(cluster[row]);
    }
    return w;
}

void save_workload(const Workload& w, const WorkloadSpec& spec, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);

    io::write_fvecs(dir + "/base.fvecs", w.base.raw_vectors().data(), w.base.size(),
                    w.base.dim());
    io::AttrColumn col;
    col.kind = w.base.attr_kind();
    for (NodeId i = 0; i < w.base.size(); ++i) {
        if (col.kind == AttrKind::Numeric)
            col.numeric.push_back(w.base.numeric(i));
        else
            col.labels.push_back(w.base.labels(i));
    }
    io::write_attributes_jsonl(dir + "/base.attrs.jsonl", col);

    auto dump_queries = [&](const std::vector<FilteredQuery>& qs, const std::string& stem) {
        std::vector<float> flat;
        std::vector<FilterConstraint> filters;
        flat.reserve(qs.size() * w.base.dim());
        for (const auto& q : qs) {
            flat.insert(flat.end(), q.vec.begin(), q.vec.end());
            filters.push_back(q.constraint);
        }
        io::write_fvecs(dir + "/" + stem + ".fvecs", flat.data(), qs.size(), w.base.dim());
        io::write_filters_jsonl(dir + "/" + stem + ".filters.jsonl", filters);
    };
    dump_queries(w.train, "train");
    dump_queries(w.eval, "eval");

    json j;
    j["scheme"] = spec.scheme;
    j["base_n"] = spec.base_n;
    j["train_n"] = spec.train_n;
    j["eval_n"] = spec.eval_n;
    j["dim"] = spec.dim;
    j["clusters"] = spec.clusters;
    j["sigma"] = spec.sigma;
    j["buckets"] = spec.buckets;
    j["k"] = spec.k;
    j["seed"] = spec.seed;
    j["placement"] = spec.placement;
    std::ofstream out(dir + "/workload.json", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + dir + "/workload.json");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + dir + "/workload.json");
}

WorkloadSpec load_workload_spec(const std::string& dir) {
    const std::string path = dir + "/workload.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    json j;
    try {
        in >> j;
        WorkloadSpec spec;
        spec.scheme = j.at("scheme").get<std::string>();
        spec.base_n = j.at("base_n").get<std::size_t>();
        spec.train_n = j.at("train_n").get<std::size_t>();
        spec.eval_n = j.at("eval_n").get<std::size_t>();
        spec.dim = j.at("dim").get<std::size_t>();
        spec.clusters = j.at("clusters").get<std::size_t>();
        spec.sigma = j.at("sigma").get<double>();
        spec.buckets = j.at("buckets").get<std::vector<double>>();
        spec.k = j.at("k").get<int>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        spec.placement = j.value("placement", std::string("default"));
        return spec;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

AttributedDataset load_workload_dataset(const std::string& dir) {
    return io::load_dataset(dir + "/base.fvecs", dir + "/base.attrs.jsonl");
}

std::vector<FilteredQuery> load_workload_queries(const std::string& dir,
                                                 const std::string& split) {
    if (split != "train" && split != "eval")
        throw FormatError("unknown query split: " + split);
    const WorkloadSpec spec = load_workload_spec(dir);
    return io::load_queries(dir + "/" + split + ".fvecs", dir + "/" + split + ".filters.jsonl",
                            spec.k);
}

}  // namespace fanns
