#include "fanns/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace fanns {

using nlohmann::json;

double RegressionTree::predict(const double* row) const {
    std::int32_t at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(at)];
        at = row[n.feature] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
}

namespace {

constexpr double kMinGain = 1e-12;

struct NodeStats {
    double sum = 0.0;
    std::int64_t count = 0;
};

struct SplitChoice {
    double gain = 0.0;
    std::int32_t feature = -1;
    double threshold = 0.0;
};

double split_gain(double sl, std::int64_t nl, double st, std::int64_t nt) {
    const double sr = st - sl;
    const std::int64_t nr = nt - nl;
    return sl * sl / static_cast<double>(nl) + sr * sr / static_cast<double>(nr) -
           st * st / static_cast<double>(nt);
}

// Quantile bin upper edges for hist mode; values are assigned to the first
// bin whose edge is >= value, so edges double as split thresholds.
std::vector<double> make_bin_edges(std::vector<double> sorted_vals, int bins) {
    sorted_vals.erase(std::unique(sorted_vals.begin(), sorted_vals.end()), sorted_vals.end());
    const std::size_t distinct = sorted_vals.size();
    std::vector<double> edges;
    if (distinct <= static_cast<std::size_t>(bins)) {
        for (std::size_t i = 0; i + 1 < distinct; ++i)
            edges.push_back((sorted_vals[i] + sorted_vals[i + 1]) / 2.0);
        return edges;
    }
    for (int b = 1; b < bins; ++b) {
        const std::size_t idx = distinct * static_cast<std::size_t>(b) / static_cast<std::size_t>(bins);
        const double edge = (sorted_vals[idx - 1] + sorted_vals[idx]) / 2.0;
        if (edges.empty() || edge > edges.back()) edges.push_back(edge);
    }
    return edges;
}

class Trainer {
public:
    Trainer(const TrainingSet& ts, const GbdtParams& params)
        : params_(params), n_features_(ts.features()) {
        for (std::size_t i = 0; i < ts.rows(); ++i) {
            if (params.drop_disconnected && (ts.flags[i] & kRowDisconnected)) continue;
            keep_.push_back(i);
        }
        if (keep_.empty()) throw FormatError("training set has no usable rows");
        n_ = keep_.size();
        x_.resize(n_ * n_features_);
        y_.resize(n_);
        for (std::size_t r = 0; r < n_; ++r) {
            const double* src = ts.row(keep_[r]);
            std::copy(src, src + n_features_, x_.begin() + static_cast<std::ptrdiff_t>(r * n_features_));
            y_[r] = ts.y[keep_[r]];
        }
    }

    void run(std::vector<RegressionTree>& trees, double& base, std::vector<double>& loss_curve) {
        base = std::accumulate(y_.begin(), y_.end(), 0.0) / static_cast<double>(n_);
        pred_.assign(n_, base);
        residual_.resize(n_);

        if (params_.method == "exact") {
            presort();
        } else if (params_.method == "hist") {
            bin_rows();
        } else {
            throw FormatError("unknown gbdt method: " + params_.method);
        }

        std::mt19937_64 rng(params_.seed);
        trees.reserve(static_cast<std::size_t>(params_.trees));
        for (int t = 0; t < params_.trees; ++t) {
            for (std::size_t i = 0; i < n_; ++i) residual_[i] = y_[i] - pred_[i];
            RegressionTree tree = grow_tree(rng);
            for (std::size_t i = 0; i < n_; ++i)
                pred_[i] += params_.learning_rate * tree.predict(&x_[i * n_features_]);
            double mse = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                const double e = y_[i] - pred_[i];
                mse += e * e;
            }
            loss_curve.push_back(mse / static_cast<double>(n_));
            trees.push_back(std::move(tree));
        }
    }

private:
    void presort() {
        order_.resize(n_features_);
        for (std::size_t f = 0; f < n_features_; ++f) {
            auto& ord = order_[f];
            ord.resize(n_);
            std::iota(ord.begin(), ord.end(), std::uint32_t{0});
            std::sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
                const double va = x_[a * n_features_ + f];
                const double vb = x_[b * n_features_ + f];
                if (va != vb) return va < vb;
                return a < b;
            });
        }
    }

    void bin_rows() {
        bin_edges_.resize(n_features_);
        binned_.resize(n_ * n_features_);
        std::vector<double> col(n_);
        for (std::size_t f = 0; f < n_features_; ++f) {
            for (std::size_t i = 0; i < n_; ++i) col[i] = x_[i * n_features_ + f];
            std::sort(col.begin(), col.end());
            bin_edges_[f] = make_bin_edges(col, params_.bins);
            const auto& edges = bin_edges_[f];
            for (std::size_t i = 0; i < n_; ++i) {
                const double v = x_[i * n_features_ + f];
                const auto it = std::lower_bound(edges.begin(), edges.end(), v);
                binned_[i * n_features_ + f] =
                    static_cast<std::uint16_t>(it - edges.begin());
            }
        }
    }

    std::vector<std::uint32_t> sample_rows(std::mt19937_64& rng) {
        std::vector<std::uint32_t> idx(n_);
        std::iota(idx.begin(), idx.end(), std::uint32_t{0});
        if (params_.subsample >= 1.0) return idx;
        std::shuffle(idx.begin(), idx.end(), rng);
        auto m = static_cast<std::size_t>(std::llround(params_.subsample * static_cast<double>(n_)));
        m = std::max<std::size_t>(m, 1);
        idx.resize(m);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

    RegressionTree grow_tree(std::mt19937_64& rng) {
        const auto rows = sample_rows(rng);
        leaf_of_.assign(n_, -1);
        RegressionTree tree;
        NodeStats root;
        for (const auto i : rows) {
            leaf_of_[i] = 0;
            root.sum += residual_[i];
            ++root.count;
        }
        tree.nodes.push_back(TreeNode{});
        stats_ = {root};
        std::vector<std::int32_t> active{0};

        for (int depth = 0; depth < params_.max_depth && !active.empty(); ++depth) {
            std::vector<SplitChoice> best(tree.nodes.size());
            if (params_.method == "exact")
                find_splits_exact(active, best);
            else
                find_splits_hist(active, best);

            std::vector<std::int32_t> next;
            for (const std::int32_t node : active) {
                const SplitChoice& ch = best[static_cast<std::size_t>(node)];
                if (ch.feature < 0 || ch.gain <= kMinGain) continue;
                // push_back may reallocate tree.nodes; never hold a reference across it
                const auto left = static_cast<std::int32_t>(tree.nodes.size());
                {
                    auto& tn = tree.nodes[static_cast<std::size_t>(node)];
                    tn.feature = ch.feature;
                    tn.threshold = ch.threshold;
                    tn.gain = ch.gain;
                    tn.left = left;
                    tn.right = left + 1;
                }
                tree.nodes.push_back(TreeNode{});
                tree.nodes.push_back(TreeNode{});
                stats_.push_back(NodeStats{});
                stats_.push_back(NodeStats{});
                next.push_back(left);
                next.push_back(left + 1);
            }
            if (next.empty()) break;
            // Reassign sampled rows to the children and rebuild their stats.
            for (const auto i : rows) {
                const std::int32_t node = leaf_of_[i];
                const TreeNode& tn = tree.nodes[static_cast<std::size_t>(node)];
                if (tn.feature < 0) continue;
                const std::int32_t child =
                    x_[i * n_features_ + static_cast<std::size_t>(tn.feature)] < tn.threshold
                        ? tn.left
                        : tn.right;
                leaf_of_[i] = child;
                auto& st = stats_[static_cast<std::size_t>(child)];
                st.sum += residual_[i];
                ++st.count;
            }
            active = std::move(next);
        }

        for (std::size_t nidx = 0; nidx < tree.nodes.size(); ++nidx) {
            auto& tn = tree.nodes[nidx];
            if (tn.feature < 0 && stats_[nidx].count > 0)
                tn.value = stats_[nidx].sum / static_cast<double>(stats_[nidx].count);
        }
        return tree;
    }

    void find_splits_exact(const std::vector<std::int32_t>& active,
                           std::vector<SplitChoice>& best) {
        struct Runner {
            double sum = 0.0;
            std::int64_t count = 0;
            double last = 0.0;
        };
        std::vector<Runner> run(best.size());
        std::vector<std::uint8_t> is_active(best.size(), 0);
        for (const std::int32_t node : active) is_active[static_cast<std::size_t>(node)] = 1;

        for (std::size_t f = 0; f < n_features_; ++f) {
            for (const std::int32_t node : active) run[static_cast<std::size_t>(node)] = Runner{};
            for (const std::uint32_t i : order_[f]) {
                const std::int32_t node = leaf_of_[i];
                if (node < 0 || !is_active[static_cast<std::size_t>(node)]) continue;
                auto& rn = run[static_cast<std::size_t>(node)];
                const double val = x_[i * n_features_ + f];
                const NodeStats& total = stats_[static_cast<std::size_t>(node)];
                if (rn.count > 0 && val != rn.last && rn.count >= params_.min_samples_leaf &&
                    total.count - rn.count >= params_.min_samples_leaf) {
                    const double gain = split_gain(rn.sum, rn.count, total.sum, total.count);
                    auto& b = best[static_cast<std::size_t>(node)];
                    if (gain > b.gain && gain > kMinGain) {
                        b.gain = gain;
                        b.feature = static_cast<std::int32_t>(f);
                        b.threshold = (rn.last + val) / 2.0;
                    }
                }
                rn.sum += residual_[i];
                ++rn.count;
                rn.last = val;
            }
        }
    }

    void find_splits_hist(const std::vector<std::int32_t>& active,
                          std::vector<SplitChoice>& best) {
        std::vector<std::int32_t> slot(best.size(), -1);
        for (std::size_t a = 0; a < active.size(); ++a)
            slot[static_cast<std::size_t>(active[a])] = static_cast<std::int32_t>(a);

        const std::size_t n_bins = static_cast<std::size_t>(params_.bins);
        std::vector<double> hsum(active.size() * n_bins);
        std::vector<std::int64_t> hcnt(active.size() * n_bins);

        for (std::size_t f = 0; f < n_features_; ++f) {
            const auto& edges = bin_edges_[f];
            if (edges.empty()) continue;
            std::fill(hsum.begin(), hsum.end(), 0.0);
            std::fill(hcnt.begin(), hcnt.end(), 0);
            for (std::size_t i = 0; i < n_; ++i) {
                const std::int32_t node = leaf_of_[i];
                if (node < 0 || slot[static_cast<std::size_t>(node)] < 0) continue;
                const std::size_t base =
                    static_cast<std::size_t>(slot[static_cast<std::size_t>(node)]) * n_bins +
                    binned_[i * n_features_ + f];
                hsum[base] += residual_[i];
                ++hcnt[base];
            }
            for (const std::int32_t node : active) {
                const std::size_t s = static_cast<std::size_t>(slot[static_cast<std::size_t>(node)]);
                const NodeStats& total = stats_[static_cast<std::size_t>(node)];
                double sl = 0.0;
                std::int64_t nl = 0;
                for (std::size_t b = 0; b < edges.size(); ++b) {
                    sl += hsum[s * n_bins + b];
                    nl += hcnt[s * n_bins + b];
                    if (nl < params_.min_samples_leaf) continue;
                    if (total.count - nl < params_.min_samples_leaf) break;
                    const double gain = split_gain(sl, nl, total.sum, total.count);
                    auto& bb = best[static_cast<std::size_t>(node)];
                    if (gain > bb.gain && gain > kMinGain) {
                        bb.gain = gain;
                        bb.feature = static_cast<std::int32_t>(f);
                        bb.threshold = edges[b];
                    }
                }
            }
        }
    }

    GbdtParams params_;
    std::size_t n_features_;
    std::vector<std::size_t> keep_;
    std::size_t n_ = 0;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> pred_;
    std::vector<double> residual_;
    std::vector<std::vector<std::uint32_t>> order_;
    std::vector<std::vector<double>> bin_edges_;
    std::vector<std::uint16_t> binned_;
    std::vector<std::int32_t> leaf_of_;
    std::vector<NodeStats> stats_;
};

}  // namespace

BoostedTreesModel BoostedTreesModel::train(const TrainingSet& ts, const GbdtParams& params) {
    if (ts.rows() == 0) throw FormatError("empty training set");
    if (ts.x.size() != ts.rows() * ts.features())
        throw FormatError("training matrix shape mismatch");
    if (params.trees < 1 || params.max_depth < 1)
        throw FormatError("gbdt params require trees >= 1 and max_depth >= 1");
    if (!(params.subsample > 0.0 && params.subsample <= 1.0))
        throw FormatError("subsample must be in (0, 1]");

    BoostedTreesModel m;
    m.schema_id_ = ts.schema_id;
    m.feature_names_ = ts.feature_names;
    m.params_ = params;
    Trainer tr(ts, params);
    tr.run(m.trees_, m.base_score_, m.train_loss_);
    return m;
}

double BoostedTreesModel::predict(std::span<const double> row) const {
    if (row.size() != feature_names_.size())
        throw SchemaMismatchError("feature row width " + std::to_string(row.size()) +
                                  " does not match model width " +
                                  std::to_string(feature_names_.size()));
    double acc = base_score_;
    for (const auto& t : trees_) acc += params_.learning_rate * t.predict(row.data());
    return acc;
}

double BoostedTreesModel::predict_checked(std::span<const double> row,
                                          const std::string& schema_id) const {
    if (schema_id != schema_id_)
        throw SchemaMismatchError("feature schema " + schema_id + " does not match model schema " +
                                  schema_id_);
    return predict(row);
}

std::vector<std::pair<std::string, double>> BoostedTreesModel::feature_importance() const {
    std::vector<double> gain(feature_names_.size(), 0.0);
    for (const auto& t : trees_)
        for (const auto& n : t.nodes)
            if (n.feature >= 0) gain[static_cast<std::size_t>(n.feature)] += n.gain;
    std::vector<std::size_t> idx(gain.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
    std::vector<std::pair<std::string, double>> out;
    out.reserve(idx.size());
    for (const auto i : idx) out.emplace_back(feature_names_[i], gain[i]);
    return out;
}

double BoostedTreesModel::total_gain() const {
    double total = 0.0;
    for (const auto& t : trees_)
        for (const auto& n : t.nodes)
            if (n.feature >= 0) total += n.gain;
    return total;
}

namespace {
constexpr const char* kModelFormat = "fanns-gbdt";
constexpr int kModelVersion = 1;
}  // namespace

void BoostedTreesModel::save(const std::string& path) const {
    json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["schema_id"] = schema_id_;
    j["feature_names"] = feature_names_;
    j["base_score"] = base_score_;
    j["learning_rate"] = params_.learning_rate;
    j["params"] = {{"trees", params_.trees},
                   {"max_depth", params_.max_depth},
                   {"subsample", params_.subsample},
                   {"min_samples_leaf", params_.min_samples_leaf},
                   {"seed", params_.seed},
                   {"method", params_.method},
                   {"bins", params_.bins},
                   {"drop_disconnected", params_.drop_disconnected}};
    json trees = json::array();
    for (const auto& t : trees_) {
        json nodes = json::array();
        for (const auto& n : t.nodes) {
            nodes.push_back({{"f", n.feature},
                             {"t", n.threshold},
                             {"l", n.left},
                             {"r", n.right},
                             {"v", n.value},
                             {"g", n.gain}});
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

BoostedTreesModel BoostedTreesModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kModelFormat)
            throw FormatError(path + ": not a model file");
        if (j.at("version").get<int>() != kModelVersion)
            throw FormatError(path + ": unsupported model version");
        BoostedTreesModel m;
        m.schema_id_ = j.at("schema_id").get<std::string>();
        m.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
        m.base_score_ = j.at("base_score").get<double>();
        const auto& p = j.at("params");
        m.params_.trees = p.at("trees").get<int>();
        m.params_.max_depth = p.at("max_depth").get<int>();
        m.params_.learning_rate = j.at("learning_rate").get<double>();
        m.params_.subsample = p.at("subsample").get<double>();
        m.params_.min_samples_leaf = p.at("min_samples_leaf").get<int>();
        m.params_.seed = p.at("seed").get<std::uint64_t>();
        m.params_.method = p.at("method").get<std::string>();
        m.params_.bins = p.at("bins").get<int>();
        m.params_.drop_disconnected = p.at("drop_disconnected").get<bool>();
        for (const auto& jt : j.at("trees")) {
            RegressionTree t;
            for (const auto& jn : jt.at("nodes")) {
                TreeNode n;
                n.feature = jn.at("f").get<std::int32_t>();
                n.threshold = jn.at("t").get<double>();
                n.left = jn.at("l").get<std::int32_t>();
                n.right = jn.at("r").get<std::int32_t>();
                n.value = jn.at("v").get<double>();
                n.gain = jn.at("g").get<double>();
                t.nodes.push_back(n);
            }
            if (t.nodes.empty()) throw FormatError(path + ": empty tree");
            m.trees_.push_back(std::move(t));
        }
        return m;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

}  // namespace fanns
