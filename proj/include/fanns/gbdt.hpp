#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fanns/common.hpp"

namespace fanns {

// Row flags attached by harvesting.
inline constexpr std::uint32_t kRowClampedToProbe = 1;   // full recall inside the probe
inline constexpr std::uint32_t kRowDisconnected = 2;     // queue exhausted before full recall
inline constexpr std::uint32_t kRowProbeExhausted = 4;   // queue exhausted before the probe ended
inline constexpr std::uint32_t kRowEmptyTruth = 8;

struct TrainingSet {
    std::string schema_id;
    std::vector<std::string> feature_names;
    std::vector<double> x;  // row-major, n_rows x n_features
    std::vector<double> y;  // log cost targets
    std::vector<std::uint32_t> flags;

    std::size_t rows() const { return y.size(); }
    std::size_t features() const { return feature_names.size(); }
    const double* row(std::size_t i) const { return x.data() + i * features(); }
};

struct GbdtParams {
    int trees = 200;
    int max_depth = 8;
    double learning_rate = 0.1;
    double subsample = 0.8;
    int min_samples_leaf = 20;
    std::uint64_t seed = 0;
    std::string method = "exact";  // "exact" or "hist"
    int bins = 256;                // hist mode only
    bool drop_disconnected = false;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;  // leaf value (unscaled)
    double gain = 0.0;   // split gain, for importance
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    double predict(const double* row) const;
};

// Squared-error gradient boosting on the (already log-transformed) target.
// Trees store raw leaf means; the learning rate is applied at prediction.
class BoostedTreesModel {
public:
    static BoostedTreesModel train(const TrainingSet& ts, const GbdtParams& params);

    double predict(std::span<const double> row) const;
    double predict_checked(std::span<const double> row, const std::string& schema_id) const;

    // Total split gain per feature, descending; ties by feature index.
    std::vector<std::pair<std::string, double>> feature_importance() const;
    double total_gain() const;

    void save(const std::string& path) const;
    static BoostedTreesModel load(const std::string& path);

    const std::string& schema_id() const { return schema_id_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    double base_score() const { return base_score_; }
    double learning_rate() const { return params_.learning_rate; }
    std::size_t tree_count() const { return trees_.size(); }
    const GbdtParams& params() const { return params_; }

    // Per-round training MSE (filled by train, not serialized).
    const std::vector<double>& train_loss_curve() const { return train_loss_; }

private:
    std::string schema_id_;
    std::vector<std::string> feature_names_;
    double base_score_ = 0.0;
    GbdtParams params_;
    std::vector<RegressionTree> trees_;
    std::vector<double> train_loss_;
};

}  // namespace fanns
