#pragma once

#include <cstdint>

#include "sevkit/model.hpp"
#include "sevkit/parallel.hpp"

namespace sevkit {

struct EncodedDataset; // dataset.hpp

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double eval(std::span<const double> x) const {
        int n = 0;
        while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(n)];
            n = x[static_cast<std::size_t>(nd.feature)] <= nd.split ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(n)].value;
    }
    int depth() const;
};

// Weighted tree ensemble: margin(x) = intercept + sum_t w_t * tree_t(x).
// Leaf values are frozen after boosting; only (intercept, w) are trainable,
// so the pre-sigmoid score is linear in the parameters.
class GbdtModel final : public Classifier {
public:
    std::vector<Tree> trees;
    std::vector<double> weights;
    double intercept = 0.0;

    model_kind kind() const override { return model_kind::gbdt; }
    int input_dim() const override { return input_dim_; }
    void set_input_dim(int d) { input_dim_ = d; }

    double margin(std::span<const double> x) const override;

    int param_count() const override { return 1 + static_cast<int>(weights.size()); }
    void get_params(std::span<double> out) const override;
    void set_params(std::span<const double> in) override;
    void accumulate_margin_grad(std::span<const double> x, double weight,
                                std::span<double> grad) const override;

    std::vector<bool> used_encoded_columns() const override;
    std::unique_ptr<Classifier> clone() const override { return std::make_unique<GbdtModel>(*this); }
    nlohmann::json payload_json() const override;
    static GbdtModel from_payload(const nlohmann::json& j);

private:
    int input_dim_ = 0;
};

struct GbdtConfig {
    int n_trees = 200;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_samples_leaf = 5;
    exec_mode exec = exec_mode::parallel;
};

// Gradient boosting on logistic loss; all tree weights start at 1 and the
// intercept is the base-rate log-odds.
GbdtModel fit_gbdt(const EncodedDataset& train, const GbdtConfig& config);

} // namespace sevkit
