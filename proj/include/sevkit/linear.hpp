#pragma once

#include <cstdint>

#include "sevkit/model.hpp"

namespace sevkit {

// Logistic-linear classifier. margin(x) = intercept + coef . x is also the
// raw score of the sign-rule classifier 1[margin > 0]; with threshold 0.5
// the two decision rules coincide.
class LinearModel final : public Classifier {
public:
    LinearModel() = default;
    explicit LinearModel(int dim) : coef(static_cast<std::size_t>(dim), 0.0) {}

    double intercept = 0.0;
    std::vector<double> coef;

    model_kind kind() const override { return model_kind::linear; }
    int input_dim() const override { return static_cast<int>(coef.size()); }

    double margin(std::span<const double> x) const override;
    double raw_score(std::span<const double> x) const { return margin(x); }
    int predict_sign(std::span<const double> x) const { return margin(x) > 0.0 ? 1 : 0; }

    int param_count() const override { return 1 + static_cast<int>(coef.size()); }
    void get_params(std::span<double> out) const override;
    void set_params(std::span<const double> in) override;
    void accumulate_margin_grad(std::span<const double> x, double weight,
                                std::span<double> grad) const override;

    std::vector<bool> used_encoded_columns() const override;
    std::unique_ptr<Classifier> clone() const override { return std::make_unique<LinearModel>(*this); }
    nlohmann::json payload_json() const override;
    static LinearModel from_payload(const nlohmann::json& j);
};

} // namespace sevkit
