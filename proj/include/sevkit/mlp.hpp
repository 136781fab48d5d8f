#pragma once

#include <cstdint>

#include "sevkit/model.hpp"

namespace sevkit {

// Two rectifier hidden layers of equal width, sigmoid output.
// Parameter layout: [W1 (h x in), b1, W2 (h x h), b2, w3 (h), b3].
class MlpModel final : public Classifier {
public:
    MlpModel() = default;
    MlpModel(int in_dim, int hidden);

    // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), seeded
    static MlpModel random_init(int in_dim, int hidden, std::uint64_t seed);

    model_kind kind() const override { return model_kind::mlp; }
    int input_dim() const override { return in_dim_; }
    int hidden_width() const { return hidden_; }

    double margin(std::span<const double> x) const override;
    // hidden-layer pre-activations; tests use these to stay off rectifier kinks
    void preactivations(std::span<const double> x, std::vector<double>& z1,
                        std::vector<double>& z2) const;

    int param_count() const override;
    void get_params(std::span<double> out) const override;
    void set_params(std::span<const double> in) override;
    void accumulate_margin_grad(std::span<const double> x, double weight,
                                std::span<double> grad) const override;

    std::vector<bool> used_encoded_columns() const override;
    std::unique_ptr<Classifier> clone() const override { return std::make_unique<MlpModel>(*this); }
    nlohmann::json payload_json() const override;
    static MlpModel from_payload(const nlohmann::json& j);

private:
    int in_dim_ = 0;
    int hidden_ = 0;
    std::vector<double> w1_, b1_, w2_, b2_, w3_;
    double b3_ = 0.0;

    // forward pass storing pre-activations; shared by margin and backprop
    void forward(std::span<const double> x, std::vector<double>& z1, std::vector<double>& z2,
                 double& z3) const;
};

} // namespace sevkit
