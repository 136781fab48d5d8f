#include "sevkit/linear.hpp"

#include "sevkit/errors.hpp"

namespace sevkit {

void Classifier::check_dim(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim())
        fail(errc::dimension_mismatch, "input has " + std::to_string(x.size()) + " columns, model expects " +
                                           std::to_string(input_dim()));
}

std::string to_string(model_kind k) {
    switch (k) {
        case model_kind::linear: return "linear";
        case model_kind::mlp: return "mlp";
        case model_kind::gbdt: return "gbdt";
    }
    return "linear";
}

double LinearModel::margin(std::span<const double> x) const {
    check_dim(x);
    double z = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) z += coef[j] * x[j];
    return z;
}

void LinearModel::get_params(std::span<double> out) const {
    out[0] = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) out[j + 1] = coef[j];
}

void LinearModel::set_params(std::span<const double> in) {
    intercept = in[0];
    for (std::size_t j = 0; j < coef.size(); ++j) coef[j] = in[j + 1];
}

void LinearModel::accumulate_margin_grad(std::span<const double> x, double weight,
                                         std::span<double> grad) const {
    check_dim(x);
    grad[0] += weight;
    for (std::size_t j = 0; j < coef.size(); ++j) grad[j + 1] += weight * x[j];
}

std::vector<bool> LinearModel::used_encoded_columns() const {
    std::vector<bool> used(coef.size(), false);
    for (std::size_t j = 0; j < coef.size(); ++j) used[j] = coef[j] != 0.0;
    return used;
}

nlohmann::json LinearModel::payload_json() const {
    return nlohmann::json{{"intercept", intercept}, {"coef", coef}};
}

LinearModel LinearModel::from_payload(const nlohmann::json& j) {
    LinearModel m;
    m.intercept = j.at("intercept").get<double>();
    m.coef = j.at("coef").get<std::vector<double>>();
    return m;
}

} // namespace sevkit
