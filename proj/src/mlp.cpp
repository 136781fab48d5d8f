#include "sevkit/mlp.hpp"

#include <cmath>

#include "sevkit/errors.hpp"
#include "sevkit/rng.hpp"

namespace sevkit {

namespace {
inline double relu(double z) { return z > 0.0 ? z : 0.0; }
// subgradient at 0 taken as 0
inline double relu_grad(double z) { return z > 0.0 ? 1.0 : 0.0; }
} // namespace

MlpModel::MlpModel(int in_dim, int hidden) : in_dim_(in_dim), hidden_(hidden) {
    w1_.assign(static_cast<std::size_t>(hidden) * in_dim, 0.0);
    b1_.assign(static_cast<std::size_t>(hidden), 0.0);
    w2_.assign(static_cast<std::size_t>(hidden) * hidden, 0.0);
    b2_.assign(static_cast<std::size_t>(hidden), 0.0);
    w3_.assign(static_cast<std::size_t>(hidden), 0.0);
}

MlpModel MlpModel::random_init(int in_dim, int hidden, std::uint64_t seed) {
    MlpModel m(in_dim, hidden);
    Rng rng(seed);
    auto fill = [&rng](std::vector<double>& v, int fan_in) {
        double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& w : v) w = rng.next_uniform(-a, a);
    };
    fill(m.w1_, in_dim);
    fill(m.b1_, in_dim);
    fill(m.w2_, hidden);
    fill(m.b2_, hidden);
    fill(m.w3_, hidden);
    m.b3_ = rng.next_uniform(-1.0 / std::sqrt(static_cast<double>(hidden)),
                             1.0 / std::sqrt(static_cast<double>(hidden)));
    return m;
}

void MlpModel::forward(std::span<const double> x, std::vector<double>& z1, std::vector<double>& z2,
                       double& z3) const {
    const int h = hidden_;
    z1.resize(static_cast<std::size_t>(h));
    z2.resize(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
        double s = b1_[static_cast<std::size_t>(i)];
        const double* w = w1_.data() + static_cast<std::size_t>(i) * in_dim_;
        for (int k = 0; k < in_dim_; ++k) s += w[k] * x[static_cast<std::size_t>(k)];
        z1[static_cast<std::size_t>(i)] = s;
    }
    for (int i = 0; i < h; ++i) {
        double s = b2_[static_cast<std::size_t>(i)];
        const double* w = w2_.data() + static_cast<std::size_t>(i) * h;
        for (int k = 0; k < h; ++k) s += w[k] * relu(z1[static_cast<std::size_t>(k)]);
        z2[static_cast<std::size_t>(i)] = s;
    }
    z3 = b3_;
    for (int i = 0; i < h; ++i) z3 += w3_[static_cast<std::size_t>(i)] * relu(z2[static_cast<std::size_t>(i)]);
}

double MlpModel::margin(std::span<const double> x) const {
    check_dim(x);
    thread_local std::vector<double> z1, z2;
    double z3 = 0.0;
    forward(x, z1, z2, z3);
    return z3;
}

void MlpModel::preactivations(std::span<const double> x, std::vector<double>& z1,
                              std::vector<double>& z2) const {
    check_dim(x);
    double z3 = 0.0;
    forward(x, z1, z2, z3);
}

int MlpModel::param_count() const {
    return static_cast<int>(w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size()) + 1;
}

void MlpModel::get_params(std::span<double> out) const {
    std::size_t o = 0;
    for (double v : w1_) out[o++] = v;
    for (double v : b1_) out[o++] = v;
    for (double v : w2_) out[o++] = v;
    for (double v : b2_) out[o++] = v;
    for (double v : w3_) out[o++] = v;
    out[o] = b3_;
}

void MlpModel::set_params(std::span<const double> in) {
    std::size_t o = 0;
    for (double& v : w1_) v = in[o++];
    for (double& v : b1_) v = in[o++];
    for (double& v : w2_) v = in[o++];
    for (double& v : b2_) v = in[o++];
    for (double& v : w3_) v = in[o++];
    b3_ = in[o];
}

void MlpModel::accumulate_margin_grad(std::span<const double> x, double weight,
                                      std::span<double> grad) const {
    check_dim(x);
    const int h = hidden_;
    thread_local std::vector<double> z1, z2, d2, d1;
    double z3 = 0.0;
    forward(x, z1, z2, z3);

    d2.resize(static_cast<std::size_t>(h));
    d1.resize(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i)
        d2[static_cast<std::size_t>(i)] =
            w3_[static_cast<std::size_t>(i)] * relu_grad(z2[static_cast<std::size_t>(i)]);
    for (int k = 0; k < h; ++k) {
        double s = 0.0;
        for (int i = 0; i < h; ++i)
            s += d2[static_cast<std::size_t>(i)] * w2_[static_cast<std::size_t>(i) * h + k];
        d1[static_cast<std::size_t>(k)] = s * relu_grad(z1[static_cast<std::size_t>(k)]);
    }

    std::size_t o = 0;
    for (int i = 0; i < h; ++i) {
        double di = weight * d1[static_cast<std::size_t>(i)];
        for (int k = 0; k < in_dim_; ++k) grad[o++] += di * x[static_cast<std::size_t>(k)];
    }
    for (int i = 0; i < h; ++i) grad[o++] += weight * d1[static_cast<std::size_t>(i)];
    for (int i = 0; i < h; ++i) {
        double di = weight * d2[static_cast<std::size_t>(i)];
        for (int k = 0; k < h; ++k) grad[o++] += di * relu(z1[static_cast<std::size_t>(k)]);
    }
    for (int i = 0; i < h; ++i) grad[o++] += weight * d2[static_cast<std::size_t>(i)];
    for (int i = 0; i < h; ++i) grad[o++] += weight * relu(z2[static_cast<std::size_t>(i)]);
    grad[o] += weight;
}

std::vector<bool> MlpModel::used_encoded_columns() const {
    std::vector<bool> used(static_cast<std::size_t>(in_dim_), false);
    for (int i = 0; i < hidden_; ++i)
        for (int k = 0; k < in_dim_; ++k)
            if (w1_[static_cast<std::size_t>(i) * in_dim_ + k] != 0.0) used[static_cast<std::size_t>(k)] = true;
    return used;
}

nlohmann::json MlpModel::payload_json() const {
    return nlohmann::json{{"in_dim", in_dim_}, {"hidden", hidden_}, {"w1", w1_}, {"b1", b1_},
                          {"w2", w2_},         {"b2", b2_},         {"w3", w3_}, {"b3", b3_}};
}

MlpModel MlpModel::from_payload(const nlohmann::json& j) {
    MlpModel m(j.at("in_dim").get<int>(), j.at("hidden").get<int>());
    m.w1_ = j.at("w1").get<std::vector<double>>();
    m.b1_ = j.at("b1").get<std::vector<double>>();
    m.w2_ = j.at("w2").get<std::vector<double>>();
    m.b2_ = j.at("b2").get<std::vector<double>>();
    m.w3_ = j.at("w3").get<std::vector<double>>();
    m.b3_ = j.at("b3").get<double>();
    return m;
}

} // namespace sevkit
