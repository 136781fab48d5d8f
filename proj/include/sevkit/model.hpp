#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace sevkit {

enum class model_kind { linear, mlp, gbdt };

std::string to_string(model_kind k);

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// Scored binary classifier: g(x) = sigmoid(margin(x)) in [0,1],
// f(x) = 1 iff g(x) > threshold (strict).
//
// Training works on the flat parameter vector; accumulate_margin_grad adds
// weight * d margin/d theta, from which every loss builds its own chain.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual model_kind kind() const = 0;
    virtual int input_dim() const = 0;

    virtual double margin(std::span<const double> x) const = 0;
    double score(std::span<const double> x) const { return sigmoid(margin(x)); }
    int predict(std::span<const double> x) const { return score(x) > threshold ? 1 : 0; }

    virtual int param_count() const = 0;
    virtual void get_params(std::span<double> out) const = 0;
    virtual void set_params(std::span<const double> in) = 0;
    virtual void accumulate_margin_grad(std::span<const double> x, double weight,
                                        std::span<double> grad) const = 0;

    // encoded columns the model actually reads (nonzero weight / used in a split)
    virtual std::vector<bool> used_encoded_columns() const = 0;

    virtual std::unique_ptr<Classifier> clone() const = 0;
    virtual nlohmann::json payload_json() const = 0;

    double threshold = 0.5;

protected:
    void check_dim(std::span<const double> x) const;
};

std::string serialize(const Classifier& model);
std::unique_ptr<Classifier> deserialize(const std::string& bytes);
void save_model(const std::filesystem::path& path, const Classifier& model,
                const std::string& data_digest = "");
std::unique_ptr<Classifier> load_model(const std::filesystem::path& path,
                                       std::string* data_digest_out = nullptr);

struct ColumnSpan; // dataset.hpp

// number of original features the model uses, given the encoded group spans;
// unexplained queries substitute this count into batch means
int used_feature_count(const Classifier& model, const std::vector<ColumnSpan>& groups);

} // namespace sevkit
