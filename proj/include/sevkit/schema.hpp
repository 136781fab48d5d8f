#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace sevkit {

enum class feature_kind { numeric, binary, categorical };

std::string to_string(feature_kind k);
feature_kind feature_kind_from_string(const std::string& s);

struct FeatureSpec {
    std::string name;
    feature_kind kind = feature_kind::numeric;
    std::vector<std::string> levels; // binary: exactly 2; categorical: >= 2; numeric: empty
    bool restricted = false;
};

// Declares the original (pre-encoding) feature space, the label column and
// which raw label value counts as positive.
struct FeatureSchema {
    std::vector<FeatureSpec> features;
    std::string label_name;
    std::string positive_label;

    int feature_count() const { return static_cast<int>(features.size()); }
    int feature_index(const std::string& name) const; // -1 if absent
    std::vector<int> restricted_indices() const;

    // throws bad_config on duplicate names, empty/duplicate level lists,
    // binary features without exactly two levels
    void validate() const;

    nlohmann::json to_json() const;
    static FeatureSchema from_json(const nlohmann::json& j);
    static FeatureSchema load(const std::filesystem::path& p);
    void save(const std::filesystem::path& p) const;
};

} // namespace sevkit
