#include "sevkit/schema.hpp"

#include <set>

#include "sevkit/errors.hpp"
#include "sevkit/io_util.hpp"

namespace sevkit {

std::string to_string(feature_kind k) {
    switch (k) {
        case feature_kind::numeric: return "numeric";
        case feature_kind::binary: return "binary";
        case feature_kind::categorical: return "categorical";
    }
    return "numeric";
}

feature_kind feature_kind_from_string(const std::string& s) {
    if (s == "numeric") return feature_kind::numeric;
    if (s == "binary") return feature_kind::binary;
    if (s == "categorical") return feature_kind::categorical;
    fail(errc::bad_config, "unknown feature kind: " + s);
}

int FeatureSchema::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i)
        if (features[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<int> FeatureSchema::restricted_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < features.size(); ++i)
        if (features[i].restricted) out.push_back(static_cast<int>(i));
    return out;
}

void FeatureSchema::validate() const {
    if (features.empty()) fail(errc::bad_config, "schema declares no features");
    if (label_name.empty()) fail(errc::bad_config, "schema missing label column name");
    std::set<std::string> names;
    for (const auto& f : features) {
        if (f.name.empty()) fail(errc::bad_config, "schema feature with empty name");
        if (!names.insert(f.name).second) fail(errc::bad_config, "duplicate feature name: " + f.name);
        if (f.name == label_name) fail(errc::bad_config, "label column listed as feature: " + f.name);
        switch (f.kind) {
            case feature_kind::numeric:
                if (!f.levels.empty()) fail(errc::bad_config, "numeric feature with levels: " + f.name);
                break;
            case feature_kind::binary:
                if (f.levels.size() != 2)
                    fail(errc::bad_config, "binary feature must declare exactly 2 levels: " + f.name);
                break;
            case feature_kind::categorical:
                if (f.levels.empty()) fail(errc::bad_config, "categorical feature with no levels: " + f.name);
                break;
        }
        std::set<std::string> lv(f.levels.begin(), f.levels.end());
        if (lv.size() != f.levels.size()) fail(errc::bad_config, "duplicate level in feature: " + f.name);
    }
}

nlohmann::json FeatureSchema::to_json() const {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : features) {
        nlohmann::json jf;
        jf["name"] = f.name;
        jf["kind"] = to_string(f.kind);
        if (!f.levels.empty()) jf["levels"] = f.levels;
        if (f.restricted) jf["restricted"] = true;
        feats.push_back(jf);
    }
    return nlohmann::json{{"format_version", kFormatVersion},
                          {"label", {{"name", label_name}, {"positive", positive_label}}},
                          {"features", feats}};
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
    FeatureSchema s;
    if (!j.contains("features") || !j.contains("label"))
        fail(errc::bad_config, "schema JSON must contain 'features' and 'label'");
    s.label_name = j.at("label").at("name").get<std::string>();
    s.positive_label = j.at("label").value("positive", "1");
    for (const auto& jf : j.at("features")) {
        FeatureSpec f;
        f.name = jf.at("name").get<std::string>();
        f.kind = feature_kind_from_string(jf.value("kind", "numeric"));
        if (jf.contains("levels")) f.levels = jf.at("levels").get<std::vector<std::string>>();
        f.restricted = jf.value("restricted", false);
        s.features.push_back(std::move(f));
    }
    s.validate();
    return s;
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& p) {
    return from_json(load_json(p));
}

void FeatureSchema::save(const std::filesystem::path& p) const { save_json(p, to_json()); }

} // namespace sevkit
