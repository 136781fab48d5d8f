#include <json.hpp>

#include "sevkit/dataset.hpp"
#include "sevkit/errors.hpp"
#include "sevkit/gbdt.hpp"
#include "sevkit/io_util.hpp"
#include "sevkit/linear.hpp"
#include "sevkit/mlp.hpp"
#include "sevkit/model.hpp"

namespace sevkit {

namespace {
constexpr const char* kModelMagic = "sevkit-model";
}

std::string serialize(const Classifier& model) {
    nlohmann::json j{{"magic", kModelMagic},
                     {"format_version", kFormatVersion},
                     {"kind", to_string(model.kind())},
                     {"threshold", model.threshold},
                     {"payload", model.payload_json()}};
    return j.dump(2) + "\n";
}

std::unique_ptr<Classifier> deserialize(const std::string& bytes) {
    nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("magic", "") != kModelMagic)
        fail(errc::corrupt_payload, "not a model payload (bad magic header)");
    int version = j.value("format_version", -1);
    if (version != kFormatVersion)
        fail(errc::version_mismatch, "model format_version " + std::to_string(version) +
                                         " not supported by this reader (expects " +
                                         std::to_string(kFormatVersion) + ")");
    std::string kind = j.at("kind").get<std::string>();
    std::unique_ptr<Classifier> m;
    if (kind == "linear")
        m = std::make_unique<LinearModel>(LinearModel::from_payload(j.at("payload")));
    else if (kind == "mlp")
        m = std::make_unique<MlpModel>(MlpModel::from_payload(j.at("payload")));
    else if (kind == "gbdt")
        m = std::make_unique<GbdtModel>(GbdtModel::from_payload(j.at("payload")));
    else
        fail(errc::corrupt_payload, "unknown model kind: " + kind);
    m->threshold = j.at("threshold").get<double>();
    return m;
}

void save_model(const std::filesystem::path& path, const Classifier& model,
                const std::string& data_digest) {
    nlohmann::json j = nlohmann::json::parse(serialize(model));
    if (!data_digest.empty()) j["data_digest"] = data_digest;
    atomic_write(path, j.dump(2) + "\n");
}

std::unique_ptr<Classifier> load_model(const std::filesystem::path& path, std::string* data_digest_out) {
    auto text = read_file(path);
    auto model = deserialize(text);
    if (data_digest_out) {
        nlohmann::json j = nlohmann::json::parse(text);
        *data_digest_out = j.value("data_digest", "");
    }
    return model;
}

int used_feature_count(const Classifier& model, const std::vector<ColumnSpan>& groups) {
    auto used = model.used_encoded_columns();
    int count = 0;
    for (const auto& g : groups) {
        for (int c = g.begin; c < g.end; ++c)
            if (used[static_cast<std::size_t>(c)]) {
                ++count;
                break;
            }
    }
    return count;
}

} // namespace sevkit
