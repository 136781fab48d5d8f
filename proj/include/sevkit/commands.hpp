#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sevkit/engine.hpp"
#include "sevkit/train.hpp"
#include "sevkit/volume.hpp"

namespace sevkit {

// Every command writes exactly one manifest.json into its output directory:
// command name, config digest, seed, input digests, tool version, timestamp,
// plus measured timings (the one intentionally non-deterministic block).
void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    std::uint64_t seed, const nlohmann::json& config,
                    const std::vector<std::pair<std::string, std::string>>& input_digests,
                    const nlohmann::json& timings = {});

struct PrepareArgs {
    std::filesystem::path csv;
    std::filesystem::path schema;
    std::filesystem::path out_dir;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};
struct PrepareSummary {
    int n_train = 0;
    int n_test = 0;
    int p_enc = 0;
};
PrepareSummary cmd_prepare(const PrepareArgs& args);

struct TrainArgs {
    std::filesystem::path prepared_dir;
    std::filesystem::path out_dir;
    model_kind model = model_kind::linear;
    sev_loss_kind sev = sev_loss_kind::none;
    TrainConfig config;
    int hidden = 128;
    int n_trees = 200;
    int tree_depth = 3;
    std::vector<std::string> restricted_override; // empty: schema restricted flags
};
struct TrainSummary {
    double test_accuracy = 0.0;
    double test_auc = 0.0;
    double mean_sev = 0.0; // kind-matched mean over positive test queries
    bool reference_negative = false;
    std::filesystem::path model_path;
};
TrainSummary cmd_train(const TrainArgs& args);

struct ExplainArgs {
    std::filesystem::path model_path;
    std::filesystem::path prepared_dir;
    std::filesystem::path out_dir;
    sev_kind kind = sev_kind::minus;
    int depth_limit = 6;
    int max_explanations = 32;
    std::string split = "test"; // "train" or "test"
    std::vector<std::string> restricted_override;
    std::vector<int> query_ids; // empty: all rows of the split
    exec_mode exec = exec_mode::parallel;
};
SevStats cmd_explain(const ExplainArgs& args);

struct CompareArgs {
    std::filesystem::path model_path;
    std::filesystem::path prepared_dir;
    std::filesystem::path importance_csv; // global or per-query feature ranks
    std::filesystem::path out_dir;
    std::string split = "test";
    int depth_limit = 6;
    exec_mode exec = exec_mode::parallel;
};
struct CompareSummary {
    int n_queries = 0;
    int n_unexplained_flip = 0;
    double mean_flip = 0.0; // over queries with a finite flip count
    double mean_sev_minus = 0.0;
};
CompareSummary cmd_compare(const CompareArgs& args);

struct VolcheckArgs {
    std::filesystem::path out_dir;
    int canonical_p = 3;                        // used when model_path is empty
    std::optional<std::filesystem::path> model_path;
    std::optional<std::filesystem::path> prepared_dir;
    long n_samples = 1000000;
    std::uint64_t seed = 0;
    exec_mode exec = exec_mode::parallel;
};
VolumeReport cmd_volcheck(const VolcheckArgs& args);

struct StatsArgs {
    std::filesystem::path model_path;
    std::filesystem::path prepared_dir;
    std::filesystem::path out_dir;
    sev_kind kind = sev_kind::plus;
    int depth_limit = 6;
    std::string split = "test";
    std::vector<std::string> restricted_override;
    std::optional<std::filesystem::path> baseline_model; // adds SEV transition counts
    exec_mode exec = exec_mode::parallel;
};
struct StatsSummary {
    double accuracy = 0.0;
    double auc = 0.0;
    SevStats sev;
};
StatsSummary cmd_stats(const StatsArgs& args);

// shared helpers
Mask restricted_mask_from(const FeatureSchema& schema, const std::vector<std::string>& override_names);
std::string format_sig4(double v); // 4 significant digits for report lines

} // namespace sevkit
