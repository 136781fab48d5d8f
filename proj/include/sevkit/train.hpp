#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <vector>

#include "sevkit/dataset.hpp"
#include "sevkit/losses.hpp"
#include "sevkit/model.hpp"

namespace sevkit {

enum class optimizer_kind { adam, sgd };
std::string to_string(optimizer_kind k);
optimizer_kind optimizer_kind_from_string(const std::string& s);

struct TrainConfig {
    double c1 = 1.0;
    double c2 = 10.0;
    double theta = 0.05;       // reference-penalty margin, must be < threshold
    double eps_clamp = 1e-6;   // vol-opt ratio clamp
    double threshold = 0.5;
    double learning_rate = 0.1;
    int batch_size = 128;
    int warmup_epochs = 70;    // plain cross-entropy epochs
    int sev_epochs = 30;       // epochs with the SEV and reference-penalty terms added
    std::uint64_t seed = 0;
    optimizer_kind optimizer = optimizer_kind::adam;
    bool paper_literal_clamp = false;

    // linear penalties; l1 runs as a proximal soft-threshold after each step
    // so coefficients reach exact zeros
    double l1 = 0.0;
    double l2 = 0.0;

    // early stopping (baseline/BCE-only runs; off by default so warm-up
    // equivalence holds exactly)
    bool early_stopping = false;
    int patience = 5;
    double val_fraction = 0.10;

    // per-epoch SEV monitoring on a train subsample
    int monitor_queries = 256;
    int monitor_depth = 3;

    exec_mode exec = exec_mode::parallel;

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double bce = 0.0;
    double sev_loss = 0.0;
    double pos_base = 0.0;
    double accuracy = 0.0;
    double mean_sev = std::numeric_limits<double>::quiet_NaN(); // NaN when unavailable
};

struct TrainResult {
    std::unique_ptr<Classifier> model;
    std::vector<EpochRecord> history;
    bool reference_negative = false; // g(reference) < threshold after training
};

// Minibatch training of the combined objective: warmup_epochs of plain BCE,
// then sev_epochs with the SEV term and reference penalty added. GBDT models
// train only tree weights and intercept.
TrainResult train(std::unique_ptr<Classifier> model, const EncodedDataset& train_data,
                  const Reference& reference, const TrainConfig& config, sev_loss_kind kind,
                  Mask restricted = 0);

// BCE-only reference models, the unoptimized comparison points
TrainResult fit_baseline(model_kind kind, const EncodedDataset& train_data,
                         const Reference& reference, const TrainConfig& config, int hidden = 128,
                         int n_trees = 200, int tree_depth = 3);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

} // namespace sevkit
