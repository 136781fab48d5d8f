#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sevkit/schema.hpp"

namespace sevkit {

// One original feature's column: numeric features fill `num`, binary and
// categorical features fill `level` with indices into the declared levels.
struct RawColumn {
    std::vector<double> num;
    std::vector<int> level;
};

struct RawDataset {
    FeatureSchema schema;
    std::vector<RawColumn> cols;
    std::vector<int> labels; // 0/1

    int n() const { return static_cast<int>(labels.size()); }
    int p() const { return schema.feature_count(); }
};

RawDataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema);

// Per-class counts rounded half up, remainder absorbed by the majority class;
// identical seed gives identical partitions on every platform.
std::pair<RawDataset, RawDataset> stratified_split(const RawDataset& raw, double test_fraction,
                                                   std::uint64_t seed);

struct ColumnSpan {
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
};

struct NumericStats {
    double mean = 0.0;
    double std_dev = 1.0;
    bool scaled = true; // false when the column had ~zero variance (centered only)
};

struct Standardization {
    // indexed by original feature; entries for non-numeric features are unused
    std::vector<NumericStats> per_feature;
    std::vector<std::string> warnings;
};

struct EncodedDataset {
    FeatureSchema schema;
    int n = 0;
    int p_enc = 0;
    std::vector<double> X; // row-major n x p_enc
    std::vector<int> y;
    std::vector<ColumnSpan> groups; // one span per original feature
    std::vector<std::string> col_names;
    Standardization stats;

    int p_orig() const { return static_cast<int>(groups.size()); }
    std::span<const double> row(int i) const {
        return {X.data() + static_cast<std::size_t>(i) * p_enc, static_cast<std::size_t>(p_enc)};
    }
    std::span<double> row_mut(int i) {
        return {X.data() + static_cast<std::size_t>(i) * p_enc, static_cast<std::size_t>(p_enc)};
    }
};

// fits standardization stats when `fitted` is null (training split); applies
// them unchanged otherwise (test split)
EncodedDataset encode(const RawDataset& raw, const Standardization* fitted = nullptr);

// inverse of encode, for round-trip checks and human-readable explanations
RawDataset decode(const EncodedDataset& ds);

// original-space display value of feature `j` at encoded point x
std::string decode_feature_value(const EncodedDataset& ds, std::span<const double> x, int j);

struct Reference {
    std::vector<double> x;                  // encoded, length p_enc
    std::vector<std::string> provenance;    // "mean" or "mode" per original feature
};

Reference build_reference(const EncodedDataset& train);

// ---- prepared-directory persistence -------------------------------------

struct PreparedData {
    EncodedDataset train;
    EncodedDataset test;
    Reference reference;
};

void save_encoded_csv(const std::filesystem::path& path, const EncodedDataset& ds);
EncodedDataset load_encoded_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                                const std::vector<ColumnSpan>& groups,
                                const std::vector<std::string>& col_names,
                                const Standardization& stats);

void save_prepared(const std::filesystem::path& dir, const PreparedData& prepared);
PreparedData load_prepared(const std::filesystem::path& dir);

} // namespace sevkit
