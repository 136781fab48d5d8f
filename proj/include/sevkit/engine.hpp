#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sevkit/dataset.hpp"
#include "sevkit/model.hpp"
#include "sevkit/parallel.hpp"

namespace sevkit {

// One bit per ORIGINAL feature: bit 1 takes the query's encoded span for
// that feature, bit 0 the reference's. Categorical one-hot groups move
// atomically, so every vertex stays a valid encoded point.
using Mask = std::uint64_t;

enum class sev_kind { plus, minus, restricted };
std::string to_string(sev_kind k);
sev_kind sev_kind_from_string(const std::string& s);

struct SevOptions {
    int depth_limit = 6;
    int max_explanations = 32; // cap on enumerated minimal masks; value stays exact
    Mask restricted = 0;       // bits pinned to the query (sev_kind::restricted only)
    exec_mode exec = exec_mode::parallel;
};

struct SevResult {
    sev_kind kind = sev_kind::plus;
    int value = -1; // -1 when unexplained
    std::vector<Mask> explanations;
    long expanded = 0;
    bool depth_limit_hit = false;

    bool unexplained() const { return value < 0; }
};

// x_b: group j copied from the query when bit j is set, else from the reference
void vertex_to_point(Mask mask, std::span<const double> query, const Reference& reference,
                     const std::vector<ColumnSpan>& groups, std::span<double> out);

// Breadth-first search over the alignment hypercube. sev_plus walks out from
// the all-reference vertex looking for a positive prediction; sev_minus and
// sev_restricted walk out from the all-query vertex looking for a negative
// one, the latter with restricted bits pinned to 1.
SevResult sev_plus(const Classifier& model, std::span<const double> query, const Reference& reference,
                   const std::vector<ColumnSpan>& groups, const SevOptions& options = {});
SevResult sev_minus(const Classifier& model, std::span<const double> query, const Reference& reference,
                    const std::vector<ColumnSpan>& groups, const SevOptions& options = {});
SevResult sev_restricted(const Classifier& model, std::span<const double> query,
                         const Reference& reference, const std::vector<ColumnSpan>& groups,
                         const SevOptions& options);

// exhaustive 2^p oracle; guard p <= 20
SevResult brute_force_sev(const Classifier& model, std::span<const double> query,
                          const Reference& reference, const std::vector<ColumnSpan>& groups,
                          sev_kind kind, const SevOptions& options = {});

// smallest prefix of `ordering` whose alignment to the reference flips the
// prediction to negative; nullopt when no prefix flips
std::optional<int> flip_count(const Classifier& model, std::span<const double> query,
                              const Reference& reference, const std::vector<ColumnSpan>& groups,
                              const std::vector<int>& ordering);

struct QueryOutcome {
    int row = -1;
    bool computed = false; // false: skipped (predicted negative) or errored
    std::string error;
    SevResult result;
    double runtime_ms = 0.0;
};

struct SevStats {
    sev_kind kind = sev_kind::plus;
    int n_rows = 0;
    int n_queries = 0;           // predicted-positive rows
    int n_skipped_negative = 0;
    int n_errors = 0;            // per-query failures, recorded not fatal
    long n_unexplained = 0;
    int model_feature_count = 0; // substituted for unexplained queries in the mean
    double mean_sev = 0.0;
    std::map<int, long> histogram; // explained values only
    std::vector<QueryOutcome> per_query;

    double pct_unexplained() const {
        return n_queries == 0 ? 0.0 : 100.0 * static_cast<double>(n_unexplained) / n_queries;
    }
};

SevStats batch_sev(const Classifier& model, const EncodedDataset& data, const Reference& reference,
                   sev_kind kind, const SevOptions& options = {});

// transition counts between two runs over the same rows (-1 = unexplained);
// the Sankey data for before/after-optimization comparisons
std::map<std::pair<int, int>, long> sev_transitions(const SevStats& before, const SevStats& after);

} // namespace sevkit
