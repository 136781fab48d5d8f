#include "sevkit/engine.hpp"

#include <algorithm>
#include <bit>
#include <chrono>

#include "sevkit/errors.hpp"

namespace sevkit {

std::string to_string(sev_kind k) {
    switch (k) {
        case sev_kind::plus: return "plus";
        case sev_kind::minus: return "minus";
        case sev_kind::restricted: return "restricted";
    }
    return "plus";
}

sev_kind sev_kind_from_string(const std::string& s) {
    if (s == "plus") return sev_kind::plus;
    if (s == "minus") return sev_kind::minus;
    if (s == "restricted") return sev_kind::restricted;
    fail(errc::bad_config, "unknown SEV kind: " + s);
}

void vertex_to_point(Mask mask, std::span<const double> query, const Reference& reference,
                     const std::vector<ColumnSpan>& groups, std::span<double> out) {
    if (query.size() != reference.x.size() || out.size() != query.size())
        fail(errc::dimension_mismatch, "query/reference/output lengths disagree");
    for (std::size_t j = 0; j < groups.size(); ++j) {
        const auto& g = groups[j];
        const double* src = (mask >> j) & 1ULL ? query.data() : reference.x.data();
        for (int c = g.begin; c < g.end; ++c) out[static_cast<std::size_t>(c)] = src[c];
    }
}

namespace {

void check_preconditions(const Classifier& model, std::span<const double> query,
                         const Reference& reference) {
    if (model.predict(reference.x) != 0)
        fail(errc::reference_not_negative,
             "reference is predicted positive; SEV is undefined (train with the reference "
             "penalty term to push the reference negative)");
    if (model.predict(query) != 1) fail(errc::query_not_positive, "query is not predicted positive");
}

// free feature indices (unpinned bits), ascending
std::vector<int> free_features(int p, Mask restricted) {
    std::vector<int> f;
    for (int j = 0; j < p; ++j)
        if (!((restricted >> j) & 1ULL)) f.push_back(j);
    return f;
}

// Level-by-level search: all masks at Hamming distance d from the start
// vertex, combinations enumerated in lexicographic feature order so the
// explanation list is deterministic.
SevResult search(const Classifier& model, std::span<const double> query, const Reference& reference,
                 const std::vector<ColumnSpan>& groups, sev_kind kind, const SevOptions& options) {
    const int p = static_cast<int>(groups.size());
    if (p > 64) fail(errc::too_many_features, "at most 64 original features supported");
    const bool from_query = kind != sev_kind::plus; // start vertex: all-ones for minus/restricted
    const Mask pinned = kind == sev_kind::restricted ? options.restricted : 0ULL;
    const Mask full = p == 64 ? ~0ULL : ((1ULL << p) - 1);
    if ((pinned & ~full) != 0) fail(errc::restricted_set_invalid, "restricted set names unknown features");

    check_preconditions(model, query, reference);

    SevResult res;
    res.kind = kind;
    const auto free_idx = free_features(p, from_query ? pinned : 0ULL);
    const int n_free = static_cast<int>(free_idx.size());
    const int max_depth = std::min(options.depth_limit, n_free);
    const int target = from_query ? 0 : 1;
    const Mask start = from_query ? full : 0ULL;

    std::vector<double> point(query.size());
    std::vector<int> comb;
    for (int depth = 1; depth <= max_depth; ++depth) {
        bool found = false;
        comb.assign(static_cast<std::size_t>(depth), 0);
        for (int i = 0; i < depth; ++i) comb[static_cast<std::size_t>(i)] = i;
        for (;;) {
            Mask m = start;
            for (int i = 0; i < depth; ++i) {
                Mask bit = 1ULL << free_idx[static_cast<std::size_t>(comb[static_cast<std::size_t>(i)])];
                if (from_query)
                    m &= ~bit;
                else
                    m |= bit;
            }
            vertex_to_point(m, query, reference, groups, point);
            ++res.expanded;
            if (model.predict(point) == target) {
                found = true;
                if (static_cast<int>(res.explanations.size()) < options.max_explanations)
                    res.explanations.push_back(m);
            }
            // next combination
            int i = depth - 1;
            while (i >= 0 && comb[static_cast<std::size_t>(i)] == n_free - depth + i) --i;
            if (i < 0) break;
            ++comb[static_cast<std::size_t>(i)];
            for (int k = i + 1; k < depth; ++k)
                comb[static_cast<std::size_t>(k)] = comb[static_cast<std::size_t>(k - 1)] + 1;
        }
        if (found) {
            res.value = depth;
            return res;
        }
    }
    res.value = -1;
    res.depth_limit_hit = max_depth < n_free;
    return res;
}

Mask flipped_set(Mask m, sev_kind kind, int p) {
    const Mask full = p == 64 ? ~0ULL : ((1ULL << p) - 1);
    return kind == sev_kind::plus ? m : (~m & full);
}

// lexicographic comparison of the flipped-feature index tuples, the same
// order the level search enumerates
bool tuple_less(Mask a, Mask b) {
    while (a != 0 && b != 0) {
        int la = std::countr_zero(a);
        int lb = std::countr_zero(b);
        if (la != lb) return la < lb;
        a &= a - 1;
        b &= b - 1;
    }
    return a == 0 && b != 0;
}

} // namespace

SevResult sev_plus(const Classifier& model, std::span<const double> query, const Reference& reference,
                   const std::vector<ColumnSpan>& groups, const SevOptions& options) {
    return search(model, query, reference, groups, sev_kind::plus, options);
}

SevResult sev_minus(const Classifier& model, std::span<const double> query, const Reference& reference,
                    const std::vector<ColumnSpan>& groups, const SevOptions& options) {
    return search(model, query, reference, groups, sev_kind::minus, options);
}

SevResult sev_restricted(const Classifier& model, std::span<const double> query,
                         const Reference& reference, const std::vector<ColumnSpan>& groups,
                         const SevOptions& options) {
    return search(model, query, reference, groups, sev_kind::restricted, options);
}

SevResult brute_force_sev(const Classifier& model, std::span<const double> query,
                          const Reference& reference, const std::vector<ColumnSpan>& groups,
                          sev_kind kind, const SevOptions& options) {
    const int p = static_cast<int>(groups.size());
    if (p > 20) fail(errc::too_many_features, "brute force limited to 20 features");
    const Mask full = (1ULL << p) - 1;
    const Mask pinned = kind == sev_kind::restricted ? options.restricted : 0ULL;
    if ((pinned & ~full) != 0) fail(errc::restricted_set_invalid, "restricted set names unknown features");
    check_preconditions(model, query, reference);

    SevResult res;
    res.kind = kind;
    const int target = kind == sev_kind::plus ? 1 : 0;

    std::vector<double> point(query.size());
    int best = -1;
    std::vector<Mask> best_masks;
    for (Mask m = 0; m <= full; ++m) {
        if (kind == sev_kind::plus) {
            if (m == 0) continue; // the reference itself
        } else {
            if ((m & pinned) != pinned) continue;
            if (m == full) continue; // the query itself
        }
        vertex_to_point(m, query, reference, groups, point);
        ++res.expanded;
        if (model.predict(point) != target) continue;
        int cost = kind == sev_kind::plus ? std::popcount(m) : p - std::popcount(m);
        if (best < 0 || cost < best) {
            best = cost;
            best_masks.assign(1, m);
        } else if (cost == best) {
            best_masks.push_back(m);
        }
    }
    if (best >= 0 && best > options.depth_limit) {
        // honor the same depth contract as the search
        res.value = -1;
        res.depth_limit_hit = true;
        return res;
    }
    res.value = best;
    std::sort(best_masks.begin(), best_masks.end(), [&](Mask a, Mask b) {
        return tuple_less(flipped_set(a, kind, p), flipped_set(b, kind, p));
    });
    if (static_cast<int>(best_masks.size()) > options.max_explanations)
        best_masks.resize(static_cast<std::size_t>(options.max_explanations));
    res.explanations = std::move(best_masks);
    return res;
}

std::optional<int> flip_count(const Classifier& model, std::span<const double> query,
                              const Reference& reference, const std::vector<ColumnSpan>& groups,
                              const std::vector<int>& ordering) {
    const int p = static_cast<int>(groups.size());
    if (static_cast<int>(ordering.size()) != p)
        fail(errc::invalid_permutation, "ordering must list every original feature exactly once");
    std::vector<bool> seen(static_cast<std::size_t>(p), false);
    for (int j : ordering) {
        if (j < 0 || j >= p || seen[static_cast<std::size_t>(j)])
            fail(errc::invalid_permutation, "ordering is not a permutation of the features");
        seen[static_cast<std::size_t>(j)] = true;
    }
    if (model.predict(query) != 1) fail(errc::query_not_positive, "query is not predicted positive");

    const Mask full = p == 64 ? ~0ULL : ((1ULL << p) - 1);
    Mask m = full;
    std::vector<double> point(query.size());
    for (int k = 0; k < p; ++k) {
        m &= ~(1ULL << ordering[static_cast<std::size_t>(k)]);
        vertex_to_point(m, query, reference, groups, point);
        if (model.predict(point) == 0) return k + 1;
    }
    return std::nullopt;
}

namespace {

SevStats batch_common(const Classifier& model, const EncodedDataset& data, const Reference& reference,
                      sev_kind kind, const SevOptions& options) {
    if (model.predict(reference.x) != 0)
        fail(errc::reference_not_negative,
             "reference is predicted positive; batch SEV aborted (train with the reference "
             "penalty term to push the reference negative)");

    SevStats stats;
    stats.kind = kind;
    stats.n_rows = data.n;
    stats.model_feature_count = used_feature_count(model, data.groups);
    stats.per_query.assign(static_cast<std::size_t>(data.n), {});

    std::vector<int> positive_rows;
    for (int i = 0; i < data.n; ++i) {
        stats.per_query[static_cast<std::size_t>(i)].row = i;
        if (model.predict(data.row(i)) == 1)
            positive_rows.push_back(i);
        else
            ++stats.n_skipped_negative;
    }
    stats.n_queries = static_cast<int>(positive_rows.size());

    auto run_one = [&](int row) {
        auto& out = stats.per_query[static_cast<std::size_t>(row)];
        auto t0 = std::chrono::steady_clock::now();
        try {
            out.result = search(model, data.row(row), reference, data.groups, kind, options);
            out.computed = true;
        } catch (const error& e) {
            out.error = e.what();
        }
        out.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };

    if (options.exec == exec_mode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::size_t k = 0; k < positive_rows.size(); ++k) run_one(positive_rows[k]);
    } else {
        for (std::size_t k = 0; k < positive_rows.size(); ++k) run_one(positive_rows[k]);
    }

    // deterministic merge by row index
    double sum = 0.0;
    for (int row : positive_rows) {
        const auto& out = stats.per_query[static_cast<std::size_t>(row)];
        if (!out.computed) {
            ++stats.n_errors;
            continue;
        }
        if (out.result.unexplained()) {
            ++stats.n_unexplained;
            sum += stats.model_feature_count; // unexplained counts as every model feature
        } else {
            ++stats.histogram[out.result.value];
            sum += out.result.value;
        }
    }
    int denom = stats.n_queries - stats.n_errors;
    stats.mean_sev = denom > 0 ? sum / denom : 0.0;
    return stats;
}

} // namespace

SevStats batch_sev(const Classifier& model, const EncodedDataset& data, const Reference& reference,
                   sev_kind kind, const SevOptions& options) {
    return batch_common(model, data, reference, kind, options);
}

std::map<std::pair<int, int>, long> sev_transitions(const SevStats& before, const SevStats& after) {
    std::map<std::pair<int, int>, long> out;
    std::size_t n = std::min(before.per_query.size(), after.per_query.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = before.per_query[i];
        const auto& b = after.per_query[i];
        if (!a.computed || !b.computed) continue;
        out[{a.result.value, b.result.value}]++;
    }
    return out;
}

} // namespace sevkit
