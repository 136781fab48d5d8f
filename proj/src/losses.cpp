#include "sevkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <omp.h>

#include "sevkit/errors.hpp"

namespace sevkit {

std::string to_string(sev_loss_kind k) {
    switch (k) {
        case sev_loss_kind::none: return "none";
        case sev_loss_kind::all_opt_plus: return "all_opt_plus";
        case sev_loss_kind::all_opt_minus: return "all_opt_minus";
        case sev_loss_kind::all_opt_restricted: return "all_opt_restricted";
        case sev_loss_kind::vol_opt: return "vol_opt";
    }
    return "none";
}

sev_loss_kind sev_loss_kind_from_string(const std::string& s) {
    if (s == "none") return sev_loss_kind::none;
    if (s == "all_opt_plus") return sev_loss_kind::all_opt_plus;
    if (s == "all_opt_minus") return sev_loss_kind::all_opt_minus;
    if (s == "all_opt_restricted") return sev_loss_kind::all_opt_restricted;
    if (s == "vol_opt") return sev_loss_kind::vol_opt;
    fail(errc::bad_config, "unknown SEV loss kind: " + s);
}

namespace {

constexpr int kGradChunk = 64;

// grad += scale * sum_k weight(k) * dmargin/dparams at point(k), accumulated
// chunk by chunk with row sums taken in item order: bitwise identical for
// serial and parallel execution and for any thread count
void accumulate_deterministic(const Classifier& model, int n_items,
                              const std::function<std::span<const double>(int, std::vector<double>&)>& point_of,
                              const std::function<double(int)>& weight_of, std::span<double> grad,
                              exec_mode exec) {
    if (grad.empty() || n_items == 0) return;
    const int n_params = model.param_count();

    // both paths are bitwise identical; skip the row buffers on one thread
    if (exec == exec_mode::serial || omp_get_max_threads() == 1) {
        // reference path: direct accumulation in item order
        std::vector<double> scratch;
        for (int k = 0; k < n_items; ++k)
            model.accumulate_margin_grad(point_of(k, scratch), weight_of(k), grad);
        return;
    }

    std::vector<double> rows;
    for (int chunk = 0; chunk < n_items; chunk += kGradChunk) {
        const int m = std::min(kGradChunk, n_items - chunk);
        rows.assign(static_cast<std::size_t>(m) * n_params, 0.0);
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < m; ++k) {
            thread_local std::vector<double> scratch;
            std::span<double> row{rows.data() + static_cast<std::size_t>(k) * n_params,
                                  static_cast<std::size_t>(n_params)};
            model.accumulate_margin_grad(point_of(chunk + k, scratch), weight_of(chunk + k), row);
        }
#pragma omp parallel for schedule(static)
        for (int q = 0; q < n_params; ++q) {
            double s = grad[static_cast<std::size_t>(q)];
            for (int k = 0; k < m; ++k) s += rows[static_cast<std::size_t>(k) * n_params + q];
            grad[static_cast<std::size_t>(q)] = s;
        }
    }
}

inline double clamp_prob(double g) { return std::clamp(g, 1e-12, 1.0 - 1e-12); }

struct OneFlipPick {
    int feature = -1;   // arg-selected flip, lowest index on ties
    double margin = 0.0;
    double score = 0.0;
};

// scores the p one-flip vertices of query `row` and picks max (plus) or min
// (minus/restricted) over the free features
OneFlipPick pick_one_flip(const Classifier& model, const EncodedDataset& data, int row,
                          const Reference& reference, Mask restricted, bool maximize,
                          std::vector<double>& point) {
    const int p = data.p_orig();
    const Mask full = p == 64 ? ~0ULL : ((1ULL << p) - 1);
    point.resize(static_cast<std::size_t>(data.p_enc));
    OneFlipPick pick;
    for (int j = 0; j < p; ++j) {
        if ((restricted >> j) & 1ULL) continue;
        Mask m = maximize ? (1ULL << j) : (full & ~(1ULL << j));
        vertex_to_point(m, data.row(row), reference, data.groups, point);
        double z = model.margin(point);
        if (pick.feature < 0 || (maximize ? z > pick.margin : z < pick.margin)) {
            pick.feature = j;
            pick.margin = z;
        }
    }
    pick.score = sigmoid(pick.margin);
    return pick;
}

double allopt_impl(const Classifier& model, const EncodedDataset& data,
                   std::span<const int> positives, const Reference& reference, Mask restricted,
                   double threshold, bool plus, std::span<double> grad, double grad_scale,
                   exec_mode exec) {
    if (positives.empty()) fail(errc::empty_positives, "no positively predicted queries in batch");
    const int p = data.p_orig();
    const Mask full = p == 64 ? ~0ULL : ((1ULL << p) - 1);
    if ((restricted & full) == full)
        fail(errc::all_features_restricted, "at least one feature must be free to align");
    if ((restricted & ~full) != 0)
        fail(errc::restricted_set_invalid, "restricted set names unknown features");
    if (static_cast<int>(reference.x.size()) != data.p_enc)
        fail(errc::dimension_mismatch, "reference length does not match encoded data");

    const int n = static_cast<int>(positives.size());
    std::vector<OneFlipPick> picks(static_cast<std::size_t>(n));

    auto score_one = [&](int k) {
        thread_local std::vector<double> point;
        picks[static_cast<std::size_t>(k)] =
            pick_one_flip(model, data, positives[static_cast<std::size_t>(k)], reference, restricted,
                          plus, point);
    };
    if (exec == exec_mode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < n; ++k) score_one(k);
    } else {
        for (int k = 0; k < n; ++k) score_one(k);
    }

    double sum = 0.0;
    for (const auto& pk : picks)
        sum += plus ? std::min(pk.score, threshold) : std::max(pk.score, threshold);
    double value = (plus ? -1.0 : 1.0) * sum / n;

    if (!grad.empty()) {
        // gradient flows only through unclamped queries, via the selected vertex
        std::vector<int> active;
        for (int k = 0; k < n; ++k) {
            double g = picks[static_cast<std::size_t>(k)].score;
            if (plus ? g < threshold : g > threshold) active.push_back(k);
        }
        auto point_of = [&](int a, std::vector<double>& scratch) -> std::span<const double> {
            int k = active[static_cast<std::size_t>(a)];
            int row = positives[static_cast<std::size_t>(k)];
            int j = picks[static_cast<std::size_t>(k)].feature;
            Mask m = plus ? (1ULL << j) : (full & ~(1ULL << j));
            scratch.resize(static_cast<std::size_t>(data.p_enc));
            vertex_to_point(m, data.row(row), reference, data.groups, scratch);
            return scratch;
        };
        auto weight_of = [&](int a) {
            int k = active[static_cast<std::size_t>(a)];
            double g = picks[static_cast<std::size_t>(k)].score;
            return grad_scale * (plus ? -1.0 : 1.0) * g * (1.0 - g) / n;
        };
        accumulate_deterministic(model, static_cast<int>(active.size()), point_of, weight_of, grad, exec);
    }
    return value;
}

} // namespace

double loss_bce(const Classifier& model, const EncodedDataset& data, std::span<const int> rows,
                std::span<double> grad, double grad_scale, exec_mode exec) {
    const int n = static_cast<int>(rows.size());
    if (n == 0) return 0.0;
    std::vector<double> scores(static_cast<std::size_t>(n));
    auto score_one = [&](int k) {
        scores[static_cast<std::size_t>(k)] = model.score(data.row(rows[static_cast<std::size_t>(k)]));
    };
    if (exec == exec_mode::parallel) {
#pragma omp parallel for schedule(static)
        for (int k = 0; k < n; ++k) score_one(k);
    } else {
        for (int k = 0; k < n; ++k) score_one(k);
    }

    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        double g = clamp_prob(scores[static_cast<std::size_t>(k)]);
        int y = data.y[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])];
        sum += y ? -std::log(g) : -std::log(1.0 - g);
    }
    double value = sum / n;

    if (!grad.empty()) {
        auto point_of = [&](int k, std::vector<double>&) -> std::span<const double> {
            return data.row(rows[static_cast<std::size_t>(k)]);
        };
        auto weight_of = [&](int k) {
            double g = scores[static_cast<std::size_t>(k)];
            int y = data.y[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])];
            return grad_scale * (g - y) / n;
        };
        accumulate_deterministic(model, n, point_of, weight_of, grad, exec);
    }
    return value;
}

double loss_allopt_plus(const Classifier& model, const EncodedDataset& data,
                        std::span<const int> positives, const Reference& reference, double threshold,
                        std::span<double> grad, double grad_scale, exec_mode exec) {
    return allopt_impl(model, data, positives, reference, 0, threshold, true, grad, grad_scale, exec);
}

double loss_allopt_minus(const Classifier& model, const EncodedDataset& data,
                         std::span<const int> positives, const Reference& reference, double threshold,
                         std::span<double> grad, double grad_scale, exec_mode exec) {
    return allopt_impl(model, data, positives, reference, 0, threshold, false, grad, grad_scale, exec);
}

double loss_allopt_restricted(const Classifier& model, const EncodedDataset& data,
                              std::span<const int> positives, const Reference& reference,
                              Mask restricted, double threshold, std::span<double> grad,
                              double grad_scale, exec_mode exec) {
    return allopt_impl(model, data, positives, reference, restricted, threshold, false, grad,
                       grad_scale, exec);
}

double loss_pos_base(const Classifier& model, const Reference& reference, double threshold,
                     double theta, std::span<double> grad, double grad_scale) {
    if (!(theta > 0.0 && theta < threshold)) fail(errc::bad_config, "theta must lie in (0, threshold)");
    double z = model.margin(reference.x);
    double g = sigmoid(z);
    if (g <= threshold - theta) return threshold - theta;
    if (!grad.empty()) model.accumulate_margin_grad(reference.x, grad_scale * g * (1.0 - g), grad);
    return g;
}

namespace {

double vol_opt_impl(const LinearModel& model, const Reference& reference, double eps_clamp,
                    bool paper_literal, std::span<double> grad, double grad_scale) {
    const int p = model.input_dim();
    if (p == 0) fail(errc::bad_config, "vol-opt needs at least one coefficient");
    constexpr double eps_denom = 1e-8; // zero-coefficient guard in the denominator
    double r = model.raw_score(reference.x);
    double abs_r = std::abs(r);

    double sum = 0.0;
    int through_r = 0;
    for (int j = 0; j < p; ++j) {
        double a = std::max(std::abs(model.coef[static_cast<std::size_t>(j)]), eps_denom);
        double ratio = abs_r / a;
        bool unclamped = paper_literal ? ratio < eps_clamp : ratio > eps_clamp;
        double term = unclamped ? ratio : eps_clamp;
        sum += std::log(term);
        if (!grad.empty() && unclamped && r != 0.0) {
            ++through_r;
            if (std::abs(model.coef[static_cast<std::size_t>(j)]) > eps_denom) {
                double sgn = model.coef[static_cast<std::size_t>(j)] > 0.0 ? 1.0 : -1.0;
                grad[static_cast<std::size_t>(j) + 1] -= grad_scale * sgn / (p * a);
            }
        }
    }
    if (!grad.empty() && through_r > 0) {
        double w = grad_scale * through_r / (p * r);
        grad[0] += w;
        for (int k = 0; k < p; ++k)
            grad[static_cast<std::size_t>(k) + 1] += w * reference.x[static_cast<std::size_t>(k)];
    }
    return sum / p;
}

} // namespace

double loss_vol_opt(const LinearModel& model, const Reference& reference, double eps_clamp,
                    bool paper_literal, std::span<double> grad, double grad_scale) {
    if (model.raw_score(reference.x) >= 0.0)
        fail(errc::reference_not_negative, "vol-opt requires a negatively predicted reference");
    return vol_opt_impl(model, reference, eps_clamp, paper_literal, grad, grad_scale);
}

LossBreakdown total_objective(const Classifier& model, const EncodedDataset& data,
                              std::span<const int> rows, const Reference& reference,
                              const ObjectiveConfig& config, std::span<double> grad) {
    LossBreakdown out;
    out.bce = loss_bce(model, data, rows, grad, 1.0, config.exec);

    std::vector<int> positives;
    for (int r : rows)
        if (model.predict(data.row(r)) == 1) positives.push_back(r);
    out.n_pos = static_cast<int>(positives.size());

    switch (config.kind) {
        case sev_loss_kind::none:
            break;
        case sev_loss_kind::all_opt_plus:
            if (!positives.empty())
                out.sev = loss_allopt_plus(model, data, positives, reference, config.threshold, grad,
                                           config.c1, config.exec);
            break;
        case sev_loss_kind::all_opt_minus:
            if (!positives.empty())
                out.sev = loss_allopt_minus(model, data, positives, reference, config.threshold, grad,
                                            config.c1, config.exec);
            break;
        case sev_loss_kind::all_opt_restricted:
            if (!positives.empty())
                out.sev = loss_allopt_restricted(model, data, positives, reference, config.restricted,
                                                 config.threshold, grad, config.c1, config.exec);
            break;
        case sev_loss_kind::vol_opt: {
            const auto* lin = dynamic_cast<const LinearModel*>(&model);
            if (!lin) fail(errc::vol_opt_on_nonlinear_model, "vol-opt applies to linear models only");
            // tolerate a transiently non-negative reference while the c2 term
            // pushes it back below threshold
            out.sev = vol_opt_impl(*lin, reference, config.eps_clamp, config.paper_literal_clamp, grad,
                                   config.c1);
            break;
        }
    }

    out.pos_base = loss_pos_base(model, reference, config.threshold, config.theta,
                                 config.c2 != 0.0 ? grad : std::span<double>{}, config.c2);

    out.total = out.bce + config.c1 * out.sev + config.c2 * out.pos_base;
    return out;
}

} // namespace sevkit
