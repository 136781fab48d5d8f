#pragma once

#include <span>
#include <string>

#include "sevkit/dataset.hpp"
#include "sevkit/engine.hpp"
#include "sevkit/linear.hpp"
#include "sevkit/model.hpp"
#include "sevkit/parallel.hpp"

namespace sevkit {

enum class sev_loss_kind { none, all_opt_plus, all_opt_minus, all_opt_restricted, vol_opt };
std::string to_string(sev_loss_kind k);
sev_loss_kind sev_loss_kind_from_string(const std::string& s);

// All losses return their value and, when `grad` is non-empty, accumulate
// grad_scale * d(loss)/d(params) into it. Accumulation order is fixed by
// item index, so serial and parallel execution agree bitwise.

double loss_bce(const Classifier& model, const EncodedDataset& data, std::span<const int> rows,
                std::span<double> grad = {}, double grad_scale = 1.0,
                exec_mode exec = exec_mode::serial);

// -(1/n+) sum_i min(max_j g(one feature of query i placed on the reference), threshold)
double loss_allopt_plus(const Classifier& model, const EncodedDataset& data,
                        std::span<const int> positives, const Reference& reference, double threshold,
                        std::span<double> grad = {}, double grad_scale = 1.0,
                        exec_mode exec = exec_mode::serial);

// +(1/n+) sum_i max(min_j g(query i with one feature aligned to the reference), threshold)
double loss_allopt_minus(const Classifier& model, const EncodedDataset& data,
                         std::span<const int> positives, const Reference& reference, double threshold,
                         std::span<double> grad = {}, double grad_scale = 1.0,
                         exec_mode exec = exec_mode::serial);

// loss_allopt_minus with the inner minimum running over non-restricted features only
double loss_allopt_restricted(const Classifier& model, const EncodedDataset& data,
                              std::span<const int> positives, const Reference& reference,
                              Mask restricted, double threshold, std::span<double> grad = {},
                              double grad_scale = 1.0, exec_mode exec = exec_mode::serial);

// max(g(reference), threshold - theta); flat branch carries zero gradient
double loss_pos_base(const Classifier& model, const Reference& reference, double threshold,
                     double theta, std::span<double> grad = {}, double grad_scale = 1.0);

// (1/p) sum_j log(clamp(|raw(reference)| / max(|coef_j|, 1e-8), eps)); the
// default floors the ratio at eps, `paper_literal` caps it instead
double loss_vol_opt(const LinearModel& model, const Reference& reference, double eps_clamp,
                    bool paper_literal = false, std::span<double> grad = {}, double grad_scale = 1.0);

struct ObjectiveConfig {
    sev_loss_kind kind = sev_loss_kind::none;
    double c1 = 1.0;
    double c2 = 10.0;
    double threshold = 0.5;
    double theta = 0.05;
    double eps_clamp = 1e-6;
    bool paper_literal_clamp = false;
    Mask restricted = 0;
    exec_mode exec = exec_mode::parallel;
};

struct LossBreakdown {
    double bce = 0.0;
    double sev = 0.0;      // raw SEV-loss value (before the c1 weight)
    double pos_base = 0.0; // raw reference-penalty value (before c2)
    double total = 0.0;    // bce + c1*sev + c2*pos_base
    int n_pos = 0;
};

// bce + c1 * sev-loss + c2 * pos-base over one batch; positives are the
// batch rows the current model predicts positive, refreshed on every call
LossBreakdown total_objective(const Classifier& model, const EncodedDataset& data,
                              std::span<const int> rows, const Reference& reference,
                              const ObjectiveConfig& config, std::span<double> grad = {});

} // namespace sevkit
