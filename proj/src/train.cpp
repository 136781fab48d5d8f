#include "sevkit/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sevkit/engine.hpp"
#include "sevkit/errors.hpp"
#include "sevkit/gbdt.hpp"
#include "sevkit/io_util.hpp"
#include "sevkit/linear.hpp"
#include "sevkit/metrics.hpp"
#include "sevkit/mlp.hpp"
#include "sevkit/rng.hpp"

namespace sevkit {

std::string to_string(optimizer_kind k) { return k == optimizer_kind::adam ? "adam" : "sgd"; }

optimizer_kind optimizer_kind_from_string(const std::string& s) {
    if (s == "adam") return optimizer_kind::adam;
    if (s == "sgd") return optimizer_kind::sgd;
    fail(errc::bad_config, "unknown optimizer: " + s);
}

void TrainConfig::validate() const {
    if (!(theta > 0.0 && theta < threshold)) fail(errc::bad_config, "theta must lie in (0, threshold)");
    if (!(eps_clamp > 0.0)) fail(errc::bad_config, "eps_clamp must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) fail(errc::bad_config, "threshold must lie in (0,1)");
    if (c1 < 0.0 || c2 < 0.0) fail(errc::bad_config, "loss weights must be nonnegative");
    if (batch_size < 1) fail(errc::bad_config, "batch_size must be at least 1");
    if (warmup_epochs < 0 || sev_epochs < 0) fail(errc::bad_config, "epoch counts must be nonnegative");
    if (learning_rate <= 0.0) fail(errc::bad_config, "learning_rate must be positive");
}

nlohmann::json TrainConfig::to_json() const {
    return nlohmann::json{{"c1", c1},
                          {"c2", c2},
                          {"theta", theta},
                          {"eps_clamp", eps_clamp},
                          {"threshold", threshold},
                          {"learning_rate", learning_rate},
                          {"batch_size", batch_size},
                          {"warmup_epochs", warmup_epochs},
                          {"sev_epochs", sev_epochs},
                          {"seed", seed},
                          {"optimizer", to_string(optimizer)},
                          {"paper_literal_clamp", paper_literal_clamp},
                          {"l1", l1},
                          {"l2", l2},
                          {"early_stopping", early_stopping},
                          {"patience", patience},
                          {"val_fraction", val_fraction},
                          {"monitor_queries", monitor_queries},
                          {"monitor_depth", monitor_depth}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.c1 = j.value("c1", c.c1);
    c.c2 = j.value("c2", c.c2);
    c.theta = j.value("theta", c.theta);
    c.eps_clamp = j.value("eps_clamp", c.eps_clamp);
    c.threshold = j.value("threshold", c.threshold);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.sev_epochs = j.value("sev_epochs", c.sev_epochs);
    c.seed = j.value("seed", c.seed);
    if (j.contains("optimizer")) c.optimizer = optimizer_kind_from_string(j.at("optimizer"));
    c.paper_literal_clamp = j.value("paper_literal_clamp", c.paper_literal_clamp);
    c.l1 = j.value("l1", c.l1);
    c.l2 = j.value("l2", c.l2);
    c.early_stopping = j.value("early_stopping", c.early_stopping);
    c.patience = j.value("patience", c.patience);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.monitor_queries = j.value("monitor_queries", c.monitor_queries);
    c.monitor_depth = j.value("monitor_depth", c.monitor_depth);
    c.validate();
    return c;
}

namespace {

struct Adam {
    double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> m, v;
    long t = 0;

    explicit Adam(int n, double lr_) : lr(lr_), m(static_cast<std::size_t>(n), 0.0),
                                       v(static_cast<std::size_t>(n), 0.0) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t;
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

double mean_monitored_sev(const Classifier& model, const EncodedDataset& data,
                          const Reference& reference, const TrainConfig& config, sev_loss_kind kind,
                          Mask restricted, const std::vector<int>& monitor_rows) {
    if (monitor_rows.empty() || model.predict(reference.x) != 0)
        return std::numeric_limits<double>::quiet_NaN();
    sev_kind sk = kind == sev_loss_kind::all_opt_minus      ? sev_kind::minus
                  : kind == sev_loss_kind::all_opt_restricted ? sev_kind::restricted
                                                              : sev_kind::plus;
    SevOptions opt;
    opt.depth_limit = config.monitor_depth;
    opt.restricted = sk == sev_kind::restricted ? restricted : 0;
    opt.exec = config.exec;
    opt.max_explanations = 1;
    int feature_count = used_feature_count(model, data.groups);

    double sum = 0.0;
    int n = 0;
    for (int row : monitor_rows) {
        if (model.predict(data.row(row)) != 1) continue;
        SevResult r = sk == sev_kind::plus
                          ? sev_plus(model, data.row(row), reference, data.groups, opt)
                          : (sk == sev_kind::minus
                                 ? sev_minus(model, data.row(row), reference, data.groups, opt)
                                 : sev_restricted(model, data.row(row), reference, data.groups, opt));
        sum += r.unexplained() ? feature_count : r.value;
        ++n;
    }
    return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

// soft-threshold on linear coefficients (not the intercept)
void l1_prox(LinearModel& lin, double amount) {
    for (auto& c : lin.coef) {
        if (c > amount)
            c -= amount;
        else if (c < -amount)
            c += amount;
        else
            c = 0.0;
    }
}

} // namespace

TrainResult train(std::unique_ptr<Classifier> model, const EncodedDataset& train_data,
                  const Reference& reference, const TrainConfig& config, sev_loss_kind kind,
                  Mask restricted) {
    config.validate();
    if (train_data.n == 0) fail(errc::empty_dataset, "cannot train on empty data");
    {
        long pos = std::count(train_data.y.begin(), train_data.y.end(), 1);
        if (pos == 0 || pos == train_data.n) fail(errc::single_class_data, "training needs both classes");
    }
    if (kind == sev_loss_kind::vol_opt && model->kind() != model_kind::linear)
        fail(errc::vol_opt_on_nonlinear_model, "vol-opt applies to linear models only");
    if (config.early_stopping && kind != sev_loss_kind::none)
        fail(errc::bad_config, "early stopping is only supported for BCE-only training");

    model->threshold = config.threshold;
    const int n_params = model->param_count();
    std::vector<double> params(static_cast<std::size_t>(n_params));
    std::vector<double> grad(static_cast<std::size_t>(n_params));
    model->get_params(params);

    Adam adam(n_params, config.learning_rate);
    auto* lin = dynamic_cast<LinearModel*>(model.get());

    Rng rng(config.seed);
    std::vector<int> order(static_cast<std::size_t>(train_data.n));
    std::iota(order.begin(), order.end(), 0);

    // held-out rows for early stopping; carved off the shuffled order once
    std::vector<int> val_rows;
    std::vector<int> train_rows = order;
    if (config.early_stopping) {
        Rng vrng(config.seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<int> shuffled = order;
        vrng.shuffle(shuffled);
        int n_val = std::max(1, static_cast<int>(std::floor(train_data.n * config.val_fraction)));
        val_rows.assign(shuffled.begin(), shuffled.begin() + n_val);
        train_rows.assign(shuffled.begin() + n_val, shuffled.end());
        std::sort(val_rows.begin(), val_rows.end());
        std::sort(train_rows.begin(), train_rows.end());
    }

    std::vector<int> monitor_rows;
    {
        Rng mrng(config.seed ^ 0x51ed270b76f0f0ebULL);
        std::vector<int> shuffled = train_rows;
        mrng.shuffle(shuffled);
        int m = std::min<int>(config.monitor_queries, static_cast<int>(shuffled.size()));
        monitor_rows.assign(shuffled.begin(), shuffled.begin() + m);
        std::sort(monitor_rows.begin(), monitor_rows.end());
    }

    ObjectiveConfig warm;
    warm.kind = sev_loss_kind::none;
    warm.c1 = 0.0;
    warm.c2 = 0.0;
    warm.threshold = config.threshold;
    warm.theta = config.theta;
    warm.exec = config.exec;

    ObjectiveConfig full = warm;
    full.kind = kind;
    full.c1 = config.c1;
    full.c2 = config.c2;
    full.eps_clamp = config.eps_clamp;
    full.paper_literal_clamp = config.paper_literal_clamp;
    full.restricted = restricted;

    TrainResult result;
    const int total_epochs = config.warmup_epochs + config.sev_epochs;

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = params;
    int since_best = 0;

    std::vector<int> epoch_order = train_rows;
    for (int epoch = 0; epoch < total_epochs; ++epoch) {
        const bool sev_phase = kind != sev_loss_kind::none && epoch >= config.warmup_epochs;
        const ObjectiveConfig& obj = sev_phase ? full : warm;

        rng.shuffle(epoch_order);
        double ep_bce = 0.0, ep_sev = 0.0, ep_pos = 0.0;
        int n_batches = 0;
        for (std::size_t start = 0; start < epoch_order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                                    epoch_order.size() - start);
            std::span<const int> batch{epoch_order.data() + start, len};
            std::fill(grad.begin(), grad.end(), 0.0);
            LossBreakdown lb = total_objective(*model, train_data, batch, reference, obj, grad);
            if (!std::isfinite(lb.total))
                fail(errc::non_finite_loss,
                     "non-finite loss at epoch " + std::to_string(epoch) + " (bce=" +
                         std::to_string(lb.bce) + ", sev=" + std::to_string(lb.sev) + ")");
            if (config.optimizer == optimizer_kind::adam) {
                adam.step(params, grad);
            } else {
                for (std::size_t i = 0; i < params.size(); ++i)
                    params[i] -= config.learning_rate * grad[i];
            }
            if (lin && config.l2 > 0.0)
                for (std::size_t j = 0; j < lin->coef.size(); ++j)
                    params[j + 1] -= config.learning_rate * config.l2 * params[j + 1];
            model->set_params(params);
            if (lin && config.l1 > 0.0) {
                l1_prox(*lin, config.learning_rate * config.l1);
                lin->get_params(params);
            }
            ep_bce += lb.bce;
            ep_sev += lb.sev;
            ep_pos += lb.pos_base;
            ++n_batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.bce = ep_bce / n_batches;
        rec.sev_loss = ep_sev / n_batches;
        rec.pos_base = ep_pos / n_batches;
        rec.accuracy = accuracy(*model, train_data);
        rec.mean_sev = kind == sev_loss_kind::none
                           ? std::numeric_limits<double>::quiet_NaN()
                           : mean_monitored_sev(*model, train_data, reference, config, kind,
                                                restricted, monitor_rows);
        result.history.push_back(rec);

        if (config.early_stopping) {
            double val = loss_bce(*model, train_data, val_rows, {}, 1.0, config.exec);
            if (val < best_val - 1e-12) {
                best_val = val;
                best_params = params;
                since_best = 0;
            } else if (++since_best >= config.patience) {
                model->set_params(best_params);
                break;
            }
        }
    }

    result.reference_negative = model->predict(reference.x) == 0;
    result.model = std::move(model);
    return result;
}

TrainResult fit_baseline(model_kind kind, const EncodedDataset& train_data, const Reference& reference,
                         const TrainConfig& config, int hidden, int n_trees, int tree_depth) {
    switch (kind) {
        case model_kind::linear: {
            auto m = std::make_unique<LinearModel>(train_data.p_enc);
            return train(std::move(m), train_data, reference, config, sev_loss_kind::none);
        }
        case model_kind::mlp: {
            auto m = std::make_unique<MlpModel>(
                MlpModel::random_init(train_data.p_enc, hidden, config.seed));
            return train(std::move(m), train_data, reference, config, sev_loss_kind::none);
        }
        case model_kind::gbdt: {
            GbdtConfig gc;
            gc.n_trees = n_trees;
            gc.max_depth = tree_depth;
            gc.exec = config.exec;
            auto m = std::make_unique<GbdtModel>(fit_gbdt(train_data, gc));
            m->threshold = config.threshold;
            TrainResult r;
            r.reference_negative = m->predict(reference.x) == 0;
            r.model = std::move(m);
            return r;
        }
    }
    fail(errc::bad_config, "unknown model kind");
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
    std::ostringstream out;
    out << "epoch,loss_bce,loss_sev,loss_pos_base,accuracy,monitor_mean_sev\n";
    for (const auto& r : history) {
        out << r.epoch << ',' << double_to_string(r.bce) << ',' << double_to_string(r.sev_loss) << ','
            << double_to_string(r.pos_base) << ',' << double_to_string(r.accuracy) << ',';
        if (std::isfinite(r.mean_sev)) out << double_to_string(r.mean_sev);
        out << '\n';
    }
    atomic_write(path, out.str());
}

} // namespace sevkit
