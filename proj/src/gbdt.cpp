#include "sevkit/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sevkit/dataset.hpp"
#include "sevkit/errors.hpp"

namespace sevkit {

int Tree::depth() const {
    // nodes are appended parent-first, so a simple walk suffices
    std::vector<int> d(nodes.size(), 0);
    int max_d = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].feature < 0) continue;
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        max_d = std::max(max_d, d[i] + 1);
    }
    return max_d;
}

double GbdtModel::margin(std::span<const double> x) const {
    check_dim(x);
    double z = intercept;
    for (std::size_t t = 0; t < trees.size(); ++t) z += weights[t] * trees[t].eval(x);
    return z;
}

void GbdtModel::get_params(std::span<double> out) const {
    out[0] = intercept;
    for (std::size_t t = 0; t < weights.size(); ++t) out[t + 1] = weights[t];
}

void GbdtModel::set_params(std::span<const double> in) {
    intercept = in[0];
    for (std::size_t t = 0; t < weights.size(); ++t) weights[t] = in[t + 1];
}

void GbdtModel::accumulate_margin_grad(std::span<const double> x, double weight,
                                       std::span<double> grad) const {
    check_dim(x);
    grad[0] += weight;
    for (std::size_t t = 0; t < trees.size(); ++t) grad[t + 1] += weight * trees[t].eval(x);
}

std::vector<bool> GbdtModel::used_encoded_columns() const {
    std::vector<bool> used(static_cast<std::size_t>(input_dim_), false);
    for (std::size_t t = 0; t < trees.size(); ++t) {
        if (weights[t] == 0.0) continue;
        for (const auto& nd : trees[t].nodes)
            if (nd.feature >= 0) used[static_cast<std::size_t>(nd.feature)] = true;
    }
    return used;
}

nlohmann::json GbdtModel::payload_json() const {
    nlohmann::json jtrees = nlohmann::json::array();
    for (const auto& t : trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& nd : t.nodes)
            nodes.push_back({nd.feature, nd.split, nd.left, nd.right, nd.value});
        jtrees.push_back(nodes);
    }
    return nlohmann::json{
        {"input_dim", input_dim_}, {"intercept", intercept}, {"weights", weights}, {"trees", jtrees}};
}

GbdtModel GbdtModel::from_payload(const nlohmann::json& j) {
    GbdtModel m;
    m.input_dim_ = j.at("input_dim").get<int>();
    m.intercept = j.at("intercept").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    for (const auto& jt : j.at("trees")) {
        Tree t;
        for (const auto& jn : jt) {
            TreeNode nd;
            nd.feature = jn.at(0).get<int>();
            nd.split = jn.at(1).get<double>();
            nd.left = jn.at(2).get<int>();
            nd.right = jn.at(3).get<int>();
            nd.value = jn.at(4).get<double>();
            t.nodes.push_back(nd);
        }
        m.trees.push_back(std::move(t));
    }
    return m;
}

// ---- boosting ------------------------------------------------------------

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double split = 0.0;
    double score = 0.0; // summed child SSE, lower is better
};

// best threshold on one feature by exact scan over sorted values
SplitChoice best_split_on_feature(const EncodedDataset& ds, const std::vector<int>& rows,
                                  const std::vector<double>& target, int feature, int min_leaf) {
    const std::size_t n = rows.size();
    thread_local std::vector<std::pair<double, double>> vt; // (value, target)
    vt.clear();
    vt.reserve(n);
    for (int r : rows)
        vt.emplace_back(ds.X[static_cast<std::size_t>(r) * ds.p_enc + feature],
                        target[static_cast<std::size_t>(r)]);
    std::sort(vt.begin(), vt.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double total_sum = 0.0, total_sq = 0.0;
    for (const auto& [v, t] : vt) {
        total_sum += t;
        total_sq += t * t;
    }

    SplitChoice best;
    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += vt[i].second;
        left_sq += vt[i].second * vt[i].second;
        if (vt[i].first == vt[i + 1].first) continue;
        std::size_t nl = i + 1, nr = n - nl;
        if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
        double right_sum = total_sum - left_sum;
        double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                     ((total_sq - left_sq) - right_sum * right_sum / static_cast<double>(nr));
        if (!best.found || sse < best.score) {
            best.found = true;
            best.feature = feature;
            best.split = 0.5 * (vt[i].first + vt[i + 1].first);
            best.score = sse;
        }
    }
    return best;
}

// depth-limited least-squares regression tree on `target`
Tree fit_regression_tree(const EncodedDataset& ds, const std::vector<double>& target,
                         const std::vector<double>& hessian, int max_depth, int min_leaf,
                         double learning_rate, exec_mode exec) {
    Tree tree;
    struct Job {
        int node;
        int depth;
        std::vector<int> rows;
    };
    std::vector<Job> stack;
    std::vector<int> all(static_cast<std::size_t>(ds.n));
    std::iota(all.begin(), all.end(), 0);
    tree.nodes.emplace_back();
    stack.push_back({0, 0, std::move(all)});

    while (!stack.empty()) {
        Job job = std::move(stack.back());
        stack.pop_back();

        auto make_leaf = [&]() {
            // Newton step: sum(residual) / sum(p(1-p)), shrunk by the learning rate
            double num = 0.0, den = 0.0;
            for (int r : job.rows) {
                num += target[static_cast<std::size_t>(r)];
                den += hessian[static_cast<std::size_t>(r)];
            }
            double v = den > 1e-12 ? num / den : 0.0;
            v = std::clamp(v, -4.0, 4.0);
            tree.nodes[static_cast<std::size_t>(job.node)].value = learning_rate * v;
        };

        if (job.depth >= max_depth || job.rows.size() < 2 * static_cast<std::size_t>(min_leaf)) {
            make_leaf();
            continue;
        }

        std::vector<SplitChoice> per_feature(static_cast<std::size_t>(ds.p_enc));
        if (exec == exec_mode::parallel) {
#pragma omp parallel for schedule(dynamic)
            for (int f = 0; f < ds.p_enc; ++f)
                per_feature[static_cast<std::size_t>(f)] =
                    best_split_on_feature(ds, job.rows, target, f, min_leaf);
        } else {
            for (int f = 0; f < ds.p_enc; ++f)
                per_feature[static_cast<std::size_t>(f)] =
                    best_split_on_feature(ds, job.rows, target, f, min_leaf);
        }
        // deterministic pick: lowest SSE, ties to the lowest feature index
        SplitChoice best;
        for (const auto& c : per_feature)
            if (c.found && (!best.found || c.score < best.score)) best = c;

        if (!best.found) {
            make_leaf();
            continue;
        }

        std::vector<int> left_rows, right_rows;
        for (int r : job.rows)
            (ds.X[static_cast<std::size_t>(r) * ds.p_enc + best.feature] <= best.split ? left_rows
                                                                                       : right_rows)
                .push_back(r);

        int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        int right = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        auto& nd = tree.nodes[static_cast<std::size_t>(job.node)];
        nd.feature = best.feature;
        nd.split = best.split;
        nd.left = left;
        nd.right = right;
        stack.push_back({right, job.depth + 1, std::move(right_rows)});
        stack.push_back({left, job.depth + 1, std::move(left_rows)});
    }
    return tree;
}

} // namespace

GbdtModel fit_gbdt(const EncodedDataset& train, const GbdtConfig& config) {
    long positives = std::count(train.y.begin(), train.y.end(), 1);
    if (train.n == 0 || positives == 0 || positives == train.n)
        fail(errc::single_class_data, "gbdt training requires both classes");

    GbdtModel model;
    model.set_input_dim(train.p_enc);
    double base = static_cast<double>(positives) / train.n;
    base = std::clamp(base, 1e-9, 1.0 - 1e-9);
    model.intercept = std::log(base / (1.0 - base));

    std::vector<double> margin(static_cast<std::size_t>(train.n), model.intercept);
    std::vector<double> residual(static_cast<std::size_t>(train.n));
    std::vector<double> hessian(static_cast<std::size_t>(train.n));

    for (int t = 0; t < config.n_trees; ++t) {
        for (int i = 0; i < train.n; ++i) {
            double p = sigmoid(margin[static_cast<std::size_t>(i)]);
            residual[static_cast<std::size_t>(i)] = train.y[static_cast<std::size_t>(i)] - p;
            hessian[static_cast<std::size_t>(i)] = std::max(p * (1.0 - p), 1e-12);
        }
        Tree tree = fit_regression_tree(train, residual, hessian, config.max_depth,
                                        config.min_samples_leaf, config.learning_rate, config.exec);
        for (int i = 0; i < train.n; ++i) margin[static_cast<std::size_t>(i)] += tree.eval(train.row(i));
        model.trees.push_back(std::move(tree));
        model.weights.push_back(1.0);
    }
    return model;
}

} // namespace sevkit
