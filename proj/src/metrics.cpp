#include "sevkit/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "sevkit/errors.hpp"

namespace sevkit {

double accuracy(const Classifier& model, const EncodedDataset& data) {
    if (data.n == 0) fail(errc::empty_dataset, "accuracy of empty dataset");
    long correct = 0;
    for (int i = 0; i < data.n; ++i)
        if (model.predict(data.row(i)) == data.y[static_cast<std::size_t>(i)]) ++correct;
    return static_cast<double>(correct) / data.n;
}

double auc_from_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    long n_pos = std::count(labels.begin(), labels.end(), 1);
    long n_neg = static_cast<long>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) fail(errc::single_class_data, "AUC needs both classes");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tie groups
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels[idx[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc(const Classifier& model, const EncodedDataset& data) {
    std::vector<double> scores(static_cast<std::size_t>(data.n));
    for (int i = 0; i < data.n; ++i) scores[static_cast<std::size_t>(i)] = model.score(data.row(i));
    return auc_from_scores(scores, data.y);
}

} // namespace sevkit
