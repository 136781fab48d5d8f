#pragma once

#include "sevkit/dataset.hpp"
#include "sevkit/model.hpp"

namespace sevkit {

double accuracy(const Classifier& model, const EncodedDataset& data);

// rank-based (Mann-Whitney) AUC, ties counted half
double auc(const Classifier& model, const EncodedDataset& data);
double auc_from_scores(const std::vector<double>& scores, const std::vector<int>& labels);

} // namespace sevkit
