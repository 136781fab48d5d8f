#pragma once

#include <cstdint>

#include "sevkit/dataset.hpp"

namespace sevkit {

// Two Gaussian clouds in R^p with class centers +/-c, where c = (1 + margin)
// on the first coordinate and 0.2 on the rest; labels are the generating
// class.
RawDataset make_blobs(int p, int n, double margin, std::uint64_t seed);

// Recidivism-style task with 7 features of which sex and age are restricted.
// A latent risk variable drives age (inversely), priors and the juvenile
// counts, and the label leans heavily on sex and age, so a plain classifier
// leaves a sizable share of positives unexplainable once those two features
// are pinned.
RawDataset make_compas_like(int n, std::uint64_t seed);

// Census-style task with redundant one-hot dummies: only a few encoded
// columns carry signal, so an l1 fit should zero out most coefficients.
RawDataset make_adult_like(int n, std::uint64_t seed);

// binary XOR of two inputs, plus a nuisance feature
RawDataset make_xor(int n, std::uint64_t seed);

} // namespace sevkit
