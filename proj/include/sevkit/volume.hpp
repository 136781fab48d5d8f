#pragma once

#include <cstdint>

#include "sevkit/dataset.hpp"
#include "sevkit/linear.hpp"
#include "sevkit/parallel.hpp"

namespace sevkit {

// hyperrectangle factor prod_j |raw(reference)/coef_j| of the SEV+ >= 2
// region volume; zero coefficients floored at eps_denom
double volume_product(const LinearModel& model, const Reference& reference, double eps_denom = 1e-8);

struct Box {
    std::vector<double> lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
};

struct VolumeReport {
    double product = 0.0;     // hyperrectangle factor
    double mc_fraction = 0.0; // sampled fraction of box points with SEV+ >= 2
    double mc_stderr = 0.0;   // binomial standard error
    int p = 0;
    long n_samples = 0;
};

// Uniform sampling over the box; a point counts when the sign-rule classifier
// predicts it positive and no single feature copied onto the reference does.
// Sampling is chunked so serial and parallel runs see identical draws.
VolumeReport mc_volume_check(const LinearModel& model, const Reference& reference, const Box& box,
                             long n_samples, std::uint64_t seed,
                             exec_mode exec = exec_mode::parallel);

// the proof's canonical setup: 1[-1 + sum x_j > 0], reference at the origin,
// unit box; expected fraction 1 - 1/p!
LinearModel canonical_volume_classifier(int p);
Box unit_box(int p);

} // namespace sevkit
