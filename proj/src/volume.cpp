#include "sevkit/volume.hpp"

#include <algorithm>
#include <cmath>

#include "sevkit/errors.hpp"
#include "sevkit/rng.hpp"

namespace sevkit {

double volume_product(const LinearModel& model, const Reference& reference, double eps_denom) {
    double r = model.raw_score(reference.x);
    if (r >= 0.0) fail(errc::reference_not_negative, "volume product requires raw(reference) < 0");
    double prod = 1.0;
    for (double c : model.coef) prod *= std::abs(r) / std::max(std::abs(c), eps_denom);
    return prod;
}

LinearModel canonical_volume_classifier(int p) {
    LinearModel m(p);
    m.intercept = -1.0;
    for (auto& c : m.coef) c = 1.0;
    return m;
}

Box unit_box(int p) {
    Box b;
    b.lo.assign(static_cast<std::size_t>(p), 0.0);
    b.hi.assign(static_cast<std::size_t>(p), 1.0);
    return b;
}

namespace {

constexpr long kMcChunk = 4096;

// SEV+ >= 2 by definition: positive point whose every one-feature alignment
// from the reference stays negative
bool sev_plus_at_least_two(const LinearModel& model, const Reference& reference,
                           std::span<const double> x) {
    double r = model.raw_score(reference.x);
    double z = model.raw_score(x);
    if (z <= 0.0) return false;
    for (std::size_t j = 0; j < model.coef.size(); ++j) {
        double one_flip = r + model.coef[j] * (x[j] - reference.x[j]);
        if (one_flip > 0.0) return false; // SEV+ = 1
    }
    return true;
}

} // namespace

VolumeReport mc_volume_check(const LinearModel& model, const Reference& reference, const Box& box,
                             long n_samples, std::uint64_t seed, exec_mode exec) {
    const int p = model.input_dim();
    if (p < 2 || p > 6) fail(errc::dimension_too_large, "mc check supports 2 <= p <= 6");
    if (box.dim() != p) fail(errc::dimension_mismatch, "box dimension does not match model");
    if (n_samples < 1) fail(errc::bad_config, "need at least one sample");

    const long n_chunks = (n_samples + kMcChunk - 1) / kMcChunk;
    std::vector<long> hits(static_cast<std::size_t>(n_chunks), 0);

    Rng base(seed);
    auto run_chunk = [&](long c) {
        Rng rng = base.fork(static_cast<std::uint64_t>(c));
        long begin = c * kMcChunk;
        long end = std::min(n_samples, begin + kMcChunk);
        std::vector<double> x(static_cast<std::size_t>(p));
        long h = 0;
        for (long s = begin; s < end; ++s) {
            for (int j = 0; j < p; ++j)
                x[static_cast<std::size_t>(j)] =
                    rng.next_uniform(box.lo[static_cast<std::size_t>(j)], box.hi[static_cast<std::size_t>(j)]);
            if (sev_plus_at_least_two(model, reference, x)) ++h;
        }
        hits[static_cast<std::size_t>(c)] = h;
    };

    if (exec == exec_mode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        for (long c = 0; c < n_chunks; ++c) run_chunk(c);
    }

    long total = 0;
    for (long h : hits) total += h;

    VolumeReport rep;
    rep.p = p;
    rep.n_samples = n_samples;
    rep.product = volume_product(model, reference);
    rep.mc_fraction = static_cast<double>(total) / static_cast<double>(n_samples);
    rep.mc_stderr = std::sqrt(rep.mc_fraction * (1.0 - rep.mc_fraction) /
                              static_cast<double>(n_samples));
    return rep;
}

} // namespace sevkit
