// Times the OpenMP kernels against their serial reference implementations:
// batch SEV search, batch objective gradients, and Monte-Carlo volume
// sampling. Also verifies that both paths agree before reporting.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <omp.h>

#include "sevkit/engine.hpp"
#include "sevkit/losses.hpp"
#include "sevkit/mlp.hpp"
#include "sevkit/synth.hpp"
#include "sevkit/volume.hpp"

using namespace sevkit;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_ms(F&& f) {
    double t0 = now_ms();
    f();
    return now_ms() - t0;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-28s serial %9.1f ms   parallel %9.1f ms   speedup %5.2fx   %s\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms, equal ? "results equal" : "RESULTS DIFFER");
}

} // namespace

int main() {
    std::printf("threads available: %d\n\n", omp_get_max_threads());

    auto raw = make_blobs(12, 4000, 1.0, 7);
    auto data = encode(raw);
    auto reference = build_reference(data);
    auto model = MlpModel::random_init(data.p_enc, 64, 3);
    model.threshold = model.score(reference.x) + 0.02; // reference stays negative

    // batch SEV
    {
        SevOptions serial_opt, parallel_opt;
        serial_opt.exec = exec_mode::serial;
        parallel_opt.exec = exec_mode::parallel;
        SevStats a, b;
        double ts = time_ms([&] { a = batch_sev(model, data, reference, sev_kind::minus, serial_opt); });
        double tp = time_ms([&] { b = batch_sev(model, data, reference, sev_kind::minus, parallel_opt); });
        bool equal = a.mean_sev == b.mean_sev && a.n_unexplained == b.n_unexplained;
        report("batch_sev (minus)", ts, tp, equal);
    }

    // objective gradient
    {
        std::vector<int> rows(static_cast<std::size_t>(data.n));
        for (int i = 0; i < data.n; ++i) rows[static_cast<std::size_t>(i)] = i;
        ObjectiveConfig cfg;
        cfg.kind = sev_loss_kind::all_opt_plus;
        std::vector<double> ga(static_cast<std::size_t>(model.param_count()), 0.0), gb = ga;
        double va = 0.0, vb = 0.0;
        cfg.exec = exec_mode::serial;
        double ts = time_ms([&] {
            for (int rep = 0; rep < 5; ++rep) {
                std::fill(ga.begin(), ga.end(), 0.0);
                va = total_objective(model, data, rows, reference, cfg, ga).total;
            }
        });
        cfg.exec = exec_mode::parallel;
        double tp = time_ms([&] {
            for (int rep = 0; rep < 5; ++rep) {
                std::fill(gb.begin(), gb.end(), 0.0);
                vb = total_objective(model, data, rows, reference, cfg, gb).total;
            }
        });
        bool equal = va == vb && ga == gb;
        report("total_objective gradient", ts, tp, equal);
    }

    // Monte-Carlo volume
    {
        auto lin = canonical_volume_classifier(4);
        Reference origin;
        origin.x.assign(4, 0.0);
        origin.provenance.assign(4, "mean");
        auto box = unit_box(4);
        VolumeReport a, b;
        double ts = time_ms([&] { a = mc_volume_check(lin, origin, box, 4000000, 1, exec_mode::serial); });
        double tp = time_ms([&] { b = mc_volume_check(lin, origin, box, 4000000, 1, exec_mode::parallel); });
        report("mc_volume_check (4e6)", ts, tp, a.mc_fraction == b.mc_fraction);
    }

    return 0;
}
