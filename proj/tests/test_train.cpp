#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sevkit/engine.hpp"
#include "sevkit/errors.hpp"
#include "sevkit/io_util.hpp"
#include "sevkit/metrics.hpp"
#include "sevkit/mlp.hpp"
#include "sevkit/synth.hpp"
#include "sevkit/train.hpp"
#include "sevkit/volume.hpp"
#include "test_support.hpp"

using namespace sevkit;
using namespace sevkit::testing;

namespace {

struct Bundle {
    EncodedDataset train;
    EncodedDataset test;
    Reference ref;
};

Bundle blob_bundle(int p, int n, std::uint64_t seed) {
    auto raw = make_blobs(p, n, 1.0, seed);
    auto [train_raw, test_raw] = stratified_split(raw, 0.2, seed);
    Bundle b;
    b.train = encode(train_raw);
    b.test = encode(test_raw, &b.train.stats);
    b.ref = build_reference(b.train);
    return b;
}

std::vector<double> params_of(const Classifier& m) {
    std::vector<double> p(static_cast<std::size_t>(m.param_count()));
    m.get_params(p);
    return p;
}

} // namespace

TEST_CASE("schedule degeneracy: all-warmup run equals a BCE-only run") {
    auto b = blob_bundle(4, 400, 11);
    TrainConfig cfg;
    cfg.warmup_epochs = 6;
    cfg.sev_epochs = 0;
    cfg.seed = 3;

    auto with_sev_kind = train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, cfg,
                               sev_loss_kind::all_opt_plus);
    auto bce_only =
        train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, cfg, sev_loss_kind::none);
    CHECK(params_of(*with_sev_kind.model) == params_of(*bce_only.model));
}

TEST_CASE("warm-up epochs replay the BCE-only trajectory exactly") {
    auto b = blob_bundle(4, 400, 13);
    TrainConfig cfg;
    cfg.warmup_epochs = 5;
    cfg.sev_epochs = 3;
    cfg.seed = 9;
    auto full = train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, cfg,
                      sev_loss_kind::all_opt_plus);

    TrainConfig bce = cfg;
    bce.sev_epochs = 0;
    auto warm =
        train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, bce, sev_loss_kind::none);

    REQUIRE(full.history.size() == 8);
    REQUIRE(warm.history.size() == 5);
    for (int e = 0; e < 5; ++e) {
        CHECK(full.history[static_cast<std::size_t>(e)].bce == warm.history[static_cast<std::size_t>(e)].bce);
        CHECK(full.history[static_cast<std::size_t>(e)].accuracy ==
              warm.history[static_cast<std::size_t>(e)].accuracy);
    }
    // the sev phase actually engages afterwards
    CHECK(full.history[5].pos_base != 0.0);
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto b = blob_bundle(5, 500, 17);
    TrainConfig cfg;
    cfg.warmup_epochs = 4;
    cfg.sev_epochs = 2;
    cfg.seed = 21;
    auto run = [&] {
        return train(std::make_unique<MlpModel>(MlpModel::random_init(b.train.p_enc, 8, cfg.seed)),
                     b.train, b.ref, cfg, sev_loss_kind::all_opt_minus);
    };
    auto a = run();
    auto c = run();
    CHECK(params_of(*a.model) == params_of(*c.model));
    CHECK(serialize(*a.model) == serialize(*c.model));
}

TEST_CASE("all-opt training drives most blob queries to SEV 1") {
    auto b = blob_bundle(5, 800, 0);
    TrainConfig cfg;
    cfg.warmup_epochs = 25;
    cfg.sev_epochs = 15;
    cfg.seed = 0;
    auto result = train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, cfg,
                        sev_loss_kind::all_opt_plus);
    REQUIRE(result.reference_negative);

    auto stats = batch_sev(*result.model, b.test, b.ref, sev_kind::plus, {});
    REQUIRE(stats.n_queries > 0);
    double frac1 = stats.histogram.count(1)
                       ? static_cast<double>(stats.histogram.at(1)) / stats.n_queries
                       : 0.0;
    CHECK(frac1 >= 0.8);
}

TEST_CASE("reference penalty keeps the reference negative") {
    auto b = blob_bundle(6, 600, 23);
    TrainConfig cfg;
    cfg.warmup_epochs = 10;
    cfg.sev_epochs = 10;
    cfg.seed = 5;
    auto result = train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, cfg,
                        sev_loss_kind::all_opt_minus);
    CHECK(result.reference_negative);
    CHECK(result.model->score(b.ref.x) < 0.5);
}

TEST_CASE("gbdt sev phase touches only weights and intercept") {
    auto b = blob_bundle(4, 500, 29);
    GbdtConfig gc;
    gc.n_trees = 20;
    auto boosted = fit_gbdt(b.train, gc);
    auto leaves_before = boosted.payload_json()["trees"];

    TrainConfig cfg;
    cfg.warmup_epochs = 3;
    cfg.sev_epochs = 3;
    cfg.seed = 2;
    auto result = train(std::make_unique<GbdtModel>(boosted), b.train, b.ref, cfg,
                        sev_loss_kind::all_opt_plus);
    const auto& tuned = dynamic_cast<const GbdtModel&>(*result.model);
    CHECK(tuned.payload_json()["trees"] == leaves_before);

    bool weights_moved = false;
    for (double w : tuned.weights)
        if (w != 1.0) weights_moved = true;
    CHECK(weights_moved);
}

TEST_CASE("vol-opt is rejected for nonlinear models before training starts") {
    auto b = blob_bundle(3, 200, 31);
    TrainConfig cfg;
    cfg.warmup_epochs = 1;
    cfg.sev_epochs = 1;
    CHECK_THROWS_AS(train(std::make_unique<MlpModel>(MlpModel::random_init(b.train.p_enc, 4, 0)),
                          b.train, b.ref, cfg, sev_loss_kind::vol_opt),
                    error);
}

TEST_CASE("vol-opt training shrinks the hyperrectangle factor") {
    auto b = blob_bundle(5, 800, 37);
    TrainConfig cfg;
    cfg.warmup_epochs = 20;
    cfg.sev_epochs = 0;
    cfg.seed = 7;
    auto baseline = train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, cfg,
                          sev_loss_kind::none);

    TrainConfig vol = cfg;
    vol.sev_epochs = 20;
    vol.c1 = 1.0;
    vol.c2 = 10.0;
    auto tuned = train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, vol,
                       sev_loss_kind::vol_opt);
    REQUIRE(tuned.reference_negative);

    const auto& lin_base = dynamic_cast<const LinearModel&>(*baseline.model);
    const auto& lin_vol = dynamic_cast<const LinearModel&>(*tuned.model);
    if (baseline.reference_negative)
        CHECK(volume_product(lin_vol, b.ref) < volume_product(lin_base, b.ref));
    else
        CHECK(volume_product(lin_vol, b.ref) > 0.0);
}

TEST_CASE("divergent training reports a non-finite loss with epoch context") {
    auto b = blob_bundle(4, 300, 41);
    TrainConfig cfg;
    cfg.optimizer = optimizer_kind::sgd;
    cfg.learning_rate = 1e200; // overflows the hidden layers into inf - inf
    cfg.warmup_epochs = 4;
    cfg.sev_epochs = 0;
    try {
        train(std::make_unique<MlpModel>(MlpModel::random_init(b.train.p_enc, 8, 1)), b.train, b.ref,
              cfg, sev_loss_kind::none);
        FAIL("expected non_finite_loss");
    } catch (const error& e) {
        CHECK(e.code() == errc::non_finite_loss);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("early stopping halts once validation loss stalls") {
    // pure-noise labels: nothing to learn, so the held-out loss plateaus fast
    auto b = blob_bundle(3, 300, 43);
    Rng noise(1);
    for (auto& y : b.train.y) y = static_cast<int>(noise.next_below(2));

    TrainConfig cfg;
    cfg.warmup_epochs = 60;
    cfg.sev_epochs = 0;
    cfg.early_stopping = true;
    cfg.patience = 3;
    cfg.seed = 1;
    auto result =
        train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, cfg, sev_loss_kind::none);
    CHECK(result.history.size() < 60);

    TrainConfig bad = cfg;
    bad.early_stopping = true;
    CHECK_THROWS_AS(train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, bad,
                          sev_loss_kind::all_opt_plus),
                    error);
}

TEST_CASE("history csv carries one row per epoch") {
    auto b = blob_bundle(3, 200, 47);
    TrainConfig cfg;
    cfg.warmup_epochs = 2;
    cfg.sev_epochs = 2;
    cfg.monitor_queries = 16;
    auto result = train(std::make_unique<LinearModel>(b.train.p_enc), b.train, b.ref, cfg,
                        sev_loss_kind::all_opt_plus);
    auto path = std::filesystem::temp_directory_path() / "sevkit_history.csv";
    write_history_csv(path, result.history);
    auto text = read_file(path);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5); // header + 4 epochs
    CHECK(text.rfind("epoch,loss_bce,loss_sev,loss_pos_base,accuracy,monitor_mean_sev\n", 0) == 0);
}

TEST_CASE("config validation rejects bad values") {
    TrainConfig cfg;
    cfg.theta = 0.8;
    CHECK_THROWS_AS(cfg.validate(), error);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), error);
    cfg = {};
    cfg.c1 = -1.0;
    CHECK_THROWS_AS(cfg.validate(), error);

    auto j = TrainConfig{}.to_json();
    auto back = TrainConfig::from_json(j);
    CHECK(back.learning_rate == TrainConfig{}.learning_rate);
    CHECK(back.warmup_epochs == 70);
    CHECK(back.sev_epochs == 30);
}
