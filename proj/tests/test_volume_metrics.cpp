#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sevkit/errors.hpp"
#include "sevkit/metrics.hpp"
#include "sevkit/rng.hpp"
#include "sevkit/volume.hpp"
#include "test_support.hpp"

using namespace sevkit;
using namespace sevkit::testing;

TEST_CASE("volume product on the worked examples") {
    Reference origin = reference_at({0.0, 0.0});

    LinearModel a(2);
    a.intercept = -1.0;
    a.coef = {1.0, 1.0};
    CHECK(volume_product(a, origin) == doctest::Approx(1.0).epsilon(1e-12));

    LinearModel b(2);
    b.intercept = -2.0;
    b.coef = {2.0, 4.0};
    CHECK(volume_product(b, origin) == doctest::Approx(0.5).epsilon(1e-12));

    for (double lambda : {0.3, 2.0, 40.0}) {
        LinearModel scaled = b;
        scaled.intercept *= lambda;
        for (auto& c : scaled.coef) c *= lambda;
        CHECK(std::abs(volume_product(scaled, origin) / volume_product(b, origin) - 1.0) < 1e-10);
    }

    LinearModel positive(2);
    positive.intercept = 1.0;
    positive.coef = {1.0, 1.0};
    CHECK_THROWS_AS(volume_product(positive, origin), error);
}

TEST_CASE("zero coefficients fall back to the epsilon denominator") {
    Reference origin = reference_at({0.0, 0.0});
    LinearModel m(2);
    m.intercept = -1.0;
    m.coef = {1.0, 0.0};
    CHECK(volume_product(m, origin) == doctest::Approx(1.0 / 1e-8));
}

TEST_CASE("monte-carlo fraction matches 1 - 1/p! on the canonical setup") {
    for (int p : {2, 3}) {
        auto model = canonical_volume_classifier(p);
        Reference origin = reference_at(std::vector<double>(static_cast<std::size_t>(p), 0.0));
        auto rep = mc_volume_check(model, origin, unit_box(p), 200000, 7);
        double factorial = 1.0;
        for (int k = 2; k <= p; ++k) factorial *= k;
        double expected = 1.0 - 1.0 / factorial;
        CHECK(std::abs(rep.mc_fraction - expected) <= 4.0 * rep.mc_stderr);
        CHECK(rep.p == p);
        CHECK(rep.n_samples == 200000);
    }
}

TEST_CASE("change of variables carries a general model back to the canonical fraction") {
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        LinearModel m(3);
        for (auto& c : m.coef) c = 0.5 + rng.next_double() * 2.0; // keep away from zero
        if (rng.next_double() < 0.5)
            for (auto& c : m.coef) c = -c;
        Reference ref = reference_at({rng.next_normal(), rng.next_normal(), rng.next_normal()});
        double raw = m.raw_score(ref.x);
        m.intercept -= raw + 1.0; // force raw(reference) = -1

        double r = m.raw_score(ref.x);
        REQUIRE(r == doctest::Approx(-1.0));

        // preimage of the unit box under u_j = -coef_j (x_j - ref_j) / r
        Box box;
        for (int j = 0; j < 3; ++j) {
            double a = ref.x[static_cast<std::size_t>(j)];
            double b = a - r / m.coef[static_cast<std::size_t>(j)];
            box.lo.push_back(std::min(a, b));
            box.hi.push_back(std::max(a, b));
        }
        auto rep = mc_volume_check(m, ref, box, 120000, 11 + static_cast<std::uint64_t>(trial));
        CHECK(std::abs(rep.mc_fraction - (1.0 - 1.0 / 6.0)) <= 4.0 * rep.mc_stderr);
    }
}

TEST_CASE("mc sampling is deterministic in the seed and guards its domain") {
    auto model = canonical_volume_classifier(3);
    Reference origin = reference_at({0.0, 0.0, 0.0});
    auto a = mc_volume_check(model, origin, unit_box(3), 50000, 42);
    auto b = mc_volume_check(model, origin, unit_box(3), 50000, 42);
    CHECK(a.mc_fraction == b.mc_fraction);

    auto c = mc_volume_check(model, origin, unit_box(3), 50000, 43);
    CHECK(a.mc_fraction != c.mc_fraction);

    CHECK_THROWS_AS(mc_volume_check(canonical_volume_classifier(7), reference_at(std::vector<double>(7, 0.0)),
                                    unit_box(7), 100, 0),
                    error);
    CHECK_THROWS_AS(mc_volume_check(canonical_volume_classifier(1), reference_at({0.0}), unit_box(1),
                                    100, 0),
                    error);
}

TEST_CASE("auc at the fixed points") {
    LinearModel identity(1);
    identity.coef = {10.0};

    auto separated = encoded_from_matrix({{-2}, {-1}, {1}, {2}}, {0, 0, 1, 1});
    CHECK(auc(identity, separated) == doctest::Approx(1.0));

    LinearModel constant(1);
    CHECK(auc(constant, separated) == doctest::Approx(0.5)); // all ties count half

    auto single = encoded_from_matrix({{1}, {2}}, {1, 1});
    CHECK_THROWS_AS(auc(identity, single), error);
}

TEST_CASE("auc equals the quadratic pairwise oracle") {
    Rng rng(19);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 60;
        std::vector<double> scores(static_cast<std::size_t>(n));
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            // coarse grid scores force plenty of ties
            scores[static_cast<std::size_t>(i)] = std::round(rng.next_double() * 8.0) / 8.0;
            labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.next_below(2));
        }
        if (std::count(labels.begin(), labels.end(), 1) == 0) labels[0] = 1;
        if (std::count(labels.begin(), labels.end(), 0) == 0) labels[1] = 0;

        double fast = auc_from_scores(scores, labels);

        double wins = 0.0;
        long pairs = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (labels[static_cast<std::size_t>(i)] != 1 || labels[static_cast<std::size_t>(j)] != 0) continue;
                ++pairs;
                if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(j)])
                    wins += 1.0;
                else if (scores[static_cast<std::size_t>(i)] == scores[static_cast<std::size_t>(j)])
                    wins += 0.5;
            }
        CHECK(std::abs(fast - wins / pairs) < 1e-10);
    }
}

TEST_CASE("accuracy counts strict-threshold predictions") {
    LinearModel m(1);
    m.coef = {5.0};
    auto data = encoded_from_matrix({{1.0}, {-1.0}, {0.5}, {-0.5}}, {1, 0, 0, 1});
    CHECK(accuracy(m, data) == doctest::Approx(0.5));
}
