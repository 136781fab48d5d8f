#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>

#include "sevkit/engine.hpp"
#include "sevkit/errors.hpp"
#include "sevkit/rng.hpp"
#include "test_support.hpp"

using namespace sevkit;
using namespace sevkit::testing;

namespace {

// both worked loan-risk examples in one table: positives everywhere the loan
// bit is set, plus (housing, ~loan, education); reference all-zeros negative
std::vector<bool> fig1_table() {
    std::vector<bool> t(8, false);
    t[0b010] = true; // (0,1,0)
    t[0b011] = true;
    t[0b110] = true;
    t[0b111] = true; // the query
    t[0b101] = true; // housing + education without the loan
    return t;
}

SevResult run_kind(const Classifier& m, std::span<const double> q, const Reference& r,
                   const std::vector<ColumnSpan>& g, sev_kind k, const SevOptions& o) {
    switch (k) {
        case sev_kind::plus: return sev_plus(m, q, r, g, o);
        case sev_kind::minus: return sev_minus(m, q, r, g, o);
        case sev_kind::restricted: return sev_restricted(m, q, r, g, o);
    }
    return {};
}

} // namespace

TEST_CASE("vertex_to_point endpoint identities and group atomicity") {
    // one numeric + one categorical(3) feature
    FeatureSchema s;
    s.features.push_back({"age", feature_kind::numeric, {}, false});
    s.features.push_back({"housing", feature_kind::categorical, {"Rent", "Mortgage", "Own"}, false});
    s.label_name = "label";
    s.positive_label = "1";
    std::vector<ColumnSpan> groups{{0, 1}, {1, 4}};

    std::vector<double> query{1.7, 1.0, 0.0, 0.0};    // Rent
    Reference ref = reference_at({0.0, 0.0, 1.0, 0.0}); // Mortgage

    std::vector<double> out(4);
    vertex_to_point(0b11, query, ref, groups, out);
    CHECK(out == query);
    vertex_to_point(0b00, query, ref, groups, out);
    CHECK(out == ref.x);

    // flipping the categorical feature moves the whole one-hot span
    vertex_to_point(0b10, query, ref, groups, out);
    CHECK(out == std::vector<double>{0.0, 1.0, 0.0, 0.0});
    double hot = out[1] + out[2] + out[3];
    CHECK(hot == doctest::Approx(1.0));
}

TEST_CASE("fig.1 loan example: SEV+ = 1 via the loan bit") {
    TableModel model(3, fig1_table());
    auto groups = identity_groups(3);
    std::vector<double> query{1.0, 1.0, 1.0};
    Reference ref = reference_at({0.0, 0.0, 0.0});

    auto res = sev_plus(model, query, ref, groups, {});
    CHECK(res.value == 1);
    REQUIRE(res.explanations.size() == 1);
    CHECK(res.explanations[0] == 0b010); // loan aligned to the query

    std::vector<double> point(3);
    vertex_to_point(res.explanations[0], query, ref, groups, point);
    CHECK(point == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("fig.1 loan example: SEV- = 2 with both shortest paths") {
    TableModel model(3, fig1_table());
    auto groups = identity_groups(3);
    std::vector<double> query{1.0, 1.0, 1.0};
    Reference ref = reference_at({0.0, 0.0, 0.0});

    auto res = sev_minus(model, query, ref, groups, {});
    CHECK(res.value == 2);
    REQUIRE(res.explanations.size() == 2);
    CHECK(res.explanations[0] == 0b100); // housing+loan aligned -> vertex (0,0,1)
    CHECK(res.explanations[1] == 0b001); // loan+education aligned -> vertex (1,0,0)

    auto brute = brute_force_sev(model, query, ref, groups, sev_kind::minus, {});
    CHECK(brute.value == 2);
    CHECK(brute.explanations == res.explanations);
}

TEST_CASE("degenerate lookup models") {
    // positive only when fully aligned with the query
    {
        std::vector<bool> t(1 << 4, false);
        t[0b1111] = true;
        TableModel model(4, t);
        auto groups = identity_groups(4);
        std::vector<double> q{1, 1, 1, 1};
        Reference ref = reference_at({0, 0, 0, 0});
        CHECK(sev_plus(model, q, ref, groups, {}).value == 4);
        CHECK(sev_minus(model, q, ref, groups, {}).value == 1);
    }
    // single feature
    {
        std::vector<bool> t{false, true};
        TableModel model(1, t);
        auto groups = identity_groups(1);
        std::vector<double> q{1.0};
        Reference ref = reference_at({0.0});
        CHECK(brute_force_sev(model, q, ref, groups, sev_kind::plus, {}).value == 1);
        CHECK(brute_force_sev(model, q, ref, groups, sev_kind::minus, {}).value == 1);
    }
}

TEST_CASE("search agrees with the exhaustive oracle across families") {
    Rng rng(101);
    auto groups8 = identity_groups(8);
    int done = 0;
    for (int trial = 0; done < 100 && trial < 400; ++trial) {
        LinearModel m = random_linear(8, rng);
        std::vector<double> q, r;
        if (!draw_query_reference(m, 8, rng, q, r)) continue;
        Reference ref = reference_at(r);
        SevOptions opt;
        opt.depth_limit = 8;
        for (sev_kind k : {sev_kind::plus, sev_kind::minus}) {
            auto fast = run_kind(m, q, ref, groups8, k, opt);
            auto brute = brute_force_sev(m, q, ref, groups8, k, opt);
            CHECK(fast.value == brute.value);
            if (!fast.explanations.empty()) CHECK(fast.explanations == brute.explanations);
        }
        ++done;
    }
    CHECK(done == 100);

    auto groups6 = identity_groups(6);
    done = 0;
    for (int trial = 0; done < 60 && trial < 400; ++trial) {
        auto m = MlpModel::random_init(6, 10, 3000 + static_cast<std::uint64_t>(trial));
        std::vector<double> q, r;
        if (!draw_query_reference(m, 6, rng, q, r)) continue;
        Reference ref = reference_at(r);
        SevOptions opt;
        opt.depth_limit = 6;
        for (sev_kind k : {sev_kind::plus, sev_kind::minus}) {
            auto fast = run_kind(m, q, ref, groups6, k, opt);
            auto brute = brute_force_sev(m, q, ref, groups6, k, opt);
            CHECK(fast.value == brute.value);
        }
        ++done;
    }
    CHECK(done == 60);
}

TEST_CASE("restricted search matches the pinned-subcube oracle") {
    Rng rng(321);
    auto groups = identity_groups(7);
    int done = 0;
    for (int trial = 0; done < 60 && trial < 400; ++trial) {
        LinearModel m = random_linear(7, rng);
        std::vector<double> q, r;
        if (!draw_query_reference(m, 7, rng, q, r)) continue;
        Reference ref = reference_at(r);
        SevOptions opt;
        opt.depth_limit = 7;
        opt.restricted = rng.next_u64() & 0b0111111ULL; // keep at least one bit free
        auto fast = sev_restricted(m, q, ref, groups, opt);
        auto brute = brute_force_sev(m, q, ref, groups, sev_kind::restricted, opt);
        CHECK(fast.value == brute.value);

        // empty restriction collapses to sev_minus
        SevOptions open = opt;
        open.restricted = 0;
        CHECK(sev_restricted(m, q, ref, groups, open).value ==
              sev_minus(m, q, ref, groups, open).value);
        ++done;
    }
    CHECK(done == 60);
}

TEST_CASE("fully restricted queries are unexplainable") {
    TableModel model(3, fig1_table());
    auto groups = identity_groups(3);
    std::vector<double> q{1, 1, 1};
    Reference ref = reference_at({0, 0, 0});
    SevOptions opt;
    opt.restricted = 0b111;
    auto res = sev_restricted(model, q, ref, groups, opt);
    CHECK(res.unexplained());
    CHECK_FALSE(res.depth_limit_hit); // nothing left to search, not a truncation
}

TEST_CASE("re-scoring soundness and minimality of explanations") {
    Rng rng(77);
    auto groups = identity_groups(9);
    int done = 0;
    for (int trial = 0; done < 40 && trial < 300; ++trial) {
        LinearModel m = random_linear(9, rng);
        std::vector<double> q, r;
        if (!draw_query_reference(m, 9, rng, q, r)) continue;
        Reference ref = reference_at(r);
        SevOptions opt;
        opt.depth_limit = 9;
        for (sev_kind k : {sev_kind::plus, sev_kind::minus}) {
            auto res = run_kind(m, q, ref, groups, k, opt);
            REQUIRE_FALSE(res.unexplained());
            CHECK(res.value >= 1);
            std::vector<double> point(9);
            for (Mask mask : res.explanations) {
                vertex_to_point(mask, q, ref, groups, point);
                CHECK(m.predict(point) == (k == sev_kind::plus ? 1 : 0));
                int cost = k == sev_kind::plus ? std::popcount(mask) : 9 - std::popcount(mask);
                CHECK(cost == res.value);
            }
            // nothing flips one level shallower
            if (res.value >= 2) {
                SevOptions tight = opt;
                tight.depth_limit = res.value - 1;
                CHECK(run_kind(m, q, ref, groups, k, tight).unexplained());
            }
        }
        ++done;
    }
    CHECK(done == 40);
}

TEST_CASE("depth-limit monotonicity") {
    Rng rng(555);
    auto groups = identity_groups(8);
    int done = 0;
    for (int trial = 0; done < 30 && trial < 200; ++trial) {
        auto m = random_linear(8, rng);
        std::vector<double> q, r;
        if (!draw_query_reference(m, 8, rng, q, r)) continue;
        Reference ref = reference_at(r);
        int prev_value = -1;
        bool prev_explained = false;
        for (int limit = 1; limit <= 8; ++limit) {
            SevOptions opt;
            opt.depth_limit = limit;
            auto res = sev_minus(m, q, ref, groups, opt);
            if (prev_explained) {
                REQUIRE_FALSE(res.unexplained()); // raising the limit cannot unexplain
                CHECK(res.value <= prev_value);
            }
            if (!res.unexplained()) {
                prev_explained = true;
                prev_value = res.value;
            }
        }
        ++done;
    }
    CHECK(done == 30);
}

TEST_CASE("restriction monotonicity") {
    Rng rng(606);
    auto groups = identity_groups(7);
    int done = 0;
    for (int trial = 0; done < 30 && trial < 200; ++trial) {
        auto m = random_linear(7, rng);
        std::vector<double> q, r;
        if (!draw_query_reference(m, 7, rng, q, r)) continue;
        Reference ref = reference_at(r);
        SevOptions opt;
        opt.depth_limit = 7;
        auto minus = sev_minus(m, q, ref, groups, opt);
        Mask restricted = 0;
        int prev = minus.value;
        for (int j = 0; j < 6; ++j) {
            restricted |= 1ULL << j;
            SevOptions ropt = opt;
            ropt.restricted = restricted;
            auto res = sev_restricted(m, q, ref, groups, ropt);
            int value = res.unexplained() ? 100 : res.value; // unexplained dominates everything
            CHECK(value >= prev);
            prev = value;
        }
        ++done;
    }
    CHECK(done == 30);
}

TEST_CASE("flip counts never beat SEV-") {
    Rng rng(909);
    auto groups = identity_groups(7);
    int done = 0;
    for (int trial = 0; done < 500 && trial < 3000; ++trial) {
        auto m = random_linear(7, rng);
        std::vector<double> q, r;
        if (!draw_query_reference(m, 7, rng, q, r)) continue;
        Reference ref = reference_at(r);
        SevOptions opt;
        opt.depth_limit = 7;
        auto minus = sev_minus(m, q, ref, groups, opt);
        REQUIRE_FALSE(minus.unexplained());

        std::vector<int> ordering{0, 1, 2, 3, 4, 5, 6};
        rng.shuffle(ordering);
        auto fc = flip_count(m, q, ref, groups, ordering);
        REQUIRE(fc.has_value()); // the full prefix is the negative reference
        CHECK(*fc >= minus.value);
        ++done;
    }
    CHECK(done == 500);
}

TEST_CASE("flip count worked example and ordering that leads with the answer") {
    TableModel model(3, fig1_table());
    auto groups = identity_groups(3);
    std::vector<double> q{1, 1, 1};
    Reference ref = reference_at({0, 0, 0});

    // education, housing, loan: prefixes (1,1,0), (0,1,0) stay positive, the
    // full alignment flips
    auto fc = flip_count(model, q, ref, groups, {2, 0, 1});
    REQUIRE(fc.has_value());
    CHECK(*fc == 3);

    // lead with a minimal SEV- explanation pair: housing then loan
    auto fc2 = flip_count(model, q, ref, groups, {0, 1, 2});
    REQUIRE(fc2.has_value());
    CHECK(*fc2 == 2);

    CHECK_THROWS_AS(flip_count(model, q, ref, groups, {0, 1, 1}), error);
    CHECK_THROWS_AS(flip_count(model, q, ref, groups, {0, 1}), error);
}

TEST_CASE("ordering that starts with a SEV-=1 explanation flips at once") {
    // reverting the dominant feature alone crosses the boundary
    LinearModel m(3);
    m.intercept = -1.5;
    m.coef = {2.0, 0.3, 0.1};
    auto groups = identity_groups(3);
    std::vector<double> q{1, 1, 1};
    Reference ref = reference_at({0, 0, 0});
    auto minus = sev_minus(m, q, ref, groups, {});
    CHECK(minus.value == 1);
    int lead = std::countr_zero(static_cast<unsigned long long>(~minus.explanations[0] & 0b111));
    auto fc = flip_count(m, q, ref, groups, {lead, (lead + 1) % 3, (lead + 2) % 3});
    REQUIRE(fc.has_value());
    CHECK(*fc == 1);
}

TEST_CASE("engine precondition errors") {
    TableModel model(3, fig1_table());
    auto groups = identity_groups(3);
    Reference bad_ref = reference_at({1, 1, 1}); // positive vertex
    std::vector<double> q{1, 1, 1};
    try {
        sev_plus(model, q, bad_ref, groups, {});
        FAIL("expected reference_not_negative");
    } catch (const error& e) {
        CHECK(e.code() == errc::reference_not_negative);
    }

    Reference ref = reference_at({0, 0, 0});
    std::vector<double> negative_query{0, 0, 1};
    try {
        sev_minus(model, negative_query, ref, groups, {});
        FAIL("expected query_not_positive");
    } catch (const error& e) {
        CHECK(e.code() == errc::query_not_positive);
    }

    LinearModel wide(21);
    wide.intercept = -1.0;
    std::vector<double> qq(21, 1.0);
    for (auto& c : wide.coef) c = 1.0;
    Reference rr = reference_at(std::vector<double>(21, 0.0));
    CHECK_THROWS_AS(brute_force_sev(wide, qq, rr, identity_groups(21), sev_kind::plus, {}), error);
}

TEST_CASE("batch statistics and the unexplained substitution") {
    // 7 features all used; depth limit 1 leaves two queries unexplained
    LinearModel m(7);
    m.intercept = -0.5;
    for (auto& c : m.coef) c = 1.0;

    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (int i = 0; i < 8; ++i) {
        rows.push_back({1, 0, 0, 0, 0, 0, 0}); // SEV- = 1
        y.push_back(1);
    }
    rows.push_back({1, 1, 0, 0, 0, 0, 0}); // needs two alignments
    y.push_back(1);
    rows.push_back({0, 1, 1, 0, 0, 0, 0});
    y.push_back(1);
    auto data = encoded_from_matrix(rows, y);
    Reference ref = reference_at(std::vector<double>(7, 0.0));

    SevOptions opt;
    opt.depth_limit = 1;
    auto stats = batch_sev(m, data, ref, sev_kind::minus, opt);
    CHECK(stats.n_queries == 10);
    CHECK(stats.n_unexplained == 2);
    CHECK(stats.model_feature_count == 7);
    CHECK(stats.mean_sev == doctest::Approx((8.0 * 1 + 2.0 * 7) / 10.0));
    CHECK(stats.histogram.at(1) == 8);
    CHECK(stats.pct_unexplained() == doctest::Approx(20.0));
}

TEST_CASE("batch skips negative rows and aborts on a positive reference") {
    LinearModel m(2);
    m.intercept = -1.0;
    m.coef = {2.0, 0.0};
    auto data = encoded_from_matrix({{1, 0}, {0, 0}, {1, 1}}, {1, 0, 1});
    Reference ref = reference_at({0.0, 0.0});
    auto stats = batch_sev(m, data, ref, sev_kind::plus, {});
    CHECK(stats.n_queries == 2);
    CHECK(stats.n_skipped_negative == 1);
    CHECK(stats.mean_sev == doctest::Approx(1.0));

    Reference positive_ref = reference_at({1.0, 0.0});
    CHECK_THROWS_AS(batch_sev(m, data, positive_ref, sev_kind::plus, {}), error);
}

TEST_CASE("transition counts line up by row") {
    LinearModel before(2);
    before.intercept = -0.5;
    before.coef = {1.0, 1.0};
    LinearModel after(2);
    after.intercept = -0.5;
    after.coef = {2.0, 0.0};

    auto data = encoded_from_matrix({{1, 1}, {1, 0}, {0.6, 0.7}}, {1, 1, 1});
    Reference ref = reference_at({0.0, 0.0});
    auto a = batch_sev(before, data, ref, sev_kind::minus, {});
    auto b = batch_sev(after, data, ref, sev_kind::minus, {});
    auto trans = sev_transitions(a, b);
    long total = 0;
    for (const auto& [k, c] : trans) total += c;
    CHECK(total >= 1); // only rows positive under both models are paired
}
