#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sevkit/dataset.hpp"
#include "sevkit/errors.hpp"
#include "sevkit/io_util.hpp"
#include "sevkit/rng.hpp"
#include "sevkit/synth.hpp"

using namespace sevkit;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto p = std::filesystem::temp_directory_path() / name;
    atomic_write(p, content);
    return p;
}

FeatureSchema housing_schema() {
    FeatureSchema s;
    s.features.push_back({"age", feature_kind::numeric, {}, false});
    s.features.push_back({"housing", feature_kind::categorical, {"Rent", "Mortgage", "Own"}, false});
    s.features.push_back({"employed", feature_kind::binary, {"no", "yes"}, false});
    s.label_name = "label";
    s.positive_label = "1";
    return s;
}

} // namespace

TEST_CASE("load_csv parses rows and validates levels") {
    auto csv = write_temp("pipe_basic.csv",
                          "age,housing,employed,label\n"
                          "34,Rent,yes,1\n"
                          "51,\"Own\",no,0\n"
                          "28,Mortgage,yes,0\n");
    auto raw = load_csv(csv, housing_schema());
    CHECK(raw.n() == 3);
    CHECK(raw.p() == 3);
    CHECK(raw.cols[0].num[0] == doctest::Approx(34.0));
    CHECK(raw.cols[1].level[1] == 2); // Own
    CHECK(raw.labels == std::vector<int>{1, 0, 0});
}

TEST_CASE("load_csv accepts an empty data section") {
    auto csv = write_temp("pipe_empty.csv", "age,housing,employed,label\n");
    auto raw = load_csv(csv, housing_schema());
    CHECK(raw.n() == 0);
}

TEST_CASE("load_csv rejects unknown levels with row context") {
    auto csv = write_temp("pipe_badlevel.csv",
                          "age,housing,employed,label\n"
                          "34,Rent,yes,1\n"
                          "51,Rrent,no,0\n");
    try {
        load_csv(csv, housing_schema());
        FAIL("expected unknown_level");
    } catch (const error& e) {
        CHECK(e.code() == errc::unknown_level);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
        CHECK(std::string(e.what()).find("housing") != std::string::npos);
    }
}

TEST_CASE("load_csv rejects missing columns and non-binary labels") {
    auto missing = write_temp("pipe_missing.csv", "age,housing,label\n1,Rent,1\n");
    CHECK_THROWS_AS(load_csv(missing, housing_schema()), error);

    auto triple = write_temp("pipe_label3.csv",
                             "age,housing,employed,label\n"
                             "1,Rent,no,1\n2,Rent,no,0\n3,Rent,no,2\n");
    try {
        load_csv(triple, housing_schema());
        FAIL("expected non_binary_label");
    } catch (const error& e) {
        CHECK(e.code() == errc::non_binary_label);
    }
}

TEST_CASE("stratified split hits per-class targets and is deterministic") {
    RawDataset raw = make_blobs(3, 1000, 1.0, 99);
    // force exactly 300 positives for the arithmetic check
    for (int i = 0; i < raw.n(); ++i) raw.labels[static_cast<std::size_t>(i)] = i < 300 ? 1 : 0;

    auto [train_a, test_a] = stratified_split(raw, 0.2, 7);
    CHECK(test_a.n() == 200);
    CHECK(std::count(test_a.labels.begin(), test_a.labels.end(), 1) == 60);
    CHECK(train_a.n() == 800);

    auto [train_b, test_b] = stratified_split(raw, 0.2, 7);
    CHECK(train_b.labels == train_a.labels);
    for (int j = 0; j < raw.p(); ++j)
        CHECK(train_b.cols[static_cast<std::size_t>(j)].num == train_a.cols[static_cast<std::size_t>(j)].num);

    auto [train_c, test_c] = stratified_split(raw, 0.2, 8);
    bool same = train_c.labels == train_a.labels && train_c.cols[0].num == train_a.cols[0].num;
    CHECK_FALSE(same);
}

TEST_CASE("stratified split rounds half up per class") {
    // 10 rows, 1 positive, fraction 0.2: the positive count rounds to 0 and
    // the majority class absorbs the remainder
    RawDataset raw = make_blobs(2, 10, 1.0, 3);
    for (int i = 0; i < raw.n(); ++i) raw.labels[static_cast<std::size_t>(i)] = i == 0 ? 1 : 0;
    auto [train, test] = stratified_split(raw, 0.2, 1);
    CHECK(test.n() == 2);
    CHECK(std::count(test.labels.begin(), test.labels.end(), 1) == 0);
    CHECK(std::count(train.labels.begin(), train.labels.end(), 1) == 1);
}

TEST_CASE("stratified split needs both classes") {
    RawDataset raw = make_blobs(2, 20, 1.0, 3);
    for (auto& y : raw.labels) y = 1;
    CHECK_THROWS_AS(stratified_split(raw, 0.2, 0), error);
}

TEST_CASE("encode produces one-hot groups and standardized numerics") {
    auto csv = write_temp("pipe_encode.csv",
                          "age,housing,employed,label\n"
                          "30,Rent,yes,1\n"
                          "40,Mortgage,no,0\n"
                          "50,Own,yes,0\n"
                          "60,Rent,no,1\n");
    auto ds = encode(load_csv(csv, housing_schema()));
    CHECK(ds.p_enc == 1 + 3 + 1);
    CHECK(ds.groups.size() == 3);
    CHECK(ds.groups[1].size() == 3);

    double mean = 0.0, var = 0.0;
    for (int i = 0; i < ds.n; ++i) mean += ds.row(i)[0];
    mean /= ds.n;
    for (int i = 0; i < ds.n; ++i) var += (ds.row(i)[0] - mean) * (ds.row(i)[0] - mean);
    var /= ds.n;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-6);

    for (int i = 0; i < ds.n; ++i) {
        double sum = 0.0;
        for (int c = ds.groups[1].begin; c < ds.groups[1].end; ++c)
            sum += ds.row(i)[static_cast<std::size_t>(c)];
        CHECK(sum == doctest::Approx(1.0));
    }
}

TEST_CASE("all-numeric schema keeps its width") {
    auto raw = make_blobs(7, 50, 1.0, 5);
    auto ds = encode(raw);
    CHECK(ds.p_enc == 7);
    CHECK(ds.p_orig() == 7);
}

TEST_CASE("encode with fitted stats leaves test means off zero") {
    auto raw = make_blobs(4, 400, 1.0, 11);
    auto [train_raw, test_raw] = stratified_split(raw, 0.25, 2);
    auto train = encode(train_raw);
    auto test = encode(test_raw, &train.stats);
    double mean = 0.0;
    for (int i = 0; i < test.n; ++i) mean += test.row(i)[0];
    mean /= test.n;
    CHECK(mean != 0.0); // reusing train statistics shifts the test mean
    CHECK(std::abs(mean) < 0.5);
}

TEST_CASE("zero-variance columns are centered, not scaled") {
    FeatureSchema s;
    s.features.push_back({"constant", feature_kind::numeric, {}, false});
    s.label_name = "label";
    s.positive_label = "1";
    auto csv = write_temp("pipe_const.csv", "constant,label\n5,1\n5,0\n5,1\n");
    auto ds = encode(load_csv(csv, s));
    CHECK_FALSE(ds.stats.per_feature[0].scaled);
    CHECK(ds.stats.warnings.size() == 1);
    for (int i = 0; i < ds.n; ++i) CHECK(ds.row(i)[0] == doctest::Approx(0.0));
}

TEST_CASE("decode round-trips levels exactly and numerics to 1e-9") {
    auto raw = make_adult_like(300, 17);
    auto ds = encode(raw);
    auto back = decode(ds);
    for (int j = 0; j < raw.p(); ++j) {
        const auto& a = raw.cols[static_cast<std::size_t>(j)];
        const auto& b = back.cols[static_cast<std::size_t>(j)];
        if (!a.num.empty()) {
            for (std::size_t i = 0; i < a.num.size(); ++i) CHECK(std::abs(a.num[i] - b.num[i]) < 1e-9);
        } else {
            CHECK(a.level == b.level);
        }
    }
}

TEST_CASE("reference holds means, modes, and valid one-hot groups") {
    auto ds = encode(make_adult_like(500, 23));
    auto ref = build_reference(ds);
    REQUIRE(ref.x.size() == static_cast<std::size_t>(ds.p_enc));

    for (int j = 0; j < ds.schema.feature_count(); ++j) {
        const auto& f = ds.schema.features[static_cast<std::size_t>(j)];
        auto span = ds.groups[static_cast<std::size_t>(j)];
        if (f.kind == feature_kind::numeric) {
            CHECK(ref.provenance[static_cast<std::size_t>(j)] == "mean");
            CHECK(std::abs(ref.x[static_cast<std::size_t>(span.begin)]) < 1e-9);
        } else {
            CHECK(ref.provenance[static_cast<std::size_t>(j)] == "mode");
            double sum = 0.0;
            for (int c = span.begin; c < span.end; ++c) {
                double v = ref.x[static_cast<std::size_t>(c)];
                CHECK((v == 0.0 || v == 1.0));
                sum += v;
            }
            if (f.kind == feature_kind::categorical) CHECK(sum == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("reference binary mode and categorical tie break") {
    FeatureSchema s;
    s.features.push_back({"flag", feature_kind::binary, {"no", "yes"}, false});
    s.features.push_back({"housing", feature_kind::categorical, {"Rent", "Mortgage", "Own"}, false});
    s.label_name = "label";
    s.positive_label = "1";
    std::string rows = "flag,housing,label\n";
    for (int i = 0; i < 10; ++i) rows += "yes,Rent,0\n";
    for (int i = 0; i < 45; ++i) rows += "yes,Mortgage,0\n";
    for (int i = 0; i < 45; ++i) rows += "no,Own,1\n";
    auto ds = encode(load_csv(write_temp("pipe_tie.csv", rows), s));
    auto ref = build_reference(ds);
    CHECK(ref.x[0] == 1.0); // 55% yes
    // Mortgage and Own tie at 45; first-declared among the maxima wins
    CHECK(ref.x[1 + 1] == 1.0);
    CHECK(ref.x[1 + 2] == 0.0);

    EncodedDataset empty;
    CHECK_THROWS_AS(build_reference(empty), error);
}

TEST_CASE("prepared directory round-trips") {
    auto raw = make_adult_like(200, 31);
    auto [train_raw, test_raw] = stratified_split(raw, 0.2, 4);
    PreparedData prep;
    prep.train = encode(train_raw);
    prep.test = encode(test_raw, &prep.train.stats);
    prep.reference = build_reference(prep.train);

    auto dir = std::filesystem::temp_directory_path() / "sevkit_prep_rt";
    std::filesystem::remove_all(dir);
    save_prepared(dir, prep);
    auto loaded = load_prepared(dir);

    CHECK(loaded.train.X == prep.train.X);
    CHECK(loaded.test.X == prep.test.X);
    CHECK(loaded.train.y == prep.train.y);
    CHECK(loaded.reference.x == prep.reference.x);
    CHECK(loaded.train.schema.features.size() == prep.train.schema.features.size());
}
