#include "sevkit/synth.hpp"

#include <cmath>

#include "sevkit/rng.hpp"

namespace sevkit {

RawDataset make_blobs(int p, int n, double margin, std::uint64_t seed) {
    FeatureSchema schema;
    for (int j = 0; j < p; ++j)
        schema.features.push_back({"f" + std::to_string(j), feature_kind::numeric, {}, false});
    schema.label_name = "label";
    schema.positive_label = "1";

    RawDataset raw;
    raw.schema = schema;
    raw.cols.resize(static_cast<std::size_t>(p));
    Rng rng(seed);
    // class centers at +/- c with a dominant first coordinate: c_0 carries the
    // margin, the rest add a weak 0.2 offset; a classifier leaning on f0 alone
    // still sits near the Bayes rate, so one-feature explanations are feasible
    for (int i = 0; i < n; ++i) {
        int y = static_cast<int>(rng.next_below(2));
        double sign = y == 1 ? 1.0 : -1.0;
        for (int j = 0; j < p; ++j) {
            double center = sign * (j == 0 ? 1.0 + margin : 0.2);
            raw.cols[static_cast<std::size_t>(j)].num.push_back(center + rng.next_normal());
        }
        raw.labels.push_back(y);
    }
    return raw;
}

RawDataset make_compas_like(int n, std::uint64_t seed) {
    FeatureSchema schema;
    schema.features.push_back({"sex", feature_kind::binary, {"female", "male"}, true});
    schema.features.push_back({"age", feature_kind::numeric, {}, true});
    schema.features.push_back({"juv_fel_count", feature_kind::numeric, {}, false});
    schema.features.push_back({"juv_misd_count", feature_kind::numeric, {}, false});
    schema.features.push_back({"juv_crime_count", feature_kind::numeric, {}, false});
    schema.features.push_back({"priors_count", feature_kind::numeric, {}, false});
    schema.features.push_back({"charge_felony", feature_kind::binary, {"no", "yes"}, false});
    schema.label_name = "two_year_recid";
    schema.positive_label = "1";

    RawDataset raw;
    raw.schema = schema;
    raw.cols.resize(7);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        double risk = rng.next_normal();
        int male = rng.next_double() < 0.8 ? 1 : 0;
        double age = 35.0 - 6.0 * risk + 5.0 * rng.next_normal();
        double juv_fel = std::max(0.0, 0.6 * risk + 0.8 * rng.next_normal());
        double juv_misd = std::max(0.0, 0.6 * risk + 0.8 * rng.next_normal());
        double juv_crime = juv_fel + juv_misd;
        double priors = std::max(0.0, 2.0 + 2.2 * risk + 1.0 * rng.next_normal());
        int felony = rng.next_double() < 0.4 + 0.1 * risk ? 1 : 0;

        // the label weighs the restricted pair (age, sex) heavily
        double z = 1.6 * ((35.0 - age) / 8.0) + 1.1 * male + 0.9 * ((priors - 2.0) / 2.4) +
                   0.4 * (juv_crime - 1.0) + 0.2 * felony - 1.8 + 0.6 * rng.next_normal();
        raw.cols[0].level.push_back(male);
        raw.cols[1].num.push_back(age);
        raw.cols[2].num.push_back(juv_fel);
        raw.cols[3].num.push_back(juv_misd);
        raw.cols[4].num.push_back(juv_crime);
        raw.cols[5].num.push_back(priors);
        raw.cols[6].level.push_back(felony);
        raw.labels.push_back(z > 0.0 ? 1 : 0);
    }
    return raw;
}

RawDataset make_adult_like(int n, std::uint64_t seed) {
    FeatureSchema schema;
    schema.features.push_back({"age", feature_kind::numeric, {}, false});
    schema.features.push_back({"hours", feature_kind::numeric, {}, false});
    schema.features.push_back(
        {"education", feature_kind::categorical,
         {"hs", "some_college", "bachelors", "masters", "doctorate", "other"}, false});
    schema.features.push_back({"occupation", feature_kind::categorical,
                               {"craft", "sales", "exec", "clerical", "service", "transport",
                                "farming", "tech", "protective", "other"},
                               false});
    schema.features.push_back({"marital", feature_kind::categorical,
                               {"never", "married", "divorced", "widowed", "separated"}, false});
    schema.features.push_back({"sex", feature_kind::binary, {"female", "male"}, false});
    schema.label_name = "income";
    schema.positive_label = ">50K";

    RawDataset raw;
    raw.schema = schema;
    raw.cols.resize(6);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        double age = 38.0 + 12.0 * rng.next_normal();
        double hours = 40.0 + 10.0 * rng.next_normal();
        int edu = static_cast<int>(rng.next_below(6));
        int occ = static_cast<int>(rng.next_below(10));
        int mar = static_cast<int>(rng.next_below(5));
        int male = static_cast<int>(rng.next_below(2));
        // signal lives in age, hours and two specific levels; the remaining
        // dummies are pure noise for an l1 fit to discard
        double z = 0.04 * (age - 38.0) + 0.05 * (hours - 40.0) + 1.2 * (edu >= 3 ? 1.0 : 0.0) +
                   1.0 * (mar == 1 ? 1.0 : 0.0) - 0.8 + 0.8 * rng.next_normal();
        raw.cols[0].num.push_back(age);
        raw.cols[1].num.push_back(hours);
        raw.cols[2].level.push_back(edu);
        raw.cols[3].level.push_back(occ);
        raw.cols[4].level.push_back(mar);
        raw.cols[5].level.push_back(male);
        raw.labels.push_back(z > 0.0 ? 1 : 0);
    }
    return raw;
}

RawDataset make_xor(int n, std::uint64_t seed) {
    FeatureSchema schema;
    schema.features.push_back({"a", feature_kind::numeric, {}, false});
    schema.features.push_back({"b", feature_kind::numeric, {}, false});
    schema.features.push_back({"noise", feature_kind::numeric, {}, false});
    schema.label_name = "label";
    schema.positive_label = "1";

    RawDataset raw;
    raw.schema = schema;
    raw.cols.resize(3);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        int a = static_cast<int>(rng.next_below(2));
        int b = static_cast<int>(rng.next_below(2));
        raw.cols[0].num.push_back(a + 0.05 * rng.next_normal());
        raw.cols[1].num.push_back(b + 0.05 * rng.next_normal());
        raw.cols[2].num.push_back(rng.next_normal());
        raw.labels.push_back(a ^ b);
    }
    return raw;
}

} // namespace sevkit
