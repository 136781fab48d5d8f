#include "sevkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sevkit/errors.hpp"
#include "sevkit/io_util.hpp"
#include "sevkit/rng.hpp"

namespace sevkit {

namespace {

// splits one CSV line; supports quoted fields with embedded commas and
// doubled quotes, no embedded newlines
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& cell, int row, const std::string& feature) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        fail(errc::unknown_level,
             "row " + std::to_string(row) + ": cannot parse numeric value '" + cell +
                 "' for feature '" + feature + "'");
    return v;
}

int level_index(const FeatureSpec& spec, const std::string& cell, int row) {
    for (std::size_t k = 0; k < spec.levels.size(); ++k)
        if (spec.levels[k] == cell) return static_cast<int>(k);
    fail(errc::unknown_level, "row " + std::to_string(row) + ": unknown level '" + cell +
                                  "' for feature '" + spec.name + "'");
}

long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

RawDataset take_rows(const RawDataset& raw, const std::vector<int>& idx) {
    RawDataset out;
    out.schema = raw.schema;
    out.cols.resize(raw.cols.size());
    for (std::size_t j = 0; j < raw.cols.size(); ++j) {
        const auto& c = raw.cols[j];
        auto& o = out.cols[j];
        if (!c.num.empty())
            for (int i : idx) o.num.push_back(c.num[static_cast<std::size_t>(i)]);
        else
            for (int i : idx) o.level.push_back(c.level[static_cast<std::size_t>(i)]);
    }
    for (int i : idx) out.labels.push_back(raw.labels[static_cast<std::size_t>(i)]);
    return out;
}

std::string format_numeric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

RawDataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) fail(errc::io_failure, "cannot open CSV: " + path.string());

    std::string line;
    if (!std::getline(in, line)) fail(errc::missing_column, "CSV has no header row: " + path.string());
    auto header = split_csv_line(line);

    std::vector<int> col_of_feature(static_cast<std::size_t>(schema.feature_count()), -1);
    int label_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == schema.label_name) label_col = static_cast<int>(c);
        int f = schema.feature_index(header[c]);
        if (f >= 0) col_of_feature[static_cast<std::size_t>(f)] = static_cast<int>(c);
    }
    if (label_col < 0) fail(errc::missing_column, "label column '" + schema.label_name + "' not in CSV header");
    for (int f = 0; f < schema.feature_count(); ++f)
        if (col_of_feature[static_cast<std::size_t>(f)] < 0)
            fail(errc::missing_column,
                 "feature column '" + schema.features[static_cast<std::size_t>(f)].name + "' not in CSV header");

    RawDataset raw;
    raw.schema = schema;
    raw.cols.resize(static_cast<std::size_t>(schema.feature_count()));

    std::set<std::string> label_values;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            fail(errc::missing_column, "row " + std::to_string(row) + ": expected " +
                                           std::to_string(header.size()) + " cells, got " +
                                           std::to_string(cells.size()));
        for (int f = 0; f < schema.feature_count(); ++f) {
            const auto& spec = schema.features[static_cast<std::size_t>(f)];
            const auto& cell = cells[static_cast<std::size_t>(col_of_feature[static_cast<std::size_t>(f)])];
            if (spec.kind == feature_kind::numeric)
                raw.cols[static_cast<std::size_t>(f)].num.push_back(parse_number(cell, row, spec.name));
            else
                raw.cols[static_cast<std::size_t>(f)].level.push_back(level_index(spec, cell, row));
        }
        const auto& lab = cells[static_cast<std::size_t>(label_col)];
        label_values.insert(lab);
        if (label_values.size() > 2)
            fail(errc::non_binary_label,
                 "row " + std::to_string(row) + ": more than two distinct label values (saw '" + lab + "')");
        raw.labels.push_back(lab == schema.positive_label ? 1 : 0);
        ++row;
    }
    return raw;
}

std::pair<RawDataset, RawDataset> stratified_split(const RawDataset& raw, double test_fraction,
                                                   std::uint64_t seed) {
    if (raw.n() < 2) fail(errc::empty_dataset, "need at least 2 rows to split");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        fail(errc::bad_config, "test_fraction must be in (0,1)");

    std::vector<int> pos, neg;
    for (int i = 0; i < raw.n(); ++i) (raw.labels[static_cast<std::size_t>(i)] ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) fail(errc::single_class_data, "both classes required for a stratified split");

    long long want_total = round_half_up(raw.n() * test_fraction);
    long long want_pos = round_half_up(static_cast<double>(pos.size()) * test_fraction);
    long long want_neg = round_half_up(static_cast<double>(neg.size()) * test_fraction);
    long long excess = (want_pos + want_neg) - want_total;
    if (excess != 0) {
        // majority class absorbs the rounding remainder
        if (neg.size() >= pos.size())
            want_neg -= excess;
        else
            want_pos -= excess;
    }
    want_pos = std::clamp<long long>(want_pos, 0, static_cast<long long>(pos.size()));
    want_neg = std::clamp<long long>(want_neg, 0, static_cast<long long>(neg.size()));

    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);

    std::vector<int> test_idx, train_idx;
    test_idx.insert(test_idx.end(), pos.begin(), pos.begin() + want_pos);
    test_idx.insert(test_idx.end(), neg.begin(), neg.begin() + want_neg);
    train_idx.insert(train_idx.end(), pos.begin() + want_pos, pos.end());
    train_idx.insert(train_idx.end(), neg.begin() + want_neg, neg.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    return {take_rows(raw, train_idx), take_rows(raw, test_idx)};
}

EncodedDataset encode(const RawDataset& raw, const Standardization* fitted) {
    const auto& schema = raw.schema;
    EncodedDataset ds;
    ds.schema = schema;
    ds.n = raw.n();
    ds.y = raw.labels;

    int col = 0;
    for (const auto& f : schema.features) {
        ColumnSpan span;
        span.begin = col;
        switch (f.kind) {
            case feature_kind::numeric:
                ds.col_names.push_back(f.name);
                col += 1;
                break;
            case feature_kind::binary:
                ds.col_names.push_back(f.name + "=" + f.levels[1]);
                col += 1;
                break;
            case feature_kind::categorical:
                for (const auto& lv : f.levels) ds.col_names.push_back(f.name + "=" + lv);
                col += static_cast<int>(f.levels.size());
                break;
        }
        span.end = col;
        ds.groups.push_back(span);
    }
    ds.p_enc = col;
    ds.X.assign(static_cast<std::size_t>(ds.n) * ds.p_enc, 0.0);

    if (fitted) {
        ds.stats = *fitted;
        ds.stats.warnings.clear();
    } else {
        ds.stats.per_feature.resize(static_cast<std::size_t>(schema.feature_count()));
    }

    for (int j = 0; j < schema.feature_count(); ++j) {
        const auto& f = schema.features[static_cast<std::size_t>(j)];
        const auto& c = raw.cols[static_cast<std::size_t>(j)];
        const auto span = ds.groups[static_cast<std::size_t>(j)];
        if (f.kind == feature_kind::numeric) {
            NumericStats st;
            if (fitted) {
                st = fitted->per_feature[static_cast<std::size_t>(j)];
            } else {
                if (ds.n == 0) fail(errc::empty_dataset, "cannot fit standardization on empty data");
                double mean = std::accumulate(c.num.begin(), c.num.end(), 0.0) / ds.n;
                double var = 0.0;
                for (double v : c.num) var += (v - mean) * (v - mean);
                var /= ds.n;
                st.mean = mean;
                st.std_dev = std::sqrt(var);
                st.scaled = st.std_dev >= 1e-12;
                if (!st.scaled) {
                    st.std_dev = 1.0;
                    ds.stats.warnings.push_back("feature '" + f.name +
                                                "' has ~zero variance; centered but not scaled");
                }
                ds.stats.per_feature[static_cast<std::size_t>(j)] = st;
            }
            for (int i = 0; i < ds.n; ++i)
                ds.X[static_cast<std::size_t>(i) * ds.p_enc + span.begin] =
                    (c.num[static_cast<std::size_t>(i)] - st.mean) / (st.scaled ? st.std_dev : 1.0);
        } else if (f.kind == feature_kind::binary) {
            for (int i = 0; i < ds.n; ++i)
                ds.X[static_cast<std::size_t>(i) * ds.p_enc + span.begin] =
                    c.level[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
        } else {
            for (int i = 0; i < ds.n; ++i)
                ds.X[static_cast<std::size_t>(i) * ds.p_enc + span.begin +
                     c.level[static_cast<std::size_t>(i)]] = 1.0;
        }
    }
    return ds;
}

RawDataset decode(const EncodedDataset& ds) {
    RawDataset raw;
    raw.schema = ds.schema;
    raw.labels = ds.y;
    raw.cols.resize(static_cast<std::size_t>(ds.schema.feature_count()));
    for (int j = 0; j < ds.schema.feature_count(); ++j) {
        const auto& f = ds.schema.features[static_cast<std::size_t>(j)];
        const auto span = ds.groups[static_cast<std::size_t>(j)];
        auto& c = raw.cols[static_cast<std::size_t>(j)];
        for (int i = 0; i < ds.n; ++i) {
            auto x = ds.row(i);
            if (f.kind == feature_kind::numeric) {
                const auto& st = ds.stats.per_feature[static_cast<std::size_t>(j)];
                c.num.push_back(x[static_cast<std::size_t>(span.begin)] * (st.scaled ? st.std_dev : 1.0) +
                                st.mean);
            } else if (f.kind == feature_kind::binary) {
                c.level.push_back(x[static_cast<std::size_t>(span.begin)] > 0.5 ? 1 : 0);
            } else {
                int best = 0;
                double best_v = x[static_cast<std::size_t>(span.begin)];
                for (int k = 1; k < span.size(); ++k)
                    if (x[static_cast<std::size_t>(span.begin + k)] > best_v) {
                        best_v = x[static_cast<std::size_t>(span.begin + k)];
                        best = k;
                    }
                c.level.push_back(best);
            }
        }
    }
    return raw;
}

std::string decode_feature_value(const EncodedDataset& ds, std::span<const double> x, int j) {
    const auto& f = ds.schema.features[static_cast<std::size_t>(j)];
    const auto span = ds.groups[static_cast<std::size_t>(j)];
    if (f.kind == feature_kind::numeric) {
        const auto& st = ds.stats.per_feature[static_cast<std::size_t>(j)];
        double v = x[static_cast<std::size_t>(span.begin)] * (st.scaled ? st.std_dev : 1.0) + st.mean;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return buf;
    }
    if (f.kind == feature_kind::binary)
        return f.levels[x[static_cast<std::size_t>(span.begin)] > 0.5 ? 1 : 0];
    int best = 0;
    double best_v = x[static_cast<std::size_t>(span.begin)];
    for (int k = 1; k < span.size(); ++k)
        if (x[static_cast<std::size_t>(span.begin + k)] > best_v) {
            best_v = x[static_cast<std::size_t>(span.begin + k)];
            best = k;
        }
    return f.levels[static_cast<std::size_t>(best)];
}

Reference build_reference(const EncodedDataset& train) {
    if (train.n == 0) fail(errc::empty_dataset, "cannot build a reference from an empty split");
    Reference ref;
    ref.x.assign(static_cast<std::size_t>(train.p_enc), 0.0);
    for (int j = 0; j < train.schema.feature_count(); ++j) {
        const auto& f = train.schema.features[static_cast<std::size_t>(j)];
        const auto span = train.groups[static_cast<std::size_t>(j)];
        if (f.kind == feature_kind::numeric) {
            double mean = 0.0;
            for (int i = 0; i < train.n; ++i)
                mean += train.X[static_cast<std::size_t>(i) * train.p_enc + span.begin];
            ref.x[static_cast<std::size_t>(span.begin)] = mean / train.n;
            ref.provenance.push_back("mean");
        } else {
            // mode; ties broken by first-declared level
            std::vector<long long> counts(static_cast<std::size_t>(span.size()), 0);
            for (int i = 0; i < train.n; ++i) {
                if (f.kind == feature_kind::binary) {
                    int lv = train.X[static_cast<std::size_t>(i) * train.p_enc + span.begin] > 0.5 ? 1 : 0;
                    counts[static_cast<std::size_t>(lv)]++;
                } else {
                    for (int k = 0; k < span.size(); ++k)
                        if (train.X[static_cast<std::size_t>(i) * train.p_enc + span.begin + k] > 0.5)
                            counts[static_cast<std::size_t>(k)]++;
                }
            }
            // binary has a 1-wide span but 2 logical levels
            int n_levels = f.kind == feature_kind::binary ? 2 : span.size();
            int mode = 0;
            for (int k = 1; k < n_levels; ++k)
                if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(mode)]) mode = k;
            if (f.kind == feature_kind::binary)
                ref.x[static_cast<std::size_t>(span.begin)] = mode == 1 ? 1.0 : 0.0;
            else
                ref.x[static_cast<std::size_t>(span.begin + mode)] = 1.0;
            ref.provenance.push_back("mode");
        }
    }
    return ref;
}

// ---- persistence ---------------------------------------------------------

void save_encoded_csv(const std::filesystem::path& path, const EncodedDataset& ds) {
    std::ostringstream out;
    for (const auto& name : ds.col_names) out << name << ',';
    out << ds.schema.label_name << '\n';
    for (int i = 0; i < ds.n; ++i) {
        auto x = ds.row(i);
        for (int c = 0; c < ds.p_enc; ++c) out << format_numeric(x[static_cast<std::size_t>(c)]) << ',';
        out << ds.y[static_cast<std::size_t>(i)] << '\n';
    }
    atomic_write(path, out.str());
}

EncodedDataset load_encoded_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                                const std::vector<ColumnSpan>& groups,
                                const std::vector<std::string>& col_names,
                                const Standardization& stats) {
    std::ifstream in(path);
    if (!in) fail(errc::io_failure, "cannot open encoded CSV: " + path.string());
    EncodedDataset ds;
    ds.schema = schema;
    ds.groups = groups;
    ds.col_names = col_names;
    ds.stats = stats;
    ds.p_enc = static_cast<int>(col_names.size());

    std::string line;
    if (!std::getline(in, line)) fail(errc::corrupt_payload, "encoded CSV missing header: " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != ds.p_enc + 1)
            fail(errc::corrupt_payload, "encoded CSV row width mismatch in " + path.string());
        for (int c = 0; c < ds.p_enc; ++c) ds.X.push_back(std::strtod(cells[static_cast<std::size_t>(c)].c_str(), nullptr));
        ds.y.push_back(std::atoi(cells[static_cast<std::size_t>(ds.p_enc)].c_str()));
        ++ds.n;
    }
    return ds;
}

namespace {

nlohmann::json stats_to_json(const Standardization& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& st : s.per_feature)
        arr.push_back({{"mean", st.mean}, {"std", st.std_dev}, {"scaled", st.scaled}});
    return nlohmann::json{{"per_feature", arr}, {"warnings", s.warnings}};
}

Standardization stats_from_json(const nlohmann::json& j) {
    Standardization s;
    for (const auto& e : j.at("per_feature")) {
        NumericStats st;
        st.mean = e.at("mean").get<double>();
        st.std_dev = e.at("std").get<double>();
        st.scaled = e.at("scaled").get<bool>();
        s.per_feature.push_back(st);
    }
    if (j.contains("warnings")) s.warnings = j.at("warnings").get<std::vector<std::string>>();
    return s;
}

} // namespace

void save_prepared(const std::filesystem::path& dir, const PreparedData& prepared) {
    std::filesystem::create_directories(dir);
    save_encoded_csv(dir / "train.csv", prepared.train);
    save_encoded_csv(dir / "test.csv", prepared.test);

    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : prepared.train.groups) groups.push_back({{"begin", g.begin}, {"end", g.end}});
    nlohmann::json sidecar{{"format_version", kFormatVersion},
                           {"schema", prepared.train.schema.to_json()},
                           {"groups", groups},
                           {"col_names", prepared.train.col_names},
                           {"standardization", stats_to_json(prepared.train.stats)}};
    save_json(dir / "encoding.json", sidecar);

    nlohmann::json ref{{"format_version", kFormatVersion},
                       {"x", prepared.reference.x},
                       {"provenance", prepared.reference.provenance}};
    save_json(dir / "reference.json", ref);
}

PreparedData load_prepared(const std::filesystem::path& dir) {
    auto sidecar = load_json(dir / "encoding.json");
    if (sidecar.value("format_version", 0) != kFormatVersion)
        fail(errc::version_mismatch, "unsupported encoding.json format_version in " + dir.string());
    auto schema = FeatureSchema::from_json(sidecar.at("schema"));
    std::vector<ColumnSpan> groups;
    for (const auto& g : sidecar.at("groups"))
        groups.push_back({g.at("begin").get<int>(), g.at("end").get<int>()});
    auto col_names = sidecar.at("col_names").get<std::vector<std::string>>();
    auto stats = stats_from_json(sidecar.at("standardization"));

    PreparedData out;
    out.train = load_encoded_csv(dir / "train.csv", schema, groups, col_names, stats);
    out.test = load_encoded_csv(dir / "test.csv", schema, groups, col_names, stats);

    auto ref = load_json(dir / "reference.json");
    if (ref.value("format_version", 0) != kFormatVersion)
        fail(errc::version_mismatch, "unsupported reference.json format_version in " + dir.string());
    out.reference.x = ref.at("x").get<std::vector<double>>();
    out.reference.provenance = ref.at("provenance").get<std::vector<std::string>>();
    return out;
}

} // namespace sevkit
