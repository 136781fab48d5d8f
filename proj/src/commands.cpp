#include "sevkit/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "sevkit/errors.hpp"
#include "sevkit/gbdt.hpp"
#include "sevkit/io_util.hpp"
#include "sevkit/linear.hpp"
#include "sevkit/metrics.hpp"
#include "sevkit/mlp.hpp"

namespace sevkit {

namespace {

std::string now_iso8601() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string prepared_digest(const std::filesystem::path& prepared_dir) {
    // binds a model to the exact prepared artifacts, splits included
    std::string combined;
    for (const char* f : {"encoding.json", "reference.json", "train.csv", "test.csv"})
        combined += file_digest(prepared_dir / f);
    return digest_hex(fnv1a64(combined));
}

void check_model_data_compat(const Classifier& model, const std::string& model_digest,
                             const EncodedDataset& data, const std::filesystem::path& prepared_dir) {
    if (model.input_dim() != data.p_enc)
        fail(errc::dimension_mismatch, "model expects " + std::to_string(model.input_dim()) +
                                           " encoded columns, prepared data has " +
                                           std::to_string(data.p_enc));
    if (!model_digest.empty() && model_digest != prepared_digest(prepared_dir))
        fail(errc::corrupt_payload,
             "model was trained on different prepared data (digest mismatch); re-run train or "
             "point at the matching prepared directory");
}

const EncodedDataset& pick_split(const PreparedData& prepared, const std::string& split) {
    if (split == "train") return prepared.train;
    if (split == "test") return prepared.test;
    fail(errc::bad_config, "split must be 'train' or 'test', got '" + split + "'");
}

EncodedDataset subset_rows(const EncodedDataset& ds, const std::vector<int>& rows) {
    EncodedDataset out = ds;
    out.n = static_cast<int>(rows.size());
    out.X.clear();
    out.y.clear();
    for (int r : rows) {
        if (r < 0 || r >= ds.n) fail(errc::bad_config, "query id out of range: " + std::to_string(r));
        auto x = ds.row(r);
        out.X.insert(out.X.end(), x.begin(), x.end());
        out.y.push_back(ds.y[static_cast<std::size_t>(r)]);
    }
    return out;
}

nlohmann::json runtime_percentiles(const SevStats& stats) {
    std::vector<double> times;
    for (const auto& q : stats.per_query)
        if (q.computed) times.push_back(q.runtime_ms);
    if (times.empty()) return nlohmann::json::object();
    std::sort(times.begin(), times.end());
    auto pct = [&](double f) {
        std::size_t i = static_cast<std::size_t>(f * (times.size() - 1));
        return times[i];
    };
    return nlohmann::json{{"per_query_ms_p50", pct(0.5)},
                          {"per_query_ms_p90", pct(0.9)},
                          {"per_query_ms_max", times.back()}};
}

void write_stats_csv(const std::filesystem::path& path, const SevStats& stats) {
    std::ostringstream out;
    out << "metric,value\n";
    out << "kind," << to_string(stats.kind) << '\n';
    out << "n_rows," << stats.n_rows << '\n';
    out << "n_queries," << stats.n_queries << '\n';
    out << "n_skipped_negative," << stats.n_skipped_negative << '\n';
    out << "n_errors," << stats.n_errors << '\n';
    out << "n_unexplained," << stats.n_unexplained << '\n';
    out << "pct_unexplained," << double_to_string(stats.pct_unexplained()) << '\n';
    out << "model_feature_count," << stats.model_feature_count << '\n';
    out << "mean_sev," << double_to_string(stats.mean_sev) << '\n';
    for (const auto& [v, c] : stats.histogram) out << "hist_" << v << ',' << c << '\n';
    atomic_write(path, out.str());
}

// flipped features of an explanation mask, relative to the search start
std::vector<int> changed_features(Mask m, sev_kind kind, int p) {
    std::vector<int> out;
    for (int j = 0; j < p; ++j) {
        bool bit = (m >> j) & 1ULL;
        if (kind == sev_kind::plus ? bit : !bit) out.push_back(j);
    }
    return out;
}

void write_explanations_jsonl(const std::filesystem::path& path, const SevStats& stats,
                              const EncodedDataset& data, const Reference& reference,
                              const std::vector<int>& row_labels) {
    std::ostringstream out;
    for (const auto& q : stats.per_query) {
        if (!q.computed && q.error.empty()) continue; // skipped negative row
        nlohmann::json rec;
        rec["query_id"] = row_labels.empty() ? q.row : row_labels[static_cast<std::size_t>(q.row)];
        rec["kind"] = to_string(stats.kind);
        if (!q.error.empty()) {
            rec["error"] = q.error;
            out << rec.dump() << '\n';
            continue;
        }
        rec["unexplained"] = q.result.unexplained();
        if (!q.result.unexplained()) rec["value"] = q.result.value;
        rec["expanded"] = q.result.expanded;
        rec["depth_limit_hit"] = q.result.depth_limit_hit;
        nlohmann::json explanations = nlohmann::json::array();
        for (Mask m : q.result.explanations) {
            nlohmann::json changed = nlohmann::json::array();
            for (int j : changed_features(m, stats.kind, data.p_orig())) {
                // plus aligns reference features to the query; minus/restricted
                // align query features to the reference
                std::string from, to;
                if (stats.kind == sev_kind::plus) {
                    from = decode_feature_value(data, reference.x, j);
                    to = decode_feature_value(data, data.row(q.row), j);
                } else {
                    from = decode_feature_value(data, data.row(q.row), j);
                    to = decode_feature_value(data, reference.x, j);
                }
                changed.push_back({{"name", data.schema.features[static_cast<std::size_t>(j)].name},
                                   {"from", from},
                                   {"to", to}});
            }
            explanations.push_back({{"changed_features", changed}});
        }
        rec["explanations"] = explanations;
        out << rec.dump() << '\n';
    }
    atomic_write(path, out.str());
}

} // namespace

Mask restricted_mask_from(const FeatureSchema& schema, const std::vector<std::string>& override_names) {
    Mask m = 0;
    if (override_names.empty()) {
        for (int j : schema.restricted_indices()) m |= 1ULL << j;
        return m;
    }
    for (const auto& name : override_names) {
        int j = schema.feature_index(name);
        if (j < 0) fail(errc::restricted_set_invalid, "restricted feature not in schema: " + name);
        m |= 1ULL << j;
    }
    return m;
}

std::string format_sig4(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    std::uint64_t seed, const nlohmann::json& config,
                    const std::vector<std::pair<std::string, std::string>>& input_digests,
                    const nlohmann::json& timings) {
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [k, v] : input_digests) inputs[k] = v;
    nlohmann::json j{{"format_version", kFormatVersion},
                     {"command", command},
                     {"tool_version", kToolVersion},
                     {"seed", seed},
                     {"config_digest", digest_hex(fnv1a64(config.dump()))},
                     {"config", config},
                     {"input_digests", inputs},
                     {"created_at", now_iso8601()}};
    if (!timings.empty()) j["timings"] = timings;
    save_json(out_dir / "manifest.json", j);
}

PrepareSummary cmd_prepare(const PrepareArgs& args) {
    auto schema = FeatureSchema::load(args.schema);
    auto raw = load_csv(args.csv, schema);
    auto [train_raw, test_raw] = stratified_split(raw, args.test_fraction, args.seed);

    PreparedData prepared;
    prepared.train = encode(train_raw);
    prepared.test = encode(test_raw, &prepared.train.stats);
    prepared.reference = build_reference(prepared.train);
    save_prepared(args.out_dir, prepared);

    nlohmann::json config{{"test_fraction", args.test_fraction}};
    write_manifest(args.out_dir, "prepare", args.seed, config,
                   {{"csv", file_digest(args.csv)}, {"schema", file_digest(args.schema)}});

    return {prepared.train.n, prepared.test.n, prepared.train.p_enc};
}

TrainSummary cmd_train(const TrainArgs& args) {
    auto prepared = load_prepared(args.prepared_dir);
    Mask restricted = restricted_mask_from(prepared.train.schema, args.restricted_override);
    if (args.sev == sev_loss_kind::all_opt_restricted && restricted == 0)
        fail(errc::bad_config, "all_opt_restricted needs restricted features (schema flags or override)");

    TrainResult result;
    if (args.sev == sev_loss_kind::none) {
        result = fit_baseline(args.model, prepared.train, prepared.reference, args.config, args.hidden,
                              args.n_trees, args.tree_depth);
    } else {
        std::unique_ptr<Classifier> model;
        switch (args.model) {
            case model_kind::linear:
                model = std::make_unique<LinearModel>(prepared.train.p_enc);
                break;
            case model_kind::mlp:
                model = std::make_unique<MlpModel>(
                    MlpModel::random_init(prepared.train.p_enc, args.hidden, args.config.seed));
                break;
            case model_kind::gbdt: {
                // boosted trees first, then the SEV phase re-weights them
                GbdtConfig gc;
                gc.n_trees = args.n_trees;
                gc.max_depth = args.tree_depth;
                gc.exec = args.config.exec;
                model = std::make_unique<GbdtModel>(fit_gbdt(prepared.train, gc));
                break;
            }
        }
        result = train(std::move(model), prepared.train, prepared.reference, args.config, args.sev,
                       restricted);
    }

    std::filesystem::create_directories(args.out_dir);
    auto model_path = args.out_dir / "model.json";
    save_model(model_path, *result.model, prepared_digest(args.prepared_dir));
    write_history_csv(args.out_dir / "history.csv", result.history);

    TrainSummary summary;
    summary.model_path = model_path;
    summary.reference_negative = result.reference_negative;
    summary.test_accuracy = accuracy(*result.model, prepared.test);
    summary.test_auc = auc(*result.model, prepared.test);
    summary.mean_sev = std::numeric_limits<double>::quiet_NaN();
    if (result.reference_negative) {
        sev_kind sk = args.sev == sev_loss_kind::all_opt_minus        ? sev_kind::minus
                      : args.sev == sev_loss_kind::all_opt_restricted ? sev_kind::restricted
                                                                      : sev_kind::plus;
        SevOptions opt;
        opt.restricted = sk == sev_kind::restricted ? restricted : 0;
        opt.exec = args.config.exec;
        summary.mean_sev =
            batch_sev(*result.model, prepared.test, prepared.reference, sk, opt).mean_sev;
    }

    nlohmann::json config = args.config.to_json();
    config["model"] = to_string(args.model);
    config["sev"] = to_string(args.sev);
    config["hidden"] = args.hidden;
    config["n_trees"] = args.n_trees;
    config["tree_depth"] = args.tree_depth;
    write_manifest(args.out_dir, "train", args.config.seed, config,
                   {{"prepared", prepared_digest(args.prepared_dir)}});
    return summary;
}

SevStats cmd_explain(const ExplainArgs& args) {
    auto prepared = load_prepared(args.prepared_dir);
    std::string model_digest;
    auto model = load_model(args.model_path, &model_digest);
    const auto& split = pick_split(prepared, args.split);
    check_model_data_compat(*model, model_digest, split, args.prepared_dir);

    EncodedDataset data = args.query_ids.empty() ? split : subset_rows(split, args.query_ids);

    SevOptions opt;
    opt.depth_limit = args.depth_limit;
    opt.max_explanations = args.max_explanations;
    opt.exec = args.exec;
    Mask restricted = restricted_mask_from(split.schema, args.restricted_override);
    if (args.kind == sev_kind::restricted) opt.restricted = restricted;

    auto t0 = std::chrono::steady_clock::now();
    SevStats stats = batch_sev(*model, data, prepared.reference, args.kind, opt);
    double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(args.out_dir);
    write_explanations_jsonl(args.out_dir / "explanations.jsonl", stats, data, prepared.reference,
                             args.query_ids);
    write_stats_csv(args.out_dir / "stats.csv", stats);

    nlohmann::json config{{"kind", to_string(stats.kind)},
                          {"depth_limit", args.depth_limit},
                          {"split", args.split},
                          {"max_explanations", args.max_explanations}};
    nlohmann::json timings = runtime_percentiles(stats);
    timings["wall_ms"] = wall_ms;
    write_manifest(args.out_dir, "explain", 0, config,
                   {{"prepared", prepared_digest(args.prepared_dir)},
                    {"model", file_digest(args.model_path)}},
                   timings);
    return stats;
}

CompareSummary cmd_compare(const CompareArgs& args) {
    auto prepared = load_prepared(args.prepared_dir);
    std::string model_digest;
    auto model = load_model(args.model_path, &model_digest);
    const auto& data = pick_split(prepared, args.split);
    check_model_data_compat(*model, model_digest, data, args.prepared_dir);
    const auto& schema = data.schema;
    const int p = schema.feature_count();

    // importance CSV: either global (feature,rank) or per-query
    // (query_id,feature,rank); rank 1 = most important
    std::ifstream in(args.importance_csv);
    if (!in) fail(errc::io_failure, "cannot open importance file: " + args.importance_csv.string());
    std::string line;
    if (!std::getline(in, line)) fail(errc::bad_config, "importance file is empty");
    auto split_line = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            out.push_back(cell);
        }
        return out;
    };
    auto header = split_line(line);
    bool per_query = !header.empty() && header[0] == "query_id";
    int feat_col = per_query ? 1 : 0;
    int rank_col = per_query ? 2 : 1;
    if (static_cast<int>(header.size()) < rank_col + 1 || header[static_cast<std::size_t>(feat_col)] != "feature" ||
        header[static_cast<std::size_t>(rank_col)] != "rank")
        fail(errc::bad_config, "importance header must be 'feature,rank' or 'query_id,feature,rank'");

    std::map<int, std::vector<std::pair<double, int>>> ranked; // query -> (rank, feature)
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (static_cast<int>(cells.size()) < rank_col + 1)
            fail(errc::bad_config, "short row in importance file");
        int qid = per_query ? std::atoi(cells[0].c_str()) : -1;
        int f = schema.feature_index(cells[static_cast<std::size_t>(feat_col)]);
        if (f < 0)
            fail(errc::missing_column,
                 "importance file names unknown feature '" + cells[static_cast<std::size_t>(feat_col)] + "'");
        ranked[qid].emplace_back(std::strtod(cells[static_cast<std::size_t>(rank_col)].c_str(), nullptr), f);
    }

    auto ordering_of = [&](int qid) {
        auto it = ranked.find(per_query ? qid : -1);
        if (it == ranked.end())
            fail(errc::bad_config, "no importance ordering for query " + std::to_string(qid));
        auto entries = it->second;
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<int> order;
        std::vector<bool> seen(static_cast<std::size_t>(p), false);
        for (const auto& [rank, f] : entries) {
            order.push_back(f);
            seen[static_cast<std::size_t>(f)] = true;
        }
        for (int j = 0; j < p; ++j)
            if (!seen[static_cast<std::size_t>(j)])
                fail(errc::missing_column,
                     "importance ordering is missing feature '" + schema.features[static_cast<std::size_t>(j)].name + "'");
        return order;
    };

    SevOptions opt;
    opt.depth_limit = args.depth_limit;
    opt.exec = args.exec;
    SevStats sev_stats = batch_sev(*model, data, prepared.reference, sev_kind::minus, opt);

    std::ostringstream out;
    out << "query_id,flip_count,sev_minus\n";
    CompareSummary summary;
    double flip_sum = 0.0;
    std::map<int, long> flip_hist;
    for (const auto& q : sev_stats.per_query) {
        if (!q.computed) continue;
        auto ordering = ordering_of(q.row);
        auto fc = flip_count(*model, data.row(q.row), prepared.reference, data.groups, ordering);
        out << q.row << ',';
        if (fc) {
            out << *fc;
            flip_sum += *fc;
            ++flip_hist[*fc];
        } else {
            out << "unexplained";
            ++summary.n_unexplained_flip;
        }
        out << ',';
        if (q.result.unexplained())
            out << "unexplained";
        else
            out << q.result.value;
        out << '\n';
        ++summary.n_queries;
    }
    int flips_finite = summary.n_queries - summary.n_unexplained_flip;
    summary.mean_flip = flips_finite > 0 ? flip_sum / flips_finite : 0.0;
    summary.mean_sev_minus = sev_stats.mean_sev;

    std::filesystem::create_directories(args.out_dir);
    atomic_write(args.out_dir / "flip_report.csv", out.str());
    {
        std::ostringstream hist;
        hist << "flip_count,count\n";
        for (const auto& [v, c] : flip_hist) hist << v << ',' << c << '\n';
        atomic_write(args.out_dir / "flip_histogram.csv", hist.str());
    }

    write_manifest(args.out_dir, "compare", 0,
                   nlohmann::json{{"split", args.split}, {"depth_limit", args.depth_limit}},
                   {{"prepared", prepared_digest(args.prepared_dir)},
                    {"model", file_digest(args.model_path)},
                    {"importance", file_digest(args.importance_csv)}});
    return summary;
}

VolumeReport cmd_volcheck(const VolcheckArgs& args) {
    LinearModel model;
    Reference reference;
    Box box;
    std::vector<std::pair<std::string, std::string>> digests;
    if (args.model_path) {
        if (!args.prepared_dir) fail(errc::bad_config, "volcheck with a model needs --prepared");
        std::string model_digest;
        auto loaded = load_model(*args.model_path, &model_digest);
        auto* lin = dynamic_cast<LinearModel*>(loaded.get());
        if (!lin) fail(errc::vol_opt_on_nonlinear_model, "volcheck applies to linear models only");
        model = *lin;
        auto prepared = load_prepared(*args.prepared_dir);
        check_model_data_compat(model, model_digest, prepared.train, *args.prepared_dir);
        reference = prepared.reference;
        double r = model.raw_score(reference.x);
        if (r >= 0.0)
            fail(errc::reference_not_negative, "volcheck requires a negatively predicted reference");
        // preimage of the canonical unit box under the change of variables
        // x_j = ref_j - r*u_j/coef_j, u in [0,1]
        for (std::size_t j = 0; j < model.coef.size(); ++j) {
            double a = reference.x[j];
            double b = reference.x[j] - r / model.coef[j];
            box.lo.push_back(std::min(a, b));
            box.hi.push_back(std::max(a, b));
        }
        digests.push_back({"model", file_digest(*args.model_path)});
    } else {
        model = canonical_volume_classifier(args.canonical_p);
        reference.x.assign(static_cast<std::size_t>(args.canonical_p), 0.0);
        reference.provenance.assign(static_cast<std::size_t>(args.canonical_p), "mean");
        box = unit_box(args.canonical_p);
    }

    VolumeReport rep = mc_volume_check(model, reference, box, args.n_samples, args.seed, args.exec);

    std::filesystem::create_directories(args.out_dir);
    double expected = 1.0;
    for (int k = 2; k <= rep.p; ++k) expected *= k;
    expected = 1.0 - 1.0 / expected;
    save_json(args.out_dir / "volume_report.json",
              nlohmann::json{{"format_version", kFormatVersion},
                             {"p", rep.p},
                             {"n_samples", rep.n_samples},
                             {"product", rep.product},
                             {"mc_fraction", rep.mc_fraction},
                             {"mc_stderr", rep.mc_stderr},
                             {"expected_fraction_box", expected}});
    write_manifest(args.out_dir, "volcheck", args.seed,
                   nlohmann::json{{"n_samples", args.n_samples}, {"canonical_p", args.canonical_p}},
                   digests);
    return rep;
}

StatsSummary cmd_stats(const StatsArgs& args) {
    auto prepared = load_prepared(args.prepared_dir);
    std::string model_digest;
    auto model = load_model(args.model_path, &model_digest);
    const auto& data = pick_split(prepared, args.split);
    check_model_data_compat(*model, model_digest, data, args.prepared_dir);

    SevOptions opt;
    opt.depth_limit = args.depth_limit;
    opt.exec = args.exec;
    if (args.kind == sev_kind::restricted)
        opt.restricted = restricted_mask_from(data.schema, args.restricted_override);

    StatsSummary summary;
    summary.accuracy = accuracy(*model, data);
    summary.auc = auc(*model, data);
    summary.sev = batch_sev(*model, data, prepared.reference, args.kind, opt);

    std::filesystem::create_directories(args.out_dir);
    write_stats_csv(args.out_dir / "stats.csv", summary.sev);
    {
        std::ostringstream out;
        out << "metric,value\naccuracy," << double_to_string(summary.accuracy) << "\nauc,"
            << double_to_string(summary.auc) << '\n';
        atomic_write(args.out_dir / "metrics.csv", out.str());
    }

    std::vector<std::pair<std::string, std::string>> digests{
        {"prepared", prepared_digest(args.prepared_dir)}, {"model", file_digest(args.model_path)}};
    if (args.baseline_model) {
        std::string base_digest;
        auto baseline = load_model(*args.baseline_model, &base_digest);
        check_model_data_compat(*baseline, base_digest, data, args.prepared_dir);
        SevStats before = batch_sev(*baseline, data, prepared.reference, args.kind, opt);
        auto trans = sev_transitions(before, summary.sev);
        std::ostringstream out;
        out << "from,to,count\n";
        for (const auto& [k, c] : trans) out << k.first << ',' << k.second << ',' << c << '\n';
        atomic_write(args.out_dir / "transitions.csv", out.str());
        digests.push_back({"baseline_model", file_digest(*args.baseline_model)});
    }

    write_manifest(args.out_dir, "stats", 0,
                   nlohmann::json{{"kind", to_string(args.kind)},
                                  {"split", args.split},
                                  {"depth_limit", args.depth_limit}},
                   digests);
    return summary;
}

} // namespace sevkit
