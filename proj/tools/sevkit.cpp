#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <omp.h>

#include "sevkit/commands.hpp"
#include "sevkit/errors.hpp"
#include "sevkit/io_util.hpp"

using namespace sevkit;

namespace {

TrainConfig load_config(const std::string& path) {
    if (path.empty()) return TrainConfig{};
    return TrainConfig::from_json(load_json(path));
}

void apply_thread_cap() {
    if (const char* cap = std::getenv("SEVKIT_THREADS")) {
        int n = std::atoi(cap);
        if (n > 0) omp_set_num_threads(n);
    }
}

} // namespace

int main(int argc, char** argv) {
    apply_thread_cap();

    CLI::App app{"decision-sparsity toolkit: compute and train for sparse explanation values"};
    app.require_subcommand(1);

    // prepare
    PrepareArgs prep;
    auto* cmd_prep = app.add_subcommand("prepare", "encode a CSV and build splits + reference");
    cmd_prep->add_option("--csv", prep.csv, "input CSV with header row")->required();
    cmd_prep->add_option("--schema", prep.schema, "feature schema JSON")->required();
    cmd_prep->add_option("--out", prep.out_dir, "output directory")->required();
    cmd_prep->add_option("--test-fraction", prep.test_fraction, "held-out fraction (default 0.2)");
    cmd_prep->add_option("--seed", prep.seed, "split seed");

    // train
    TrainArgs tr;
    std::string tr_model = "linear", tr_sev = "none", tr_config, tr_optimizer;
    bool tr_serial = false;
    auto* cmd_tr = app.add_subcommand("train", "fit a classifier, optionally with a SEV loss");
    cmd_tr->add_option("--prepared", tr.prepared_dir, "prepared data directory")->required();
    cmd_tr->add_option("--out", tr.out_dir, "output directory")->required();
    cmd_tr->add_option("--model", tr_model, "linear | mlp | gbdt");
    cmd_tr->add_option("--sev", tr_sev,
                       "none | all_opt_plus | all_opt_minus | all_opt_restricted | vol_opt");
    cmd_tr->add_option("--config", tr_config, "TrainConfig JSON file");
    cmd_tr->add_option("--seed", tr.config.seed, "training seed");
    cmd_tr->add_option("--c1", tr.config.c1, "SEV loss weight");
    cmd_tr->add_option("--c2", tr.config.c2, "reference penalty weight");
    cmd_tr->add_option("--lr", tr.config.learning_rate, "learning rate (default 0.1)");
    cmd_tr->add_option("--batch", tr.config.batch_size, "batch size (default 128)");
    cmd_tr->add_option("--warmup-epochs", tr.config.warmup_epochs, "BCE-only epochs (default 70)");
    cmd_tr->add_option("--sev-epochs", tr.config.sev_epochs, "epochs with SEV terms (default 30)");
    cmd_tr->add_option("--l1", tr.config.l1, "l1 penalty (linear)");
    cmd_tr->add_option("--l2", tr.config.l2, "l2 penalty (linear)");
    cmd_tr->add_option("--optimizer", tr_optimizer, "adam | sgd");
    cmd_tr->add_option("--hidden", tr.hidden, "mlp hidden width (default 128)");
    cmd_tr->add_option("--trees", tr.n_trees, "gbdt tree count (default 200)");
    cmd_tr->add_option("--tree-depth", tr.tree_depth, "gbdt max depth (default 3)");
    cmd_tr->add_option("--restricted", tr.restricted_override,
                       "restricted feature names (default: schema flags)");
    cmd_tr->add_flag("--paper-literal-clamp", tr.config.paper_literal_clamp,
                     "cap the vol-opt ratio at eps instead of flooring it");
    cmd_tr->add_flag("--early-stopping", tr.config.early_stopping,
                     "hold out a validation slice and stop on stalled BCE (baseline runs only)");
    cmd_tr->add_flag("--serial", tr_serial, "disable the OpenMP kernels");

    // explain
    ExplainArgs ex;
    std::string ex_kind = "minus";
    bool ex_serial = false;
    auto* cmd_ex = app.add_subcommand("explain", "compute SEV values and explanations per query");
    cmd_ex->add_option("--model", ex.model_path, "model.json")->required();
    cmd_ex->add_option("--prepared", ex.prepared_dir, "prepared data directory")->required();
    cmd_ex->add_option("--out", ex.out_dir, "output directory")->required();
    cmd_ex->add_option("--kind", ex_kind, "plus | minus | restricted");
    cmd_ex->add_option("--depth-limit", ex.depth_limit, "search depth limit (default 6)");
    cmd_ex->add_option("--max-explanations", ex.max_explanations, "explanation cap (default 32)");
    cmd_ex->add_option("--split", ex.split, "train | test (default test)");
    cmd_ex->add_option("--restricted", ex.restricted_override, "restricted feature names");
    cmd_ex->add_option("--query-ids", ex.query_ids, "explain these row indices only");
    cmd_ex->add_flag("--serial", ex_serial, "disable the OpenMP kernels");

    // compare
    CompareArgs cp;
    bool cp_serial = false;
    auto* cmd_cp = app.add_subcommand("compare", "flip counts for an external importance ordering");
    cmd_cp->add_option("--model", cp.model_path, "model.json")->required();
    cmd_cp->add_option("--prepared", cp.prepared_dir, "prepared data directory")->required();
    cmd_cp->add_option("--importance", cp.importance_csv,
                       "CSV 'feature,rank' or 'query_id,feature,rank'")->required();
    cmd_cp->add_option("--out", cp.out_dir, "output directory")->required();
    cmd_cp->add_option("--split", cp.split, "train | test (default test)");
    cmd_cp->add_option("--depth-limit", cp.depth_limit, "SEV- depth limit (default 6)");
    cmd_cp->add_flag("--serial", cp_serial, "disable the OpenMP kernels");

    // volcheck
    VolcheckArgs vc;
    std::string vc_model, vc_prepared;
    bool vc_serial = false;
    auto* cmd_vc = app.add_subcommand("volcheck", "Monte-Carlo check of the SEV+ >= 2 volume");
    cmd_vc->add_option("--out", vc.out_dir, "output directory")->required();
    cmd_vc->add_option("--canonical-p", vc.canonical_p, "dimension of the canonical check (default 3)");
    cmd_vc->add_option("--model", vc_model, "linear model.json (instead of canonical)");
    cmd_vc->add_option("--prepared", vc_prepared, "prepared data directory (with --model)");
    cmd_vc->add_option("--samples", vc.n_samples, "sample count (default 1e6)");
    cmd_vc->add_option("--seed", vc.seed, "sampling seed");
    cmd_vc->add_flag("--serial", vc_serial, "disable the OpenMP kernels");

    // stats
    StatsArgs st;
    std::string st_kind = "plus", st_baseline;
    bool st_serial = false;
    auto* cmd_st = app.add_subcommand("stats", "accuracy/AUC plus batch SEV statistics");
    cmd_st->add_option("--model", st.model_path, "model.json")->required();
    cmd_st->add_option("--prepared", st.prepared_dir, "prepared data directory")->required();
    cmd_st->add_option("--out", st.out_dir, "output directory")->required();
    cmd_st->add_option("--kind", st_kind, "plus | minus | restricted");
    cmd_st->add_option("--depth-limit", st.depth_limit, "search depth limit (default 6)");
    cmd_st->add_option("--split", st.split, "train | test (default test)");
    cmd_st->add_option("--restricted", st.restricted_override, "restricted feature names");
    cmd_st->add_option("--baseline-model", st_baseline, "second model for SEV transition counts");
    cmd_st->add_flag("--serial", st_serial, "disable the OpenMP kernels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_prep->parsed()) {
            auto s = cmd_prepare(prep);
            std::cout << "prepared: train n=" << s.n_train << ", test n=" << s.n_test
                      << ", encoded columns=" << s.p_enc << '\n';
        } else if (cmd_tr->parsed()) {
            if (!tr_config.empty()) {
                // flags given on the command line override the config file
                TrainConfig merged = load_config(tr_config);
                if (cmd_tr->count("--seed")) merged.seed = tr.config.seed;
                if (cmd_tr->count("--c1")) merged.c1 = tr.config.c1;
                if (cmd_tr->count("--c2")) merged.c2 = tr.config.c2;
                if (cmd_tr->count("--lr")) merged.learning_rate = tr.config.learning_rate;
                if (cmd_tr->count("--batch")) merged.batch_size = tr.config.batch_size;
                if (cmd_tr->count("--warmup-epochs")) merged.warmup_epochs = tr.config.warmup_epochs;
                if (cmd_tr->count("--sev-epochs")) merged.sev_epochs = tr.config.sev_epochs;
                if (cmd_tr->count("--l1")) merged.l1 = tr.config.l1;
                if (cmd_tr->count("--l2")) merged.l2 = tr.config.l2;
                if (cmd_tr->count("--paper-literal-clamp"))
                    merged.paper_literal_clamp = tr.config.paper_literal_clamp;
                if (cmd_tr->count("--early-stopping")) merged.early_stopping = tr.config.early_stopping;
                tr.config = merged;
            }
            if (!tr_optimizer.empty()) tr.config.optimizer = optimizer_kind_from_string(tr_optimizer);
            tr.config.exec = tr_serial ? exec_mode::serial : exec_mode::parallel;
            tr.model = [&] {
                if (tr_model == "linear") return model_kind::linear;
                if (tr_model == "mlp") return model_kind::mlp;
                if (tr_model == "gbdt") return model_kind::gbdt;
                fail(errc::bad_config, "unknown model kind: " + tr_model);
            }();
            tr.sev = sev_loss_kind_from_string(tr_sev);
            auto s = cmd_train(tr);
            std::cout << "trained: test accuracy=" << format_sig4(s.test_accuracy)
                      << ", auc=" << format_sig4(s.test_auc);
            if (s.reference_negative)
                std::cout << ", mean SEV=" << format_sig4(s.mean_sev);
            else
                std::cout << ", mean SEV unavailable (reference predicted positive)";
            std::cout << "\nmodel: " << s.model_path.string() << '\n';
        } else if (cmd_ex->parsed()) {
            ex.kind = sev_kind_from_string(ex_kind);
            ex.exec = ex_serial ? exec_mode::serial : exec_mode::parallel;
            auto stats = cmd_explain(ex);
            std::cout << "explained " << stats.n_queries << " positive queries (skipped "
                      << stats.n_skipped_negative << " negative): mean SEV"
                      << (stats.kind == sev_kind::plus ? "+" : stats.kind == sev_kind::minus ? "-" : "(r)")
                      << "=" << format_sig4(stats.mean_sev) << ", unexplained="
                      << format_sig4(stats.pct_unexplained()) << "%\n";
        } else if (cmd_cp->parsed()) {
            cp.exec = cp_serial ? exec_mode::serial : exec_mode::parallel;
            auto s = cmd_compare(cp);
            std::cout << "compared " << s.n_queries << " queries: mean flip=" << format_sig4(s.mean_flip)
                      << " (" << s.n_unexplained_flip << " never flip), mean SEV-="
                      << format_sig4(s.mean_sev_minus) << '\n';
        } else if (cmd_vc->parsed()) {
            if (!vc_model.empty()) vc.model_path = vc_model;
            if (!vc_prepared.empty()) vc.prepared_dir = vc_prepared;
            vc.exec = vc_serial ? exec_mode::serial : exec_mode::parallel;
            auto rep = cmd_volcheck(vc);
            std::cout << "volume check p=" << rep.p << ": mc fraction=" << format_sig4(rep.mc_fraction)
                      << " +- " << format_sig4(rep.mc_stderr) << ", product=" << format_sig4(rep.product)
                      << '\n';
        } else if (cmd_st->parsed()) {
            st.kind = sev_kind_from_string(st_kind);
            if (!st_baseline.empty()) st.baseline_model = st_baseline;
            st.exec = st_serial ? exec_mode::serial : exec_mode::parallel;
            auto s = cmd_stats(st);
            std::cout << "stats: accuracy=" << format_sig4(s.accuracy) << ", auc=" << format_sig4(s.auc)
                      << ", mean SEV=" << format_sig4(s.sev.mean_sev) << ", unexplained="
                      << format_sig4(s.sev.pct_unexplained()) << "%\n";
        }
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
