// noiselab command-line driver.
//
// Every subcommand writes JSON/CSV artifacts and, on failure, prints exactly
// one line to stderr:
//   {"error":{"kind":"<kind>","message":"<text>"}}
// and exits with status 1 (2 for command-line usage errors).

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "noiselab/data.hpp"
#include "noiselab/error.hpp"
#include "noiselab/estimator.hpp"
#include "noiselab/metrics.hpp"
#include "noiselab/model.hpp"
#include "noiselab/noise.hpp"
#include "noiselab/pipeline.hpp"
#include "noiselab/serialize.hpp"

namespace nl = noiselab;

namespace {

std::vector<double> parse_number_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0') throw nl::UsageError(flag + ": '" + item + "' is not a number");
        values.push_back(v);
    }
    if (values.empty()) throw nl::UsageError(flag + ": empty list");
    return values;
}

std::vector<nl::NoiseKind> parse_kinds(const std::string& text) {
    std::vector<nl::NoiseKind> kinds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) kinds.push_back(nl::noise_kind_from_string(item));
    }
    if (kinds.empty()) throw nl::UsageError("--kinds: empty list");
    return kinds;
}

/// --seed wins, then NOISELAB_SEED, then `fallback`.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv("NOISELAB_SEED"); env && *env) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0') throw nl::UsageError("NOISELAB_SEED must be an unsigned integer");
        return v;
    }
    return fallback;
}

nl::RunConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    return nl::run_config_from_json(nl::read_json_file(path));
}

std::string json_escape_line(const std::string& s) {
    // nlohmann escapes control characters, so the dump is a single line.
    return nl::Json(s).dump();
}

void print_error(std::string_view kind, const std::string& message) {
    std::cerr << "{\"error\":{\"kind\":\"" << kind << "\",\"message\":" << json_escape_line(message) << "}}\n";
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noise-robust classification toolkit: label-noise injection, loss-histogram noise-rate "
                 "estimation, three-phase sample selection training."};
    app.require_subcommand(1);

    // make-synth
    nl::SyntheticSpec synth;
    std::string synth_split = "train";
    std::string synth_out;
    std::optional<std::uint64_t> synth_seed;
    auto* make_synth = app.add_subcommand("make-synth", "Generate a Gaussian-cluster dataset");
    make_synth->add_option("--n", synth.n, "Sample count")->required();
    make_synth->add_option("--classes", synth.num_classes, "Class count")->required();
    make_synth->add_option("--dim", synth.feature_dim, "Feature dimension")->required();
    make_synth->add_option("--spread", synth.cluster_spread, "Cluster standard deviation")->default_val(0.1);
    make_synth->add_option("--seed", synth_seed, "PRNG seed");
    make_synth->add_option("--split", synth_split, "train|validation|test")->default_val("train");
    make_synth->add_option("--out", synth_out, "Output dataset JSON")->required();

    // import-idx
    std::string idx_images, idx_labels, idx_out, idx_split = "train", idx_name;
    int idx_classes = 0;
    auto* import_idx = app.add_subcommand("import-idx", "Convert an IDX image/label pair to a dataset JSON");
    import_idx->add_option("--images", idx_images)->required();
    import_idx->add_option("--labels", idx_labels)->required();
    import_idx->add_option("--classes", idx_classes)->required();
    import_idx->add_option("--split", idx_split)->default_val("train");
    import_idx->add_option("--name", idx_name);
    import_idx->add_option("--out", idx_out)->required();

    // split
    std::string split_in, split_fractions = "0.9,0.1,0", split_train, split_val, split_test;
    std::optional<std::uint64_t> split_seed;
    auto* split = app.add_subcommand("split", "Shuffle a dataset into train/validation/test files");
    split->add_option("--in", split_in)->required();
    split->add_option("--fractions", split_fractions, "train,validation,test")->default_val("0.9,0.1,0");
    split->add_option("--seed", split_seed);
    split->add_option("--out-train", split_train)->required();
    split->add_option("--out-val", split_val);
    split->add_option("--out-test", split_test);

    // inject-noise
    std::string noise_in, noise_out, noise_record, noise_kind = "symmetric";
    double noise_rate = 0.0;
    std::optional<std::uint64_t> noise_seed;
    auto* inject = app.add_subcommand("inject-noise", "Corrupt training labels and write the flip ledger");
    inject->add_option("--in", noise_in)->required();
    inject->add_option("--kind", noise_kind, "symmetric|asymmetric")->default_val("symmetric");
    inject->add_option("--rate", noise_rate)->required();
    inject->add_option("--seed", noise_seed);
    inject->add_option("--out", noise_out)->required();
    inject->add_option("--record", noise_record, "CorruptionRecord JSON")->required();

    // train-estimator
    std::vector<std::string> est_aux;
    std::string est_rates = "0,0.1,0.2,0.3,0.4", est_kinds = "symmetric", est_config, est_out, est_rows_out;
    double est_ridge = nl::kDefaultRidge;
    unsigned est_threads = default_threads();
    std::optional<std::uint64_t> est_seed;
    auto* train_est = app.add_subcommand("train-estimator", "Fit the loss-histogram noise-rate regressor");
    train_est->add_option("--aux", est_aux, "Auxiliary dataset JSON files")->required();
    train_est->add_option("--rates", est_rates)->default_val("0,0.1,0.2,0.3,0.4");
    train_est->add_option("--kinds", est_kinds)->default_val("symmetric");
    train_est->add_option("--config", est_config, "RunConfig JSON for the vanilla training schedule");
    train_est->add_option("--ridge", est_ridge)->default_val(nl::kDefaultRidge);
    train_est->add_option("--threads", est_threads);
    train_est->add_option("--seed", est_seed);
    train_est->add_option("--out", est_out)->required();
    train_est->add_option("--rows-out", est_rows_out, "Optional JSON dump of the training rows");

    // estimate
    std::string estimate_model, estimate_losses, estimate_out;
    int estimate_classes = 0;
    auto* estimate = app.add_subcommand("estimate", "Predict the noise rate of a loss vector");
    estimate->add_option("--model", estimate_model)->required();
    estimate->add_option("--losses", estimate_losses, "CSV with one loss per line")->required();
    estimate->add_option("--classes", estimate_classes)->required();
    estimate->add_option("--out", estimate_out);

    // run
    std::string run_train, run_val, run_test, run_config, run_estimator, run_out, run_record, run_curves,
        run_model_out;
    bool run_baseline = false;
    std::optional<double> run_forget;
    std::optional<std::uint64_t> run_seed;
    auto* run = app.add_subcommand("run", "Train (three-phase pipeline or baseline) and report metrics");
    run->add_option("--train", run_train)->required();
    run->add_option("--val", run_val)->required();
    run->add_option("--test", run_test)->required();
    run->add_option("--config", run_config);
    run->add_option("--estimator", run_estimator);
    run->add_option("--out", run_out)->required();
    run->add_flag("--baseline", run_baseline, "Phase-1-only training for the full epoch budget");
    run->add_option("--forget-rate", run_forget, "Fixed forget rate instead of eta_hat - margin");
    run->add_option("--corruption-record", run_record);
    run->add_option("--curves", run_curves, "Per-epoch CSV output");
    run->add_option("--model-out", run_model_out, "Final model parameters JSON");
    run->add_option("--seed", run_seed);

    // eval
    std::string eval_model, eval_data, eval_out;
    double eval_tau = 1.0;
    auto* eval = app.add_subcommand("eval", "Evaluate saved model parameters on a dataset");
    eval->add_option("--model", eval_model)->required();
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--tau", eval_tau)->default_val(1.0);
    eval->add_option("--out", eval_out);

    // ablate-forget-rate
    std::string abl_train, abl_val, abl_test, abl_config, abl_estimator, abl_out, abl_json;
    unsigned abl_threads = default_threads();
    std::optional<std::uint64_t> abl_seed;
    auto* ablate = app.add_subcommand("ablate-forget-rate", "Fixed forget rates 0..0.4 versus the estimated rate");
    ablate->add_option("--train", abl_train)->required();
    ablate->add_option("--val", abl_val);
    ablate->add_option("--test", abl_test)->required();
    ablate->add_option("--config", abl_config);
    ablate->add_option("--estimator", abl_estimator);
    ablate->add_option("--out", abl_out, "CSV grid")->required();
    ablate->add_option("--json", abl_json);
    ablate->add_option("--threads", abl_threads);
    ablate->add_option("--seed", abl_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        if (*make_synth) {
            synth.seed = resolve_seed(synth_seed, 0);
            nl::save_dataset(synth_out, nl::generate_synthetic(synth, nl::split_from_string(synth_split)));
        } else if (*import_idx) {
            nl::Dataset d = nl::load_idx_pair(idx_images, idx_labels, idx_classes);
            d.split = nl::split_from_string(idx_split);
            if (!idx_name.empty()) d.name = idx_name;
            nl::save_dataset(idx_out, d);
        } else if (*split) {
            const auto f = parse_number_list(split_fractions, "--fractions");
            if (f.size() != 3) throw nl::UsageError("--fractions needs three values");
            const auto parts = nl::split_dataset(nl::load_dataset(split_in), {f[0], f[1], f[2]},
                                                 resolve_seed(split_seed, 0));
            nl::save_dataset(split_train, parts.train);
            if (!split_val.empty()) nl::save_dataset(split_val, parts.validation);
            if (!split_test.empty()) nl::save_dataset(split_test, parts.test);
        } else if (*inject) {
            const nl::NoiseSpec spec{nl::noise_kind_from_string(noise_kind), noise_rate, resolve_seed(noise_seed, 0)};
            const auto [noisy, record] = nl::inject_noise(nl::load_dataset(noise_in), spec);
            nl::save_dataset(noise_out, noisy);
            nl::write_json_file(noise_record, nl::to_json(record));
        } else if (*train_est) {
            nl::RunConfig cfg = load_config(est_config);
            cfg.seed = resolve_seed(est_seed, cfg.seed);
            std::vector<nl::Dataset> aux;
            for (const auto& path : est_aux) aux.push_back(nl::load_dataset(path));
            const auto rows = nl::build_training_rows(aux, parse_number_list(est_rates, "--rates"),
                                                      parse_kinds(est_kinds), cfg, est_threads);
            const auto fit = nl::fit_estimator(rows, est_ridge);
            nl::write_json_file(est_out, nl::to_json(fit.model));
            if (!est_rows_out.empty()) {
                nl::Json dump = nl::Json::array();
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    dump.push_back({{"source", rows[i].source},
                                    {"kind", std::string(nl::to_string(rows[i].kind))},
                                    {"target", rows[i].target},
                                    {"prediction", rows[i].target + fit.residuals[i]},
                                    {"n_samples", rows[i].features.n_samples},
                                    {"n_classes", rows[i].features.n_classes},
                                    {"ratios", rows[i].features.ratios}});
                }
                nl::write_json_file(est_rows_out, dump);
            }
            std::cout << nl::Json{{"rows", rows.size()}, {"residual_rms", fit.residual_rms()}}.dump() << "\n";
        } else if (*estimate) {
            const auto model = nl::estimator_model_from_json(nl::read_json_file(estimate_model));
            const auto losses = nl::read_loss_csv(estimate_losses);
            const auto est =
                nl::estimate_noise_rate(model, nl::featurize_losses(losses, estimate_classes, model.bins()));
            const nl::Json out{{"eta_hat_raw", est.raw}, {"eta_hat", est.clamped}, {"n_samples", losses.size()}};
            std::cout << out.dump() << "\n";
            if (!estimate_out.empty()) nl::write_json_file(estimate_out, out);
        } else if (*run) {
            nl::RunConfig cfg = load_config(run_config);
            cfg.seed = resolve_seed(run_seed, cfg.seed);
            if (run_forget) cfg.forget_rate_override = *run_forget;
            if (!run_estimator.empty()) cfg.estimator_path = run_estimator;
            cfg.validate();
            const auto train = nl::load_dataset(run_train);
            const auto val = nl::load_dataset(run_val);
            const auto test = nl::load_dataset(run_test);
            std::optional<nl::EstimatorModel> model;
            if (!run_baseline && !cfg.estimator_path.empty()) {
                model = nl::estimator_model_from_json(nl::read_json_file(cfg.estimator_path));
            }
            std::optional<nl::CorruptionRecord> record;
            if (!run_record.empty()) record = nl::corruption_record_from_json(nl::read_json_file(run_record));
            const nl::RunInputs inputs{train, val, test, model ? &*model : nullptr, record ? &*record : nullptr};
            const auto report =
                nl::run_pipeline(inputs, cfg, run_baseline ? nl::RunMode::baseline : nl::RunMode::pipeline);
            nl::write_json_file(run_out, nl::to_json(report));
            if (!run_curves.empty()) nl::write_text_file(run_curves, nl::curves_csv(report.curves));
            if (!run_model_out.empty()) nl::write_json_file(run_model_out, nl::to_json(report.final_params));
        } else if (*eval) {
            const auto params = nl::model_params_from_json(nl::read_json_file(eval_model));
            const auto data = nl::load_dataset(eval_data);
            const auto metrics = nl::compute_metrics(nl::predict_probs(params, data, eval_tau), data.true_labels());
            const auto out = nl::to_json(metrics);
            if (eval_out.empty()) {
                std::cout << out.dump() << "\n";
            } else {
                nl::write_json_file(eval_out, out);
            }
        } else if (*ablate) {
            nl::RunConfig cfg = load_config(abl_config);
            cfg.seed = resolve_seed(abl_seed, cfg.seed);
            if (!abl_estimator.empty()) cfg.estimator_path = abl_estimator;
            if (cfg.estimator_path.empty()) throw nl::UsageError("ablate-forget-rate needs --estimator");
            const auto model = nl::estimator_model_from_json(nl::read_json_file(cfg.estimator_path));
            const auto train = nl::load_dataset(abl_train);
            const auto test = nl::load_dataset(abl_test);
            const nl::Dataset val = abl_val.empty() ? nl::Dataset{"none", train.num_classes, train.feature_dim,
                                                                  nl::Split::validation, {}}
                                                    : nl::load_dataset(abl_val);
            const nl::RunInputs inputs{train, val, test, &model, nullptr};
            const auto rows = nl::ablate_forget_rate(inputs, cfg, abl_threads);
            nl::write_text_file(abl_out, nl::ablation_csv(rows));
            if (!abl_json.empty()) nl::write_json_file(abl_json, nl::to_json(rows));
        }
    } catch (const nl::Error& e) {
        print_error(nl::to_string(e.kind()), e.what());
        return e.kind() == nl::ErrorKind::usage ? 2 : 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 0;
}
