#include "noiselab/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "noiselab/error.hpp"

namespace noiselab {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context) {
    if (!j.is_object()) throw FormatError(context + ": expected a JSON object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
        if (!keys.count(item.key())) throw FormatError(context + ": unknown field '" + item.key() + "'");
    }
}

template <typename Fn>
auto parse_as(const std::string& context, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& err) {
        throw FormatError(context + ": " + err.what());
    }
}

template <typename T>
void read_if(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const Dataset& d) {
    Json samples = Json::array();
    for (const Sample& s : d.samples) {
        samples.push_back({{"features", s.features},
                           {"observed_label", s.observed_label},
                           {"true_label", s.true_label ? Json(*s.true_label) : Json(nullptr)}});
    }
    return {{"name", d.name},
            {"c", d.num_classes},
            {"feature_dim", d.feature_dim},
            {"split", std::string(to_string(d.split))},
            {"samples", std::move(samples)}};
}

Dataset dataset_from_json(const Json& j) {
    return parse_as("dataset", [&] {
        check_keys(j, {"name", "c", "feature_dim", "split", "samples"}, "dataset");
        Dataset d;
        d.name = j.value("name", std::string{});
        d.num_classes = j.at("c").get<int>();
        d.feature_dim = j.at("feature_dim").get<std::size_t>();
        d.split = split_from_string(j.at("split").get<std::string>());
        for (const Json& s : j.at("samples")) {
            check_keys(s, {"features", "observed_label", "true_label"}, "dataset sample");
            Sample sample;
            sample.features = s.at("features").get<std::vector<double>>();
            sample.observed_label = s.at("observed_label").get<int>();
            if (s.contains("true_label") && !s.at("true_label").is_null()) {
                sample.true_label = s.at("true_label").get<int>();
            }
            d.samples.push_back(std::move(sample));
        }
        d.validate();
        return d;
    });
}

Json to_json(const CorruptionRecord& r) {
    return {{"flipped", r.flipped}, {"original_label", r.original_label}, {"realized_rate", r.realized_rate}};
}

CorruptionRecord corruption_record_from_json(const Json& j) {
    return parse_as("corruption record", [&] {
        check_keys(j, {"flipped", "original_label", "realized_rate"}, "corruption record");
        CorruptionRecord r;
        r.flipped = j.at("flipped").get<std::vector<bool>>();
        r.original_label = j.at("original_label").get<std::vector<int>>();
        r.realized_rate = j.at("realized_rate").get<double>();
        if (r.flipped.size() != r.original_label.size()) {
            throw FormatError("corruption record: flipped and original_label differ in length");
        }
        return r;
    });
}

Json to_json(const MlpSpec& spec) {
    return {{"layer_sizes", spec.layer_sizes}, {"activation", "relu"}, {"init_seed", spec.init_seed}};
}

MlpSpec mlp_spec_from_json(const Json& j) {
    return parse_as("model_spec", [&] {
        check_keys(j, {"layer_sizes", "activation", "init_seed"}, "model_spec");
        MlpSpec spec;
        read_if(j, "layer_sizes", spec.layer_sizes);
        read_if(j, "init_seed", spec.init_seed);
        if (j.contains("activation") && j.at("activation").get<std::string>() != "relu") {
            throw FormatError("model_spec: only the relu activation is supported");
        }
        return spec;
    });
}

Json to_json(const ModelParams& params) {
    Json layers = Json::array();
    for (const DenseLayer& layer : params.layers) {
        Json rows = Json::array();
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            rows.push_back(std::vector<double>(layer.weights.begin() + static_cast<std::ptrdiff_t>(o * layer.inputs),
                                               layer.weights.begin() +
                                                   static_cast<std::ptrdiff_t>((o + 1) * layer.inputs)));
        }
        layers.push_back({{"w", std::move(rows)}, {"b", layer.bias}});
    }
    return {{"spec", to_json(params.spec)}, {"layers", std::move(layers)}};
}

ModelParams model_params_from_json(const Json& j) {
    return parse_as("model params", [&] {
        check_keys(j, {"spec", "layers"}, "model params");
        ModelParams params;
        params.spec = mlp_spec_from_json(j.at("spec"));
        params.spec.validate();
        const Json& layers = j.at("layers");
        if (layers.size() + 1 != params.spec.layer_sizes.size()) {
            throw FormatError("model params: layer count does not match spec");
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            DenseLayer layer(params.spec.layer_sizes[l], params.spec.layer_sizes[l + 1]);
            const auto rows = layers[l].at("w").get<std::vector<std::vector<double>>>();
            if (rows.size() != layer.outputs) throw FormatError("model params: layer " + std::to_string(l) + " w rows");
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                if (rows[o].size() != layer.inputs) {
                    throw FormatError("model params: layer " + std::to_string(l) + " w columns");
                }
                std::copy(rows[o].begin(), rows[o].end(), layer.weights.begin() + static_cast<std::ptrdiff_t>(o * layer.inputs));
            }
            layer.bias = layers[l].at("b").get<std::vector<double>>();
            params.layers.push_back(std::move(layer));
        }
        params.validate();
        params.touch();
        return params;
    });
}

Json to_json(const ObjectiveConfig& cfg) {
    return {{"q", cfg.q},
            {"tau", cfg.temperature},
            {"lambda", cfg.lambda},
            {"p", cfg.p},
            {"loss_kind", std::string(to_string(cfg.loss_kind))}};
}

ObjectiveConfig objective_config_from_json(const Json& j) {
    return parse_as("objective", [&] {
        check_keys(j, {"q", "tau", "lambda", "p", "loss_kind"}, "objective");
        ObjectiveConfig cfg;
        read_if(j, "q", cfg.q);
        read_if(j, "tau", cfg.temperature);
        read_if(j, "lambda", cfg.lambda);
        read_if(j, "p", cfg.p);
        if (j.contains("loss_kind")) cfg.loss_kind = loss_kind_from_string(j.at("loss_kind").get<std::string>());
        cfg.validate();
        return cfg;
    });
}

Json to_json(const RunConfig& cfg) {
    return {{"phase1_epochs", cfg.phase1_epochs},
            {"phase2_epochs", cfg.phase2_epochs},
            {"phase3_epochs", cfg.phase3_epochs},
            {"batch_size", cfg.batch_size},
            {"phase2_batch_size", cfg.phase2_batch_size},
            {"lr", cfg.lr},
            {"objective", to_json(cfg.objective)},
            {"forget_margin", cfg.forget_margin},
            {"forget_rate_override", optional_number(cfg.forget_rate_override)},
            {"reinit_phase3", cfg.reinit_phase3},
            {"seed", cfg.seed},
            {"model_spec", to_json(cfg.model_spec)},
            {"estimator_path", cfg.estimator_path}};
}

RunConfig run_config_from_json(const Json& j) {
    return parse_as("run config", [&] {
        check_keys(j,
                   {"phase1_epochs", "phase2_epochs", "phase3_epochs", "batch_size", "phase2_batch_size", "lr",
                    "objective", "forget_margin", "forget_rate_override", "reinit_phase3", "seed", "model_spec",
                    "estimator_path"},
                   "run config");
        RunConfig cfg;
        read_if(j, "phase1_epochs", cfg.phase1_epochs);
        read_if(j, "phase2_epochs", cfg.phase2_epochs);
        read_if(j, "phase3_epochs", cfg.phase3_epochs);
        read_if(j, "batch_size", cfg.batch_size);
        read_if(j, "phase2_batch_size", cfg.phase2_batch_size);
        read_if(j, "lr", cfg.lr);
        if (j.contains("objective")) cfg.objective = objective_config_from_json(j.at("objective"));
        read_if(j, "forget_margin", cfg.forget_margin);
        if (j.contains("forget_rate_override") && !j.at("forget_rate_override").is_null()) {
            cfg.forget_rate_override = j.at("forget_rate_override").get<double>();
        }
        read_if(j, "reinit_phase3", cfg.reinit_phase3);
        read_if(j, "seed", cfg.seed);
        if (j.contains("model_spec")) cfg.model_spec = mlp_spec_from_json(j.at("model_spec"));
        read_if(j, "estimator_path", cfg.estimator_path);
        cfg.validate();
        return cfg;
    });
}

Json to_json(const EstimatorModel& model) {
    return {{"weights", model.weights},
            {"bias", model.bias},
            {"feature_means", model.feature_means},
            {"feature_scales", model.feature_scales},
            {"j", model.bins()}};
}

EstimatorModel estimator_model_from_json(const Json& j) {
    return parse_as("estimator model", [&] {
        check_keys(j, {"weights", "bias", "feature_means", "feature_scales", "j"}, "estimator model");
        EstimatorModel model;
        model.weights = j.at("weights").get<std::vector<double>>();
        model.bias = j.at("bias").get<double>();
        model.feature_means = j.at("feature_means").get<std::vector<double>>();
        model.feature_scales = j.at("feature_scales").get<std::vector<double>>();
        model.validate();
        if (j.contains("j") && j.at("j").get<std::size_t>() != model.bins()) {
            throw FormatError("estimator model: j does not match the weight count");
        }
        return model;
    });
}

Json to_json(const MetricSet& m) {
    return {{"accuracy", m.accuracy},
            {"macro_f1", m.macro_f1},
            {"auc", m.per_class_auc},
            {"mean_auc", m.mean_auc()},
            {"confusion", m.confusion}};
}

Json to_json(const RunReport& report) {
    Json j;
    j["mode"] = std::string(to_string(report.mode));
    j["config"] = to_json(report.config);
    j["eta_hat"] = optional_number(report.eta_hat);
    j["eta_hat_raw"] = optional_number(report.eta_hat_raw);
    j["forget_rate"] = optional_number(report.forget_rate);
    if (report.selection) {
        const auto& s = *report.selection;
        j["selection"] = {{"precision", optional_number(s.precision)},
                          {"recall", optional_number(s.recall)},
                          {"removed_count", s.removed_count},
                          {"kept_count", s.kept_count},
                          {"removed_noisy", s.removed_noisy}};
    }
    j["metrics"] = to_json(report.final_test.metrics);
    j["final_epoch"] = report.final_test.epoch;
    if (report.best_val_test) {
        j["best_val"] = {{"epoch", report.best_val_test->epoch}, {"metrics", to_json(report.best_val_test->metrics)}};
    } else {
        j["best_val"] = nullptr;
    }
    Json curves = Json::array();
    for (const auto& rec : report.curves) {
        curves.push_back({{"epoch", rec.epoch},
                          {"phase", rec.phase},
                          {"train_loss", rec.train_loss},
                          {"val_accuracy", optional_number(rec.val_accuracy)}});
    }
    j["curves"] = std::move(curves);
    return j;
}

Json to_json(const std::vector<AblationRow>& rows) {
    Json out = Json::array();
    for (const auto& row : rows) {
        out.push_back({{"forget_rate", row.label},
                       {"fixed", row.fixed_rate.has_value()},
                       {"applied_forget_rate", row.forget_rate},
                       {"eta_hat", optional_number(row.eta_hat)},
                       {"accuracy", row.accuracy},
                       {"macro_f1", row.macro_f1}});
    }
    return out;
}

std::string curves_csv(const std::vector<EpochRecord>& curves) {
    std::ostringstream os;
    os << "epoch,phase,train_loss,val_acc\n";
    for (const auto& rec : curves) {
        os << rec.epoch << ',' << rec.phase << ',' << format_double(rec.train_loss) << ','
           << (rec.val_accuracy ? format_double(*rec.val_accuracy) : std::string{}) << '\n';
    }
    return os.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "forget_rate,fixed,applied_forget_rate,eta_hat,accuracy,macro_f1\n";
    for (const auto& row : rows) {
        os << row.label << ',' << (row.fixed_rate ? "true" : "false") << ',' << format_double(row.forget_rate) << ','
           << (row.eta_hat ? format_double(*row.eta_hat) : std::string{}) << ',' << format_double(row.accuracy) << ','
           << format_double(row.macro_f1) << '\n';
    }
    return os.str();
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& err) {
        throw FormatError(path.string() + ": " + err.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_json(read_json_file(path)); }

void save_dataset(const std::filesystem::path& path, const Dataset& d) { write_json_file(path, to_json(d)); }

std::vector<double> read_loss_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<double> losses;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
        char* end = nullptr;
        const double v = std::strtod(field.c_str(), &end);
        if (end == field.c_str() || *end != '\0') {
            if (losses.empty() && line_no == 1) continue;  // header
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a number");
        }
        losses.push_back(v);
    }
    return losses;
}

}  // namespace noiselab
