// airis2 command-line tool: synthesize rain-attenuation series, build labeled
// fade-event datasets, train and evaluate the LSTM predictor against the
// persistence baseline, run (alpha, delta_t) sweeps and simulate smart
// gateway diversity switching. Every subcommand is seeded and writes a
// run_manifest.json next to its artifacts.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "airis2/airis2.hpp"

namespace fs = std::filesystem;
using namespace airis2;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_error(ErrorCode::usage_error, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_error(ErrorCode::usage_error, "cannot write '" + path.string() + "'");
    out << text;
}

nlohmann::json rate_json(const RateSet& r) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"fn_rate_total", r.fn_rate_total},
            {"fp_rate_total", r.fp_rate_total},
            {"miss_rate", opt(r.miss_rate)},
            {"false_alarm_rate", opt(r.false_alarm_rate)},
            {"accuracy", r.accuracy}};
}

nlohmann::json confusion_json(const ConfusionMatrix& cm) {
    const auto pct = percent_view(cm);
    return {{"counts", {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}}},
            {"percents", {{"tp", pct.tp}, {"fp", pct.fp}, {"fn", pct.fn}, {"tn", pct.tn}}}};
}

struct SynthArgs {
    double m_ln = 0.0;
    double sigma_ln = 1.0;
    double beta_inv_s = 0.1;
    double duration_s = 3600.0;
    double rate_hz = 10.0;
    double offset_db = 0.0;
    std::uint64_t seed = 0;
    std::string gateway_id = "synthetic";
    std::string out;
};

int run_synth(const SynthArgs& args) {
    Stopwatch watch;
    SynthParams params;
    params.m_ln = args.m_ln;
    params.sigma_ln = args.sigma_ln;
    params.beta_inv_s = args.beta_inv_s;
    params.duration_s = args.duration_s;
    params.sample_rate_hz = args.rate_hz;
    params.offset_db = args.offset_db;
    params.seed = args.seed;
    params.gateway_id = args.gateway_id;

    const auto series = generate_synthetic(params);
    const fs::path out_dir(args.out);
    const auto csv = to_csv(series);
    write_text(out_dir / "series.csv", csv);

    RunManifest manifest;
    manifest.subcommand = "synth";
    manifest.config = {{"m_ln", args.m_ln},          {"sigma_ln", args.sigma_ln},
                       {"beta_inv_s", args.beta_inv_s}, {"duration_s", args.duration_s},
                       {"rate_hz", args.rate_hz},    {"offset_db", args.offset_db},
                       {"seed", args.seed},          {"gateway_id", args.gateway_id}};
    manifest.output_digests["series.csv"] = fnv1a_hex(csv);
    manifest.wall_time_s = watch.seconds();
    write_manifest(manifest, out_dir);
    std::cerr << "synth: " << series.size() << " samples -> " << (out_dir / "series.csv").string()
              << "\n";
    return 0;
}

struct DatasetArgs {
    std::string in;
    double alpha_db = 5.0;
    double delta_t_s = 60.0;
    double history_s = 0.0;
    double history_rule = 2.0;
    std::size_t stride = 1;
    std::uint64_t seed = 0;
    std::vector<double> fractions{0.70, 0.15, 0.15};
    std::string out;
};

int run_dataset(const DatasetArgs& args) {
    Stopwatch watch;
    require(args.fractions.size() == 3, ErrorCode::usage_error,
            "--fractions needs exactly three values");
    const auto series = ingest_csv_file(args.in);

    WindowSpec spec;
    spec.alpha_db = args.alpha_db;
    spec.delta_t_s = args.delta_t_s;
    spec.history_s = args.history_s > 0.0 ? args.history_s : args.history_rule * args.delta_t_s;
    spec.stride_samples = args.stride;

    const std::array<double, 3> fractions{args.fractions[0], args.fractions[1], args.fractions[2]};
    auto split = prepare_dataset(series, spec, args.seed, fractions);

    StoredDataset stored;
    stored.alpha_db = spec.alpha_db;
    stored.delta_t_s = spec.delta_t_s;
    stored.history_s = spec.effective_history_s();
    stored.stride_samples = spec.stride_samples;
    stored.seed = args.seed;
    stored.sample_rate_hz = series.sample_rate_hz;
    stored.window_len = spec.window_len(series.sample_rate_hz);
    stored.split = std::move(split);

    const fs::path out_dir(args.out);
    write_dataset(out_dir, stored);

    RunManifest manifest;
    manifest.subcommand = "dataset";
    manifest.config = {{"in", args.in},
                       {"alpha_db", args.alpha_db},
                       {"delta_t_s", args.delta_t_s},
                       {"history_s", stored.history_s},
                       {"history_rule", args.history_rule},
                       {"stride", args.stride},
                       {"seed", args.seed},
                       {"fractions", args.fractions}};
    manifest.input_digests[args.in] = digest_file(args.in);
    for (const char* shard : {"manifest.json", "train.csv", "val.csv", "test.csv"})
        manifest.output_digests[shard] = digest_file(out_dir / shard);
    manifest.wall_time_s = watch.seconds();
    write_manifest(manifest, out_dir);
    std::cerr << "dataset: train/val/test = " << stored.split.train.size() << "/"
              << stored.split.val.size() << "/" << stored.split.test.size() << " windows of "
              << stored.window_len << " samples -> " << out_dir.string() << "\n";
    return 0;
}

struct TrainArgs {
    std::string dataset;
    int hidden = 50;
    double dropout = 0.15;
    int epochs = 5;
    int batch = 64;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    double max_grad_norm = 0.0; // 0 disables clipping
    std::string out;
};

int run_train(const TrainArgs& args) {
    Stopwatch watch;
    const auto stored = read_dataset(args.dataset);

    ModelConfig mc;
    mc.hidden_size = args.hidden;
    mc.input_dim = 1;
    mc.dropout_rate = args.dropout;
    mc.window_len = static_cast<int>(stored.window_len);

    TrainConfig tc;
    tc.epochs = args.epochs;
    tc.batch_size = args.batch;
    tc.learning_rate = args.lr;
    tc.seed = args.seed;
    if (args.max_grad_norm > 0.0) tc.max_grad_norm = args.max_grad_norm;

    auto outcome = train(init_model(mc, mix_seed(args.seed, 99)), stored.split, tc);

    const fs::path out_dir(args.out);
    const auto model_bytes = serialize_model(outcome.model, stored.split.norm);
    write_text(out_dir / "model.json", model_bytes);
    const auto report_csv = outcome.report.to_csv();
    write_text(out_dir / "train_report.csv", report_csv);

    RunManifest manifest;
    manifest.subcommand = "train";
    manifest.config = {{"dataset", args.dataset}, {"hidden", args.hidden},
                       {"dropout", args.dropout}, {"epochs", args.epochs},
                       {"batch", args.batch},     {"lr", args.lr},
                       {"seed", args.seed},       {"max_grad_norm", args.max_grad_norm}};
    manifest.input_digests["manifest.json"] = digest_file(fs::path(args.dataset) / "manifest.json");
    manifest.input_digests["train.csv"] = digest_file(fs::path(args.dataset) / "train.csv");
    manifest.output_digests["model.json"] = fnv1a_hex(model_bytes);
    manifest.output_digests["train_report.csv"] = fnv1a_hex(report_csv);
    manifest.wall_time_s = watch.seconds();
    write_manifest(manifest, out_dir);
    std::cerr << "train: " << outcome.model.params.size() << " parameters, final val_acc="
              << outcome.report.val_accuracy.back() << " -> " << (out_dir / "model.json").string()
              << "\n";
    return 0;
}

struct EvalArgs {
    std::string model;
    std::string dataset;
    std::string split = "test";
    double threshold = 0.5;
    std::string out;
};

int run_eval(const EvalArgs& args) {
    Stopwatch watch;
    auto [model, norm] = deserialize_model(read_text(args.model));
    require(norm.has_value(), ErrorCode::format_error,
            "model file does not carry normalization stats");
    const auto stored = read_dataset(args.dataset);

    const std::vector<LabeledWindow>* windows = nullptr;
    if (args.split == "test")
        windows = &stored.split.test;
    else if (args.split == "val")
        windows = &stored.split.val;
    else if (args.split == "train")
        windows = &stored.split.train;
    else
        throw_error(ErrorCode::usage_error, "--split must be train, val or test");
    require(!windows->empty(), ErrorCode::insufficient_data,
            "split '" + args.split + "' is empty");

    std::vector<bool> labels(windows->size());
    std::vector<bool> learned(windows->size());
    std::vector<bool> persisted(windows->size());
    std::vector<Prediction> learned_predictions(windows->size());
    for (std::size_t i = 0; i < windows->size(); ++i) {
        const auto& w = (*windows)[i];
        labels[i] = w.label;
        learned_predictions[i] = airis2_predict(model, w.features, args.threshold,
                                                static_cast<std::ptrdiff_t>(w.anchor_index));
        learned[i] = learned_predictions[i].event_predicted;
        // stored features are normalized; undo the affine map to recover a(t)
        const double a_t = w.features.back() * stored.split.norm.std_db + stored.split.norm.mean_db;
        persisted[i] = persistence_predict(a_t, stored.alpha_db).event_predicted;
    }

    const auto cm_learned = confusion(learned, labels);
    const auto cm_persisted = confusion(persisted, labels);

    nlohmann::json doc;
    doc["format"] = "airis2-eval";
    doc["version"] = 1;
    doc["alpha_db"] = stored.alpha_db;
    doc["delta_t_s"] = stored.delta_t_s;
    doc["split"] = args.split;
    doc["threshold"] = args.threshold;
    doc["n"] = windows->size();
    doc["airis2"] = confusion_json(cm_learned);
    doc["airis2"]["rates"] = rate_json(rates(cm_learned));
    doc["persistence"] = confusion_json(cm_persisted);
    doc["persistence"]["rates"] = rate_json(rates(cm_persisted));
    const auto eval_bytes = doc.dump(2) + "\n";
    const auto predictions_csv = render_predictions_csv(learned_predictions, labels);

    const fs::path out_dir(args.out);
    write_text(out_dir / "eval.json", eval_bytes);
    write_text(out_dir / "predictions.csv", predictions_csv);

    RunManifest manifest;
    manifest.subcommand = "eval";
    manifest.config = {{"model", args.model},
                       {"dataset", args.dataset},
                       {"split", args.split},
                       {"threshold", args.threshold}};
    manifest.input_digests[args.model] = digest_file(args.model);
    manifest.input_digests["manifest.json"] = digest_file(fs::path(args.dataset) / "manifest.json");
    manifest.output_digests["eval.json"] = fnv1a_hex(eval_bytes);
    manifest.output_digests["predictions.csv"] = fnv1a_hex(predictions_csv);
    manifest.wall_time_s = watch.seconds();
    write_manifest(manifest, out_dir);
    std::cerr << "eval: airis2 fn_rate_total=" << rates(cm_learned).fn_rate_total
              << " persistence fn_rate_total=" << rates(cm_persisted).fn_rate_total << " -> "
              << (out_dir / "eval.json").string() << "\n";
    return 0;
}

struct SweepArgs {
    std::string in;
    std::vector<double> alphas;
    std::vector<double> deltas;
    double history_rule = 2.0;
    std::size_t stride = 1;
    int hidden = 50;
    double dropout = 0.15;
    int epochs = 5;
    int batch = 64;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    double threshold = 0.5;
    int workers = 0;
    std::string out;
};

int run_sweep(const SweepArgs& args) {
    Stopwatch watch;
    const auto series = ingest_csv_file(args.in);

    SweepConfig config;
    config.alphas_db = args.alphas;
    config.deltas_t_s = args.deltas;
    config.history_multiplier = args.history_rule;
    config.stride_samples = args.stride;
    config.hidden_size = args.hidden;
    config.dropout_rate = args.dropout;
    config.decision_threshold = args.threshold;
    config.train.epochs = args.epochs;
    config.train.batch_size = args.batch;
    config.train.learning_rate = args.lr;
    config.train.seed = args.train_seed_set ? args.train_seed : mix_seed(args.seed, 0x7ea1);
    config.seed = args.seed;
    config.workers = args.workers > 0 ? args.workers
                                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    const auto result = sweep(series, config);
    const auto csv = render_sweep_csv(result);
    const auto json = render_sweep_json(result);

    const fs::path out_dir(args.out);
    write_text(out_dir / "sweep.csv", csv);
    write_text(out_dir / "sweep.json", json);

    RunManifest manifest;
    manifest.subcommand = "sweep";
    manifest.config = {{"in", args.in},
                       {"alphas", args.alphas},
                       {"deltas", args.deltas},
                       {"history_rule", args.history_rule},
                       {"stride", args.stride},
                       {"hidden", args.hidden},
                       {"dropout", args.dropout},
                       {"epochs", args.epochs},
                       {"batch", args.batch},
                       {"lr", args.lr},
                       {"seed", args.seed},
                       {"train_seed", config.train.seed},
                       {"threshold", args.threshold},
                       {"workers", config.workers}};
    manifest.input_digests[args.in] = digest_file(args.in);
    manifest.output_digests["sweep.csv"] = fnv1a_hex(csv);
    manifest.output_digests["sweep.json"] = fnv1a_hex(json);
    manifest.wall_time_s = watch.seconds();
    write_manifest(manifest, out_dir);

    double train_total = 0.0;
    for (const auto& cell : result.cells)
        for (const auto& entry : cell.entries) train_total += entry.train_seconds;
    std::cerr << "sweep: " << result.cells.size() << " cells, "
              << flatten(result).size() << " rows, training " << train_total << " s -> "
              << (out_dir / "sweep.csv").string() << "\n";
    return 0;
}

struct SimulateArgs {
    std::string scenario;
    std::string out;
};

int run_simulate(const SimulateArgs& args) {
    Stopwatch watch;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text(args.scenario));
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorCode::format_error, std::string("scenario unreadable: ") + e.what());
    }
    const auto base_dir = fs::path(args.scenario).parent_path().string();
    auto scenario = load_scenario(doc, base_dir);

    SimPolicy policy;
    std::optional<LstmClassifier> model;
    std::optional<NormalizationStats> norm;
    switch (scenario.policy) {
    case PolicyKind::persistence:
        policy = persistence_policy();
        break;
    case PolicyKind::oracle:
        policy = oracle_policy();
        break;
    case PolicyKind::airis2: {
        require(!scenario.model_path.empty(), ErrorCode::usage_error,
                "airis2 policy needs a 'model' path in the scenario");
        fs::path model_path = scenario.model_path;
        if (model_path.is_relative() && !base_dir.empty()) model_path = fs::path(base_dir) / model_path;
        auto loaded = deserialize_model(read_text(model_path));
        require(loaded.second.has_value(), ErrorCode::format_error,
                "model file does not carry normalization stats");
        model = std::move(loaded.first);
        norm = loaded.second;
        policy = airis2_policy(*model, *norm, scenario.threshold);
        break;
    }
    }

    const auto result = simulate(scenario.network, policy, scenario.config);
    const auto sim_json = render_sim_json(result);
    const auto log_csv = render_switch_log_csv(result);

    const fs::path out_dir(args.out);
    write_text(out_dir / "sim.json", sim_json);
    write_text(out_dir / "switch_log.csv", log_csv);

    RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.config = {{"scenario", args.scenario},
                       {"policy", policy_name(scenario.policy)},
                       {"alpha_db", scenario.config.alpha_db},
                       {"delta_t_s", scenario.config.delta_t_s},
                       {"cooldown_s", scenario.config.switch_cooldown_s},
                       {"seed", scenario.seed}};
    manifest.input_digests[args.scenario] = digest_file(args.scenario);
    manifest.output_digests["sim.json"] = fnv1a_hex(sim_json);
    manifest.output_digests["switch_log.csv"] = fnv1a_hex(log_csv);
    manifest.wall_time_s = watch.seconds();
    write_manifest(manifest, out_dir);
    std::cerr << "simulate: availability=" << availability(result)
              << " switches=" << result.switch_count << " -> " << (out_dir / "sim.json").string()
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rain-fade prediction and smart gateway diversity toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic attenuation series");
    synth->add_option("--m-ln", synth_args.m_ln, "Log-scale location of the lognormal (ln dB)");
    synth->add_option("--sigma-ln", synth_args.sigma_ln, "Log-scale spread (>= 0)");
    synth->add_option("--beta-inv-s", synth_args.beta_inv_s, "Decorrelation rate (1/s)");
    synth->add_option("--duration-s", synth_args.duration_s, "Series duration (s)");
    synth->add_option("--rate-hz", synth_args.rate_hz, "Sample rate (Hz)");
    synth->add_option("--offset-db", synth_args.offset_db, "Clear-sky floor added after exponentiation (dB)");
    synth->add_option("--seed", synth_args.seed, "Random seed");
    synth->add_option("--gateway-id", synth_args.gateway_id, "Gateway identifier");
    synth->add_option("--out", synth_args.out, "Output directory")->required();

    DatasetArgs dataset_args;
    auto* dataset = app.add_subcommand("dataset", "Window, label, split, balance and normalize a series");
    dataset->add_option("--in", dataset_args.in, "Input series CSV")->required();
    dataset->add_option("--alpha-db", dataset_args.alpha_db, "Event threshold alpha (dB)")->required();
    dataset->add_option("--delta-t-s", dataset_args.delta_t_s, "Prediction horizon delta_t (s)")->required();
    dataset->add_option("--history-s", dataset_args.history_s, "History length H (s); 0 uses the rule");
    dataset->add_option("--history-rule", dataset_args.history_rule, "H = rule * delta_t when --history-s is 0");
    dataset->add_option("--stride", dataset_args.stride, "Anchor stride (samples)");
    dataset->add_option("--seed", dataset_args.seed, "Split/balance seed");
    dataset->add_option("--fractions", dataset_args.fractions, "Train,val,test fractions")->expected(3);
    dataset->add_option("--out", dataset_args.out, "Output directory")->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train the LSTM classifier on a dataset directory");
    train_cmd->add_option("--dataset", train_args.dataset, "Dataset directory")->required();
    train_cmd->add_option("--hidden", train_args.hidden, "LSTM hidden size");
    train_cmd->add_option("--dropout", train_args.dropout, "Dropout rate in [0,1)");
    train_cmd->add_option("--epochs", train_args.epochs, "Training epochs");
    train_cmd->add_option("--batch", train_args.batch, "Mini-batch size");
    train_cmd->add_option("--lr", train_args.lr, "Adam learning rate");
    train_cmd->add_option("--seed", train_args.seed, "Training seed");
    train_cmd->add_option("--max-grad-norm", train_args.max_grad_norm, "Gradient clipping norm (0 = off)");
    train_cmd->add_option("--out", train_args.out, "Output directory")->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model and the persistence baseline");
    eval_cmd->add_option("--model", eval_args.model, "Model file")->required();
    eval_cmd->add_option("--dataset", eval_args.dataset, "Dataset directory")->required();
    eval_cmd->add_option("--split", eval_args.split, "Which split to evaluate (train|val|test)");
    eval_cmd->add_option("--threshold", eval_args.threshold, "Decision threshold on the probability");
    eval_cmd->add_option("--out", eval_args.out, "Output directory")->required();

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Parametric (alpha, delta_t) comparison sweep");
    sweep_cmd->add_option("--in", sweep_args.in, "Input series CSV")->required();
    sweep_cmd->add_option("--alphas", sweep_args.alphas, "Alpha grid (dB)")->required()->delimiter(',');
    sweep_cmd->add_option("--deltas", sweep_args.deltas, "Delta_t grid (s)")->required()->delimiter(',');
    sweep_cmd->add_option("--history-rule", sweep_args.history_rule, "H = rule * delta_t");
    sweep_cmd->add_option("--stride", sweep_args.stride, "Anchor stride (samples)");
    sweep_cmd->add_option("--hidden", sweep_args.hidden, "LSTM hidden size");
    sweep_cmd->add_option("--dropout", sweep_args.dropout, "Dropout rate");
    sweep_cmd->add_option("--epochs", sweep_args.epochs, "Training epochs per cell");
    sweep_cmd->add_option("--batch", sweep_args.batch, "Mini-batch size");
    sweep_cmd->add_option("--lr", sweep_args.lr, "Adam learning rate");
    sweep_cmd->add_option("--seed", sweep_args.seed, "Data seed (split/balance)");
    auto* train_seed_opt =
        sweep_cmd->add_option("--train-seed", sweep_args.train_seed, "Training seed (defaults to a value derived from --seed)");
    sweep_cmd->add_option("--threshold", sweep_args.threshold, "Decision threshold");
    sweep_cmd->add_option("--workers", sweep_args.workers, "Parallel cell workers (0 = auto)");
    sweep_cmd->add_option("--out", sweep_args.out, "Output directory")->required();

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a gateway switching scenario");
    sim_cmd->add_option("--scenario", sim_args.scenario, "Scenario JSON file")->required();
    sim_cmd->add_option("--out", sim_args.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args);
        if (dataset->parsed()) return run_dataset(dataset_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) {
            return run_eval(eval_args);
        }
        if (sweep_cmd->parsed()) {
            sweep_args.train_seed_set = train_seed_opt->count() > 0;
            return run_sweep(sweep_args);
        }
        if (sim_cmd->parsed()) return run_simulate(sim_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::usage_error ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
