#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tna/checkpoint.hpp"
#include "tna/config.hpp"
#include "tna/train.hpp"

namespace fs = std::filesystem;
using namespace tna;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string data_root;
    std::string out_dir;
    long seed_base = -1, seed_twin = -1, seed_data = -1;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
    auto* opt = cmd->add_option("--config", f.config_path, "experiment config file");
    if (config_required) opt->required();
    cmd->add_option("--data-root", f.data_root,
                    "dataset root (env fallback DATA_ROOT)");
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--seed-base", f.seed_base, "base network seed");
    cmd->add_option("--seed-twin", f.seed_twin, "twin network seed");
    cmd->add_option("--seed-data", f.seed_data, "data order/augmentation seed");
    cmd->add_option("--override", f.overrides, "config override key=value")
        ->take_all();
}

TrainConfig build_config(const CommonFlags& f) {
    ConfigMap map;
    if (!f.config_path.empty()) map = parse_config_file(f.config_path);
    // flags win over file values
    if (!f.data_root.empty()) map["data_root"] = f.data_root;
    if (!f.out_dir.empty()) map["out_dir"] = f.out_dir;
    if (f.seed_base >= 0) map["seed_base"] = std::to_string(f.seed_base);
    if (f.seed_twin >= 0) map["seed_twin"] = std::to_string(f.seed_twin);
    if (f.seed_data >= 0) map["seed_data"] = std::to_string(f.seed_data);
    for (const std::string& ov : f.overrides) apply_override(map, ov);
    return config_from_map(map);
}

int cmd_train(const CommonFlags& f) {
    TrainConfig cfg = build_config(f);
    DatasetHandle data = load_dataset(cfg, true);
    if (cfg.limit_train > 0)
        data = subset(data, static_cast<size_t>(cfg.limit_train), cfg.seed_data);
    TrainResult res = train(cfg, data);
    std::cout << "trained " << res.metrics.size() << " epochs; final val acc "
              << res.final_val_acc_base << ", best " << res.best_val_acc
              << " (epoch " << res.best_epoch << ")\n";
    std::cout << "artifacts in " << cfg.out_dir << "\n";
    return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint_path,
             const std::string& split) {
    TrainConfig cfg = build_config(f);
    Checkpoint cp = load_checkpoint(checkpoint_path);

    DatasetHandle data = load_dataset(cfg, split == "train");
    if (cfg.limit_test > 0 && split != "train")
        data = subset(data, static_cast<size_t>(cfg.limit_test), cfg.seed_data);
    if (data.channels != cp.in_c || data.height != cp.in_h ||
        data.width != cp.in_w || data.classes != cp.classes)
        throw ConfigError("checkpoint was trained on " + std::to_string(cp.in_c) +
                          "x" + std::to_string(cp.in_h) + "x" +
                          std::to_string(cp.in_w) + " inputs with " +
                          std::to_string(cp.classes) +
                          " classes; dataset does not match");

    NetworkSpec spec = parse_architecture(cp.arch, cp.timesteps, 0.0);
    ParamSet<float> params;
    std::vector<char> quantized;
    checkpoint_to_params(cp, params, quantized);

    DatasetHandle train_ref = load_dataset(cfg, true);
    AugmentConfig norm = make_augment(cfg, train_ref);
    norm.enabled = false;

    std::vector<double> per_class;
    SpikeStats stats;
    double acc = evaluate(spec, params, nullptr, data, norm, cfg.lif,
                          cfg.batch_size, &per_class, &stats);

    std::ostringstream report;
    report << "checkpoint: " << checkpoint_path << "\n";
    report << "arch: " << cp.arch << "  timesteps: " << cp.timesteps << "\n";
    report << "split: " << split << "  samples: " << data.count() << "\n";
    report.precision(6);
    report << "top1_accuracy: " << acc << "\n";
    for (int c = 0; c < data.classes; ++c)
        report << "class_" << c << "_accuracy: " << per_class[c] << "\n";
    std::vector<std::string> names = weighted_layer_names(spec);
    for (size_t i = 0; i < names.size(); ++i) {
        const CheckpointEntry& e = cp.entries[2 * i];
        report << "layer_" << names[i] << "_dtype: "
               << (e.dtype == kDtypeTernary2Bit ? "ternary2bit" : "f32") << "\n";
    }
    for (size_t i = 0; i < stats.spikes_per_layer.size(); ++i)
        report << "mean_spikes_lif" << i << "_per_sample: "
               << stats.spikes_per_layer[i] / stats.samples << "\n";

    std::cout << report.str();
    std::string out_dir = cfg.out_dir;
    fs::create_directories(out_dir);
    std::ofstream rf(fs::path(out_dir) / "eval_report.txt");
    rf << report.str();
    std::ofstream sf(fs::path(out_dir) / "config.snapshot");
    sf << snapshot_string(cfg);
    return 0;
}

int cmd_sweep(const CommonFlags& f, std::vector<double> alphas) {
    TrainConfig base_cfg = build_config(f);
    if (alphas.empty()) alphas = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    fs::create_directories(base_cfg.out_dir);
    std::ostringstream summary;
    summary << "alpha,status,final_val_acc,best_val_acc,final_match_loss,"
               "epoch1_match_loss\n";
    int failures = 0;
    for (double alpha : alphas) {
        TrainConfig cfg = base_cfg;
        cfg.alpha_match = alpha;
        std::ostringstream dir;
        dir << base_cfg.out_dir << "/alpha_" << alpha;
        cfg.out_dir = dir.str();
        try {
            DatasetHandle data = load_dataset(cfg, true);
            if (cfg.limit_train > 0)
                data = subset(data, static_cast<size_t>(cfg.limit_train),
                              cfg.seed_data);
            TrainResult res = train(cfg, data);
            summary.precision(10);
            summary << alpha << ",ok," << res.final_val_acc_base << ','
                    << res.best_val_acc << ','
                    << res.metrics.back().match_loss << ','
                    << res.metrics.front().match_loss << "\n";
        } catch (const std::exception& e) {
            std::cerr << "alpha " << alpha << " failed: " << e.what() << "\n";
            summary << alpha << ",failed,0,0,0,0\n";
            ++failures;
        }
    }
    std::ofstream sf(fs::path(base_cfg.out_dir) / "sweep_summary.csv");
    sf << summary.str();
    std::cout << summary.str();
    return failures == static_cast<int>(alphas.size()) ? 1 : 0;
}

int cmd_inspect(const std::string& checkpoint_path) {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    std::cout << "version: " << cp.version << "\n";
    std::cout << "config_digest: 0x" << std::hex << cp.config_digest << std::dec
              << "\n";
    std::cout << "epoch: " << cp.epoch << "\n";
    std::cout << "arch: " << cp.arch << "\n";
    std::cout << "timesteps: " << cp.timesteps << "\n";
    std::cout << "input: " << cp.in_c << "x" << cp.in_h << "x" << cp.in_w
              << "  classes: " << cp.classes << "\n";
    for (const CheckpointEntry& e : cp.entries) {
        std::cout << e.name << "  "
                  << (e.dtype == kDtypeTernary2Bit ? "ternary2bit" : "f32")
                  << "  " << shape_str(e.shape) << "  " << e.values.size()
                  << " values\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Twin-network SNN training engine"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, sweep_flags;
    std::string checkpoint_path, eval_split = "test", inspect_path;
    std::vector<double> sweep_alphas;

    CLI::App* train_cmd = app.add_subcommand("train", "run a training experiment");
    add_common(train_cmd, train_flags, true);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval_cmd, eval_flags, false);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
        ->required();
    eval_cmd->add_option("--split", eval_split, "train or test");

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "alpha sweep of training runs");
    add_common(sweep_cmd, sweep_flags, true);
    sweep_cmd->add_option("--alphas", sweep_alphas,
                          "alpha values (default 1e-2 .. 1e-6)");

    CLI::App* inspect_cmd =
        app.add_subcommand("inspect-checkpoint", "describe a checkpoint file");
    inspect_cmd->add_option("--checkpoint", inspect_path, "checkpoint file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(train_flags);
        if (eval_cmd->parsed()) return cmd_eval(eval_flags, checkpoint_path, eval_split);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags, sweep_alphas);
        if (inspect_cmd->parsed()) return cmd_inspect(inspect_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
