#include "tna/train.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace tna {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4568bULL;
    x = (x ^ (x >> 27)) * 0x94d4a798579d0b09ULL;
    return x ^ (x >> 31);
}

std::string find_file(const std::string& root,
                      const std::vector<std::string>& subdirs,
                      const std::string& file) {
    for (const std::string& sub : subdirs) {
        fs::path p = fs::path(root) / sub / file;
        if (fs::exists(p)) return p.string();
    }
    std::ostringstream os;
    os << "dataset file '" << file << "' not found under '" << root << "'";
    throw ConfigError(os.str());
}

DatasetHandle slice_range(const DatasetHandle& d, size_t begin, size_t end) {
    DatasetHandle out = d;
    long per = d.sample_size();
    out.samples.assign(d.samples.begin() + static_cast<long>(begin) * per,
                       d.samples.begin() + static_cast<long>(end) * per);
    out.labels.assign(d.labels.begin() + begin, d.labels.begin() + end);
    return out;
}

std::vector<int> batch_labels(const DatasetHandle& d,
                              const std::vector<size_t>& order, size_t begin,
                              size_t end) {
    std::vector<int> labels;
    labels.reserve(end - begin);
    for (size_t i = begin; i < end; ++i) labels.push_back(d.labels[order[i]]);
    return labels;
}

// Builds the per-timestep input tensors for one batch: one tensor for static
// images (constant-current encoding), T tensors for spike trains.
std::vector<Tensor<float>> make_batch(const DatasetHandle& d,
                                      const std::vector<size_t>& order,
                                      size_t begin, size_t end,
                                      const AugmentConfig& aug, bool train_split,
                                      std::mt19937_64& rng) {
    int n = static_cast<int>(end - begin);
    long per_static = static_cast<long>(d.channels) * d.height * d.width;
    if (d.timesteps > 0) {
        std::vector<Tensor<float>> steps;
        for (int t = 0; t < d.timesteps; ++t)
            steps.emplace_back(Shape{n, d.channels, d.height, d.width});
        for (int i = 0; i < n; ++i) {
            const float* src =
                d.samples.data() +
                static_cast<long>(order[begin + i]) * d.timesteps * per_static;
            for (int t = 0; t < d.timesteps; ++t)
                std::memcpy(steps[t].data().data() + static_cast<long>(i) * per_static,
                            src + static_cast<long>(t) * per_static,
                            per_static * sizeof(float));
        }
        return steps;
    }
    Tensor<float> batch(Shape{n, d.channels, d.height, d.width});
    for (int i = 0; i < n; ++i) {
        const float* src =
            d.samples.data() + static_cast<long>(order[begin + i]) * per_static;
        float* dst = batch.data().data() + static_cast<long>(i) * per_static;
        if (train_split)
            augment_sample(src, dst, d.channels, d.height, d.width, aug, rng);
        else
            normalize_sample(src, dst, d.channels, d.height, d.width, aug);
    }
    return {batch};
}

int argmax_row(const std::vector<float>& data, int row, int cols) {
    int best = 0;
    for (int j = 1; j < cols; ++j)
        if (data[static_cast<long>(row) * cols + j] >
            data[static_cast<long>(row) * cols + best])
            best = j;
    return best;
}

// Parameter set for a forward pass: watched latents, with quantized layers
// swapped for their straight-through deployed view.
std::vector<LayerParams<float>> effective_layers(
    Tape<float>& tape, ParamSet<float>& params,
    const CompressionState<float>* comp, ParamSet<float>* watched_out) {
    std::vector<LayerParams<float>> eff;
    for (size_t l = 0; l < params.size(); ++l) {
        LayerParams<float> w;
        w.name = params[l].name;
        w.weight = tape.watch(params[l].weight);
        w.bias = tape.watch(params[l].bias);
        if (watched_out) watched_out->push_back(w);
        LayerParams<float> e = w;
        if (comp && comp->active && comp->quantized[l])
            e.weight = ste_deploy(w.weight, comp->deployed[l]);
        eff.push_back(std::move(e));
    }
    return eff;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

} // namespace

DatasetHandle load_dataset(const TrainConfig& cfg, bool train_split) {
    const std::string& root = cfg.data_root;
    if (cfg.dataset == "fashion_mnist") {
        if (root.empty())
            throw ConfigError("data_root (or $DATA_ROOT) required for fashion_mnist");
        std::vector<std::string> dirs = {"", "fashion_mnist", "fashion-mnist"};
        std::string img = find_file(
            root, dirs,
            train_split ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte");
        std::string lbl = find_file(
            root, dirs,
            train_split ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte");
        DatasetHandle d = load_idx(img, lbl);
        d.name = "fashion_mnist";
        d.classes = 10;
        return d;
    }
    if (cfg.dataset == "cifar10") {
        if (root.empty())
            throw ConfigError("data_root (or $DATA_ROOT) required for cifar10");
        std::vector<std::string> dirs = {"", "cifar10", "cifar-10-batches-bin"};
        std::vector<std::string> paths;
        if (train_split) {
            for (int i = 1; i <= 5; ++i)
                paths.push_back(find_file(root, dirs,
                                          "data_batch_" + std::to_string(i) + ".bin"));
        } else {
            paths.push_back(find_file(root, dirs, "test_batch.bin"));
        }
        return load_cifar10(paths);
    }
    if (cfg.dataset == "cifar100") {
        if (root.empty())
            throw ConfigError("data_root (or $DATA_ROOT) required for cifar100");
        std::vector<std::string> dirs = {"", "cifar100", "cifar-100-binary"};
        return load_cifar100(
            find_file(root, dirs, train_split ? "train.bin" : "test.bin"));
    }
    if (cfg.dataset == "synthetic_images") {
        DatasetHandle full = synthetic_images(10, 28, 28,
                                              cfg.synth_train + cfg.synth_test,
                                              cfg.seed_data);
        return train_split
                   ? slice_range(full, 0, cfg.synth_train)
                   : slice_range(full, cfg.synth_train,
                                 cfg.synth_train + cfg.synth_test);
    }
    if (cfg.dataset == "synthetic_spikes") {
        DatasetHandle full =
            synthetic_spikes(10, cfg.timesteps, 1, 16, 16,
                             cfg.synth_train + cfg.synth_test, cfg.seed_data);
        return train_split
                   ? slice_range(full, 0, cfg.synth_train)
                   : slice_range(full, cfg.synth_train,
                                 cfg.synth_train + cfg.synth_test);
    }
    throw ConfigError("unknown dataset '" + cfg.dataset + "'");
}

AugmentConfig make_augment(const TrainConfig& cfg, const DatasetHandle& train_data) {
    AugmentConfig aug;
    if (train_data.timesteps > 0) {
        aug.enabled = false;
        return aug;
    }
    if (cfg.dataset == "cifar10" || cfg.dataset == "cifar100")
        aug = AugmentConfig::cifar();
    else
        compute_normalization(train_data, aug.normalize_mean, aug.normalize_std);
    aug.enabled = cfg.augment;
    return aug;
}

double evaluate(const NetworkSpec& spec, const ParamSet<float>& params,
                const CompressionState<float>* comp, const DatasetHandle& data,
                const AugmentConfig& norm, const LifParams& lif, int batch_size,
                std::vector<double>* per_class_acc, SpikeStats* stats) {
    if (data.count() == 0) return 0.0;
    ParamSet<float> eff = params;
    if (comp && comp->active)
        for (size_t l = 0; l < eff.size(); ++l)
            if (comp->quantized[l])
                eff[l].weight =
                    Tensor<float>(eff[l].weight.shape(),
                                  std::vector<float>(comp->deployed[l]));

    std::vector<size_t> order(data.count());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<long> per_class_total(data.classes, 0), per_class_hit(data.classes, 0);
    long correct = 0;
    std::mt19937_64 rng(0); // unused in eval mode
    for (size_t begin = 0; begin < data.count(); begin += batch_size) {
        size_t end = std::min(data.count(), begin + batch_size);
        std::vector<Tensor<float>> inputs =
            make_batch(data, order, begin, end, norm, false, rng);
        std::vector<int> labels = batch_labels(data, order, begin, end);
        std::vector<Tensor<float>> outs =
            forward_timesteps(spec, eff, inputs, lif, rng, false, stats);
        Tensor<float> logits = sum_logits(outs);
        int n = logits.shape()[0], c = logits.shape()[1];
        for (int i = 0; i < n; ++i) {
            int pred = argmax_row(logits.data(), i, c);
            ++per_class_total[labels[i]];
            if (pred == labels[i]) {
                ++correct;
                ++per_class_hit[labels[i]];
            }
        }
    }
    if (per_class_acc) {
        per_class_acc->assign(data.classes, 0.0);
        for (int c = 0; c < data.classes; ++c)
            if (per_class_total[c] > 0)
                (*per_class_acc)[c] =
                    static_cast<double>(per_class_hit[c]) / per_class_total[c];
    }
    return static_cast<double>(correct) / data.count();
}

std::string metrics_csv(const std::vector<EpochMetrics>& metrics, int n_networks) {
    std::ostringstream os;
    os << "epoch,lr,loss_total,ce_base";
    for (int i = 1; i < n_networks; ++i) {
        os << ",ce_twin";
        if (i > 1) os << i;
    }
    os << ",match_loss,acc_train_base,acc_val_base,acc_val_twin,ternary_active,"
          "wall_seconds\n";
    for (const EpochMetrics& m : metrics) {
        os << m.epoch << ',' << fmt(m.lr) << ',' << fmt(m.loss_total) << ','
           << fmt(m.ce_base);
        for (int i = 1; i < n_networks; ++i)
            os << ','
               << fmt(static_cast<size_t>(i) <= m.ce_twins.size()
                          ? m.ce_twins[i - 1]
                          : 0.0);
        os << ',' << fmt(m.match_loss) << ',' << fmt(m.acc_train_base) << ','
           << fmt(m.acc_val_base) << ',' << fmt(m.acc_val_twin) << ','
           << m.ternary_active << ',' << fmt(m.wall_seconds) << '\n';
    }
    return os.str();
}

TrainResult train(const TrainConfig& cfg, const DatasetHandle& train_data) {
    cfg.validate();
    NetworkSpec spec = parse_architecture(cfg.arch, cfg.timesteps, cfg.dropout);
    if (train_data.timesteps > 0 && train_data.timesteps != cfg.timesteps)
        throw ConfigError("spike-train dataset timesteps do not match config");

    DatasetHandle train_part, val_part;
    split_dataset(train_data, cfg.val_fraction, mix_seed(cfg.seed_data, 0x5117),
                  train_part, val_part);
    AugmentConfig aug = make_augment(cfg, train_part);
    AugmentConfig norm_only = aug;
    norm_only.enabled = false;

    bool kd = cfg.mode == TrainMode::Kd || cfg.mode == TrainMode::KdCe;
    int n_nets = kd ? 1 : cfg.n_networks;

    std::vector<ParamSet<float>> nets;
    for (int i = 0; i < n_nets; ++i) {
        std::uint64_t seed = i == 0   ? cfg.seed_base
                             : i == 1 ? cfg.seed_twin
                                      : cfg.seed_twin + static_cast<std::uint64_t>(i - 1);
        nets.push_back(kaiming_init<float>(spec, train_data.channels,
                                           train_data.height, train_data.width,
                                           train_data.classes, seed));
    }

    // frozen teacher for the distillation baselines
    ParamSet<float> teacher;
    CompressionState<float> teacher_comp;
    if (kd) {
        if (cfg.teacher_checkpoint.empty())
            throw ConfigError("kd modes require teacher_checkpoint");
        Checkpoint tcp = load_checkpoint(cfg.teacher_checkpoint);
        if (tcp.arch != cfg.arch)
            throw ConfigError("teacher checkpoint architecture '" + tcp.arch +
                              "' does not match config arch '" + cfg.arch + "'");
        std::vector<char> tq;
        checkpoint_to_params(tcp, teacher, tq);
    }

    std::vector<Adam<float>> opts(n_nets, Adam<float>(cfg.initial_lr));
    CompressionState<float> comp; // network 0 only
    CompressionState<float> twin_comp;

    fs::create_directories(cfg.out_dir);
    std::string snapshot = snapshot_string(cfg);
    {
        std::ofstream f(fs::path(cfg.out_dir) / "config.snapshot");
        f << snapshot;
    }
    std::uint64_t digest = fnv1a64(snapshot);

    TnaLossConfig loss_cfg{cfg.alpha_match, cfg.mode, cfg.n_networks,
                           cfg.match_target};

    TrainResult result;
    auto write_artifacts = [&](int epoch) {
        std::ofstream mf(fs::path(cfg.out_dir) / "metrics.csv");
        mf << metrics_csv(result.metrics, n_nets);
        Checkpoint cp = make_checkpoint(
            nets[0], comp, cfg.arch, cfg.timesteps, train_data.channels,
            train_data.height, train_data.width, train_data.classes, digest, epoch);
        save_checkpoint((fs::path(cfg.out_dir) / "checkpoint_final.bin").string(), cp);
        if (!result.metrics.empty() &&
            result.metrics.back().acc_val_base >= result.best_val_acc) {
            result.best_val_acc = result.metrics.back().acc_val_base;
            result.best_epoch = epoch;
            save_checkpoint((fs::path(cfg.out_dir) / "checkpoint_best.bin").string(),
                            cp);
        }
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        double lr = lr_schedule(epoch, cfg.initial_lr, cfg.gamma);
        for (Adam<float>& o : opts) o.set_lr(lr);

        if (cfg.ternary.enabled && !comp.active &&
            epoch >= cfg.ternary.policy.start_epoch) {
            if (cfg.mode == TrainMode::Tna)
                tna_ternary_handoff(nets[0], comp, nets[1], twin_comp,
                                    cfg.ternary.policy, epoch, true);
            else
                activate_compression(nets[0], cfg.ternary.policy, epoch, comp);
        }

        std::vector<size_t> order =
            epoch_order(train_part.count(), mix_seed(cfg.seed_data, epoch + 1));
        std::mt19937_64 aug_rng(mix_seed(cfg.seed_data, 0xA06 + epoch));

        double sum_total = 0, sum_match = 0, sum_ce_base = 0;
        std::vector<double> sum_ce_twins(std::max(0, n_nets - 1), 0.0);
        long batches = 0, train_hits = 0;

        for (size_t begin = 0; begin < train_part.count();
             begin += cfg.batch_size) {
            size_t end = std::min(train_part.count(),
                                  begin + static_cast<size_t>(cfg.batch_size));
            std::vector<Tensor<float>> inputs =
                make_batch(train_part, order, begin, end, aug, true, aug_rng);
            std::vector<int> labels = batch_labels(train_part, order, begin, end);

            Tape<float> tape;
            std::vector<ParamSet<float>> watched(n_nets);
            std::vector<std::vector<Tensor<float>>> outputs;
            for (int i = 0; i < n_nets; ++i) {
                std::vector<LayerParams<float>> eff = effective_layers(
                    tape, nets[i], i == 0 ? &comp : nullptr, &watched[i]);
                std::mt19937_64 drop_rng(
                    mix_seed(i == 0 ? cfg.seed_base : cfg.seed_twin + i - 1,
                             mix_seed(epoch, batches)));
                outputs.push_back(forward_timesteps(spec, eff, inputs, cfg.lif,
                                                    drop_rng, true));
            }

            LossParts<float> parts;
            if (kd) {
                std::mt19937_64 trng(0);
                std::vector<Tensor<float>> teacher_out = forward_timesteps(
                    spec, teacher, inputs, cfg.lif, trng, false);
                parts = kd_loss(outputs[0], teacher_out, labels, loss_cfg);
            } else {
                parts = tna_loss(outputs, labels, loss_cfg);
            }

            double total_val = static_cast<double>(parts.total.item());
            if (!std::isfinite(total_val)) {
                write_artifacts(epoch);
                throw ContractError(
                    "training diverged (non-finite loss) at epoch " +
                    std::to_string(epoch) + "; last good checkpoint retained");
            }

            // training accuracy from the base network's summed logits
            {
                Tensor<float> logits = sum_logits(outputs[0]);
                int n = logits.shape()[0], c = logits.shape()[1];
                for (int i = 0; i < n; ++i)
                    if (argmax_row(logits.data(), i, c) == labels[i]) ++train_hits;
            }

            GradMap<float> grads = tape.backward(parts.total);
            for (int i = 0; i < n_nets; ++i) {
                std::vector<Tensor<float>*> ps;
                std::vector<const std::vector<float>*> gs;
                std::vector<std::string> names;
                for (size_t l = 0; l < nets[i].size(); ++l) {
                    ps.push_back(&nets[i][l].weight);
                    gs.push_back(&grads.at(watched[i][l].weight.node()).data());
                    names.push_back(nets[i][l].name + ".weight");
                    ps.push_back(&nets[i][l].bias);
                    gs.push_back(&grads.at(watched[i][l].bias.node()).data());
                    names.push_back(nets[i][l].name + ".bias");
                }
                opts[i].step(ps, gs, names);
            }
            comp.refresh(nets[0]); // latent -> deployed inside the step barrier

            sum_total += total_val;
            sum_match += parts.match;
            if (!parts.ce.empty()) sum_ce_base += parts.ce[0];
            for (size_t i = 1; i < parts.ce.size(); ++i)
                sum_ce_twins[i - 1] += parts.ce[i];
            ++batches;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.lr = lr;
        m.loss_total = sum_total / batches;
        m.ce_base = sum_ce_base / batches;
        for (double s : sum_ce_twins) m.ce_twins.push_back(s / batches);
        m.match_loss = sum_match / batches;
        m.acc_train_base = static_cast<double>(train_hits) / train_part.count();
        m.acc_val_base = evaluate(spec, nets[0], comp.active ? &comp : nullptr,
                                  val_part, norm_only, cfg.lif, cfg.batch_size);
        m.acc_val_twin =
            n_nets > 1 ? evaluate(spec, nets[1], nullptr, val_part, norm_only,
                                  cfg.lif, cfg.batch_size)
                       : 0.0;
        m.ternary_active = comp.active ? 1 : 0;
        if (cfg.record_walltime) {
            auto t1 = std::chrono::steady_clock::now();
            m.wall_seconds =
                std::chrono::duration<double>(t1 - t0).count();
        }
        result.metrics.push_back(m);
        result.final_val_acc_base = m.acc_val_base;
        result.final_val_acc_twin = m.acc_val_twin;
        write_artifacts(epoch);
    }
    return result;
}

} // namespace tna
