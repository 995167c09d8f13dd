#pragma once

#include <string>
#include <vector>

#include "tna/checkpoint.hpp"
#include "tna/config.hpp"
#include "tna/data.hpp"
#include "tna/losses.hpp"
#include "tna/optim.hpp"
#include "tna/snn.hpp"
#include "tna/ternary.hpp"

namespace tna {

struct EpochMetrics {
    int epoch = 0;
    double lr = 0;
    double loss_total = 0;
    double ce_base = 0;
    std::vector<double> ce_twins;
    double match_loss = 0;
    double acc_train_base = 0;
    double acc_val_base = 0;
    double acc_val_twin = 0;
    int ternary_active = 0;
    double wall_seconds = 0;
};

struct TrainResult {
    std::vector<EpochMetrics> metrics;
    int best_epoch = -1;
    double best_val_acc = 0;
    double final_val_acc_base = 0;
    double final_val_acc_twin = 0;
};

// Resolves the configured dataset name to loaded data. File-backed datasets
// are searched under data_root (and conventional subdirectories); synthetic
// datasets are generated from seed_data.
DatasetHandle load_dataset(const TrainConfig& cfg, bool train_split);

// Normalization for a dataset: published CIFAR constants, or computed
// per-channel statistics otherwise. Spike trains get no normalization.
AugmentConfig make_augment(const TrainConfig& cfg, const DatasetHandle& train_data);

// Full co-training run. Writes metrics.csv, config.snapshot and base-network
// checkpoints (final + best by validation accuracy) into cfg.out_dir.
TrainResult train(const TrainConfig& cfg, const DatasetHandle& train_data);

// Top-1 accuracy of a (possibly quantized) model over a dataset; optionally
// fills per-class accuracy and spike statistics.
double evaluate(const NetworkSpec& spec, const ParamSet<float>& params,
                const CompressionState<float>* comp, const DatasetHandle& data,
                const AugmentConfig& norm, const LifParams& lif, int batch_size,
                std::vector<double>* per_class_acc = nullptr,
                SpikeStats* stats = nullptr);

std::string metrics_csv(const std::vector<EpochMetrics>& metrics, int n_networks);

} // namespace tna
