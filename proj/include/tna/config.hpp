#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tna/losses.hpp"
#include "tna/snn.hpp"
#include "tna/ternary.hpp"

namespace tna {

struct TernaryConfig {
    bool enabled = false;
    TernaryPolicy policy;
};

// Full experiment configuration. Defaults follow the reference training setup
// (T=5, 250 epochs, batch 256, lr 0.01, gamma 0.928, delta 0.1, start 150);
// everything is overridable from file or flags.
struct TrainConfig {
    std::string dataset = "cifar10";
    std::string arch =
        "128C3-256C3-AP2-512C3-AP2-1023C3-512C3-1024FC-512FC-Out";
    int timesteps = 5;
    int epochs = 250;
    int batch_size = 256;
    double initial_lr = 0.01;
    double gamma = 0.928;
    double alpha_match = 1e-3;
    TrainMode mode = TrainMode::Tna;
    int n_networks = 2;
    MatchTarget match_target = MatchTarget::PerTimestepSum;
    double dropout = 0.2;
    LifParams lif;
    std::uint64_t seed_base = 1, seed_twin = 2, seed_data = 3;
    std::string out_dir = "run";
    std::string data_root; // falls back to $DATA_ROOT
    std::string teacher_checkpoint;
    TernaryConfig ternary;
    bool augment = true;
    double val_fraction = 0.1;
    long limit_train = 0, limit_test = 0; // 0 = full split
    bool record_walltime = true;
    int synth_train = 2000, synth_test = 1000; // synthetic dataset sizes

    void validate() const;
};

using ConfigMap = std::map<std::string, std::string>;

// Key-value file with optional [section] headers; section keys become
// "section.key". '#' and ';' start comments.
ConfigMap parse_config_file(const std::string& path);
void apply_override(ConfigMap& map, const std::string& key_equals_value);
TrainConfig config_from_map(const ConfigMap& map);

// Canonical snapshot of the effective configuration; its digest is stored in
// checkpoints.
std::string snapshot_string(const TrainConfig& cfg);

} // namespace tna
