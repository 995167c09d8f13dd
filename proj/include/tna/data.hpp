#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tna/errors.hpp"

namespace tna {

// In-memory dataset. Images are unit-scaled [0,1] C*H*W floats per sample;
// spike trains are binary T*C*H*W per sample (timesteps > 0 marks temporal data).
struct DatasetHandle {
    std::string name;
    int classes = 0;
    int channels = 0, height = 0, width = 0;
    int timesteps = 0; // 0 for static images
    std::vector<float> samples;
    std::vector<std::uint8_t> labels;

    size_t count() const { return labels.size(); }
    long sample_size() const {
        long s = static_cast<long>(channels) * height * width;
        return timesteps > 0 ? s * timesteps : s;
    }
};

struct AugmentConfig {
    bool enabled = true;
    int pad = 4;
    double hflip_prob = 0.5;
    std::vector<float> normalize_mean; // per channel; empty = compute from data
    std::vector<float> normalize_std;

    static AugmentConfig cifar() {
        AugmentConfig c;
        c.normalize_mean = {0.4914f, 0.4822f, 0.4465f};
        c.normalize_std = {0.2470f, 0.2435f, 0.2616f};
        return c;
    }
};

// Big-endian IDX files (magic 0x00000803 images, 0x00000801 labels).
DatasetHandle load_idx(const std::string& images_path,
                       const std::string& labels_path);
void write_idx_images(const std::string& path,
                      const std::vector<std::uint8_t>& pixels, int n, int h, int w);
void write_idx_labels(const std::string& path,
                      const std::vector<std::uint8_t>& labels);

// CIFAR-10 binary batches: 3073-byte records, label + channel-planar RGB.
DatasetHandle load_cifar10(const std::vector<std::string>& paths);
// CIFAR-100 binary: 3074-byte records (coarse + fine label), fine label used.
DatasetHandle load_cifar100(const std::string& path);

// Computes per-channel mean/std over a dataset (for datasets without
// published normalization constants).
void compute_normalization(const DatasetHandle& data, std::vector<float>& mean,
                           std::vector<float>& stddev);

// Zero-pad by cfg.pad, random crop back to the original size, random
// horizontal flip, then per-channel normalization. Train split only.
void augment_sample(const float* src, float* dst, int c, int h, int w,
                    const AugmentConfig& cfg, std::mt19937_64& rng);

// Normalization only (evaluation path).
void normalize_sample(const float* src, float* dst, int c, int h, int w,
                      const AugmentConfig& cfg);

// Class-conditional random spike trains: per-class smooth rate maps, binary
// samples, linearly separable by regional spike counts.
DatasetHandle synthetic_spikes(int classes, int timesteps, int channels,
                               int height, int width, int n, std::uint64_t seed);

// Class-conditional static images: per-class smooth template plus noise and a
// small random shift. Stand-in for a grayscale benchmark at desk scale.
DatasetHandle synthetic_images(int classes, int height, int width, int n,
                               std::uint64_t seed);

// Deterministic split: carves `fraction` of the samples (seeded shuffle) into
// the second handle.
void split_dataset(const DatasetHandle& data, double fraction,
                   std::uint64_t seed, DatasetHandle& main_part,
                   DatasetHandle& carved_part);

// Keeps the first n samples (after an optional seeded shuffle).
DatasetHandle subset(const DatasetHandle& data, size_t n, std::uint64_t seed);

// Epoch iterator: seeded shuffle, every sample exactly once.
std::vector<size_t> epoch_order(size_t count, std::uint64_t seed);

} // namespace tna
