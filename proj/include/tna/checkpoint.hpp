#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tna/snn.hpp"
#include "tna/ternary.hpp"

namespace tna {

enum : std::uint8_t { kDtypeF32 = 0, kDtypeTernary2Bit = 1 };

struct CheckpointEntry {
    std::string name;
    std::uint8_t dtype = kDtypeF32;
    Shape shape;
    std::vector<float> values; // ternary entries hold only {-1,0,+1}
};

struct Checkpoint {
    std::uint32_t version = 1;
    std::uint64_t config_digest = 0;
    std::uint32_t epoch = 0;
    std::string arch;
    int timesteps = 5;
    int in_c = 0, in_h = 0, in_w = 0, classes = 0;
    std::vector<CheckpointEntry> entries;
};

std::uint64_t fnv1a64(const std::string& s);

// Packs ternary values 4 per byte (codes 00=0, 01=+1, 10=-1); padding bits of
// the trailing byte are zero.
std::vector<std::uint8_t> pack_ternary(const std::vector<float>& values);
std::vector<float> unpack_ternary(const std::vector<std::uint8_t>& packed,
                                  size_t count);

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

// Builds a checkpoint from a model's parameters; quantized layers (per the
// compression state) store their deployed ternary weights.
Checkpoint make_checkpoint(const ParamSet<float>& params,
                           const CompressionState<float>& comp,
                           const std::string& arch, int timesteps, int in_c,
                           int in_h, int in_w, int classes,
                           std::uint64_t config_digest, int epoch);

// Restores parameters; ternary entries come back as their deployed values and
// are flagged in `quantized`.
void checkpoint_to_params(const Checkpoint& cp, ParamSet<float>& params,
                          std::vector<char>& quantized);

} // namespace tna
