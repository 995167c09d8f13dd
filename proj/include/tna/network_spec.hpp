#pragma once

#include <string>
#include <vector>

namespace tna {

enum class LayerKind {
    Conv3x3,
    AvgPool2,
    FullyConnected,
    Dropout,
    Lif,
    OutputAccumulator,
};

struct LayerSpec {
    LayerKind kind;
    int units = 0;  // filters for conv, output width for fc; 0 on Out means "class count"
    double p = 0.0; // dropout probability
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    int timesteps = 5;
};

// Parses the hyphen-separated architecture grammar: "<n>C3", "AP2", "<n>FC",
// "Out". Each conv is followed by a spiking layer, each FC by a spiking layer
// and dropout; "Out" becomes the non-spiking output accumulator.
NetworkSpec parse_architecture(const std::string& arch, int timesteps,
                               double dropout_p);

// Indices (within the weighted conv/fc/out layers, in order) for reporting.
std::vector<std::string> weighted_layer_names(const NetworkSpec& spec);

} // namespace tna
