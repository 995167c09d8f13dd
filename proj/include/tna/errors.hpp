#pragma once

#include <stdexcept>
#include <string>

namespace tna {

// Shape or size disagreement between operands.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated an operation's contract (non-scalar loss, non-binary spikes, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file on disk (dataset or checkpoint).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace tna
