#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tna/snn.hpp"
#include "tna/tensor.hpp"

namespace tna {

enum class QuantMode { Ternary, BinarySign };

inline QuantMode parse_quant_mode(const std::string& s) {
    if (s == "ternary") return QuantMode::Ternary;
    if (s == "binary_sign") return QuantMode::BinarySign;
    throw ConfigError("unknown quantization mode '" + s + "'");
}

struct TernaryPolicy {
    double delta = 0.1;
    int start_epoch = 150;
    QuantMode mode = QuantMode::Ternary;
    bool exempt_first = true; // first weighted layer (spike encoding)
    bool exempt_last = true;  // output layer

    void validate() const {
        if (mode == QuantMode::Ternary && delta <= 0.0)
            throw ConfigError("ternary delta must be > 0");
        if (start_epoch < 0) throw ConfigError("start_epoch must be >= 0");
    }

    std::set<size_t> exempt_set(size_t n_layers) const {
        std::set<size_t> ex;
        if (n_layers == 0) return ex;
        if (exempt_first) ex.insert(0);
        if (exempt_last) ex.insert(n_layers - 1);
        return ex;
    }
};

// Symmetric-threshold ternarization: -1 below -delta, 0 inside [-delta,delta]
// (boundary inclusive), +1 above. binary_sign maps to {-1,+1} instead.
template <class S>
void ternarize_into(const std::vector<S>& w, double delta, QuantMode mode,
                    std::vector<S>& out) {
    out.resize(w.size());
    S d = static_cast<S>(delta);
    if (mode == QuantMode::BinarySign) {
        for (size_t i = 0; i < w.size(); ++i) out[i] = w[i] >= S(0) ? S(1) : S(-1);
        return;
    }
    for (size_t i = 0; i < w.size(); ++i)
        out[i] = w[i] > d ? S(1) : (w[i] < -d ? S(-1) : S(0));
}

template <class S>
Tensor<S> ternarize(const Tensor<S>& w, double delta) {
    if (delta <= 0.0) throw ConfigError("ternarize: delta must be > 0");
    std::vector<S> out;
    ternarize_into(w.data(), delta, QuantMode::Ternary, out);
    return Tensor<S>(w.shape(), std::move(out));
}

// Latent full-precision weights plus their quantized deployed view. Deployed
// buffers are refreshed from the latents inside the optimizer-step barrier.
template <class S>
struct CompressionState {
    bool active = false;
    TernaryPolicy policy;
    std::vector<char> quantized;          // per weighted layer
    std::vector<std::vector<S>> deployed; // empty for non-quantized layers

    void refresh(const ParamSet<S>& params) {
        if (!active) return;
        for (size_t i = 0; i < params.size(); ++i)
            if (quantized[i])
                ternarize_into(params[i].weight.data(), policy.delta, policy.mode,
                               deployed[i]);
    }
};

// Installs quantized views on all non-exempt weighted layers once the schedule
// epoch is reached; a no-op before that.
template <class S>
void activate_compression(const ParamSet<S>& params, const TernaryPolicy& policy,
                          int epoch, CompressionState<S>& state) {
    policy.validate();
    if (epoch < 0) throw ContractError("activate_compression: epoch must be >= 0");
    if (epoch < policy.start_epoch || state.active) return;
    std::set<size_t> exempt = policy.exempt_set(params.size());
    if (exempt.size() >= params.size())
        throw ConfigError("ternary policy exempts every layer, nothing to compress");
    state.policy = policy;
    state.quantized.assign(params.size(), 0);
    state.deployed.assign(params.size(), {});
    for (size_t i = 0; i < params.size(); ++i)
        if (!exempt.count(i)) state.quantized[i] = 1;
    state.active = true;
    state.refresh(params);
}

// Effective weight for the forward pass under compression: deployed values
// forward, straight-through identity backward into the latent weight.
template <class S>
Tensor<S> ste_deploy(const Tensor<S>& latent_watched,
                     const std::vector<S>& deployed_vals) {
    Tensor<S> deployed(latent_watched.shape(),
                       std::vector<S>(deployed_vals));
    return custom_grad(deployed, latent_watched, [](S) { return S(1); });
}

// Compression hand-off under co-training: the base network is quantized, the
// twin keeps full precision and its state is left untouched.
template <class S>
void tna_ternary_handoff(const ParamSet<S>& base, CompressionState<S>& base_state,
                         const ParamSet<S>& twin,
                         const CompressionState<S>& twin_state,
                         const TernaryPolicy& policy, int epoch,
                         bool co_training) {
    if (!co_training)
        throw ConfigError("ternary hand-off requires an active co-training mode");
    if (epoch < policy.start_epoch)
        throw ContractError("ternary hand-off before start_epoch");
    if (twin_state.active)
        throw ContractError("twin network must stay full precision");
    (void)twin;
    activate_compression(base, policy, epoch, base_state);
}

// Exact zero fraction per quantized layer.
template <class S>
std::map<std::string, double> sparsity_report(const ParamSet<S>& params,
                                              const CompressionState<S>& state) {
    if (!state.active)
        throw ContractError("sparsity_report before compression activation");
    std::map<std::string, double> report;
    for (size_t i = 0; i < params.size(); ++i) {
        if (!state.quantized[i]) continue;
        const std::vector<S>& d = state.deployed[i];
        long zeros = 0;
        for (S v : d)
            if (v == S(0)) ++zeros;
        report[params[i].name] = static_cast<double>(zeros) / d.size();
    }
    return report;
}

} // namespace tna
