#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tna/network_spec.hpp"
#include "tna/tensor.hpp"

namespace tna {

struct LifParams {
    double alpha = 0.5;           // membrane decay
    double theta = 1.0;           // firing threshold
    double surrogate_width = 0.5; // boxcar half-width

    void validate() const {
        if (alpha < 0.0 || alpha > 1.0)
            throw ConfigError("lif alpha must be in [0,1]");
        if (theta <= 0.0) throw ConfigError("lif theta must be > 0");
        if (surrogate_width <= 0.0)
            throw ConfigError("lif surrogate width must be > 0");
    }
};

template <class S>
struct LifState {
    Tensor<S> u;      // membrane potential
    Tensor<S> s_prev; // spikes of the previous timestep, exactly 0 or 1
};

// Boxcar window: 0.5 inside |x| <= width (inclusive), 0 outside.
template <class S>
Tensor<S> boxcar(const Tensor<S>& u_minus_theta, S width) {
    if (width <= S(0)) throw ConfigError("boxcar width must be > 0");
    std::vector<S> d(u_minus_theta.size());
    for (long i = 0; i < u_minus_theta.size(); ++i)
        d[i] = std::abs(u_minus_theta.data()[i]) <= width ? S(0.5) : S(0);
    return Tensor<S>(u_minus_theta.shape(), std::move(d));
}

namespace detail {

template <class S>
void check_binary(const Tensor<S>& t, const char* what) {
    for (S v : t.data())
        if (v != S(0) && v != S(1))
            throw ContractError(std::string(what) + " must be exactly 0 or 1");
}

template <class S>
void check_finite(const Tensor<S>& t, const char* what) {
    for (S v : t.data())
        if (!std::isfinite(v))
            throw ContractError(std::string(what) + " is not finite");
}

} // namespace detail

// One LIF update: u[t] = alpha * (u[t-1] * (1 - s[t-1])) + I[t],
// s[t] = u[t] >= theta. Forward spikes are the Heaviside values; the boxcar
// surrogate replaces d s / d u in the backward pass.
template <class S>
std::pair<LifState<S>, Tensor<S>> lif_step(const LifState<S>& state,
                                           const Tensor<S>& input_current,
                                           const LifParams& params) {
    params.validate();
    detail::require_same_shape(state.u, input_current, "lif_step");
    detail::require_same_shape(state.s_prev, input_current, "lif_step");
    detail::check_binary(state.s_prev, "lif s_prev");

    Tensor<S> keep = affine(state.s_prev, S(-1), S(1)); // 1 - s[t-1]
    Tensor<S> u = add(scale(mul(state.u, keep), static_cast<S>(params.alpha)),
                      input_current);
    detail::check_finite(u, "lif membrane potential");

    std::vector<S> spike_vals(u.size());
    S theta = static_cast<S>(params.theta);
    for (long i = 0; i < u.size(); ++i)
        spike_vals[i] = u.data()[i] >= theta ? S(1) : S(0);
    Tensor<S> heaviside(u.shape(), std::move(spike_vals));

    S width = static_cast<S>(params.surrogate_width);
    Tensor<S> spikes = custom_grad(
        heaviside, affine(u, S(1), -theta),
        [width](S x) { return std::abs(x) <= width ? S(0.5) : S(0); });

    return {LifState<S>{u, spikes}, spikes};
}

// Parameters of one weighted layer. Conv weights are [F,C,3,3]; fully
// connected weights are [in,out] so activations multiply on the left.
template <class S>
struct LayerParams {
    std::string name;
    Tensor<S> weight;
    Tensor<S> bias;
};

template <class S>
using ParamSet = std::vector<LayerParams<S>>;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4568bULL;
    z = (z ^ (z >> 27)) * 0x94d4a798579d0b09ULL ^ 0x1ULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Fan-in-scaled uniform initialization: weights ~ U(-b, b) with
// b = sqrt(1 / fan_in), biases zero. Deterministic per seed.
template <class S>
ParamSet<S> kaiming_init(const NetworkSpec& spec, int in_c, int in_h, int in_w,
                         int classes, std::uint64_t seed) {
    std::vector<std::string> names = weighted_layer_names(spec);
    ParamSet<S> params;
    std::mt19937_64 rng(seed);
    int c = in_c, h = in_h, w = in_w;
    bool flat = false;
    long features = static_cast<long>(in_c) * in_h * in_w;
    size_t wi = 0;
    for (const LayerSpec& l : spec.layers) {
        switch (l.kind) {
        case LayerKind::Conv3x3: {
            if (flat)
                throw ConfigError("conv layer after fully connected layer");
            int fan_in = c * 9;
            S bound = static_cast<S>(std::sqrt(1.0 / fan_in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            Tensor<S> kw(Shape{l.units, c, 3, 3});
            for (S& v : kw.data()) v = static_cast<S>(dist(rng));
            params.push_back({names[wi++], kw, Tensor<S>(Shape{l.units})});
            c = l.units;
            break;
        }
        case LayerKind::AvgPool2:
            if (h % 2 != 0 || w % 2 != 0)
                throw ConfigError("avgpool2 on odd spatial size");
            h /= 2;
            w /= 2;
            break;
        case LayerKind::FullyConnected:
        case LayerKind::OutputAccumulator: {
            if (!flat) {
                features = static_cast<long>(c) * h * w;
                flat = true;
            }
            int out_units =
                l.kind == LayerKind::OutputAccumulator ? classes : l.units;
            int fan_in = static_cast<int>(features);
            S bound = static_cast<S>(std::sqrt(1.0 / fan_in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            Tensor<S> fw(Shape{fan_in, out_units});
            for (S& v : fw.data()) v = static_cast<S>(dist(rng));
            params.push_back({names[wi++], fw, Tensor<S>(Shape{out_units})});
            features = out_units;
            break;
        }
        case LayerKind::Dropout:
        case LayerKind::Lif:
            break;
        }
    }
    return params;
}

// Per-layer spike counts collected during a forward pass.
struct SpikeStats {
    std::vector<double> spikes_per_layer; // total spikes, one entry per lif layer
    long samples = 0;
};

// Runs the stack over T timesteps and returns the output accumulator's
// contribution at each timestep ([N, classes] per step). Static inputs pass
// one tensor (constant-current encoding, presented every step); temporal
// inputs pass one tensor per timestep. Dropout masks are sampled once per
// call and reused across timesteps; all LIF states start at zero.
template <class S>
std::vector<Tensor<S>> forward_timesteps(const NetworkSpec& spec,
                                         const std::vector<LayerParams<S>>& layers,
                                         const std::vector<Tensor<S>>& inputs,
                                         const LifParams& lif,
                                         std::mt19937_64& rng, bool train_mode,
                                         SpikeStats* stats = nullptr) {
    lif.validate();
    int T = spec.timesteps;
    if (inputs.empty() || (inputs.size() != 1 && static_cast<int>(inputs.size()) != T))
        throw ConfigError("forward_timesteps expects 1 or T input tensors");
    if (spec.layers.empty() ||
        spec.layers.back().kind != LayerKind::OutputAccumulator)
        throw ConfigError("network must end with the output accumulator");
    if (layers.size() != weighted_layer_names(spec).size())
        throw ConfigError("parameter set does not match the network spec");

    std::vector<Tensor<S>> masks(spec.layers.size()); // dropout, sampled at t=0
    std::vector<LifState<S>> states;                  // one per lif layer
    std::vector<Tensor<S>> outputs;
    outputs.reserve(T);

    if (stats) {
        stats->spikes_per_layer.clear();
        stats->samples += inputs[0].shape()[0];
    }

    for (int t = 0; t < T; ++t) {
        Tensor<S> x = inputs.size() == 1 ? inputs[0] : inputs[t];
        size_t wi = 0, li = 0;
        for (size_t i = 0; i < spec.layers.size(); ++i) {
            const LayerSpec& l = spec.layers[i];
            switch (l.kind) {
            case LayerKind::Conv3x3:
                x = add_channel_bias(conv2d(x, layers[wi].weight), layers[wi].bias);
                ++wi;
                break;
            case LayerKind::AvgPool2:
                x = avgpool2(x);
                break;
            case LayerKind::FullyConnected:
            case LayerKind::OutputAccumulator:
                if (x.shape().size() != 2) x = flatten_batch(x);
                x = add_rowvec(matmul(x, layers[wi].weight), layers[wi].bias);
                ++wi;
                break;
            case LayerKind::Dropout: {
                if (!train_mode || l.p <= 0.0) break;
                if (t == 0 && !masks[i].defined()) {
                    std::bernoulli_distribution keep(1.0 - l.p);
                    Tensor<S> m(x.shape());
                    S inv = static_cast<S>(1.0 / (1.0 - l.p));
                    for (S& v : m.data()) v = keep(rng) ? inv : S(0);
                    masks[i] = m;
                }
                x = mul(x, masks[i]);
                break;
            }
            case LayerKind::Lif: {
                if (t == 0) {
                    states.push_back(
                        LifState<S>{Tensor<S>(x.shape()), Tensor<S>(x.shape())});
                }
                auto [next, spikes] = lif_step(states[li], x, lif);
                states[li] = next;
                x = spikes;
                if (stats) {
                    if (stats->spikes_per_layer.size() <= li)
                        stats->spikes_per_layer.resize(li + 1, 0.0);
                    double total = 0;
                    for (S v : x.data()) total += static_cast<double>(v);
                    stats->spikes_per_layer[li] += total;
                }
                ++li;
                break;
            }
            }
        }
        outputs.push_back(x);
    }
    return outputs;
}

// Timestep-summed logits (the network output of record).
template <class S>
Tensor<S> sum_logits(const std::vector<Tensor<S>>& per_timestep) {
    Tensor<S> acc = per_timestep.at(0);
    for (size_t t = 1; t < per_timestep.size(); ++t)
        acc = add(acc, per_timestep[t]);
    return acc;
}

} // namespace tna
