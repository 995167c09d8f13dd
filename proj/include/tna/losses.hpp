#pragma once

#include <string>
#include <vector>

#include "tna/snn.hpp"
#include "tna/tensor.hpp"

namespace tna {

enum class TrainMode { Baseline, Tna, Kd, KdCe };

enum class MatchTarget { PerTimestepSum, SummedLogits };

struct TnaLossConfig {
    double alpha_match = 1e-3;
    TrainMode mode = TrainMode::Tna;
    int n_networks = 2;
    MatchTarget match_target = MatchTarget::PerTimestepSum;

    void validate() const {
        if (alpha_match < 0.0) throw ConfigError("alpha_match must be >= 0");
        if (n_networks < 1) throw ConfigError("n_networks must be >= 1");
        if (mode == TrainMode::Baseline && n_networks != 1)
            throw ConfigError("mode=baseline forces n_networks=1");
        if (mode == TrainMode::Tna && n_networks < 2)
            throw ConfigError("mode=tna requires at least 2 networks");
    }
};

inline TrainMode parse_train_mode(const std::string& s) {
    if (s == "baseline") return TrainMode::Baseline;
    if (s == "tna") return TrainMode::Tna;
    if (s == "kd") return TrainMode::Kd;
    if (s == "kd_ce") return TrainMode::KdCe;
    throw ConfigError("unknown mode '" + s + "'");
}

inline MatchTarget parse_match_target(const std::string& s) {
    if (s == "per_timestep_sum") return MatchTarget::PerTimestepSum;
    if (s == "summed_logits") return MatchTarget::SummedLogits;
    throw ConfigError("unknown match_target '" + s + "'");
}

// Softmax cross-entropy on the timestep-summed output membrane potentials,
// averaged over the batch.
template <class S>
Tensor<S> ce_loss(const std::vector<Tensor<S>>& per_timestep_logits,
                  const std::vector<int>& labels) {
    return nll(log_softmax(sum_logits(per_timestep_logits)), labels);
}

// Logit matching loss between two networks' outputs. Per-timestep mode takes
// the MSE at every timestep and sums over timesteps; the alternate mode takes
// one MSE on the timestep-summed logits.
template <class S>
Tensor<S> match_loss(const std::vector<Tensor<S>>& a,
                     const std::vector<Tensor<S>>& b, MatchTarget target) {
    if (a.size() != b.size())
        throw DimensionError("match_loss: timestep counts differ");
    if (target == MatchTarget::SummedLogits) {
        Tensor<S> d = sub(sum_logits(a), sum_logits(b));
        return mean(mul(d, d));
    }
    Tensor<S> total;
    for (size_t t = 0; t < a.size(); ++t) {
        Tensor<S> d = sub(a[t], b[t]);
        Tensor<S> m = mean(mul(d, d));
        total = t == 0 ? m : add(total, m);
    }
    return total;
}

template <class S>
struct LossParts {
    Tensor<S> total;
    std::vector<double> ce;  // one per network
    double match = 0.0;      // unweighted matching component
};

// Combined co-training loss: sum of the per-network cross-entropy losses plus
// alpha times the matching terms. Every auxiliary network matches the base.
template <class S>
LossParts<S> tna_loss(const std::vector<std::vector<Tensor<S>>>& outputs,
                      const std::vector<int>& labels, const TnaLossConfig& cfg) {
    cfg.validate();
    if (cfg.mode == TrainMode::Tna && outputs.size() < 2)
        throw ConfigError("tna_loss needs at least 2 networks in tna mode");
    if (outputs.size() != static_cast<size_t>(cfg.n_networks))
        throw ConfigError("tna_loss: got " + std::to_string(outputs.size()) +
                          " networks, config says " +
                          std::to_string(cfg.n_networks));

    LossParts<S> parts;
    Tensor<S> total;
    for (size_t i = 0; i < outputs.size(); ++i) {
        Tensor<S> ce = ce_loss(outputs[i], labels);
        parts.ce.push_back(static_cast<double>(ce.item()));
        total = i == 0 ? ce : add(total, ce);
    }
    if (outputs.size() > 1) {
        Tensor<S> match;
        for (size_t i = 1; i < outputs.size(); ++i) {
            Tensor<S> m = match_loss(outputs[0], outputs[i], cfg.match_target);
            match = i == 1 ? m : add(match, m);
        }
        parts.match = static_cast<double>(match.item());
        total = add(total, scale(match, static_cast<S>(cfg.alpha_match)));
    }
    parts.total = total;
    return parts;
}

// Knowledge-distillation losses against a frozen teacher. The teacher outputs
// must be off-tape; in pure kd mode the student sees no label gradient.
template <class S>
LossParts<S> kd_loss(const std::vector<Tensor<S>>& student_outputs,
                     const std::vector<Tensor<S>>& teacher_outputs,
                     const std::vector<int>& labels, const TnaLossConfig& cfg) {
    if (cfg.mode != TrainMode::Kd && cfg.mode != TrainMode::KdCe)
        throw ConfigError("kd_loss requires mode kd or kd_ce");
    for (const Tensor<S>& t : teacher_outputs)
        if (t.on_tape())
            throw ContractError("teacher outputs must carry no gradient");

    LossParts<S> parts;
    Tensor<S> match = match_loss(student_outputs, teacher_outputs, cfg.match_target);
    parts.match = static_cast<double>(match.item());
    Tensor<S> weighted = scale(match, static_cast<S>(cfg.alpha_match));
    if (cfg.mode == TrainMode::KdCe) {
        Tensor<S> ce = ce_loss(student_outputs, labels);
        parts.ce.push_back(static_cast<double>(ce.item()));
        parts.total = add(ce, weighted);
    } else {
        parts.total = weighted;
    }
    return parts;
}

} // namespace tna
