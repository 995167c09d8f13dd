#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tna/errors.hpp"
#include "tna/tensor.hpp"

namespace tna {

// Exponential decay: lr = initial * gamma^epoch, one decay step per epoch.
inline double lr_schedule(int epoch, double initial_lr, double gamma) {
    if (epoch < 0) throw ContractError("lr_schedule: epoch must be >= 0");
    return initial_lr * std::pow(gamma, epoch);
}

// Standard bias-corrected Adam over a fixed parameter list. Moment buffers are
// allocated on first step and keyed by position, so the parameter list must
// keep a stable order across steps.
template <class S>
class Adam {
public:
    explicit Adam(double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    long step_count() const { return step_count_; }

    void step(const std::vector<Tensor<S>*>& params,
              const std::vector<const std::vector<S>*>& grads,
              const std::vector<std::string>& names) {
        if (params.size() != grads.size() || params.size() != names.size())
            throw ContractError("adam_step: mismatched parameter/gradient lists");
        if (m_.empty()) {
            m_.resize(params.size());
            v_.resize(params.size());
            for (size_t i = 0; i < params.size(); ++i) {
                m_[i].assign(params[i]->size(), S(0));
                v_[i].assign(params[i]->size(), S(0));
            }
        }
        ++step_count_;
        S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
        S corr1 = static_cast<S>(1.0 - std::pow(beta1_, step_count_));
        S corr2 = static_cast<S>(1.0 - std::pow(beta2_, step_count_));
        S lr = static_cast<S>(lr_), eps = static_cast<S>(eps_);
        for (size_t i = 0; i < params.size(); ++i) {
            std::vector<S>& p = params[i]->data();
            const std::vector<S>& g = *grads[i];
            if (p.size() != g.size())
                throw DimensionError("adam_step: gradient shape mismatch for " +
                                     names[i]);
            std::vector<S>& m = m_[i];
            std::vector<S>& v = v_[i];
            for (size_t j = 0; j < p.size(); ++j) {
                if (!std::isfinite(g[j]))
                    throw ContractError("adam_step: non-finite gradient in " +
                                        names[i]);
                m[j] = b1 * m[j] + (S(1) - b1) * g[j];
                v[j] = b2 * v[j] + (S(1) - b2) * g[j] * g[j];
                S mhat = m[j] / corr1;
                S vhat = v[j] / corr2;
                p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    long step_count_ = 0;
    std::vector<std::vector<S>> m_, v_;
};

} // namespace tna
