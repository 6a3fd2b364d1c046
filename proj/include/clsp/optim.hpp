#pragma once
// AdamW with decoupled weight decay and bias-corrected moments.

#include <cmath>
#include <cstddef>
#include <vector>

#include "clsp/tensor.hpp"

namespace clsp {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// One element update. Weight decay is applied as a separate shrink of the
// parameter, not folded into the gradient.
template <typename Real>
void adamw_step(Real& param, Real grad, Real& m, Real& v, long step, const AdamWConfig& cfg) {
    m = Real(cfg.beta1) * m + Real(1.0 - cfg.beta1) * grad;
    v = Real(cfg.beta2) * v + Real(1.0 - cfg.beta2) * grad * grad;
    const Real m_hat = m / Real(1.0 - std::pow(cfg.beta1, static_cast<double>(step)));
    const Real v_hat = v / Real(1.0 - std::pow(cfg.beta2, static_cast<double>(step)));
    param -= Real(cfg.lr) * m_hat / (std::sqrt(v_hat) + Real(cfg.eps));
    param -= Real(cfg.lr * cfg.weight_decay) * param;
}

// Optimizer over a fixed set of parameter tensors.
template <typename Real>
class AdamW {
public:
    AdamW(std::vector<Tensor<Real>*> params, AdamWConfig cfg)
        : params_(std::move(params)), cfg_(cfg) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i]->numel(), Real(0));
            v_[i].assign(params_[i]->numel(), Real(0));
        }
    }

    // Applies one update from the accumulated gradients, then clears them.
    void step() {
        ++step_count_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor<Real>* p = params_[i];
            if (p->grad.empty()) p->ensure_grad();
            Real* m = m_[i].data();
            Real* v = v_[i].data();
            const std::size_t n = p->numel();
#pragma omp parallel for schedule(static)
            for (long long j = 0; j < static_cast<long long>(n); ++j) {
                const Real g = p->grad[j];
                m[j] = Real(cfg_.beta1) * m[j] + Real(1.0 - cfg_.beta1) * g;
                v[j] = Real(cfg_.beta2) * v[j] + Real(1.0 - cfg_.beta2) * g * g;
                const Real m_hat = m[j] / Real(bc1);
                const Real v_hat = v[j] / Real(bc2);
                p->data[j] -= Real(cfg_.lr) * m_hat / (std::sqrt(v_hat) + Real(cfg_.eps));
                p->data[j] -= Real(cfg_.lr * cfg_.weight_decay) * p->data[j];
            }
            p->zero_grad();
        }
    }

    long step_count() const { return step_count_; }

private:
    std::vector<Tensor<Real>*> params_;
    AdamWConfig cfg_;
    std::vector<std::vector<Real>> m_, v_;
    long step_count_ = 0;
};

}  // namespace clsp
