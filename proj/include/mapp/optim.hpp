#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace mapp {

struct AdamConfig {
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam over a fixed list of parameter blocks, addressed by block index.
class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    /// Starts the next step; call once before updating the blocks.
    void begin_step() {
        ++t_;
        bias1_ = 1.0 - std::pow(cfg_.beta1, double(t_));
        bias2_ = 1.0 - std::pow(cfg_.beta2, double(t_));
    }

    template <typename Real, typename GradReal>
    void update(std::size_t block, std::span<Real> params, std::span<const GradReal> grads) {
        if (block >= m_.size()) {
            m_.resize(block + 1);
            v_.resize(block + 1);
        }
        auto& m = m_[block];
        auto& v = v_[block];
        if (m.size() != params.size()) {
            m.assign(params.size(), 0.0);
            v.assign(params.size(), 0.0);
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            m[i] = cfg_.beta1 * m[i] + (1 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bias1_, vhat = v[i] / bias2_;
            params[i] = static_cast<Real>(double(params[i]) - cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon));
        }
    }

    std::size_t steps() const noexcept { return t_; }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
    double bias1_ = 1, bias2_ = 1;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace mapp
