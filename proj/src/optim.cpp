#include "lifb/optim.hpp"

#include <stdexcept>

namespace lifb {

void kappa_update(Tensor& kappa, Tensor& delta, const Tensor& grad, double mu, double eps) {
    require_same_shape(kappa, delta, "kappa_update");
    require_same_shape(kappa, grad, "kappa_update");
    for (size_t i = 0; i < kappa.size(); ++i) {
        delta.data()[i] = real(mu) * delta.data()[i] + real(eps) * grad.data()[i];
        kappa.data()[i] -= delta.data()[i];
    }
}

Optimizer::Optimizer(Network& net, const OptimConfig& cfg) : net_(&net), cfg_(cfg) {
    if (cfg_.lr < 0 || cfg_.momentum < 0 || cfg_.momentum >= 1 || cfg_.weight_decay < 0) {
        throw std::invalid_argument("Optimizer: need lr >= 0, 0 <= momentum < 1, weight_decay >= 0");
    }
    for (GradPair* p : net_->params()) deltas_.emplace_back(p->value.shape());
}

void Optimizer::step() {
    const std::vector<GradPair*> ps = net_->params();
    if (ps.size() != deltas_.size()) {
        throw std::logic_error("Optimizer: parameter set changed after construction");
    }
    for (size_t pi = 0; pi < ps.size(); ++pi) {
        GradPair* p = ps[pi];
        if (p->frozen) continue;
        Tensor& d = deltas_[pi];
        const real mu = real(cfg_.momentum);
        if (p->burst_intensity) {
            const real eps = real(cfg_.effective_lr_kappa() * lr_scale_);
            for (size_t i = 0; i < p->value.size(); ++i) {
                d.data()[i] = mu * d.data()[i] + eps * p->grad.data()[i];
                p->value.data()[i] -= d.data()[i];
            }
        } else {
            const real eps = real(cfg_.lr * lr_scale_);
            const real wd = real(cfg_.weight_decay);
            for (size_t i = 0; i < p->value.size(); ++i) {
                const real g = p->grad.data()[i] + wd * p->value.data()[i];
                d.data()[i] = mu * d.data()[i] + eps * g;
                p->value.data()[i] -= d.data()[i];
            }
        }
    }
}

std::vector<std::pair<std::string, Tensor*>> Optimizer::buffers() {
    std::vector<std::pair<std::string, Tensor*>> out;
    size_t pi = 0;
    for (auto& l : net_->layers) {
        for (GradPair* p : l->params()) {
            out.emplace_back(l->name + "." + p->name, &deltas_[pi]);
            ++pi;
        }
    }
    if (pi != deltas_.size()) throw std::logic_error("Optimizer: buffer walk out of sync");
    return out;
}

} // namespace lifb
