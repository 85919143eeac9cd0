#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lifb/network.hpp"

namespace lifb {

/// SGD-with-momentum settings. Weight decay applies to weight-class
/// parameters only; burst intensities are updated with the same momentum form
/// but never decayed and never range-constrained.
struct OptimConfig {
    double lr = 0.1;
    double lr_kappa = -1.0; // negative means "use lr"
    double momentum = 0.9;
    double weight_decay = 0.0;

    double effective_lr_kappa() const { return lr_kappa < 0 ? lr : lr_kappa; }
};

/// One burst-intensity step: delta <- mu*delta + eps*grad; kappa <- kappa - delta.
void kappa_update(Tensor& kappa, Tensor& delta, const Tensor& grad, double mu, double eps);

/// Deterministic single-threaded momentum optimizer over a network's
/// parameters. Momentum buffers start at zero and are checkpointable by
/// scoped name ("<layer>.<param>").
class Optimizer {
public:
    Optimizer(Network& net, const OptimConfig& cfg);

    /// Applies one update from the accumulated gradients. `lr_scale`
    /// multiplies both learning rates (schedule hook).
    void step();

    void set_lr_scale(double s) { lr_scale_ = s; }
    double lr_scale() const { return lr_scale_; }
    const OptimConfig& config() const { return cfg_; }

    /// Scoped-name views of the momentum buffers, in parameter order.
    std::vector<std::pair<std::string, Tensor*>> buffers();

private:
    Network* net_;
    OptimConfig cfg_;
    double lr_scale_ = 1.0;
    std::vector<Tensor> deltas_;
};

} // namespace lifb
