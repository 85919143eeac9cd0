#pragma once

#include "lifb/tensor.hpp"

namespace lifb {

enum class NeuronModel { Lif, Lifb, PosNeg };

NeuronModel neuron_model_from_string(const std::string& s);
std::string neuron_model_to_string(NeuronModel m);

struct NeuronParams {
    double tau = 2.0;
    double v_th = 0.5;
    double v_h = 1.0; // burst threshold, 2*v_th by default
    double v_rst = 0.0;
    double surrogate_width = 0.5; // half-width a of the rectangular window

    /// Throws std::invalid_argument unless tau > 1, v_h >= v_th > v_rst, a > 0.
    void validate() const;
};

/// One integration step of the membrane: u = v + (1/tau)(I - v).
/// Single shared definition; every discrete neuron model and the decoupled
/// pair evaluate this identical expression, which is what makes their
/// membrane trajectories bit-identical.
inline real membrane_update(real v, real I, real inv_tau) { return v + real(inv_tau) * (I - v); }

/// Rectangular surrogate window: dH/du stand-in. 1/(2a) inside |x| < a
/// (strict), 0 outside. Integrates to 1 over the real line.
inline double surrogate_window(double u, double threshold, double a) {
    const double d = u - threshold;
    return (d < a && d > -a) ? 1.0 / (2.0 * a) : 0.0;
}

/// Clipped-linear ramp, the antiderivative of the window. Replaces the
/// Heaviside in relaxed-forward mode so the whole network becomes piecewise
/// differentiable and finite differences can validate the backward pass.
inline double surrogate_ramp(double u, double threshold, double a) {
    const double d = u - threshold;
    if (d <= -a) return 0.0;
    if (d >= a) return 1.0;
    return (d + a) / (2.0 * a);
}

/// Tensor version of the window. a <= 0 -> error.
Tensor surrogate_grad(const Tensor& u, double threshold, double a);

// Step functions. v and I must share a shape; s and v_next are overwritten.
// Spike decision and reset both read the post-integration potential u, with
// strict comparisons throughout (u exactly at threshold does not fire).

/// s = H(u - v_th); v_next = v_rst where s fired, else u.
void lif_step(const Tensor& v, const Tensor& I, const NeuronParams& p, Tensor& s, Tensor& v_next);

/// s = H(u - v_th) + (kappa - 1) H(u - v_h), evaluated as a three-way select
/// so the emitted value is exactly one of {0, 1, kappa[c]} in 64-bit.
/// Reset is triggered by the v_th crossing alone. kappa has one entry per
/// channel (axis 1); rank-1 inputs are treated as a single batch row.
void lifb_step(const Tensor& v, const Tensor& I, const NeuronParams& p, const Tensor& kappa,
               Tensor& s, Tensor& v_next);

/// s = H(u - v_th) - H(-u - v_th) in {-1, 0, 1}; reset wherever s != 0.
void posneg_step(const Tensor& v, const Tensor& I, const NeuronParams& p, Tensor& s, Tensor& v_next);

/// Context captured by one forward step for the BPTT backward.
struct NeuronStepCtx {
    Tensor u;       // post-integration potential
    Tensor kappa;   // per-channel, empty for lif/posneg
    NeuronParams p;
    NeuronModel model = NeuronModel::Lif;
    bool relaxed = false;
    bool valid = false;
};

/// Single forward step used by the network layer; covers all three models and
/// both hard and relaxed modes. Emission regions (rest/regular/burst/negative)
/// are decided by u, so raster codes stay meaningful even when emission values
/// coincide (kappa = 1). codes: 0 rest, 1 regular, 2 burst, 3 negative.
void neuron_step(NeuronModel model, const Tensor& v, const Tensor& I, const NeuronParams& p,
                 const Tensor& kappa, bool relaxed, Tensor& s, Tensor& v_next,
                 NeuronStepCtx* ctx, std::vector<uint8_t>* codes);

/// Reverse of one neuron_step.
///   grad_s:       dL/ds for this step's emission
///   grad_v_next:  dL/dv_next flowing back from the following step
/// Outputs are ACCUMULATED: grad_v (dL/dv at step start), grad_I, grad_kappa.
/// The spike path uses the surrogate window; ds/dkappa is the exact Heaviside
/// H(u - v_h) in hard mode and the ramp in relaxed mode; the reset assignment
/// is gradient-detached (grad_v_next propagates only through non-reset lanes).
void neuron_step_backward(const NeuronStepCtx& ctx, const Tensor& grad_s, const Tensor& grad_v_next,
                          Tensor& grad_v, Tensor& grad_I, Tensor* grad_kappa);

} // namespace lifb
