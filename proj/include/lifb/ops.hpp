#pragma once

#include "lifb/tensor.hpp"

namespace lifb {

// Layer primitives with explicit forward contexts and hand-written backward
// passes. Backward functions ACCUMULATE into the provided gradient tensors
// (which must be pre-sized and zeroed by the caller when fresh gradients are
// wanted). All loops run in fixed row-major ascending order so repeated runs
// are bit-identical.

struct LinearCtx {
    Tensor x; // [N, Fin]
    Tensor w; // [Fout, Fin]
    bool valid = false;
};

/// out[i,j] = sum_k x[i,k] * w[j,k] + b[j].
/// Accepts higher-rank x and flattens trailing dims into Fin.
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b, LinearCtx* ctx = nullptr);
void linear_backward(const LinearCtx& ctx, const Tensor& grad_out,
                     Tensor& grad_x, Tensor& grad_w, Tensor& grad_b);

struct Conv2dCtx {
    Tensor x; // [N, Cin, H, W]
    Tensor w; // [Cout, Cin, K, K]
    bool valid = false;
};

/// Stride-1 convolution with odd square kernels and same-padding K/2.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Conv2dCtx* ctx = nullptr);
void conv2d_backward(const Conv2dCtx& ctx, const Tensor& grad_out,
                     Tensor& grad_x, Tensor& grad_w, Tensor& grad_b);

struct AvgPool2dCtx {
    std::vector<size_t> in_shape;
    bool valid = false;
};

/// 2x2 window, stride 2, floor semantics (trailing odd row/col dropped).
Tensor avgpool2d_forward(const Tensor& x, AvgPool2dCtx* ctx = nullptr);
void avgpool2d_backward(const AvgPool2dCtx& ctx, const Tensor& grad_out, Tensor& grad_x);

struct TnormCtx {
    Tensor x_hat;   // normalized input, same shape as x
    Tensor inv_std; // [C]
    Tensor gamma;   // [C]
    bool training = false;
    bool valid = false;
};

/// Per-channel normalization over every axis except axis 1. The caller stacks
/// time into the leading batch axis, so training statistics are joint over
/// batch and time; scale/shift are shared across timesteps. In eval mode the
/// supplied running statistics are used and left untouched; in training mode
/// they are updated in place with the given momentum. Variance is the biased
/// (population) estimate in both the batch statistics and the running update.
Tensor tnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     Tensor& running_mean, Tensor& running_var,
                     bool training, double momentum, double eps, TnormCtx* ctx = nullptr);
void tnorm_backward(const TnormCtx& ctx, const Tensor& grad_out,
                    Tensor& grad_x, Tensor& grad_gamma, Tensor& grad_beta);

/// Softmax cross-entropy, mean over batch. Returns loss; writes dL/dlogits.
double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels, Tensor* grad_logits);

} // namespace lifb
