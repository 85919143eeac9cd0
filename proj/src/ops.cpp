#include "lifb/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lifb {

static Tensor flatten_to_2d(const Tensor& x, const char* where) {
    if (x.ndim() < 2) {
        throw std::invalid_argument(std::string(where) + ": need rank >= 2, got shape " + x.shape_str());
    }
    if (x.ndim() == 2) return x;
    size_t n = x.dim(0);
    size_t f = x.size() / n;
    return x.reshaped({n, f});
}

Tensor linear_forward(const Tensor& x_in, const Tensor& w, const Tensor& b, LinearCtx* ctx) {
    Tensor x = flatten_to_2d(x_in, "linear_forward");
    if (w.ndim() != 2) {
        throw std::invalid_argument("linear_forward: weight must be rank 2, got " + w.shape_str());
    }
    const size_t N = x.dim(0), Fin = x.dim(1), Fout = w.dim(0);
    if (w.dim(1) != Fin) {
        throw std::invalid_argument("linear_forward: input shape " + x.shape_str() +
                                    " incompatible with weight " + w.shape_str());
    }
    if (b.ndim() != 1 || b.dim(0) != Fout) {
        throw std::invalid_argument("linear_forward: bias shape " + b.shape_str() +
                                    " incompatible with weight " + w.shape_str());
    }
    Tensor out({N, Fout});
    const real* xp = x.data();
    const real* wp = w.data();
    const real* bp = b.data();
    real* op = out.data();
    for (size_t i = 0; i < N; ++i) {
        for (size_t j = 0; j < Fout; ++j) {
            real acc = bp[j];
            const real* xr = xp + i * Fin;
            const real* wr = wp + j * Fin;
            for (size_t k = 0; k < Fin; ++k) acc += xr[k] * wr[k];
            op[i * Fout + j] = acc;
        }
    }
    if (ctx) {
        ctx->x = x;
        ctx->w = w;
        ctx->valid = true;
    }
    return out;
}

void linear_backward(const LinearCtx& ctx, const Tensor& grad_out,
                     Tensor& grad_x, Tensor& grad_w, Tensor& grad_b) {
    if (!ctx.valid) throw std::invalid_argument("linear_backward: missing forward context");
    const size_t N = ctx.x.dim(0), Fin = ctx.x.dim(1), Fout = ctx.w.dim(0);
    if (grad_out.ndim() != 2 || grad_out.dim(0) != N || grad_out.dim(1) != Fout) {
        throw std::invalid_argument("linear_backward: grad_out shape " + grad_out.shape_str() +
                                    " does not match forward output");
    }
    if (grad_x.size() != N * Fin || grad_w.size() != Fout * Fin || grad_b.size() != Fout) {
        throw std::invalid_argument("linear_backward: gradient buffer shape mismatch");
    }
    const real* xp = ctx.x.data();
    const real* wp = ctx.w.data();
    const real* gp = grad_out.data();
    real* gx = grad_x.data();
    real* gw = grad_w.data();
    real* gb = grad_b.data();
    for (size_t i = 0; i < N; ++i) {
        const real* gr = gp + i * Fout;
        const real* xr = xp + i * Fin;
        real* gxr = gx + i * Fin;
        for (size_t j = 0; j < Fout; ++j) {
            const real g = gr[j];
            if (g == real(0)) continue;
            const real* wr = wp + j * Fin;
            real* gwr = gw + j * Fin;
            for (size_t k = 0; k < Fin; ++k) {
                gxr[k] += g * wr[k];
                gwr[k] += g * xr[k];
            }
            gb[j] += g;
        }
    }
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Conv2dCtx* ctx) {
    if (x.ndim() != 4) {
        throw std::invalid_argument("conv2d_forward: input must be [N,C,H,W], got " + x.shape_str());
    }
    if (w.ndim() != 4 || w.dim(2) != w.dim(3) || w.dim(2) % 2 == 0) {
        throw std::invalid_argument("conv2d_forward: weight must be [Cout,Cin,K,K] with odd K, got " +
                                    w.shape_str());
    }
    const size_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const size_t Cout = w.dim(0), K = w.dim(2);
    if (w.dim(1) != Cin) {
        throw std::invalid_argument("conv2d_forward: input " + x.shape_str() +
                                    " incompatible with weight " + w.shape_str());
    }
    if (b.ndim() != 1 || b.dim(0) != Cout) {
        throw std::invalid_argument("conv2d_forward: bias shape " + b.shape_str() +
                                    " incompatible with weight " + w.shape_str());
    }
    const long P = long(K) / 2; // same padding, stride 1
    Tensor out({N, Cout, H, W});
    const real* xp = x.data();
    const real* wp = w.data();
    const real* bp = b.data();
    real* op = out.data();
    for (size_t n = 0; n < N; ++n) {
        for (size_t co = 0; co < Cout; ++co) {
            real* orow = op + ((n * Cout + co) * H) * W;
            const real bias = bp[co];
            for (size_t i = 0; i < H * W; ++i) orow[i] = bias;
            for (size_t ci = 0; ci < Cin; ++ci) {
                const real* xch = xp + ((n * Cin + ci) * H) * W;
                const real* wch = wp + ((co * Cin + ci) * K) * K;
                for (size_t di = 0; di < K; ++di) {
                    for (size_t dj = 0; dj < K; ++dj) {
                        const real wv = wch[di * K + dj];
                        if (wv == real(0)) continue;
                        const long oi_lo = std::max(long(0), P - long(di));
                        const long oi_hi = std::min(long(H), long(H) + P - long(di));
                        const long oj_lo = std::max(long(0), P - long(dj));
                        const long oj_hi = std::min(long(W), long(W) + P - long(dj));
                        for (long oi = oi_lo; oi < oi_hi; ++oi) {
                            const real* xrow = xch + (oi + long(di) - P) * long(W);
                            real* out_row = orow + oi * long(W);
                            for (long oj = oj_lo; oj < oj_hi; ++oj) {
                                out_row[oj] += wv * xrow[oj + long(dj) - P];
                            }
                        }
                    }
                }
            }
        }
    }
    if (ctx) {
        ctx->x = x;
        ctx->w = w;
        ctx->valid = true;
    }
    return out;
}

void conv2d_backward(const Conv2dCtx& ctx, const Tensor& grad_out,
                     Tensor& grad_x, Tensor& grad_w, Tensor& grad_b) {
    if (!ctx.valid) throw std::invalid_argument("conv2d_backward: missing forward context");
    const Tensor& x = ctx.x;
    const Tensor& w = ctx.w;
    const size_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const size_t Cout = w.dim(0), K = w.dim(2);
    if (!grad_out.same_shape(Tensor({N, Cout, H, W}))) {
        throw std::invalid_argument("conv2d_backward: grad_out shape " + grad_out.shape_str() +
                                    " does not match forward output");
    }
    if (grad_x.size() != x.size() || grad_w.size() != w.size() || grad_b.size() != Cout) {
        throw std::invalid_argument("conv2d_backward: gradient buffer shape mismatch");
    }
    const long P = long(K) / 2;
    const real* xp = x.data();
    const real* wp = w.data();
    const real* gp = grad_out.data();
    real* gx = grad_x.data();
    real* gw = grad_w.data();
    real* gb = grad_b.data();
    for (size_t n = 0; n < N; ++n) {
        for (size_t co = 0; co < Cout; ++co) {
            const real* grow = gp + ((n * Cout + co) * H) * W;
            real acc_b = 0;
            for (size_t i = 0; i < H * W; ++i) acc_b += grow[i];
            gb[co] += acc_b;
            for (size_t ci = 0; ci < Cin; ++ci) {
                const real* xch = xp + ((n * Cin + ci) * H) * W;
                real* gxch = gx + ((n * Cin + ci) * H) * W;
                const real* wch = wp + ((co * Cin + ci) * K) * K;
                real* gwch = gw + ((co * Cin + ci) * K) * K;
                for (size_t di = 0; di < K; ++di) {
                    for (size_t dj = 0; dj < K; ++dj) {
                        const real wv = wch[di * K + dj];
                        real acc_w = 0;
                        const long oi_lo = std::max(long(0), P - long(di));
                        const long oi_hi = std::min(long(H), long(H) + P - long(di));
                        const long oj_lo = std::max(long(0), P - long(dj));
                        const long oj_hi = std::min(long(W), long(W) + P - long(dj));
                        for (long oi = oi_lo; oi < oi_hi; ++oi) {
                            const real* xrow = xch + (oi + long(di) - P) * long(W);
                            real* gxrow = gxch + (oi + long(di) - P) * long(W);
                            const real* grow2 = grow + oi * long(W);
                            for (long oj = oj_lo; oj < oj_hi; ++oj) {
                                const real g = grow2[oj];
                                acc_w += g * xrow[oj + long(dj) - P];
                                gxrow[oj + long(dj) - P] += g * wv;
                            }
                        }
                        gwch[di * K + dj] += acc_w;
                    }
                }
            }
        }
    }
}

Tensor avgpool2d_forward(const Tensor& x, AvgPool2dCtx* ctx) {
    if (x.ndim() != 4) {
        throw std::invalid_argument("avgpool2d_forward: input must be [N,C,H,W], got " + x.shape_str());
    }
    const size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const size_t Ho = H / 2, Wo = W / 2;
    if (Ho == 0 || Wo == 0) {
        throw std::invalid_argument("avgpool2d_forward: spatial dims too small in " + x.shape_str());
    }
    Tensor out({N, C, Ho, Wo});
    const real* xp = x.data();
    real* op = out.data();
    for (size_t nc = 0; nc < N * C; ++nc) {
        const real* xch = xp + nc * H * W;
        real* och = op + nc * Ho * Wo;
        for (size_t i = 0; i < Ho; ++i) {
            for (size_t j = 0; j < Wo; ++j) {
                const real* r0 = xch + (2 * i) * W + 2 * j;
                const real* r1 = r0 + W;
                och[i * Wo + j] = (r0[0] + r0[1] + r1[0] + r1[1]) * real(0.25);
            }
        }
    }
    if (ctx) {
        ctx->in_shape = x.shape();
        ctx->valid = true;
    }
    return out;
}

void avgpool2d_backward(const AvgPool2dCtx& ctx, const Tensor& grad_out, Tensor& grad_x) {
    if (!ctx.valid) throw std::invalid_argument("avgpool2d_backward: missing forward context");
    const size_t N = ctx.in_shape[0], C = ctx.in_shape[1], H = ctx.in_shape[2], W = ctx.in_shape[3];
    const size_t Ho = H / 2, Wo = W / 2;
    if (!grad_out.same_shape(Tensor({N, C, Ho, Wo}))) {
        throw std::invalid_argument("avgpool2d_backward: grad_out shape " + grad_out.shape_str() +
                                    " does not match forward output");
    }
    if (grad_x.size() != N * C * H * W) {
        throw std::invalid_argument("avgpool2d_backward: gradient buffer shape mismatch");
    }
    const real* gp = grad_out.data();
    real* gx = grad_x.data();
    for (size_t nc = 0; nc < N * C; ++nc) {
        const real* gch = gp + nc * Ho * Wo;
        real* xch = gx + nc * H * W;
        for (size_t i = 0; i < Ho; ++i) {
            for (size_t j = 0; j < Wo; ++j) {
                const real g = gch[i * Wo + j] * real(0.25);
                real* r0 = xch + (2 * i) * W + 2 * j;
                real* r1 = r0 + W;
                r0[0] += g;
                r0[1] += g;
                r1[0] += g;
                r1[1] += g;
            }
        }
    }
}

// View [N, C, ...] as [N, C, S]. Returns {N, C, S}.
static void norm_dims(const Tensor& x, size_t& N, size_t& C, size_t& S) {
    if (x.ndim() < 2) {
        throw std::invalid_argument("tnorm: input must have a channel axis, got " + x.shape_str());
    }
    N = x.dim(0);
    C = x.dim(1);
    S = x.size() / (N * C);
}

Tensor tnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     Tensor& running_mean, Tensor& running_var,
                     bool training, double momentum, double eps, TnormCtx* ctx) {
    size_t N, C, S;
    norm_dims(x, N, C, S);
    if (gamma.size() != C || beta.size() != C || running_mean.size() != C || running_var.size() != C) {
        throw std::invalid_argument("tnorm_forward: per-channel parameter size mismatch for input " +
                                    x.shape_str());
    }
    Tensor mean({C}), var({C});
    if (training) {
        const real* xp = x.data();
        const double M = double(N) * double(S);
        for (size_t c = 0; c < C; ++c) {
            double acc = 0;
            for (size_t n = 0; n < N; ++n) {
                const real* p = xp + (n * C + c) * S;
                for (size_t s = 0; s < S; ++s) acc += p[s];
            }
            mean.at(c) = real(acc / M);
        }
        for (size_t c = 0; c < C; ++c) {
            double acc = 0;
            const double mu = mean.at(c);
            for (size_t n = 0; n < N; ++n) {
                const real* p = xp + (n * C + c) * S;
                for (size_t s = 0; s < S; ++s) {
                    const double d = p[s] - mu;
                    acc += d * d;
                }
            }
            var.at(c) = real(acc / M);
        }
        for (size_t c = 0; c < C; ++c) {
            running_mean.at(c) = real((1.0 - momentum) * running_mean.at(c) + momentum * mean.at(c));
            running_var.at(c) = real((1.0 - momentum) * running_var.at(c) + momentum * var.at(c));
        }
    } else {
        mean = running_mean;
        var = running_var;
    }

    Tensor inv_std({C});
    for (size_t c = 0; c < C; ++c) inv_std.at(c) = real(1.0 / std::sqrt(double(var.at(c)) + eps));

    Tensor out(x.shape());
    Tensor x_hat(x.shape());
    const real* xp = x.data();
    real* op = out.data();
    real* hp = x_hat.data();
    for (size_t n = 0; n < N; ++n) {
        for (size_t c = 0; c < C; ++c) {
            const real mu = mean.at(c), is = inv_std.at(c), g = gamma.at(c), b = beta.at(c);
            const real* p = xp + (n * C + c) * S;
            real* o = op + (n * C + c) * S;
            real* h = hp + (n * C + c) * S;
            for (size_t s = 0; s < S; ++s) {
                const real xh = (p[s] - mu) * is;
                h[s] = xh;
                o[s] = g * xh + b;
            }
        }
    }
    if (ctx) {
        ctx->x_hat = std::move(x_hat);
        ctx->inv_std = std::move(inv_std);
        ctx->gamma = gamma;
        ctx->training = training;
        ctx->valid = true;
    }
    return out;
}

void tnorm_backward(const TnormCtx& ctx, const Tensor& grad_out,
                    Tensor& grad_x, Tensor& grad_gamma, Tensor& grad_beta) {
    if (!ctx.valid) throw std::invalid_argument("tnorm_backward: missing forward context");
    size_t N, C, S;
    norm_dims(ctx.x_hat, N, C, S);
    require_same_shape(grad_out, ctx.x_hat, "tnorm_backward");
    if (grad_x.size() != ctx.x_hat.size() || grad_gamma.size() != C || grad_beta.size() != C) {
        throw std::invalid_argument("tnorm_backward: gradient buffer shape mismatch");
    }
    const real* gp = grad_out.data();
    const real* hp = ctx.x_hat.data();
    real* gx = grad_x.data();
    const double M = double(N) * double(S);
    for (size_t c = 0; c < C; ++c) {
        double sum_g = 0, sum_gh = 0;
        for (size_t n = 0; n < N; ++n) {
            const real* g = gp + (n * C + c) * S;
            const real* h = hp + (n * C + c) * S;
            for (size_t s = 0; s < S; ++s) {
                sum_g += g[s];
                sum_gh += double(g[s]) * h[s];
            }
        }
        grad_beta.at(c) += real(sum_g);
        grad_gamma.at(c) += real(sum_gh);
        const double gam = ctx.gamma.at(c);
        const double is = ctx.inv_std.at(c);
        if (ctx.training) {
            // dx = gamma*inv_std*(dy - mean(dy) - x_hat*mean(dy*x_hat))
            const double mg = sum_g / M, mgh = sum_gh / M;
            for (size_t n = 0; n < N; ++n) {
                const real* g = gp + (n * C + c) * S;
                const real* h = hp + (n * C + c) * S;
                real* o = gx + (n * C + c) * S;
                for (size_t s = 0; s < S; ++s) {
                    o[s] += real(gam * is * (double(g[s]) - mg - double(h[s]) * mgh));
                }
            }
        } else {
            for (size_t n = 0; n < N; ++n) {
                const real* g = gp + (n * C + c) * S;
                real* o = gx + (n * C + c) * S;
                for (size_t s = 0; s < S; ++s) o[s] += real(gam * is * double(g[s]));
            }
        }
    }
}

double cross_entropy_loss(const Tensor& logits, const std::vector<int>& labels, Tensor* grad_logits) {
    if (logits.ndim() != 2) {
        throw std::invalid_argument("cross_entropy_loss: logits must be [B,classes], got " +
                                    logits.shape_str());
    }
    const size_t B = logits.dim(0), C = logits.dim(1);
    if (labels.size() != B) {
        throw std::invalid_argument("cross_entropy_loss: " + std::to_string(labels.size()) +
                                    " labels for batch of " + std::to_string(B));
    }
    if (grad_logits && !grad_logits->same_shape(logits)) {
        *grad_logits = Tensor(logits.shape());
    }
    const real* zp = logits.data();
    double loss = 0;
    for (size_t i = 0; i < B; ++i) {
        const int y = labels[i];
        if (y < 0 || size_t(y) >= C) {
            throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(y) +
                                        " out of range for " + std::to_string(C) + " classes");
        }
        const real* z = zp + i * C;
        double m = z[0];
        for (size_t j = 1; j < C; ++j) m = std::max(m, double(z[j]));
        double sum = 0;
        for (size_t j = 0; j < C; ++j) sum += std::exp(double(z[j]) - m);
        const double lse = m + std::log(sum);
        loss += lse - double(z[y]);
        if (grad_logits) {
            real* g = grad_logits->data() + i * C;
            for (size_t j = 0; j < C; ++j) {
                double p = std::exp(double(z[j]) - lse);
                g[j] += real((p - (size_t(y) == j ? 1.0 : 0.0)) / double(B));
            }
        }
    }
    return loss / double(B);
}

} // namespace lifb
