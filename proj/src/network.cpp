#include "lifb/network.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace lifb {

// ---------- LinearLayer ----------

LinearLayer::LinearLayer(size_t in_features, size_t out_features, Rng& rng) {
    Tensor wt({out_features, in_features});
    rng.fill_normal(wt, 0.0, std::sqrt(2.0 / double(in_features)));
    w = GradPair("w", std::move(wt));
    b = GradPair("b", Tensor({out_features}));
}

Tensor LinearLayer::forward(const Tensor& x, const PassCtx& pc) {
    in_shape = x.shape();
    return linear_forward(x, w.value, b.value, pc.retain ? &ctx : nullptr);
}

Tensor LinearLayer::backward(const Tensor& grad_out) {
    if (!ctx.valid) throw std::invalid_argument(name + ": backward without retained forward");
    Tensor grad_x({ctx.x.dim(0), ctx.x.dim(1)});
    linear_backward(ctx, grad_out, grad_x, w.grad, b.grad);
    Tensor grad_in = grad_x.reshaped(in_shape);
    drop_ctx(); // consumed: a second backward would double-count grads
    return grad_in;
}

// ---------- Conv2dLayer ----------

Conv2dLayer::Conv2dLayer(size_t in_ch, size_t out_ch, size_t k, Rng& rng) {
    Tensor wt({out_ch, in_ch, k, k});
    rng.fill_normal(wt, 0.0, std::sqrt(2.0 / double(in_ch * k * k)));
    w = GradPair("w", std::move(wt));
    b = GradPair("b", Tensor({out_ch}));
}

Tensor Conv2dLayer::forward(const Tensor& x, const PassCtx& pc) {
    return conv2d_forward(x, w.value, b.value, pc.retain ? &ctx : nullptr);
}

Tensor Conv2dLayer::backward(const Tensor& grad_out) {
    if (!ctx.valid) throw std::invalid_argument(name + ": backward without retained forward");
    Tensor grad_x(ctx.x.shape());
    conv2d_backward(ctx, grad_out, grad_x, w.grad, b.grad);
    drop_ctx();
    return grad_x;
}

// ---------- AvgPoolLayer ----------

Tensor AvgPoolLayer::forward(const Tensor& x, const PassCtx& pc) {
    return avgpool2d_forward(x, pc.retain ? &ctx : nullptr);
}

Tensor AvgPoolLayer::backward(const Tensor& grad_out) {
    if (!ctx.valid) throw std::invalid_argument(name + ": backward without retained forward");
    Tensor grad_x(ctx.in_shape);
    avgpool2d_backward(ctx, grad_out, grad_x);
    drop_ctx();
    return grad_x;
}

// ---------- TnormLayer ----------

TnormLayer::TnormLayer(size_t channels) {
    gamma = GradPair("gamma", Tensor({channels}, real(1)));
    beta = GradPair("beta", Tensor({channels}));
    running_mean = Tensor({channels});
    running_var = Tensor({channels}, real(1));
}

Tensor TnormLayer::forward(const Tensor& x, const PassCtx& pc) {
    return tnorm_forward(x, gamma.value, beta.value, running_mean, running_var, pc.training,
                         momentum, eps, pc.retain ? &ctx : nullptr);
}

Tensor TnormLayer::backward(const Tensor& grad_out) {
    if (!ctx.valid) throw std::invalid_argument(name + ": backward without retained forward");
    Tensor grad_x(ctx.x_hat.shape());
    tnorm_backward(ctx, grad_out, grad_x, gamma.grad, beta.grad);
    drop_ctx();
    return grad_x;
}

// ---------- helpers for time-stacked tensors ----------

static void split_dims(const Tensor& xs, const PassCtx& pc, size_t& T, size_t& B) {
    T = pc.T;
    B = pc.B;
    if (T < 1 || B < 1 || xs.dim(0) != T * B) {
        throw std::invalid_argument("stacked tensor rows " + std::to_string(xs.dim(0)) +
                                    " do not equal T*B = " + std::to_string(T) + "*" +
                                    std::to_string(B));
    }
}

static Tensor slice_step(const Tensor& xs, size_t t, size_t T, size_t B) {
    std::vector<size_t> shape = xs.shape();
    shape[0] = B;
    Tensor out(shape);
    const size_t per = xs.size() / (T * B);
    std::memcpy(out.data(), xs.data() + t * B * per, B * per * sizeof(real));
    return out;
}

static void store_step(Tensor& xs, const Tensor& x_t, size_t t, size_t T, size_t B) {
    const size_t per = xs.size() / (T * B);
    std::memcpy(xs.data() + t * B * per, x_t.data(), B * per * sizeof(real));
}

// ---------- NeuronLayer ----------

NeuronLayer::NeuronLayer(NeuronModel m, size_t ch, const NeuronParams& np)
    : model(m), channels(ch), p(np) {
    p.validate();
    if (model == NeuronModel::Lifb) {
        kappa = GradPair("kappa", Tensor({channels}, real(1)));
        kappa.burst_intensity = true;
    }
}

std::vector<GradPair*> NeuronLayer::params() {
    if (model == NeuronModel::Lifb) return {&kappa};
    return {};
}

Tensor NeuronLayer::forward(const Tensor& xs, const PassCtx& pc) {
    size_t T, B;
    split_dims(xs, pc, T, B);
    if (xs.ndim() < 2 || xs.dim(1) != channels) {
        throw std::invalid_argument(name + ": channel axis of " + xs.shape_str() +
                                    " does not match layer channels " + std::to_string(channels));
    }
    std::vector<size_t> state_shape = xs.shape();
    state_shape[0] = B;
    Tensor v(state_shape, real(p.v_rst));
    Tensor out(xs.shape());
    step_ctxs.clear();
    if (pc.retain) step_ctxs.resize(T);

    SpikeRasterLayer* rl = nullptr;
    const size_t rows = v.size() / B;
    if (pc.raster) {
        pc.raster->layers.emplace_back();
        rl = &pc.raster->layers.back();
        rl->name = name;
        rl->layer_index = index;
        rl->rows = rows;
        rl->T = T;
        rl->B = B;
        rl->codes.reserve(T * B * rows);
        if (model == NeuronModel::Lifb) rl->kappa = kappa.value;
    }

    std::vector<uint8_t> codes;
    for (size_t t = 0; t < T; ++t) {
        Tensor I = slice_step(xs, t, T, B);
        Tensor s, v_next;
        neuron_step(model, v, I, p, kappa.value, pc.relaxed, s, v_next,
                    pc.retain ? &step_ctxs[t] : nullptr, rl ? &codes : nullptr);
        if (rl) rl->codes.insert(rl->codes.end(), codes.begin(), codes.end());
        store_step(out, s, t, T, B);
        v = std::move(v_next);
    }
    if (pc.capture_emissions) pc.capture_emissions->push_back(out);
    last_T = T;
    last_B = B;
    return out;
}

Tensor NeuronLayer::backward(const Tensor& grad_out) {
    const size_t T = last_T, B = last_B;
    if (step_ctxs.size() != T || T == 0) {
        throw std::invalid_argument(name + ": backward without retained forward");
    }
    Tensor grad_in(grad_out.shape());
    std::vector<size_t> state_shape = grad_out.shape();
    state_shape[0] = B;
    Tensor grad_v_next(state_shape); // zero at the last step
    for (size_t t = T; t-- > 0;) {
        Tensor grad_s = slice_step(grad_out, t, T, B);
        Tensor grad_v(state_shape);
        Tensor grad_I(state_shape);
        neuron_step_backward(step_ctxs[t], grad_s, grad_v_next, grad_v, grad_I,
                             model == NeuronModel::Lifb ? &kappa.grad : nullptr);
        store_step(grad_in, grad_I, t, T, B);
        grad_v_next = std::move(grad_v);
    }
    drop_ctx();
    return grad_in;
}

// ---------- PairLayer ----------

PairLayer::PairLayer(size_t ch, const NeuronParams& np) : channels(ch), p(np) {
    p.validate();
    wb = GradPair("wb", Tensor({channels}));
    wb.burst_intensity = true;
}

Tensor PairLayer::forward(const Tensor& xs, const PassCtx& pc) {
    size_t T, B;
    split_dims(xs, pc, T, B);
    if (xs.ndim() < 2 || xs.dim(1) != channels) {
        throw std::invalid_argument(name + ": channel axis of " + xs.shape_str() +
                                    " does not match layer channels " + std::to_string(channels));
    }
    std::vector<size_t> state_shape = xs.shape();
    state_shape[0] = B;
    size_t S = 1;
    for (size_t d = 2; d < state_shape.size(); ++d) S *= state_shape[d];
    Tensor v(state_shape, real(p.v_rst));
    Tensor out(xs.shape());
    step_ctxs.clear();
    if (pc.retain) step_ctxs.resize(T);

    SpikeRasterLayer* rl = nullptr;
    const size_t rows = v.size() / B;
    if (pc.raster) {
        pc.raster->layers.emplace_back();
        rl = &pc.raster->layers.back();
        rl->name = name;
        rl->layer_index = index;
        rl->rows = 2 * rows; // v_th unit rows then v_h unit rows
        rl->T = T;
        rl->B = B;
        rl->codes.assign(T * B * 2 * rows, 0);
    }

    const real inv_tau = real(1.0 / p.tau);
    const real vth = real(p.v_th), vh = real(p.v_h), vrst = real(p.v_rst);
    const double a = p.surrogate_width;
    for (size_t t = 0; t < T; ++t) {
        Tensor I = slice_step(xs, t, T, B);
        Tensor s(state_shape), v_next(state_shape), u(state_shape);
        const real* vp = v.data();
        const real* Ip = I.data();
        real* up = u.data();
        real* sp = s.data();
        real* np_ = v_next.data();
        for (size_t n = 0; n < B; ++n) {
            for (size_t c = 0; c < channels; ++c) {
                const real w2 = wb.value.data()[c];
                const size_t base = (n * channels + c) * S;
                for (size_t i = base; i < base + S; ++i) {
                    const real uu = membrane_update(vp[i], Ip[i], inv_tau);
                    up[i] = uu;
                    if (pc.relaxed) {
                        sp[i] = real(surrogate_ramp(uu, p.v_th, a)) +
                                w2 * real(surrogate_ramp(uu, p.v_h, a));
                    } else {
                        // Two binary readouts of the shared membrane; the
                        // downstream value is their weighted sum.
                        const real A = uu > vth ? real(1) : real(0);
                        const real Bv = uu > vh ? real(1) : real(0);
                        sp[i] = A + w2 * Bv;
                        if (rl) {
                            const size_t row = (i - n * channels * S);
                            if (A != real(0)) rl->codes[(t * B + n) * 2 * rows + row] = 1;
                            if (Bv != real(0)) rl->codes[(t * B + n) * 2 * rows + rows + row] = 1;
                        }
                    }
                    np_[i] = (uu > vth) ? vrst : uu; // reset driven by the v_th unit
                }
            }
        }
        if (pc.retain) {
            step_ctxs[t].u = u;
            step_ctxs[t].p = p;
            step_ctxs[t].relaxed = pc.relaxed;
            step_ctxs[t].valid = true;
        }
        store_step(out, s, t, T, B);
        v = std::move(v_next);
    }
    if (pc.capture_emissions) pc.capture_emissions->push_back(out);
    last_T = T;
    last_B = B;
    return out;
}

Tensor PairLayer::backward(const Tensor& grad_out) {
    const size_t T = last_T, B = last_B;
    if (step_ctxs.size() != T || T == 0) {
        throw std::invalid_argument(name + ": backward without retained forward");
    }
    Tensor grad_in(grad_out.shape());
    std::vector<size_t> state_shape = grad_out.shape();
    state_shape[0] = B;
    size_t S = 1;
    for (size_t d = 2; d < state_shape.size(); ++d) S *= state_shape[d];
    Tensor grad_v_next(state_shape);
    const real inv_tau = real(1.0 / p.tau);
    const real carry = real(1) - inv_tau;
    const double a = p.surrogate_width;
    for (size_t t = T; t-- > 0;) {
        Tensor grad_s = slice_step(grad_out, t, T, B);
        Tensor grad_v(state_shape);
        Tensor grad_I(state_shape);
        const NeuronStepCtx& sc = step_ctxs[t];
        const real* up = sc.u.data();
        const real* gs = grad_s.data();
        const real* gn = grad_v_next.data();
        real* gv = grad_v.data();
        real* gI = grad_I.data();
        for (size_t n = 0; n < B; ++n) {
            for (size_t c = 0; c < channels; ++c) {
                const double w2 = wb.value.data()[c];
                double gw = 0;
                const size_t base = (n * channels + c) * S;
                for (size_t i = base; i < base + S; ++i) {
                    const double u = up[i];
                    const double dsdu =
                        surrogate_window(u, p.v_th, a) + w2 * surrogate_window(u, p.v_h, a);
                    const bool fired = u > p.v_th;
                    gw += double(gs[i]) * (sc.relaxed ? surrogate_ramp(u, p.v_h, a)
                                                      : (u > p.v_h ? 1.0 : 0.0));
                    const double du = double(gs[i]) * dsdu + (fired ? 0.0 : double(gn[i]));
                    gv[i] += real(du) * carry;
                    gI[i] += real(du) * inv_tau;
                }
                wb.grad.data()[c] += real(gw);
            }
        }
        store_step(grad_in, grad_I, t, T, B);
        grad_v_next = std::move(grad_v);
    }
    drop_ctx();
    return grad_in;
}

// ---------- Network ----------

Network::Network(const Network& o) : spec(o.spec) {
    layers.reserve(o.layers.size());
    for (const auto& l : o.layers) layers.push_back(l->clone());
}

Network& Network::operator=(const Network& o) {
    if (this == &o) return *this;
    spec = o.spec;
    layers.clear();
    layers.reserve(o.layers.size());
    for (const auto& l : o.layers) layers.push_back(l->clone());
    return *this;
}

Tensor stack_time(const Tensor& x, size_t T) {
    if (T < 1) throw std::invalid_argument("stack_time: T must be >= 1");
    std::vector<size_t> shape = x.shape();
    shape[0] *= T;
    Tensor out(shape);
    for (size_t t = 0; t < T; ++t) {
        std::memcpy(out.data() + t * x.size(), x.data(), x.size() * sizeof(real));
    }
    return out;
}

Tensor Network::forward(const Tensor& x, PassCtx& pc) {
    if (x.ndim() < 1 || x.dim(0) == 0) throw std::invalid_argument("Network::forward: empty batch");
    pc.B = x.dim(0);
    return forward_stacked(stack_time(x, pc.T), pc);
}

Tensor Network::forward_stacked(const Tensor& xs, PassCtx& pc) {
    if (pc.T < 1) throw std::invalid_argument("Network::forward_stacked: T must be >= 1");
    if (xs.dim(0) % pc.T != 0) {
        throw std::invalid_argument("Network::forward_stacked: row count not divisible by T");
    }
    pc.B = xs.dim(0) / pc.T;
    if (pc.raster) pc.raster->layers.clear();
    if (pc.capture_emissions) pc.capture_emissions->clear();
    Tensor h = xs;
    for (auto& l : layers) h = l->forward(h, pc);
    if (h.ndim() != 2) throw std::logic_error("Network::forward_stacked: final layer must emit [N,classes]");
    const size_t T = pc.T, B = pc.B, C = h.dim(1);
    Tensor logits({B, C});
    for (size_t t = 0; t < T; ++t) {
        const real* src = h.data() + t * B * C;
        for (size_t i = 0; i < B * C; ++i) logits.data()[i] += src[i];
    }
    const real inv_T = real(1) / real(T);
    for (size_t i = 0; i < B * C; ++i) logits.data()[i] *= inv_T;
    return logits;
}

void Network::backward(const Tensor& grad_logits, const PassCtx& pc) {
    const size_t T = pc.T, B = pc.B;
    if (grad_logits.ndim() != 2 || grad_logits.dim(0) != B) {
        throw std::invalid_argument("Network::backward: grad_logits must be [B,classes]");
    }
    const size_t C = grad_logits.dim(1);
    Tensor g({T * B, C});
    const real inv_T = real(1) / real(T);
    for (size_t t = 0; t < T; ++t) {
        for (size_t i = 0; i < B * C; ++i) {
            g.data()[t * B * C + i] = grad_logits.data()[i] * inv_T;
        }
    }
    for (size_t li = layers.size(); li-- > 0;) g = layers[li]->backward(g);
}

std::vector<GradPair*> Network::params() {
    std::vector<GradPair*> out;
    for (auto& l : layers) {
        for (GradPair* p : l->params()) out.push_back(p);
    }
    return out;
}

void Network::zero_grads() {
    for (GradPair* p : params()) p->zero_grad();
}

void Network::drop_ctx() {
    for (auto& l : layers) l->drop_ctx();
}

size_t Network::param_count() {
    size_t n = 0;
    for (GradPair* p : params()) n += p->value.size();
    return n;
}

// ---------- builders ----------

static void push(Network& net, std::unique_ptr<Layer> l, const std::string& base) {
    l->index = net.layers.size();
    l->name = base + std::to_string(l->index);
    net.layers.push_back(std::move(l));
}

Network build_network(const NetSpec& spec, Rng& rng) {
    spec.params.validate();
    if (spec.classes < 2) throw std::invalid_argument("build_network: need at least 2 classes");
    if (spec.input_shape.empty()) throw std::invalid_argument("build_network: empty input shape");
    if (spec.decoupled && spec.model != NeuronModel::Lifb) {
        throw std::invalid_argument("build_network: decoupled topology requires the lifb model");
    }

    Network net;
    net.spec = spec;
    auto add_neuron = [&](size_t ch) {
        if (spec.decoupled) {
            auto pl = std::make_unique<PairLayer>(ch, spec.params);
            pl->wb.value.fill(real(spec.kappa_init - 1.0));
            pl->wb.frozen = spec.kappa_frozen;
            push(net, std::move(pl), "pair");
        } else {
            auto nl = std::make_unique<NeuronLayer>(spec.model, ch, spec.params);
            if (spec.model == NeuronModel::Lifb) {
                nl->kappa.value.fill(real(spec.kappa_init));
                nl->kappa.frozen = spec.kappa_frozen;
            }
            push(net, std::move(nl), "neuron");
        }
    };

    if (spec.arch == "snn6-small") {
        if (spec.input_shape.size() != 3) {
            throw std::invalid_argument("snn6-small needs [C,H,W] input, got " +
                                        shape_to_string(spec.input_shape));
        }
        const size_t Cin = spec.input_shape[0], H = spec.input_shape[1], W = spec.input_shape[2];
        if (H < 16 || W < 16) {
            throw std::invalid_argument("snn6-small needs at least 16x16 input");
        }
        const size_t widths[5] = {8, 16, 32, 64, 64};
        size_t prev = Cin;
        size_t h = H, w = W;
        for (size_t bidx = 0; bidx < 5; ++bidx) {
            push(net, std::make_unique<Conv2dLayer>(prev, widths[bidx], 3, rng), "conv");
            push(net, std::make_unique<TnormLayer>(widths[bidx]), "tnorm");
            add_neuron(widths[bidx]);
            if (bidx >= 1) {
                push(net, std::make_unique<AvgPoolLayer>(), "avgpool");
                h /= 2;
                w /= 2;
            }
            prev = widths[bidx];
        }
        push(net, std::make_unique<LinearLayer>(prev * h * w, spec.classes, rng), "linear");
    } else if (spec.arch == "mlp") {
        size_t d = 1;
        for (size_t v : spec.input_shape) d *= v;
        push(net, std::make_unique<LinearLayer>(d, spec.hidden, rng), "linear");
        add_neuron(spec.hidden);
        push(net, std::make_unique<LinearLayer>(spec.hidden, spec.hidden, rng), "linear");
        add_neuron(spec.hidden);
        push(net, std::make_unique<LinearLayer>(spec.hidden, spec.classes, rng), "linear");
    } else {
        throw std::invalid_argument("build_network: unknown architecture '" + spec.arch +
                                    "' (expected snn6-small|mlp)");
    }
    return net;
}

} // namespace lifb
