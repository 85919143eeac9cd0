#include "lifb/neuron.hpp"

#include <stdexcept>

namespace lifb {

NeuronModel neuron_model_from_string(const std::string& s) {
    if (s == "lif") return NeuronModel::Lif;
    if (s == "lifb") return NeuronModel::Lifb;
    if (s == "posneg") return NeuronModel::PosNeg;
    throw std::invalid_argument("unknown neuron model '" + s + "' (expected lif|lifb|posneg)");
}

std::string neuron_model_to_string(NeuronModel m) {
    switch (m) {
        case NeuronModel::Lif: return "lif";
        case NeuronModel::Lifb: return "lifb";
        case NeuronModel::PosNeg: return "posneg";
    }
    throw std::logic_error("neuron_model_to_string: bad enum");
}

void NeuronParams::validate() const {
    if (!(tau > 1.0)) {
        throw std::invalid_argument("NeuronParams: tau must exceed 1 (decay factor in (0,1)), got " +
                                    std::to_string(tau));
    }
    // v_h == v_th is permitted: the burst branch then fires on every spike,
    // the degenerate form a decoupled pair reduces to when its thresholds merge.
    if (!(v_h >= v_th && v_th > v_rst)) {
        throw std::invalid_argument("NeuronParams: need v_h >= v_th > v_rst, got v_h=" +
                                    std::to_string(v_h) + " v_th=" + std::to_string(v_th) +
                                    " v_rst=" + std::to_string(v_rst));
    }
    if (!(surrogate_width > 0.0)) {
        throw std::invalid_argument("NeuronParams: surrogate_width must be positive, got " +
                                    std::to_string(surrogate_width));
    }
}

Tensor surrogate_grad(const Tensor& u, double threshold, double a) {
    if (!(a > 0.0)) {
        throw std::invalid_argument("surrogate_grad: half-width must be positive, got " +
                                    std::to_string(a));
    }
    Tensor out(u.shape());
    for (size_t i = 0; i < u.size(); ++i) {
        out.data()[i] = real(surrogate_window(u.data()[i], threshold, a));
    }
    return out;
}

// View any rank as [N, C, S] with the channel axis at dim 1 (rank-1 tensors
// become one batch row of C channels).
static void channel_dims(const Tensor& t, size_t& N, size_t& C, size_t& S) {
    if (t.ndim() == 0 || t.size() == 0) {
        throw std::invalid_argument("neuron step: empty tensor");
    }
    if (t.ndim() == 1) {
        N = 1;
        C = t.dim(0);
        S = 1;
    } else {
        N = t.dim(0);
        C = t.dim(1);
        S = t.size() / (N * C);
    }
}

void lif_step(const Tensor& v, const Tensor& I, const NeuronParams& p, Tensor& s, Tensor& v_next) {
    neuron_step(NeuronModel::Lif, v, I, p, Tensor(), false, s, v_next, nullptr, nullptr);
}

void lifb_step(const Tensor& v, const Tensor& I, const NeuronParams& p, const Tensor& kappa,
               Tensor& s, Tensor& v_next) {
    neuron_step(NeuronModel::Lifb, v, I, p, kappa, false, s, v_next, nullptr, nullptr);
}

void posneg_step(const Tensor& v, const Tensor& I, const NeuronParams& p, Tensor& s, Tensor& v_next) {
    neuron_step(NeuronModel::PosNeg, v, I, p, Tensor(), false, s, v_next, nullptr, nullptr);
}

void neuron_step(NeuronModel model, const Tensor& v, const Tensor& I, const NeuronParams& p,
                 const Tensor& kappa, bool relaxed, Tensor& s, Tensor& v_next,
                 NeuronStepCtx* ctx, std::vector<uint8_t>* codes) {
    p.validate();
    require_same_shape(v, I, "neuron_step");
    size_t N, C, S;
    channel_dims(v, N, C, S);
    if (model == NeuronModel::Lifb && kappa.size() != C) {
        throw std::invalid_argument("neuron_step: kappa length " + std::to_string(kappa.size()) +
                                    " does not match channel count " + std::to_string(C));
    }

    s = Tensor(v.shape());
    v_next = Tensor(v.shape());
    Tensor u(v.shape());
    const real inv_tau = real(1.0 / p.tau);
    const real vth = real(p.v_th), vh = real(p.v_h), vrst = real(p.v_rst);
    const double a = p.surrogate_width;
    const real* vp = v.data();
    const real* Ip = I.data();
    real* up = u.data();
    real* sp = s.data();
    real* np = v_next.data();
    if (codes) codes->assign(v.size(), 0);

    for (size_t n = 0; n < N; ++n) {
        for (size_t c = 0; c < C; ++c) {
            const size_t base = (n * C + c) * S;
            const real kap = (model == NeuronModel::Lifb) ? kappa.data()[c] : real(0);
            for (size_t i = base; i < base + S; ++i) {
                const real uu = membrane_update(vp[i], Ip[i], inv_tau);
                up[i] = uu;
                uint8_t code = 0;
                bool fired;
                real emit;
                switch (model) {
                    case NeuronModel::Lif:
                        fired = uu > vth;
                        emit = fired ? real(1) : real(0);
                        code = fired ? 1 : 0;
                        break;
                    case NeuronModel::Lifb:
                        // Three-way select: the emitted value is exactly one of
                        // {0, 1, kappa[c]}, never an arithmetic combination.
                        fired = uu > vth;
                        emit = (uu > vh) ? kap : (fired ? real(1) : real(0));
                        code = (uu > vh) ? 2 : (fired ? 1 : 0);
                        break;
                    case NeuronModel::PosNeg: {
                        const bool pos = uu > vth;
                        const bool neg = -uu > vth;
                        fired = pos || neg;
                        emit = pos ? real(1) : (neg ? real(-1) : real(0));
                        code = pos ? 1 : (neg ? 3 : 0);
                        break;
                    }
                    default:
                        throw std::logic_error("neuron_step: bad model");
                }
                if (relaxed) {
                    // Heavisides replaced by their clipped-linear primitive;
                    // the hard reset mask is kept (validated by margin-screened
                    // finite-difference tests only).
                    switch (model) {
                        case NeuronModel::Lif:
                            emit = real(surrogate_ramp(uu, p.v_th, a));
                            break;
                        case NeuronModel::Lifb:
                            emit = real(surrogate_ramp(uu, p.v_th, a) +
                                        (double(kap) - 1.0) * surrogate_ramp(uu, p.v_h, a));
                            break;
                        case NeuronModel::PosNeg:
                            emit = real(surrogate_ramp(uu, p.v_th, a) -
                                        surrogate_ramp(-double(uu), p.v_th, a));
                            break;
                    }
                }
                sp[i] = emit;
                np[i] = fired ? vrst : uu;
                if (codes) (*codes)[i] = code;
            }
        }
    }
    if (ctx) {
        ctx->u = std::move(u);
        ctx->kappa = kappa;
        ctx->p = p;
        ctx->model = model;
        ctx->relaxed = relaxed;
        ctx->valid = true;
    }
}

void neuron_step_backward(const NeuronStepCtx& ctx, const Tensor& grad_s, const Tensor& grad_v_next,
                          Tensor& grad_v, Tensor& grad_I, Tensor* grad_kappa) {
    if (!ctx.valid) throw std::invalid_argument("neuron_step_backward: missing forward context");
    require_same_shape(grad_s, ctx.u, "neuron_step_backward(grad_s)");
    require_same_shape(grad_v_next, ctx.u, "neuron_step_backward(grad_v_next)");
    if (grad_v.size() != ctx.u.size() || grad_I.size() != ctx.u.size()) {
        throw std::invalid_argument("neuron_step_backward: gradient buffer shape mismatch");
    }
    size_t N, C, S;
    channel_dims(ctx.u, N, C, S);
    if (ctx.model == NeuronModel::Lifb && grad_kappa && grad_kappa->size() != C) {
        throw std::invalid_argument("neuron_step_backward: grad_kappa length mismatch");
    }
    const NeuronParams& p = ctx.p;
    const real inv_tau = real(1.0 / p.tau);
    const real carry = real(1) - inv_tau;
    const double a = p.surrogate_width;
    const real* up = ctx.u.data();
    const real* gs = grad_s.data();
    const real* gn = grad_v_next.data();
    real* gv = grad_v.data();
    real* gI = grad_I.data();

    for (size_t n = 0; n < N; ++n) {
        for (size_t c = 0; c < C; ++c) {
            const size_t base = (n * C + c) * S;
            const double kap = (ctx.model == NeuronModel::Lifb) ? double(ctx.kappa.data()[c]) : 0.0;
            double gk = 0;
            for (size_t i = base; i < base + S; ++i) {
                const double u = up[i];
                double dsdu;
                bool fired;
                switch (ctx.model) {
                    case NeuronModel::Lif:
                        dsdu = surrogate_window(u, p.v_th, a);
                        fired = u > p.v_th;
                        break;
                    case NeuronModel::Lifb:
                        dsdu = surrogate_window(u, p.v_th, a) +
                               (kap - 1.0) * surrogate_window(u, p.v_h, a);
                        fired = u > p.v_th;
                        gk += double(gs[i]) * (ctx.relaxed ? surrogate_ramp(u, p.v_h, a)
                                                           : (u > p.v_h ? 1.0 : 0.0));
                        break;
                    case NeuronModel::PosNeg:
                        dsdu = surrogate_window(u, p.v_th, a) + surrogate_window(u, -p.v_th, a);
                        fired = (u > p.v_th) || (-u > p.v_th);
                        break;
                    default:
                        throw std::logic_error("neuron_step_backward: bad model");
                }
                // Reset path is detached: the future-state gradient survives
                // only through lanes that did not reset.
                const double du = double(gs[i]) * dsdu + (fired ? 0.0 : double(gn[i]));
                gv[i] += real(du) * carry;
                gI[i] += real(du) * inv_tau;
            }
            if (ctx.model == NeuronModel::Lifb && grad_kappa) {
                grad_kappa->data()[c] += real(gk);
            }
        }
    }
}

} // namespace lifb
