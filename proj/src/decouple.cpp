#include "lifb/decouple.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "lifb/io_util.hpp"

namespace lifb {

Network decouple_network(const Network& net, std::string* warning) {
    Network out;
    out.spec = net.spec;
    std::ostringstream warn;
    size_t replaced = 0;
    for (const auto& l : net.layers) {
        const auto* nl = dynamic_cast<const NeuronLayer*>(l.get());
        if (nl && nl->model == NeuronModel::Lifb) {
            auto pl = std::make_unique<PairLayer>(nl->channels, nl->p);
            pl->index = nl->index;
            pl->name = "pair" + std::to_string(nl->index);
            pl->wb.frozen = nl->kappa.frozen;
            for (size_t c = 0; c < nl->channels; ++c) {
                const real k = nl->kappa.value.data()[c];
                const real w2 = k - real(1);
                pl->wb.value.data()[c] = w2;
                if (real(1) + w2 != k) {
                    warn << "channel " << c << " of " << nl->name << ": kappa=" << format_real(k)
                         << " is not recovered by 1 + (kappa-1); emissions will deviate\n";
                }
            }
            out.layers.push_back(std::move(pl));
            ++replaced;
        } else {
            out.layers.push_back(l->clone());
        }
    }
    if (replaced == 0) {
        warn << "network has no lifb layers; decoupling is a no-op\n";
    } else {
        out.spec.decoupled = true;
    }
    if (warning) *warning = warn.str();
    return out;
}

static std::vector<Layer*> spiking_layers(Network& net) {
    std::vector<Layer*> out;
    for (auto& l : net.layers) {
        if (l->kind() == "neuron" || l->kind() == "pair") out.push_back(l.get());
    }
    return out;
}

EquivalenceReport verify_equivalence(Network& net, Network& decoupled,
                                     const std::vector<Tensor>& inputs,
                                     const std::vector<size_t>& Ts) {
    if (net.layers.size() != decoupled.layers.size()) {
        throw std::invalid_argument("verify_equivalence: layer counts differ (" +
                                    std::to_string(net.layers.size()) + " vs " +
                                    std::to_string(decoupled.layers.size()) + ")");
    }
    for (size_t i = 0; i < net.layers.size(); ++i) {
        const std::string ka = net.layers[i]->kind();
        const std::string kb = decoupled.layers[i]->kind();
        const bool same = ka == kb;
        const bool swapped = (ka == "neuron" && kb == "pair") || (ka == "pair" && kb == "neuron");
        if (!same && !swapped) {
            throw std::invalid_argument("verify_equivalence: layer " + std::to_string(i) +
                                        " kind mismatch (" + ka + " vs " + kb + ")");
        }
    }
    if (inputs.empty() || Ts.empty()) {
        throw std::invalid_argument("verify_equivalence: need at least one input and one T");
    }

    EquivalenceReport rep;
    for (Layer* l : spiking_layers(net)) rep.layer_names.push_back(l->name);
    rep.layer_devs.assign(rep.layer_names.size(), 0.0);

    for (const Tensor& x : inputs) {
        for (size_t T : Ts) {
            std::vector<Tensor> ema, emb;
            PassCtx pa;
            pa.T = T;
            pa.capture_emissions = &ema;
            PassCtx pb;
            pb.T = T;
            pb.capture_emissions = &emb;
            Tensor la = net.forward(x, pa);
            Tensor lb = decoupled.forward(x, pb);
            require_same_shape(la, lb, "verify_equivalence logits");
            for (size_t i = 0; i < la.size(); ++i) {
                const double d = std::abs(double(la.data()[i]) - double(lb.data()[i]));
                if (d > rep.max_logits_dev) rep.max_logits_dev = d;
            }
            if (ema.size() != rep.layer_names.size() || emb.size() != rep.layer_names.size()) {
                throw std::logic_error("verify_equivalence: emission capture count mismatch");
            }
            for (size_t li = 0; li < ema.size(); ++li) {
                require_same_shape(ema[li], emb[li], "verify_equivalence emissions");
                for (size_t i = 0; i < ema[li].size(); ++i) {
                    const double d =
                        std::abs(double(ema[li].data()[i]) - double(emb[li].data()[i]));
                    if (d > rep.layer_devs[li]) rep.layer_devs[li] = d;
                }
            }
        }
    }
    rep.exact = rep.max_logits_dev == 0.0;
    for (double d : rep.layer_devs) {
        if (d != 0.0) rep.exact = false;
    }
    return rep;
}

Network decouple_scratch_baseline(const NetSpec& spec, Rng& rng) {
    if (spec.model != NeuronModel::Lifb) {
        throw std::invalid_argument("decouple_scratch_baseline: spec must use the lifb model");
    }
    NetSpec s = spec;
    s.decoupled = true;
    return build_network(s, rng);
}

} // namespace lifb
