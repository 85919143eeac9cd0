#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lifb/neuron.hpp"
#include "lifb/ops.hpp"
#include "lifb/rng.hpp"

namespace lifb {

/// Emission record of one neuron (or decoupled pair) layer over a pass.
/// codes are [T][B][rows] flattened, row-major:
///   0 = rest, 1 = regular spike, 2 = burst spike, 3 = negative spike.
/// Codes follow the membrane region, so a burst at kappa = 1 is still coded 2.
/// A decoupled pair layer reports two binary rows per original neuron (the
/// v_th unit first, then the v_h unit).
struct SpikeRasterLayer {
    std::string name;
    size_t layer_index = 0;
    size_t rows = 0; // per-sample neuron rows
    size_t T = 0;
    size_t B = 0;
    std::vector<uint8_t> codes;
    Tensor kappa; // per-channel burst intensity; empty for kappa-free layers

    uint8_t code(size_t t, size_t b, size_t row) const {
        return codes[(t * B + b) * rows + row];
    }
};

struct SpikeRaster {
    std::vector<SpikeRasterLayer> layers;
};

/// Per-pass options. Layers see the time-stacked tensor [T*B, ...] with
/// timestep-major rows (row t*B + b), so stateless layers process all steps
/// jointly (normalization statistics become joint over batch and time) while
/// neuron layers slice it back into T steps and carry membrane state.
struct PassCtx {
    size_t T = 1;
    size_t B = 0;
    bool training = false;   // batch statistics + running-stat updates
    bool retain = false;     // keep forward contexts for backward()
    bool relaxed = false;    // clipped-linear emissions (gradient validation)
    SpikeRaster* raster = nullptr;
    std::vector<Tensor>* capture_emissions = nullptr; // stacked s of each neuron layer
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    virtual Tensor forward(const Tensor& x, const PassCtx& pc) = 0;
    /// Consumes the retained forward context; accumulates parameter grads and
    /// returns grad wrt the layer input.
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<GradPair*> params() { return {}; }
    virtual std::unique_ptr<Layer> clone() const = 0;
    virtual void drop_ctx() {}

    std::string name;
    size_t index = 0;
};

class LinearLayer : public Layer {
public:
    LinearLayer(size_t in_features, size_t out_features, Rng& rng);
    std::string kind() const override { return "linear"; }
    Tensor forward(const Tensor& x, const PassCtx& pc) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<GradPair*> params() override { return {&w, &b}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<LinearLayer>(*this); }
    void drop_ctx() override { ctx = LinearCtx(); in_shape.clear(); }

    GradPair w, b;
    LinearCtx ctx;
    std::vector<size_t> in_shape;
};

class Conv2dLayer : public Layer {
public:
    Conv2dLayer(size_t in_ch, size_t out_ch, size_t k, Rng& rng);
    std::string kind() const override { return "conv"; }
    Tensor forward(const Tensor& x, const PassCtx& pc) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<GradPair*> params() override { return {&w, &b}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2dLayer>(*this); }
    void drop_ctx() override { ctx = Conv2dCtx(); }

    GradPair w, b;
    Conv2dCtx ctx;
};

class AvgPoolLayer : public Layer {
public:
    std::string kind() const override { return "avgpool"; }
    Tensor forward(const Tensor& x, const PassCtx& pc) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<AvgPoolLayer>(*this); }
    void drop_ctx() override { ctx = AvgPool2dCtx(); }

    AvgPool2dCtx ctx;
};

class TnormLayer : public Layer {
public:
    explicit TnormLayer(size_t channels);
    std::string kind() const override { return "tnorm"; }
    Tensor forward(const Tensor& x, const PassCtx& pc) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<GradPair*> params() override { return {&gamma, &beta}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<TnormLayer>(*this); }
    void drop_ctx() override { ctx = TnormCtx(); }

    GradPair gamma, beta;
    Tensor running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;
    TnormCtx ctx;
};

class NeuronLayer : public Layer {
public:
    NeuronLayer(NeuronModel model, size_t channels, const NeuronParams& p);
    std::string kind() const override { return "neuron"; }
    Tensor forward(const Tensor& x, const PassCtx& pc) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<GradPair*> params() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<NeuronLayer>(*this); }
    void drop_ctx() override { step_ctxs.clear(); }

    NeuronModel model;
    size_t channels;
    NeuronParams p;
    GradPair kappa; // lifb only (empty tensor otherwise)
    std::vector<NeuronStepCtx> step_ctxs;
    size_t last_T = 0, last_B = 0;
};

/// Decoupled realization of one LIFB layer: a shared membrane feeding two
/// binary threshold readouts (v_th with output weight 1, v_h with output
/// weight wb = kappa - 1), reset driven by the v_th crossing. Emits the
/// combined downstream value A + wb * B.
class PairLayer : public Layer {
public:
    PairLayer(size_t channels, const NeuronParams& p);
    std::string kind() const override { return "pair"; }
    Tensor forward(const Tensor& x, const PassCtx& pc) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<GradPair*> params() override { return {&wb}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<PairLayer>(*this); }
    void drop_ctx() override { step_ctxs.clear(); }

    size_t channels;
    NeuronParams p;
    GradPair wb; // per-channel output weight of the v_h unit
    std::vector<NeuronStepCtx> step_ctxs;
    size_t last_T = 0, last_B = 0;
};

/// Architecture identity carried by checkpoints so the topology can be rebuilt
/// before tensors are restored.
struct NetSpec {
    std::string arch = "mlp";                // snn6-small | mlp
    std::vector<size_t> input_shape;         // per-sample, e.g. {1,16,16}
    size_t classes = 2;
    size_t hidden = 32;                      // mlp only
    NeuronModel model = NeuronModel::Lifb;
    NeuronParams params;
    bool decoupled = false;                  // lifb layers realized as pairs
    bool kappa_frozen = false;               // burst intensity excluded from training
    double kappa_init = 1.0;
};

class Network {
public:
    NetSpec spec;
    std::vector<std::unique_ptr<Layer>> layers;

    Network() = default;
    Network(const Network& o);
    Network& operator=(const Network& o);
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    /// Direct coding: x [B, input_shape] is injected as current at every one
    /// of pc.T steps; logits are the temporal mean of the final layer output.
    Tensor forward(const Tensor& x, PassCtx& pc);

    /// Same pass over a pre-stacked [T*B, ...] tensor whose timestep slices
    /// may differ (used by time-permutation tests).
    Tensor forward_stacked(const Tensor& xs, PassCtx& pc);

    /// Reverse pass from dL/dlogits [B, classes]; parameter grads accumulate.
    void backward(const Tensor& grad_logits, const PassCtx& pc);

    std::vector<GradPair*> params();
    void zero_grads();
    void drop_ctx();
    size_t param_count();
};

/// Replicates x T times along the leading axis (timestep-major).
Tensor stack_time(const Tensor& x, size_t T);

Network build_network(const NetSpec& spec, Rng& rng);

} // namespace lifb
