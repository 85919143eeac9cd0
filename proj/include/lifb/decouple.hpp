#pragma once

#include <string>
#include <vector>

#include "lifb/network.hpp"

namespace lifb {

/// Result of running a network and its decoupled image side by side.
struct EquivalenceReport {
    double max_logits_dev = 0.0;
    std::vector<std::string> layer_names; // spiking layers, network order
    std::vector<double> layer_devs;       // max |emission_a - emission_b| per layer
    bool exact = false;                   // every deviation is exactly 0.0
};

/// Returns a copy of `net` with every lifb neuron layer replaced by a pair
/// layer (shared membrane, two binary readouts, v_h output weight kappa-1).
/// Weights and thresholds are copied, not retrained. If `net` has no lifb
/// layers the copy is returned unchanged and `warning` explains the no-op.
/// `warning` (optional) also reports any channel whose kappa cannot be
/// recovered as 1 + (kappa - 1) in 64-bit, which breaks bit-exactness.
Network decouple_network(const Network& net, std::string* warning = nullptr);

/// Runs both networks on every input at every T (eval mode) and reports the
/// max absolute logits deviation plus per-spiking-layer emission deviations.
/// The networks must agree layer-for-layer up to neuron<->pair substitution.
EquivalenceReport verify_equivalence(Network& net, Network& decoupled,
                                     const std::vector<Tensor>& inputs,
                                     const std::vector<size_t>& Ts);

/// Builds the decoupled topology with fresh random initialization; the v_h
/// output weights start at kappa_init - 1 and train like burst intensities.
Network decouple_scratch_baseline(const NetSpec& spec, Rng& rng);

} // namespace lifb
