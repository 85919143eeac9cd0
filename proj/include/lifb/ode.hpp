#pragma once

#include <cstddef>
#include <vector>

namespace lifb {

/// Parameters of the original burst neuron ODE
///   tau dv/dt = -v + I + g H(v - v_h) h (v_T - v)
///   dh/dt = -h/tau_minus if v > v_h, +h/tau_plus if v < v_h, h clamped [0,1]
/// with spike + hard reset to v_rst on v > v_th.
///
/// v_h here is the T-current activation gate. Unlike the discrete model's
/// burst threshold, it must sit BELOW v_th: the membrane is reset at v_th, so
/// a gate above it would never be reached and the T-current would stay off.
/// Burst behavior = extra inward current g h (v_T - v) while v is between the
/// gate and threshold, decaying as h deactivates.
struct BurstOdeParams {
    double tau = 2.0;
    double v_th = 0.5;
    double v_rst = 0.0;
    double v_h = 0.25;       // T-current gate, default v_th/2
    double g = 2.0;          // T-current conductance; 0 disables bursting
    double v_T = 0.75;       // T-current reversal-side target, 1.5*v_th
    double tau_plus = 20.0;  // h recovery time constant (v below gate)
    double tau_minus = 5.0;  // h decay time constant (v above gate)
    double h0 = 1.0;

    void validate() const;
};

struct OdeTrace {
    std::vector<double> v;           // membrane after each step (post-reset)
    std::vector<double> h;           // deactivation variable after each step
    std::vector<size_t> spike_steps; // step indices where v crossed v_th
};

/// Forward-Euler integration. I_trace supplies the input current per step and
/// must have exactly `steps` entries. dt should satisfy dt <= tau/10 for a
/// faithful trace; dt <= 0 or steps == 0 is an error. Divergence
/// (|v| > 1e3 * v_th) aborts with advice to reduce dt.
OdeTrace lifb_ode_simulate(const std::vector<double>& I_trace, const BurstOdeParams& p,
                           double dt, size_t steps);

/// Inter-spike intervals in time units (dt * step differences).
std::vector<double> spike_intervals(const std::vector<size_t>& spike_steps, double dt);

/// Mean of the first k intervals vs mean of the last k intervals, plus the
/// coefficient of variation of the tail. Used for burst-signature reporting.
struct IsiSummary {
    double initial_mean = 0; // first k_initial ISIs
    double tail_mean = 0;    // last k_tail ISIs
    double tail_cov = 0;     // std/mean over the last k_tail ISIs
    size_t count = 0;        // total ISI count
};
IsiSummary isi_summary(const std::vector<double>& intervals, size_t k_initial, size_t k_tail);

} // namespace lifb
