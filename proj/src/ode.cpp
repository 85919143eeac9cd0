#include "lifb/ode.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lifb {

void BurstOdeParams::validate() const {
    if (!(tau > 0) || !(tau_plus > 0) || !(tau_minus > 0)) {
        throw std::invalid_argument("BurstOdeParams: time constants must be positive");
    }
    if (!(v_th > v_rst)) {
        throw std::invalid_argument("BurstOdeParams: need v_th > v_rst");
    }
    if (!(h0 >= 0.0 && h0 <= 1.0)) {
        throw std::invalid_argument("BurstOdeParams: h0 must lie in [0,1]");
    }
    if (g != 0.0 && !(v_h < v_th)) {
        throw std::invalid_argument(
            "BurstOdeParams: the T-current gate v_h must lie below v_th (reset at v_th keeps the "
            "membrane under it otherwise, silencing the burst term)");
    }
}

OdeTrace lifb_ode_simulate(const std::vector<double>& I_trace, const BurstOdeParams& p,
                           double dt, size_t steps) {
    p.validate();
    if (!(dt > 0)) throw std::invalid_argument("lifb_ode_simulate: dt must be positive");
    if (steps == 0) throw std::invalid_argument("lifb_ode_simulate: steps must be positive");
    if (I_trace.size() != steps) {
        throw std::invalid_argument("lifb_ode_simulate: current trace has " +
                                    std::to_string(I_trace.size()) + " entries for " +
                                    std::to_string(steps) + " steps");
    }

    OdeTrace tr;
    tr.v.resize(steps);
    tr.h.resize(steps);
    double v = p.v_rst;
    double h = p.h0;
    const double blowup = 1e3 * std::abs(p.v_th);
    for (size_t t = 0; t < steps; ++t) {
        // Both derivatives are evaluated at the pre-step state.
        const bool active = v > p.v_h;
        const bool below = v < p.v_h;
        const double t_current = p.g * (active ? 1.0 : 0.0) * h * (p.v_T - v);
        const double dv = (-v + I_trace[t] + t_current) / p.tau;
        v += dt * dv;
        if (active) {
            h += dt * (-h / p.tau_minus);
        } else if (below) {
            h += dt * (h / p.tau_plus);
        }
        if (h < 0.0) h = 0.0;
        if (h > 1.0) h = 1.0;
        if (std::abs(v) > blowup || !std::isfinite(v)) {
            throw std::runtime_error("lifb_ode_simulate: integration diverged at step " +
                                     std::to_string(t) + " (|v| > 1e3*v_th); reduce dt (aim for dt <= tau/10)");
        }
        if (v > p.v_th) {
            tr.spike_steps.push_back(t);
            v = p.v_rst;
        }
        tr.v[t] = v;
        tr.h[t] = h;
    }
    return tr;
}

std::vector<double> spike_intervals(const std::vector<size_t>& spike_steps, double dt) {
    std::vector<double> out;
    for (size_t i = 1; i < spike_steps.size(); ++i) {
        out.push_back(dt * double(spike_steps[i] - spike_steps[i - 1]));
    }
    return out;
}

IsiSummary isi_summary(const std::vector<double>& intervals, size_t k_initial, size_t k_tail) {
    IsiSummary s;
    s.count = intervals.size();
    if (intervals.size() < k_initial + k_tail || k_initial == 0 || k_tail == 0) {
        throw std::invalid_argument("isi_summary: need at least " +
                                    std::to_string(k_initial + k_tail) + " intervals, have " +
                                    std::to_string(intervals.size()));
    }
    double a = 0;
    for (size_t i = 0; i < k_initial; ++i) a += intervals[i];
    s.initial_mean = a / double(k_initial);
    double b = 0;
    for (size_t i = intervals.size() - k_tail; i < intervals.size(); ++i) b += intervals[i];
    const double m = b / double(k_tail);
    s.tail_mean = m;
    double var = 0;
    for (size_t i = intervals.size() - k_tail; i < intervals.size(); ++i) {
        var += (intervals[i] - m) * (intervals[i] - m);
    }
    var /= double(k_tail);
    s.tail_cov = (m != 0.0) ? std::sqrt(var) / m : 0.0;
    return s;
}

} // namespace lifb
