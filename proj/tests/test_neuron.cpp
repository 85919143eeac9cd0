#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "lifb/neuron.hpp"
#include "lifb/rng.hpp"

using namespace lifb;

namespace {

NeuronParams defaults() { return NeuronParams{}; }

} // namespace

TEST_CASE("parameter validation bounds") {
    NeuronParams p = defaults();
    CHECK_NOTHROW(p.validate());
    p.v_h = p.v_th; // merged thresholds: the degenerate pair form
    CHECK_NOTHROW(p.validate());
    p.v_h = p.v_th - 0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = defaults();
    p.tau = 1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = defaults();
    p.v_rst = p.v_th;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = defaults();
    p.surrogate_width = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("membrane update and strict threshold at the boundary") {
    NeuronParams p = defaults(); // tau = 2 -> u = v + 0.5 (I - v)
    CHECK(membrane_update(0.0, 1.0, 0.5) == real(0.5));

    // u lands exactly on v_th = 0.5: strict comparison, no spike.
    Tensor v({1}, {0.0});
    Tensor I({1}, {1.0});
    Tensor s, vn;
    lif_step(v, I, p, s, vn);
    CHECK(s.at(0) == real(0));
    CHECK(vn.at(0) == real(0.5)); // no reset either

    // One ulp above fires and resets.
    I.at(0) = real(std::nextafter(1.0, 2.0) + 1e-12);
    lif_step(v, I, p, s, vn);
    CHECK(s.at(0) == real(1));
    CHECK(vn.at(0) == p.v_rst);
}

TEST_CASE("lif and lifb at kappa=1 are bitwise identical") {
    NeuronParams p = defaults();
    Rng r(5);
    Tensor v({4, 3}), I({4, 3});
    r.fill_normal(v, 0.2, 0.4);
    r.fill_normal(I, 0.5, 1.0);
    Tensor kappa({3}, real(1));

    Tensor s1, vn1, s2, vn2;
    lif_step(v, I, p, s1, vn1);
    lifb_step(v, I, p, kappa, s2, vn2);
    for (size_t i = 0; i < s1.size(); ++i) {
        CHECK(s1.at(i) == s2.at(i));
        CHECK(vn1.at(i) == vn2.at(i));
    }
}

TEST_CASE("lifb emission is exactly one of {0, 1, kappa}") {
    NeuronParams p = defaults(); // v_th 0.5, v_h 1.0
    const double k = 1.7000000000000002; // not representable as a sum of simple parts
    Tensor kappa({1}, {k});
    // v = 0, tau = 2 -> u = I/2. Pick I for rest / regular / burst regions.
    Tensor v({3, 1}, {0, 0, 0});
    Tensor I({3, 1}, {0.8, 1.4, 2.6}); // u = 0.4, 0.7, 1.3
    Tensor s, vn;
    lifb_step(v, I, p, kappa, s, vn);
    CHECK(s.at(0) == real(0));
    CHECK(s.at(1) == real(1));
    CHECK(s.at(2) == real(k)); // exact copy, not 1 + (k-1)
    CHECK(vn.at(0) == real(0.4)); // u below threshold: no reset
    CHECK(vn.at(1) == p.v_rst);
    CHECK(vn.at(2) == p.v_rst); // burst also crosses v_th: reset

    // Per-channel kappa indexes axis 1.
    Tensor kap2({2}, {2.0, 3.0});
    Tensor v2({1, 2}, {0, 0});
    Tensor I2({1, 2}, {2.6, 2.6});
    lifb_step(v2, I2, p, kap2, s, vn);
    CHECK(s.at(0) == real(2));
    CHECK(s.at(1) == real(3));
}

TEST_CASE("posneg emits a signed binary code and resets on both signs") {
    NeuronParams p = defaults();
    Tensor v({3}, {0, 0, 0});
    Tensor I({3}, {1.4, -1.4, 0.2}); // u = 0.7, -0.7, 0.1
    Tensor s, vn;
    posneg_step(v, I, p, s, vn);
    CHECK(s.at(0) == real(1));
    CHECK(s.at(1) == real(-1));
    CHECK(s.at(2) == real(0));
    CHECK(vn.at(0) == p.v_rst);
    CHECK(vn.at(1) == p.v_rst);
    CHECK(vn.at(2) == real(0.1));
}

TEST_CASE("raster codes track membrane regions") {
    NeuronParams p = defaults();
    Tensor kappa({1}, real(1)); // kappa = 1: burst value equals 1 but code stays 2
    Tensor v({4, 1}, {0, 0, 0, 0});
    Tensor I({4, 1}, {0.2, 1.4, 2.6, 0.2}); // u = 0.1, 0.7, 1.3, 0.1
    Tensor s, vn;
    std::vector<uint8_t> codes;
    neuron_step(NeuronModel::Lifb, v, I, p, kappa, false, s, vn, nullptr, &codes);
    REQUIRE(codes.size() == 4);
    CHECK(codes[0] == 0);
    CHECK(codes[1] == 1);
    CHECK(codes[2] == 2);
    CHECK(s.at(2) == real(1)); // emitted value collapses at kappa = 1

    Tensor empty;
    Tensor In({2, 1}, {-1.4, 1.4});
    Tensor vz({2, 1});
    neuron_step(NeuronModel::PosNeg, vz, In, p, empty, false, s, vn, nullptr, &codes);
    CHECK(codes[0] == 3);
    CHECK(codes[1] == 1);
}

TEST_CASE("surrogate window integrates to one and matches the ramp slope") {
    const double a = 0.5;
    double integral = 0;
    const double h = 1e-4;
    for (double x = -2.0; x < 2.0; x += h) integral += surrogate_window(x + h / 2, 0.0, a) * h;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));

    // Ramp is the antiderivative: derivative of ramp == window off the kinks.
    for (double u : {-0.9, -0.2, 0.0, 0.3, 0.9}) {
        const double fd = (surrogate_ramp(u + 1e-6, 0.0, a) - surrogate_ramp(u - 1e-6, 0.0, a)) /
                          2e-6;
        CHECK(fd == doctest::Approx(surrogate_window(u, 0.0, a)).epsilon(1e-6));
    }
    CHECK(surrogate_window(0.5, 0.0, 0.5) == 0.0); // strict: boundary is outside
    CHECK(surrogate_grad(Tensor({1}, {0.4}), 0.0, 0.5).at(0) == real(1.0));
    CHECK_THROWS_AS(surrogate_grad(Tensor({1}), 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("hard-mode kappa gradient is the burst indicator") {
    NeuronParams p = defaults();
    Tensor kappa({2}, {1.3, 0.8});
    Tensor v({2, 2}, {0, 0, 0, 0});
    Tensor I({2, 2}, {2.6, 1.4, 2.8, 0.2}); // u: burst, regular, burst, rest
    Tensor s, vn;
    NeuronStepCtx ctx;
    neuron_step(NeuronModel::Lifb, v, I, p, kappa, false, s, vn, &ctx, nullptr);

    Tensor gs({2, 2}, {1, 1, 1, 1});
    Tensor gvn({2, 2});
    Tensor gv = Tensor::zeros_like(v), gI = Tensor::zeros_like(I);
    Tensor gk({2});
    neuron_step_backward(ctx, gs, gvn, gv, gI, &gk);
    CHECK(gk.at(0) == real(2)); // two burst events land in channel 0
    CHECK(gk.at(1) == real(0)); // none in channel 1

    // Finite differences on kappa agree exactly: emissions are linear in
    // kappa while u stays in the burst region.
    const double h = 1e-6;
    for (size_t c = 0; c < 2; ++c) {
        Tensor kp = kappa, km = kappa;
        kp.at(c) = real(double(kappa.at(c)) + h);
        km.at(c) = real(double(kappa.at(c)) - h);
        Tensor sp, sm, tmp;
        lifb_step(v, I, p, kp, sp, tmp);
        lifb_step(v, I, p, km, sm, tmp);
        double fd = 0;
        for (size_t i = 0; i < sp.size(); ++i) fd += (double(sp.at(i)) - double(sm.at(i))) / (2 * h);
        CHECK(fd == doctest::Approx(double(gk.at(c))).epsilon(1e-6));
    }
}

TEST_CASE("relaxed-mode step gradients agree with finite differences") {
    NeuronParams p = defaults();
    Rng r(9);
    const size_t B = 8, C = 4;
    Tensor v({B, C}), I({B, C}), kappa({C});
    r.fill_normal(v, 0.1, 0.3);
    r.fill_normal(I, 0.6, 1.2);
    r.fill_uniform(kappa, 0.8, 2.0);

    Tensor coef({B, C});
    r.fill_uniform(coef, 0.25, 1.0);

    auto loss = [&]() {
        Tensor s, vn;
        neuron_step(NeuronModel::Lifb, v, I, p, kappa, true, s, vn, nullptr, nullptr);
        double l = 0;
        for (size_t i = 0; i < s.size(); ++i) l += double(coef.at(i)) * double(s.at(i));
        return l;
    };

    NeuronStepCtx ctx;
    Tensor s, vn;
    neuron_step(NeuronModel::Lifb, v, I, p, kappa, true, s, vn, &ctx, nullptr);
    Tensor gvn = Tensor::zeros_like(v);
    Tensor gv = Tensor::zeros_like(v), gI = Tensor::zeros_like(I), gk({C});
    neuron_step_backward(ctx, coef, gvn, gv, gI, &gk);

    const double h = 1e-6;
    const double a = p.surrogate_width;
    size_t checked = 0;
    for (size_t i = 0; i < I.size(); ++i) {
        const double u = double(ctx.u.at(i));
        // Screen ramp kinks: FD straddling a kink measures a one-sided slope.
        bool near = false;
        for (double kink : {p.v_th - a, p.v_th + a, p.v_h - a, p.v_h + a, p.v_th}) {
            if (std::fabs(u - kink) < 4 * h) near = true;
        }
        if (near) continue;
        const real orig = I.at(i);
        I.at(i) = real(double(orig) + h);
        const double lp = loss();
        I.at(i) = real(double(orig) - h);
        const double lm = loss();
        I.at(i) = orig;
        CHECK((lp - lm) / (2 * h) == doctest::Approx(double(gI.at(i))).epsilon(1e-4));
        ++checked;
    }
    CHECK(checked > B * C / 2);
}

TEST_CASE("reset pathway is gradient-detached") {
    NeuronParams p = defaults();
    Tensor v({1}, {0.0});
    Tensor I({1}, {1.6}); // u = 0.8: fires, resets
    Tensor s, vn;
    NeuronStepCtx ctx;
    Tensor empty;
    neuron_step(NeuronModel::Lif, v, I, p, empty, false, s, vn, &ctx, nullptr);
    REQUIRE(vn.at(0) == p.v_rst);

    Tensor gs({1}), gvn({1}, {5.0}); // downstream state grad must not leak through reset
    Tensor gv({1}), gI({1});
    neuron_step_backward(ctx, gs, gvn, gv, gI, nullptr);
    CHECK(gv.at(0) == real(0));
    CHECK(gI.at(0) == real(0));

    // Non-reset lane: grad_v_next flows through u with chain factors.
    Tensor I2({1}, {0.6}); // u = 0.3
    neuron_step(NeuronModel::Lif, v, I2, p, empty, false, s, vn, &ctx, nullptr);
    neuron_step_backward(ctx, gs, gvn, gv, gI, nullptr);
    CHECK(double(gv.at(0)) == doctest::Approx(5.0 * 0.5)); // du/dv = 1 - 1/tau
    CHECK(double(gI.at(0)) == doctest::Approx(5.0 * 0.5)); // du/dI = 1/tau
}

TEST_CASE("surrogate gradient flows only inside the window") {
    NeuronParams p = defaults();
    Tensor v({2}), I({2}, {1.2, 3.0}); // u = 0.6 (inside v_th window), 1.5 (outside both)
    Tensor s, vn, empty;
    NeuronStepCtx ctx;
    neuron_step(NeuronModel::Lif, v, I, p, empty, false, s, vn, &ctx, nullptr);
    Tensor gs({2}, {1.0, 1.0}), gvn({2});
    Tensor gv({2}), gI({2});
    neuron_step_backward(ctx, gs, gvn, gv, gI, nullptr);
    CHECK(double(gI.at(0)) == doctest::Approx(1.0 / (2 * 0.5) * 0.5)); // window * du/dI
    CHECK(gI.at(1) == real(0));
}
