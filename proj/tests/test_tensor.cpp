#include "doctest.h"

#include <stdexcept>

#include "lifb/rng.hpp"
#include "lifb/tensor.hpp"

using namespace lifb;

TEST_CASE("tensor construction and element access") {
    Tensor t({2, 3}, real(1.5));
    CHECK(t.size() == 6);
    CHECK(t.ndim() == 2);
    CHECK(t.dim(0) == 2);
    CHECK(t.dim(1) == 3);
    CHECK(t.at({1, 2}) == real(1.5));

    t.at({0, 1}) = real(7);
    CHECK(t.at(1) == real(7)); // row-major: (0,1) is flat index 1

    Tensor v({2, 2}, {1, 2, 3, 4});
    CHECK(v.at({1, 0}) == real(3));
}

TEST_CASE("tensor bounds and shape errors") {
    Tensor t({2, 3});
    CHECK_THROWS_AS(t.at(6), std::out_of_range);
    CHECK_THROWS_AS(t.at({2, 0}), std::out_of_range);
    CHECK_THROWS_AS(t.at({0, 0, 0}), std::out_of_range);
    CHECK_THROWS_AS(t.dim(2), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(t.reshaped({5}), std::invalid_argument);

    Tensor u({3, 2});
    CHECK_THROWS_AS(t.add_(u), std::invalid_argument);
}

TEST_CASE("tensor arithmetic helpers") {
    Tensor a({4}, {1, 2, 3, 4});
    Tensor b({4}, {10, 20, 30, 40});
    a.add_(b);
    CHECK(a.at(3) == real(44));
    a.scale_(real(0.5));
    CHECK(a.at(0) == real(5.5));

    Tensor r = a.reshaped({2, 2});
    CHECK(r.at({1, 1}) == real(22));
    CHECK(a.shape_str() == "[4]");
}

TEST_CASE("gradpair accumulates into grad") {
    GradPair p("w", Tensor({2}, {1, 2}));
    CHECK(p.grad.size() == 2);
    CHECK(p.grad.at(0) == real(0));
    p.grad.at(0) = real(3);
    Tensor more({2}, {1, 1});
    p.grad.add_(more);
    CHECK(p.grad.at(0) == real(4));
    p.zero_grad();
    CHECK(p.grad.at(0) == real(0));
}

TEST_CASE("rng determinism and state round-trip") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());

    // Save mid-stream, draw, restore, redraw: identical continuation.
    std::string s = a.save_state();
    double x1 = a.normal();
    double x2 = a.uniform();
    Rng c;
    c.load_state(s);
    CHECK(c.normal() == x1);
    CHECK(c.uniform() == x2);

    CHECK_THROWS_AS(c.load_state("not a state"), std::invalid_argument);
}

TEST_CASE("rng distributions are sane") {
    Rng r(7);
    double sum = 0, sumsq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
    double var = sumsq / n - mean * mean;
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.05));

    double gsum = 0, gsumsq = 0;
    for (int i = 0; i < n; ++i) {
        double g = r.normal();
        gsum += g;
        gsumsq += g * g;
    }
    CHECK(gsum / n == doctest::Approx(0.0).epsilon(1).scale(0.02));
    CHECK(gsumsq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("rng shuffle is a permutation and seed-stable") {
    Rng r(3);
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    r.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});

    Rng r2(3);
    std::vector<int> w{0, 1, 2, 3, 4, 5, 6, 7};
    r2.shuffle(w);
    CHECK(v == w);
}
