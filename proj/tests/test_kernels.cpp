#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "actmon/kernels.hpp"
#include "actmon/rng.hpp"
#include "doctest.h"

using namespace actmon;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("scalar kernels match naive formulas") {
    Rng rng(7);
    const auto& ops = kern::scalar_ops();
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 33u, 100u}) {
        const auto x = random_vec(rng, n);
        const auto y = random_vec(rng, n);
        double dot = 0.0, sum = 0.0, sq = 0.0, mn = x[0], mx = x[0];
        for (std::size_t i = 0; i < n; ++i) {
            dot += x[i] * y[i];
            sum += x[i];
            sq += x[i] * x[i];
            mn = std::min(mn, x[i]);
            mx = std::max(mx, x[i]);
        }
        CHECK(ops.dot(x.data(), y.data(), n) == doctest::Approx(dot).epsilon(1e-14));
        CHECK(ops.sum(x.data(), n) == doctest::Approx(sum).epsilon(1e-14));
        CHECK(ops.sum_sq(x.data(), n) == doctest::Approx(sq).epsilon(1e-14));
        double lo = 0, hi = 0;
        ops.min_max(x.data(), n, &lo, &hi);
        CHECK(lo == mn);
        CHECK(hi == mx);
    }
}

TEST_CASE("every backend agrees with the scalar reference") {
    const auto backends = kern::all_backends();
    REQUIRE(!backends.empty());
    const auto& ref = kern::scalar_ops();
    Rng rng(11);

    for (const auto* ops : backends) {
        CAPTURE(ops->name);
        for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 13u, 32u, 64u, 129u, 1000u}) {
            const auto x = random_vec(rng, n);
            const auto y = random_vec(rng, n);

            // Reductions: accumulation order differs between lanes and the
            // scalar loop, so compare within a tight tolerance.
            CHECK(ops->dot(x.data(), y.data(), n) ==
                  doctest::Approx(ref.dot(x.data(), y.data(), n)).epsilon(1e-12));
            CHECK(ops->sum(x.data(), n) == doctest::Approx(ref.sum(x.data(), n)).epsilon(1e-12));
            CHECK(ops->sum_sq(x.data(), n) ==
                  doctest::Approx(ref.sum_sq(x.data(), n)).epsilon(1e-12));

            // Element-wise traversals must be bit-identical.
            auto y1 = y, y2 = y;
            ops->axpy(1.7, x.data(), y1.data(), n);
            ref.axpy(1.7, x.data(), y2.data(), n);
            CHECK(y1 == y2);

            double lo1 = 0, hi1 = 0, lo2 = 0, hi2 = 0;
            ops->min_max(x.data(), n, &lo1, &hi1);
            ref.min_max(x.data(), n, &lo2, &hi2);
            CHECK(lo1 == lo2);
            CHECK(hi1 == hi2);

            auto p1 = x, p2 = x;
            auto m1 = random_vec(rng, n, -0.1, 0.1), v1 = random_vec(rng, n, 0.0, 0.1);
            auto m2 = m1, v2 = v1;
            const auto g = random_vec(rng, n);
            ops->adam_step(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3, 0.9, 0.999, 1e-8,
                           0.9, 0.999);
            ref.adam_step(p2.data(), g.data(), m2.data(), v2.data(), n, 1e-3, 0.9, 0.999, 1e-8,
                          0.9, 0.999);
            CHECK(p1 == p2);
            CHECK(m1 == m2);
            CHECK(v1 == v2);
        }
    }
}

TEST_CASE("adam_step walks a quadratic bowl downhill") {
    const auto& ops = kern::active();
    std::vector<double> p{4.0, -3.0};
    std::vector<double> m(2, 0.0), v(2, 0.0);
    double b1t = 1.0, b2t = 1.0;
    for (int step = 1; step <= 4000; ++step) {
        const std::vector<double> g{2.0 * p[0], 2.0 * p[1]};
        b1t *= 0.9;
        b2t *= 0.999;
        ops.adam_step(p.data(), g.data(), m.data(), v.data(), 2, 1e-2, 0.9, 0.999, 1e-8, b1t, b2t);
    }
    CHECK(std::abs(p[0]) < 1e-3);
    CHECK(std::abs(p[1]) < 1e-3);
}

TEST_CASE("active backend is one of the compiled backends") {
    const auto& active = kern::active();
    bool found = false;
    for (const auto* ops : kern::all_backends()) found = found || ops == &active;
    CHECK(found);
}
