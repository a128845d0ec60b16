#include <doctest.h>

#include <cmath>
#include <set>

#include "fpdist/numerics.hpp"

using namespace fpdist;

TEST_SUITE("numerics") {

TEST_CASE("normal quantile matches tabulated values") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-9));
    CHECK(normal_quantile(0.75) == doctest::Approx(0.674489750).epsilon(1e-9));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963985).epsilon(1e-9));
}

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {1e-6, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-7}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
    CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("chi-square(2) quantile") {
    CHECK(chi2_2_quantile(0.95) == doctest::Approx(5.991464547).epsilon(1e-9));
}

TEST_CASE("gauss-legendre integrates low-degree polynomials exactly") {
    std::vector<double> x, w;
    gauss_legendre(4, x, w);
    double sum_w = 0, int_x2 = 0, int_x5 = 0;
    for (int i = 0; i < 4; ++i) {
        sum_w += w[i];
        int_x2 += w[i] * x[i] * x[i];
        int_x5 += w[i] * std::pow(x[i], 5);
    }
    CHECK(sum_w == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(int_x2 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(int_x5 == doctest::Approx(0.0).epsilon(1e-14));
    // ascending node order
    for (int i = 1; i < 4; ++i) CHECK(x[i] > x[i - 1]);
}

TEST_CASE("trapezoid weights sum to the width") {
    Eigen::VectorXd pts(4);
    pts << 0.0, 0.1, 0.6, 1.0;
    Eigen::VectorXd w = trapezoid_weights(pts);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w[0] == doctest::Approx(0.05));
    CHECK(w[1] == doctest::Approx(0.3));
}

TEST_CASE("linear interpolation") {
    Eigen::VectorXd xs(3), ys(3);
    xs << 0.0, 1.0, 2.0;
    ys << 1.0, 3.0, 2.0;
    CHECK(interp_linear(xs, ys, 1.0) == doctest::Approx(3.0));
    CHECK(interp_linear(xs, ys, 0.5) == doctest::Approx(2.0));
    CHECK(interp_linear(xs, ys, 2.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(interp_linear(xs, ys, 2.5), ValidationError);
}

TEST_CASE("ols slope recovers an exact line") {
    std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
    CHECK(ols_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("rng is deterministic and streams differ by key") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 5; ++i) {
        double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(a.uniform() != c.uniform());
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
}

TEST_CASE("sample without replacement is sorted and distinct") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto idx = rng.sample_without_replacement(100, 17);
        REQUIRE(idx.size() == 17);
        std::set<int> seen(idx.begin(), idx.end());
        CHECK(seen.size() == 17);
        for (size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] > idx[i - 1]);
        CHECK(idx.front() >= 0);
        CHECK(idx.back() < 100);
    }
}

TEST_CASE("normal moments are sane") {
    Rng rng(123);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.01));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("parallel_for covers every index regardless of thread count") {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](int i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
}

}  // TEST_SUITE
