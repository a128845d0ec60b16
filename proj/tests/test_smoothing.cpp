#include <doctest.h>

#include <cmath>

#include "fpdist/simulation.hpp"
#include "fpdist/smoothing.hpp"

using namespace fpdist;

namespace {

SparseFunctionalDataset make_dataset(int n_subjects, int n_obs, uint64_t seed,
                                     double (*f)(double), double noise_sd = 0.0,
                                     double a = 0.0, double b = 1.0) {
    Rng rng(seed);
    SparseFunctionalDataset ds;
    ds.domain_a = a;
    ds.domain_b = b;
    for (int i = 0; i < n_subjects; ++i) {
        SubjectRecord s;
        s.id = "s" + std::to_string(i);
        std::vector<double> ts(n_obs);
        for (auto& t : ts) t = rng.uniform(a, b);
        std::sort(ts.begin(), ts.end());
        for (double t : ts) {
            s.times.push_back(t);
            s.values.push_back(f(t) + noise_sd * rng.normal());
        }
        ds.subjects.push_back(std::move(s));
    }
    return ds;
}

MeanFunction zero_mean(const Grid& grid) {
    MeanFunction m;
    m.grid = grid;
    m.values = Eigen::VectorXd::Zero(grid.size());
    return m;
}

}  // namespace

TEST_SUITE("smoothing") {

TEST_CASE("kernels are symmetric densities on [-1,1]") {
    std::vector<double> nodes, weights;
    gauss_legendre(64, nodes, weights);
    for (Kernel k : {Kernel::Epanechnikov, Kernel::GaussianTruncated, Kernel::Uniform}) {
        double mass = 0.0;
        for (size_t i = 0; i < nodes.size(); ++i) mass += weights[i] * kernel_density(k, nodes[i]);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(kernel_density(k, 0.3) == doctest::Approx(kernel_density(k, -0.3)));
        CHECK(kernel_density(k, 1.5) == 0.0);
    }
}

TEST_CASE("bandwidth defaults are positive and below half the width") {
    for (int n : {10, 100, 500, 2000}) {
        Bandwidths bw = Bandwidths::defaults(n, 10.0);
        CHECK_NOTHROW(bw.validate(10.0));
    }
    CHECK_THROWS_AS(Bandwidths{}.validate(1.0), ValidationError);
}

TEST_CASE("mean smoother reproduces constants exactly") {
    auto ds = make_dataset(8, 5, 11, [](double) { return 3.7; });
    Grid grid = Grid::uniform(0, 1, 21);
    MeanFunction mean = estimate_mean(ds, grid, 0.25);
    for (int g = 0; g < grid.size(); ++g) {
        CHECK(mean.values[g] == doctest::Approx(3.7).epsilon(1e-10));
    }
}

TEST_CASE("mean smoother reproduces lines exactly") {
    auto ds = make_dataset(8, 6, 12, [](double t) { return 2.0 * t; });
    Grid grid = Grid::uniform(0, 1, 21);
    for (double h : {0.1, 0.3}) {
        MeanFunction mean = estimate_mean(ds, grid, h);
        for (int g = 0; g < grid.size(); ++g) {
            CHECK(mean.values[g] ==
                  doctest::Approx(2.0 * grid.points[g]).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("section-5 mean recovery at n=2000 dense") {
    SimConfig config = SimConfig::paper5();
    config.n = 2000;
    config.m0 = 20;
    Rng rng(2024);
    SimulatedData sim = simulate_dataset(config, rng);
    Bandwidths bw = Bandwidths::defaults(config.n, 10.0);
    MeanFunction mean = estimate_mean(sim.dataset, sim.grid, bw.h_mu);
    double sup = 0.0;
    for (int g = 0; g < sim.grid.size(); ++g) {
        sup = std::max(sup, std::abs(mean.values[g] - 0.5 * sim.grid.points[g]));
    }
    CHECK(sup < 0.05);
}

TEST_CASE("covariance smoother reproduces a constant raw-product field") {
    // Centered values are +/- sqrt(c) per subject against a zero mean, so
    // every raw product equals c exactly.
    const double c = 1.69;
    SparseFunctionalDataset ds;
    ds.domain_a = 0;
    ds.domain_b = 1;
    Rng rng(5);
    for (int i = 0; i < 12; ++i) {
        SubjectRecord s;
        s.id = "s" + std::to_string(i);
        double v = std::sqrt(c);
        std::vector<double> ts(4);
        for (auto& t : ts) t = rng.uniform(0, 1);
        std::sort(ts.begin(), ts.end());
        for (double t : ts) {
            s.times.push_back(t);
            s.values.push_back(v);
        }
        ds.subjects.push_back(std::move(s));
    }
    Grid grid = Grid::uniform(0, 1, 15);
    CovarianceSurface cov = estimate_covariance(ds, zero_mean(grid), 0.3);
    for (int i = 0; i < grid.size(); ++i) {
        for (int j = 0; j < grid.size(); ++j) {
            CHECK(cov.values(i, j) == doctest::Approx(c).epsilon(1e-9));
        }
    }
    CHECK(cov.sigma2 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((cov.values - cov.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rank-1 process: surface matches the sample second moment") {
    // X_i(t) = xi_i with lambda = 1 and flat eigenfunction; the smoothed
    // surface should approach the pooled sample variance of the xi.
    Rng rng(99);
    SparseFunctionalDataset ds;
    ds.domain_a = 0;
    ds.domain_b = 1;
    const int n = 400;
    std::vector<double> xis(n);
    for (int i = 0; i < n; ++i) {
        xis[i] = rng.normal();
        SubjectRecord s;
        s.id = "s" + std::to_string(i);
        std::vector<double> ts(4);
        for (auto& t : ts) t = rng.uniform(0, 1);
        std::sort(ts.begin(), ts.end());
        for (double t : ts) {
            s.times.push_back(t);
            s.values.push_back(xis[i]);
        }
        ds.subjects.push_back(std::move(s));
    }
    Grid grid = Grid::uniform(0, 1, 21);
    Bandwidths bw = Bandwidths::defaults(n, 1.0);
    MeanFunction mean = estimate_mean(ds, grid, bw.h_mu);
    CovarianceSurface cov = estimate_covariance(ds, mean, bw.h_cov);

    double xbar = 0.0;
    for (double x : xis) xbar += x;
    xbar /= n;
    double sample_var = 0.0;
    for (double x : xis) sample_var += (x - xbar) * (x - xbar);
    sample_var /= n;

    CHECK(cov.values.maxCoeff() < sample_var + 0.1);
    CHECK(cov.values.minCoeff() > sample_var - 0.1);
    CHECK(cov.sigma2 == doctest::Approx(0.0).epsilon(0.05));
}

TEST_CASE("section-5 sigma^2 recovery within 20% at n=2000") {
    SimConfig config = SimConfig::paper5();
    config.n = 2000;
    config.m0 = 20;
    config.sigma = 0.5;
    Rng rng(31);
    SimulatedData sim = simulate_dataset(config, rng);
    Bandwidths bw = Bandwidths::defaults(config.n, 10.0);
    MeanFunction mean = estimate_mean(sim.dataset, sim.grid, bw.h_mu);
    CovarianceSurface cov = estimate_covariance(sim.dataset, mean, bw.h_cov);
    CHECK(cov.sigma2 > 0.25 * 0.8);
    CHECK(cov.sigma2 < 0.25 * 1.2);
}

TEST_CASE("covariance smoother requires a subject with two observations") {
    SparseFunctionalDataset ds;
    ds.domain_a = 0;
    ds.domain_b = 1;
    ds.subjects.push_back({"a", {0.2}, {1.0}});
    ds.subjects.push_back({"b", {0.7}, {2.0}});
    Grid grid = Grid::uniform(0, 1, 11);
    CHECK_THROWS_AS(estimate_covariance(ds, zero_mean(grid), 0.3), ValidationError);
}

TEST_CASE("cross-covariance is zero for zero responses") {
    auto ds = make_dataset(10, 4, 17, [](double t) { return std::sin(t); }, 0.1);
    for (const auto& s : ds.subjects) ds.responses[s.id] = 0.0;
    Grid grid = Grid::uniform(0, 1, 15);
    MeanFunction mean = estimate_mean(ds, grid, 0.3);
    CrossCovariance cross = estimate_cross_covariance(ds, mean, 0.3);
    for (int g = 0; g < grid.size(); ++g) {
        CHECK(cross.values[g] == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("cross-covariance recovers phi_1 when Y = xi_1") {
    SimConfig config = SimConfig::paper5();
    config.n = 2000;
    config.m0 = 20;
    config.beta0 = 0.0;
    config.beta << 1.0, 0.0, 0.0, 0.0;  // Y = xi_1 exactly (lambda_1 = 1)
    config.sigma_y = 0.0;
    Rng rng(77);
    SimulatedData sim = simulate_dataset(config, rng);
    Bandwidths bw = Bandwidths::defaults(config.n, 10.0);
    MeanFunction mean = estimate_mean(sim.dataset, sim.grid, bw.h_mu);
    CrossCovariance cross = estimate_cross_covariance(sim.dataset, mean, bw.h_cross);
    double sup = 0.0;
    for (int g = 0; g < sim.grid.size(); ++g) {
        double truth = config.basis_at(0, sim.grid.points[g]);  // lambda_1 beta_1 = 1
        sup = std::max(sup, std::abs(cross.values[g] - truth));
    }
    CHECK(sup < 0.1);
}

TEST_CASE("cross-covariance matches the analytic section-5 target") {
    SimConfig config = SimConfig::paper5();
    config.n = 2000;
    config.m0 = 20;
    Rng rng(78);
    SimulatedData sim = simulate_dataset(config, rng);
    Bandwidths bw = Bandwidths::defaults(config.n, 10.0);
    MeanFunction mean = estimate_mean(sim.dataset, sim.grid, bw.h_mu);
    CrossCovariance cross = estimate_cross_covariance(sim.dataset, mean, bw.h_cross);
    double sup = 0.0;
    for (int g = 0; g < sim.grid.size(); ++g) {
        double truth = 0.0;
        for (int k = 0; k < 4; ++k) {
            truth += config.eigenvalues[k] * config.beta[k] *
                     config.basis_at(k, sim.grid.points[g]);
        }
        sup = std::max(sup, std::abs(cross.values[g] - truth));
    }
    CHECK(sup < 0.15);
}

TEST_CASE("cross-covariance excludes subjects without responses") {
    auto ds = make_dataset(6, 4, 19, [](double t) { return t; });
    for (int i = 0; i < 4; ++i) ds.responses["s" + std::to_string(i)] = 1.0;
    Grid grid = Grid::uniform(0, 1, 11);
    MeanFunction mean = estimate_mean(ds, grid, 0.3);
    CrossCovariance cross = estimate_cross_covariance(ds, mean, 0.3);
    CHECK(cross.excluded_subjects == 2);

    ds.responses.clear();
    CHECK_THROWS_AS(estimate_cross_covariance(ds, mean, 0.3), ValidationError);
}

TEST_CASE("shrinking h triggers the widen fallback, then a clean error") {
    auto ds = make_dataset(6, 5, 23, [](double t) { return std::cos(t); }, 0.05);
    Grid grid = Grid::uniform(0, 1, 21);

    MeanFunction widened = estimate_mean(ds, grid, 0.02);
    CHECK(widened.widen_events > 0);
    for (int g = 0; g < grid.size(); ++g) CHECK(std::isfinite(widened.values[g]));

    try {
        estimate_mean(ds, grid, 1e-9);
        FAIL("expected EstimationError");
    } catch (const EstimationError& e) {
        CHECK(std::string(e.what()).find("t=") != std::string::npos);
    }
}

TEST_CASE("bandwidth CV: single candidate, clear winner, tie-break") {
    auto ds = make_dataset(40, 10, 29, [](double t) { return std::sin(6.28 * t); }, 0.05);
    Grid grid = Grid::uniform(0, 1, 21);

    CHECK(select_bandwidth_cv(ds, grid, {0.17}, CvTarget::Mean) == doctest::Approx(0.17));

    double winner = select_bandwidth_cv(ds, grid, {0.01, 0.5}, CvTarget::Mean);
    CHECK(winner == doctest::Approx(0.01));
    // Order of candidates must not matter.
    CHECK(select_bandwidth_cv(ds, grid, {0.5, 0.01}, CvTarget::Mean) == doctest::Approx(0.01));

    // Identical candidates tie; the smaller (equal) one comes back.
    CHECK(select_bandwidth_cv(ds, grid, {0.3, 0.3}, CvTarget::Mean) == doctest::Approx(0.3));

    SparseFunctionalDataset small = ds;
    small.subjects.resize(5);
    CHECK_THROWS_AS(select_bandwidth_cv(small, grid, {0.1, 0.2}, CvTarget::Mean),
                    ValidationError);
}

TEST_CASE("bandwidth CV works for the covariance and cross targets") {
    SimConfig config = SimConfig::paper5();
    config.n = 60;
    config.m0 = 8;
    Rng rng(41);
    SimulatedData sim = simulate_dataset(config, rng);
    Grid grid = Grid::uniform(0, 10, 21);
    double h_cov = select_bandwidth_cv(sim.dataset, grid, {2.0, 4.5}, CvTarget::Covariance);
    CHECK((h_cov == doctest::Approx(2.0) || h_cov == doctest::Approx(4.5)));
    double h_cross = select_bandwidth_cv(sim.dataset, grid, {1.0, 3.0}, CvTarget::Cross);
    CHECK((h_cross == doctest::Approx(1.0) || h_cross == doctest::Approx(3.0)));
}

}  // TEST_SUITE
