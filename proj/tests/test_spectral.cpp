#include <doctest.h>

#include <cmath>

#include "fpdist/simulation.hpp"
#include "fpdist/spectral.hpp"

using namespace fpdist;

namespace {

CovarianceSurface surface_from_kernel(const Grid& grid, const Eigen::MatrixXd& values,
                                      double sigma2 = 0.0) {
    CovarianceSurface cov;
    cov.grid = grid;
    cov.values = values;
    cov.sigma2 = sigma2;
    return cov;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("rank-1 flat kernel") {
    Grid grid = Grid::uniform(0, 1, 31);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(31, 31);
    EigenSystem es = eigendecompose(surface_from_kernel(grid, ones));
    REQUIRE(es.n_components() == 1);
    CHECK(es.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int g = 0; g < grid.size(); ++g) {
        CHECK(es.eigenfunctions(g, 0) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("section-5 rank-2 kernel: spectrum within 1e-3 on 101 points") {
    SimConfig config = SimConfig::paper5();
    Grid grid = Grid::uniform(0, 10, 101);
    Eigen::MatrixXd phi = config.basis_on_grid(grid, 2);
    Eigen::VectorXd lambda(2);
    lambda << 1.0, 4.0 / 9.0;
    Eigen::MatrixXd kernel = phi * lambda.asDiagonal() * phi.transpose();
    EigenSystem es = eigendecompose(surface_from_kernel(grid, kernel));
    REQUIRE(es.n_components() == 2);
    CHECK(std::abs(es.eigenvalues[0] - 1.0) < 1e-3);
    CHECK(std::abs(es.eigenvalues[1] - 4.0 / 9.0) < 1e-3);
}

TEST_CASE("brownian kernel: leading eigenvalue near 4/pi^2") {
    Grid grid = Grid::uniform(0, 1, 201);
    Eigen::MatrixXd kernel(201, 201);
    for (int i = 0; i < 201; ++i) {
        for (int j = 0; j < 201; ++j) {
            kernel(i, j) = std::min(grid.points[i], grid.points[j]);
        }
    }
    EigenSystem es = eigendecompose(surface_from_kernel(grid, kernel));
    double target = 4.0 / (M_PI * M_PI);
    CHECK(std::abs(es.eigenvalues[0] - target) < 1e-2);
}

TEST_CASE("eigendecompose rejects bad inputs") {
    Grid grid = Grid::uniform(0, 1, 11);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(11, 11);
    asym(0, 1) = 1.0;  // not symmetric
    CHECK_THROWS_AS(eigendecompose(surface_from_kernel(grid, asym)), ValidationError);

    Eigen::MatrixXd negative = -Eigen::MatrixXd::Identity(11, 11);
    CHECK_THROWS_AS(eigendecompose(surface_from_kernel(grid, negative)), EstimationError);
}

TEST_CASE("FVE selection on the section-5 eigenvalues") {
    SimConfig config = SimConfig::paper5();
    Grid grid = Grid::uniform(0, 10, 201);
    Eigen::MatrixXd phi = config.basis_on_grid(grid, 4);
    Eigen::MatrixXd kernel = phi * config.eigenvalues.asDiagonal() * phi.transpose();
    EigenSystem es = eigendecompose(surface_from_kernel(grid, kernel));
    REQUIRE(es.n_components() == 4);
    CHECK(select_K_fve(es, 0.90) == 3);
    CHECK(select_K_fve(es, 0.95) == 4);
    CHECK_THROWS_AS(select_K_fve(es, 0.0), ValidationError);
    CHECK_THROWS_AS(select_K_fve(es, 1.5), ValidationError);
}

TEST_CASE("single positive eigenvalue selects K = 1 at any threshold") {
    Grid grid = Grid::uniform(0, 1, 21);
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(21, 21);
    EigenSystem es = eigendecompose(surface_from_kernel(grid, ones));
    for (double thr : {0.1, 0.5, 1.0}) CHECK(select_K_fve(es, thr) == 1);
}

TEST_CASE("eigenfunction evaluation: grid points, midpoints, analytic check") {
    Grid grid = Grid::uniform(0, 1, 201);
    Eigen::MatrixXd phi(201, 1);
    for (int g = 0; g < 201; ++g) phi(g, 0) = std::sqrt(2.0) * std::sin(M_PI * grid.points[g]);
    Eigen::MatrixXd kernel = phi * phi.transpose();
    EigenSystem es = eigendecompose(surface_from_kernel(grid, kernel));
    REQUIRE(es.n_components() >= 1);

    CHECK(evaluate_eigenfunction(es, 0, grid.points[50]) ==
          doctest::Approx(es.eigenfunctions(50, 0)).epsilon(1e-15));
    double mid = 0.5 * (grid.points[50] + grid.points[51]);
    CHECK(evaluate_eigenfunction(es, 0, mid) ==
          doctest::Approx(0.5 * (es.eigenfunctions(50, 0) + es.eigenfunctions(51, 0)))
              .epsilon(1e-12));

    // Discretized sine queried off-grid stays within 1e-3 of the analytic curve.
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        double t = rng.uniform(0.0, 1.0);
        double analytic = std::sqrt(2.0) * std::sin(M_PI * t);
        CHECK(std::abs(evaluate_eigenfunction(es, 0, t) - analytic) < 1e-3);
    }
    CHECK_THROWS_AS(evaluate_eigenfunction(es, 0, 1.5), ValidationError);
    CHECK_THROWS_AS(evaluate_eigenfunction(es, 5, 0.5), ValidationError);
}

TEST_CASE("orthonormality, reconstruction, FVE monotonicity, sign determinism") {
    // Random PSD kernel through a fixed seed.
    Rng rng(8);
    Grid grid = Grid::uniform(0, 2, 41);
    Eigen::MatrixXd b(41, 6);
    for (int i = 0; i < b.rows(); ++i) {
        for (int j = 0; j < b.cols(); ++j) b(i, j) = rng.normal();
    }
    Eigen::MatrixXd kernel = b * b.transpose();
    CovarianceSurface cov = surface_from_kernel(grid, kernel);
    EigenSystem es = eigendecompose(cov);

    // Quadrature-orthonormality within 1e-8.
    for (int j = 0; j < es.n_components(); ++j) {
        for (int k = 0; k < es.n_components(); ++k) {
            double ip = (es.eigenfunctions.col(j).cwiseProduct(es.eigenfunctions.col(k)))
                            .dot(grid.weights);
            CHECK(ip == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-8).scale(1.0));
        }
    }

    // Full-rank reconstruction within 1e-6 relative Frobenius.
    Eigen::MatrixXd rebuilt = es.eigenfunctions * es.eigenvalues.asDiagonal() *
                              es.eigenfunctions.transpose();
    CHECK((rebuilt - kernel).norm() / kernel.norm() < 1e-6);

    // FVE nondecreasing, ends at 1.
    for (int k = 1; k < es.n_components(); ++k) CHECK(es.fve[k] >= es.fve[k - 1]);
    CHECK(es.fve[es.n_components() - 1] == doctest::Approx(1.0).epsilon(1e-12));

    // Eigengaps match their definition.
    for (int k = 0; k + 1 < es.n_components(); ++k) {
        double expect = es.eigenvalues[k] - es.eigenvalues[k + 1];
        if (k > 0) expect = std::min(expect, es.eigenvalues[k - 1] - es.eigenvalues[k]);
        CHECK(es.eigengaps[k] == doctest::Approx(expect).epsilon(1e-10));
    }

    // Bitwise-identical signs across runs.
    EigenSystem es2 = eigendecompose(cov);
    CHECK((es.eigenfunctions - es2.eigenfunctions).cwiseAbs().maxCoeff() == 0.0);

    // Sign convention: first significant coordinate positive.
    for (int k = 0; k < es.n_components(); ++k) {
        for (int g = 0; g < grid.size(); ++g) {
            if (std::abs(es.eigenfunctions(g, k)) > 1e-8) {
                CHECK(es.eigenfunctions(g, k) > 0.0);
                break;
            }
        }
    }
}

TEST_CASE("fit_fpca pipeline selects K by FVE") {
    SimConfig config = SimConfig::paper5();
    config.n = 300;
    config.m0 = 8;
    Rng rng(55);
    SimulatedData sim = simulate_dataset(config, rng);
    Bandwidths bw = Bandwidths::defaults(config.n, 10.0);
    FittedFpcaModel model = fit_fpca(sim.dataset, sim.grid, bw, Kernel::Epanechnikov, 0.9);
    CHECK(model.K >= 1);
    CHECK(model.K <= model.eigen.n_components());
    FittedFpcaModel fixed = fit_fpca(sim.dataset, sim.grid, bw, Kernel::Epanechnikov, 0.9, 4);
    CHECK(fixed.K == 4);
}

}  // TEST_SUITE
