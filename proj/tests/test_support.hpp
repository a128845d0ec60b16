#ifndef FPDIST_TEST_SUPPORT_HPP
#define FPDIST_TEST_SUPPORT_HPP

// Shared oracles and fixtures for the unit and acceptance suites. Everything
// here is independent of the library's estimation paths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fpdist/predictive.hpp"

namespace fpdist::testing {

/// Hand-built model: grid, zero-or-given mean, explicit eigenpairs.
inline FittedFpcaModel custom_model(const Grid& grid, const Eigen::VectorXd& mean_values,
                                    const Eigen::VectorXd& lambdas,
                                    const Eigen::MatrixXd& phis, double sigma2, int K) {
    FittedFpcaModel model;
    model.mean.grid = grid;
    model.mean.values = mean_values;
    model.cov.grid = grid;
    model.cov.values = phis * lambdas.asDiagonal() * phis.transpose();
    model.cov.sigma2 = sigma2;
    model.eigen.grid = grid;
    model.eigen.eigenvalues = lambdas;
    model.eigen.eigenfunctions = phis;
    const int n = static_cast<int>(lambdas.size());
    model.eigen.eigengaps.resize(n);
    model.eigen.fve.resize(n);
    double total = lambdas.sum();
    double run = 0.0;
    for (int k = 0; k < n; ++k) {
        double up = k == 0 ? std::numeric_limits<double>::infinity()
                           : lambdas[k - 1] - lambdas[k];
        double down = lambdas[k] - (k + 1 < n ? lambdas[k + 1] : 0.0);
        model.eigen.eigengaps[k] = std::min(up, down);
        run += lambdas[k];
        model.eigen.fve[k] = total > 0 ? run / total : 1.0;
    }
    model.K = K;
    return model;
}

/// The scalar conditioning toy: lambda = 2, flat eigenfunction, sigma^2 = 1,
/// zero mean on [0,1].
inline FittedFpcaModel scalar_toy_model(int grid_size = 11) {
    Grid grid = Grid::uniform(0, 1, grid_size);
    Eigen::VectorXd lambda(1);
    lambda << 2.0;
    Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(grid_size, 1);
    return custom_model(grid, Eigen::VectorXd::Zero(grid_size), lambda, phi, 1.0, 1);
}

struct OracleEstimate {
    double value = 0.0;
    double se = 0.0;
};

/// Local-linear regression of y on (multivariate) x at `query` with a
/// Gaussian product kernel; conditional-mean oracle for the BLUP checks.
/// Exactly unbiased when E[y|x] is linear, so only its Monte Carlo standard
/// error matters.
inline OracleEstimate loclin_conditional_mean(const std::vector<Eigen::VectorXd>& xs,
                                              const std::vector<double>& ys,
                                              const Eigen::VectorXd& query,
                                              double bw_scale = 1.0) {
    const int n = static_cast<int>(xs.size());
    const int d = static_cast<int>(query.size());
    Eigen::VectorXd sd = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : xs) mean += x;
    mean /= n;
    for (const auto& x : xs) sd += (x - mean).cwiseAbs2();
    sd = (sd / n).cwiseSqrt();
    Eigen::VectorXd h = bw_scale * std::pow(n, -1.0 / (4.0 + d)) * sd;

    const int p = d + 1;
    Eigen::MatrixXd ztwz = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd ztwy = Eigen::VectorXd::Zero(p);
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
        double logw = 0.0;
        for (int j = 0; j < d; ++j) {
            double u = (xs[i][j] - query[j]) / h[j];
            logw -= 0.5 * u * u;
        }
        w[i] = std::exp(logw);
        Eigen::VectorXd z(p);
        z[0] = 1.0;
        z.tail(d) = xs[i] - query;
        ztwz += w[i] * z * z.transpose();
        ztwy += w[i] * ys[i] * z;
    }
    Eigen::LDLT<Eigen::MatrixXd> solver(ztwz);
    Eigen::VectorXd theta = solver.solve(ztwy);

    // Sandwich variance of the intercept.
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd z(p);
        z[0] = 1.0;
        z.tail(d) = xs[i] - query;
        double r = ys[i] - theta.dot(z);
        meat += w[i] * w[i] * r * r * z * z.transpose();
    }
    Eigen::MatrixXd cov = solver.solve(solver.solve(meat).transpose());

    OracleEstimate est;
    est.value = theta[0];
    est.se = std::sqrt(std::max(cov(0, 0), 0.0));
    return est;
}

/// One-sample Kolmogorov-Smirnov p-value against Uniform(0,1).
inline double ks_uniform_pvalue(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const int n = static_cast<int>(u.size());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        d = std::max(d, (i + 1.0) / n - u[i]);
        d = std::max(d, u[i] - static_cast<double>(i) / n);
    }
    double sqrt_n = std::sqrt(static_cast<double>(n));
    double t = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * t * t);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace fpdist::testing

#endif  // FPDIST_TEST_SUPPORT_HPP
