#ifndef FPDIST_WASSERSTEIN_HPP
#define FPDIST_WASSERSTEIN_HPP

#include <functional>
#include <vector>

#include "fpdist/predictive.hpp"

namespace fpdist {

/// All distances in this module are squared 2-Wasserstein distances.

struct Gaussian1D {
    double mean = 0.0;
    double variance = 0.0;  // >= 0; zero means an atom

    double sd() const { return std::sqrt(variance); }
    double cdf(double x) const;
};

/// A (generalized) quantile function p in (0,1) -> real, monotone
/// nondecreasing. `breakpoints` lists interior p values where the function
/// jumps or kinks; the quadrature subdivides there so piecewise-polynomial
/// integrands (empirical quantiles) are integrated exactly.
struct QuantileFunction {
    std::function<double(double)> eval;
    std::vector<double> breakpoints;  // sorted, strictly inside (0,1)

    static QuantileFunction normal(double mean, double sd);
    static QuantileFunction point_mass(double value);
    static QuantileFunction uniform01();
    static QuantileFunction empirical(std::vector<double> sample);
};

/// Quantile-integral route: int_0^1 (Q1(p) - Q2(p))^2 dp by Gauss-Legendre,
/// subdivided at the quantiles' breakpoints. n_quad >= 16.
double w2_univariate(const QuantileFunction& q1, const QuantileFunction& q2, int n_quad);

/// Closed form (mu1-mu2)^2 + (sd1-sd2)^2.
double w2_gaussian_1d(const Gaussian1D& g1, const Gaussian1D& g2);

/// Gelbrich formula on the function grid:
/// ||m1-m2||^2 + tr(X1 + X2 - 2 (X1^{1/2} X2 X1^{1/2})^{1/2}).
double w2_gaussian_hilbert(const FunctionalGaussian& g1, const FunctionalGaussian& g2);

/// Gaussian vs point mass: ||m - a||^2 + quadrature trace of the kernel.
double w2_gaussian_to_atom(const FunctionalGaussian& g, const Eigen::VectorXd& atom);

/// Closed-form W2^2 between the empirical law of `values` (all in [0,1]) and
/// Uniform(0,1), evaluated on order statistics.
double uniformity_statistic(const std::vector<double>& values);

}  // namespace fpdist

#endif  // FPDIST_WASSERSTEIN_HPP
