#ifndef FPDIST_SMOOTHING_HPP
#define FPDIST_SMOOTHING_HPP

#include <vector>

#include <Eigen/Core>

#include "fpdist/dataset.hpp"

namespace fpdist {

/// Symmetric kernel densities on [-1,1].
enum class Kernel { Epanechnikov, GaussianTruncated, Uniform };

double kernel_density(Kernel k, double u);

struct Bandwidths {
    double h_mu = 0.0;     // mean smoother
    double h_cov = 0.0;    // covariance surface smoother
    double h_cross = 0.0;  // cross-covariance smoother

    /// Rate-based defaults: width*n^{-1/5}, width*n^{-1/6}, width*n^{-1/3},
    /// clamped below half the domain width.
    static Bandwidths defaults(int n_subjects, double domain_width);
    void validate(double domain_width) const;
};

struct MeanFunction {
    Grid grid;
    Eigen::VectorXd values;
    int widen_events = 0;  // windows that needed the widen fallback

    double at(double t) const { return interp_linear(grid.points, values, t); }
};

struct CovarianceSurface {
    Grid grid;
    Eigen::MatrixXd values;  // symmetric
    double sigma2 = 0.0;     // measurement-error variance, >= 0
    bool sigma2_clipped = false;
    int widen_events = 0;

    /// Bilinear interpolation of the surface.
    double at(double s, double t) const;
};

struct CrossCovariance {
    Grid grid;
    Eigen::VectorXd values;
    int excluded_subjects = 0;  // subjects dropped for missing response
    int widen_events = 0;

    double at(double t) const { return interp_linear(grid.points, values, t); }
};

/// Local-linear mean estimate over pooled observations with equal subject
/// weights; returns the intercept of the weighted fit at each grid point.
MeanFunction estimate_mean(const SparseFunctionalDataset& dataset, const Grid& grid,
                           double h_mu, Kernel kernel = Kernel::Epanechnikov);

/// 2-D local-linear surface over off-diagonal raw covariances (pairs j != l
/// within subjects having n_i >= 2), symmetrized. Measurement-error variance
/// sigma2 comes from smoothing the diagonal raw products and averaging the
/// excess over the interior middle half of the domain, clipped at 0.
CovarianceSurface estimate_covariance(const SparseFunctionalDataset& dataset,
                                      const MeanFunction& mean, double h_cov,
                                      Kernel kernel = Kernel::Epanechnikov);

/// Local-linear smoother of the raw cross-products (X - mu(T)) * Y.
CrossCovariance estimate_cross_covariance(const SparseFunctionalDataset& dataset,
                                          const MeanFunction& mean, double h_cross,
                                          Kernel kernel = Kernel::Epanechnikov);

enum class CvTarget { Mean, Covariance, Cross };

/// Subject-wise leave-one-out bandwidth selection; returns the candidate
/// minimizing the squared prediction error of the target smoother. Ties go to
/// the smaller bandwidth.
double select_bandwidth_cv(const SparseFunctionalDataset& dataset, const Grid& grid,
                           const std::vector<double>& candidates, CvTarget target,
                           Kernel kernel = Kernel::Epanechnikov);

}  // namespace fpdist

#endif  // FPDIST_SMOOTHING_HPP
