#ifndef FPDIST_PREDICTIVE_HPP
#define FPDIST_PREDICTIVE_HPP

#include <string>

#include <Eigen/Core>

#include "fpdist/spectral.hpp"

namespace fpdist {

/// K-dimensional Gaussian law of the leading scores given a subject's
/// observations: mean is the BLUP, covariance the conditional variance.
struct ScorePredictive {
    Eigen::VectorXd mean;        // xi-tilde, length K
    Eigen::MatrixXd covariance;  // K x K symmetric PSD
    std::string subject_id;
};

/// Gaussian measure on the function grid: mean curve plus covariance kernel.
struct FunctionalGaussian {
    Grid grid;
    Eigen::VectorXd mean_curve;
    Eigen::MatrixXd cov_kernel;

    double quadrature_trace() const {
        return grid.weights.dot(cov_kernel.diagonal());
    }
};

/// BLUP of the first K scores with conditional covariance
/// Sigma_K = Lambda_K - Lambda_K Phi^T Sigma^{-1} Phi Lambda_K, where
/// Sigma = sigma^2 I + Gamma(T,T) is rebuilt from all retained eigenpairs.
ScorePredictive blup_scores(const FittedFpcaModel& model, const SubjectRecord& subject,
                            int K);

/// Distributional view of blup_scores: same (mean, covariance) pair.
ScorePredictive score_predictive_distribution(const FittedFpcaModel& model,
                                              const SubjectRecord& subject, int K);

/// K-truncated predictive law of the centered trajectory: mean curve
/// sum_k xi_k phi_k, kernel sum_{j,l} [Sigma_K]_{jl} phi_j (x) phi_l.
FunctionalGaussian functional_predictive_distribution(const FittedFpcaModel& model,
                                                      const SubjectRecord& subject, int K);

/// Untruncated predictive law computed directly from the smoothed surface:
/// mean Gamma(.,T) Sigma^{-1}(x - mu), kernel Gamma - Gamma(.,T) Sigma^{-1} Gamma(T,.).
FunctionalGaussian infinite_predictive_distribution(const FittedFpcaModel& model,
                                                    const SubjectRecord& subject);

/// mu-hat + sum_k xi_k phi_k on the grid.
Eigen::VectorXd reconstruct_trajectory(const FittedFpcaModel& model,
                                       const SubjectRecord& subject, int K);

struct PointwiseBand {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

/// mean +- z_{(1+level)/2} * sqrt(diagonal of the kernel).
PointwiseBand pointwise_band(const FunctionalGaussian& fg, double level);

/// Points on the level-set ellipse {x : (x-m)^T S^{-1} (x-m) = chi2_2(level)}
/// of a 2-D score predictive. Rows are (x, y).
Eigen::MatrixX2d contour_ellipse(const ScorePredictive& sp, double level, int n_points);

/// Shoelace area of a contour polygon (utility for shrinkage diagnostics).
double polygon_area(const Eigen::MatrixX2d& points);

}  // namespace fpdist

#endif  // FPDIST_PREDICTIVE_HPP
