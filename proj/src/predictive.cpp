#include "fpdist/predictive.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace fpdist {

namespace {

// Eigenfunction values at the subject's observation times, all retained
// components: n_i x K_all.
Eigen::MatrixXd eigenfunctions_at_times(const FittedFpcaModel& model,
                                        const SubjectRecord& subject) {
    const int m = subject.n_obs();
    const int K_all = model.eigen.n_components();
    Eigen::MatrixXd phi(m, K_all);
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < K_all; ++k) {
            phi(j, k) = evaluate_eigenfunction(model.eigen, k, subject.times[j]);
        }
    }
    return phi;
}

Eigen::VectorXd centered_observations(const FittedFpcaModel& model,
                                      const SubjectRecord& subject) {
    const int m = subject.n_obs();
    Eigen::VectorXd x(m);
    for (int j = 0; j < m; ++j) {
        x[j] = subject.values[j] - model.mean.at(subject.times[j]);
    }
    return x;
}

// Factorize Sigma = sigma^2 I + G with one jitter retry, per the model's
// ill-conditioning policy.
Eigen::LLT<Eigen::MatrixXd> factor_sigma(Eigen::MatrixXd sigma, double sigma2,
                                         const std::string& subject_id) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) return llt;
    double jitter = 1e-10 * sigma2;
    if (jitter > 0.0) {
        sigma.diagonal().array() += jitter;
        llt.compute(sigma);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw EstimationError("blup_scores: observation covariance singular for subject '" +
                          subject_id + "' (sigma^2 = 0 with duplicated times?)");
}

void check_blup_preconditions(const FittedFpcaModel& model, const SubjectRecord& subject,
                              int K) {
    if (subject.n_obs() < 1) {
        throw ValidationError("blup_scores: subject '" + subject.id + "' has no observations");
    }
    if (K < 1) throw ValidationError("blup_scores: K must be >= 1");
    if (K > model.eigen.n_components()) {
        throw ValidationError("blup_scores: K exceeds retained components");
    }
}

}  // namespace

ScorePredictive blup_scores(const FittedFpcaModel& model, const SubjectRecord& subject,
                            int K) {
    check_blup_preconditions(model, subject, K);
    const int m = subject.n_obs();
    const double sigma2 = model.cov.sigma2;

    Eigen::MatrixXd phi_all = eigenfunctions_at_times(model, subject);
    const Eigen::VectorXd& lambda_all = model.eigen.eigenvalues;

    // Sigma_i = sigma^2 I + sum_k lambda_k phi_k(T) phi_k(T)^T over all
    // retained components (the smoothed surface rebuilt at the subject's
    // times, guaranteed PSD).
    Eigen::MatrixXd sigma = phi_all * lambda_all.asDiagonal() * phi_all.transpose();
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    sigma.diagonal().array() += sigma2;

    auto llt = factor_sigma(std::move(sigma), sigma2, subject.id);

    Eigen::MatrixXd phi_K = phi_all.leftCols(K);
    Eigen::VectorXd lambda_K = lambda_all.head(K);
    Eigen::VectorXd x = centered_observations(model, subject);

    ScorePredictive sp;
    sp.subject_id = subject.id;
    sp.mean = lambda_K.asDiagonal() * (phi_K.transpose() * llt.solve(x));

    Eigen::MatrixXd phi_lambda = phi_K * lambda_K.asDiagonal();  // m x K
    Eigen::MatrixXd cond = Eigen::MatrixXd(lambda_K.asDiagonal()) -
                           phi_lambda.transpose() * llt.solve(phi_lambda);
    cond = 0.5 * (cond + cond.transpose()).eval();

    // PSD repair: tolerate smoothing-level negatives, reject worse.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cond);
    double lambda1 = lambda_all.size() > 0 ? lambda_all[0] : 1.0;
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -1e-8 * std::max(lambda1, 1e-300)) {
        throw EstimationError("blup_scores: conditional covariance indefinite for subject '" +
                              subject.id + "'");
    }
    if (min_eig < 0.0) {
        Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
        cond = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
        cond = 0.5 * (cond + cond.transpose()).eval();
    }
    sp.covariance = cond;
    return sp;
}

ScorePredictive score_predictive_distribution(const FittedFpcaModel& model,
                                              const SubjectRecord& subject, int K) {
    return blup_scores(model, subject, K);
}

FunctionalGaussian functional_predictive_distribution(const FittedFpcaModel& model,
                                                      const SubjectRecord& subject,
                                                      int K) {
    ScorePredictive sp = blup_scores(model, subject, K);
    const Eigen::MatrixXd phi_grid = model.eigen.eigenfunctions.leftCols(K);
    FunctionalGaussian fg;
    fg.grid = model.eigen.grid;
    fg.mean_curve = phi_grid * sp.mean;
    fg.cov_kernel = phi_grid * sp.covariance * phi_grid.transpose();
    fg.cov_kernel = 0.5 * (fg.cov_kernel + fg.cov_kernel.transpose()).eval();
    return fg;
}

FunctionalGaussian infinite_predictive_distribution(const FittedFpcaModel& model,
                                                    const SubjectRecord& subject) {
    check_blup_preconditions(model, subject, 1);
    const int m = subject.n_obs();
    const Grid& grid = model.cov.grid;
    const int q = grid.size();
    const double sigma2 = model.cov.sigma2;

    // Gamma(T,T) and Gamma(grid, T) straight from the smoothed surface.
    Eigen::MatrixXd gamma_tt(m, m);
    for (int j = 0; j < m; ++j) {
        for (int l = j; l < m; ++l) {
            double v = model.cov.at(subject.times[j], subject.times[l]);
            gamma_tt(j, l) = v;
            gamma_tt(l, j) = v;
        }
    }
    Eigen::MatrixXd gamma_gt(q, m);
    for (int g = 0; g < q; ++g) {
        for (int j = 0; j < m; ++j) {
            gamma_gt(g, j) = model.cov.at(grid.points[g], subject.times[j]);
        }
    }

    Eigen::MatrixXd sigma = gamma_tt;
    sigma.diagonal().array() += sigma2;
    auto llt = factor_sigma(std::move(sigma), sigma2, subject.id);

    Eigen::VectorXd x = centered_observations(model, subject);

    FunctionalGaussian fg;
    fg.grid = grid;
    fg.mean_curve = gamma_gt * llt.solve(x);
    fg.cov_kernel = model.cov.values - gamma_gt * llt.solve(gamma_gt.transpose());
    fg.cov_kernel = 0.5 * (fg.cov_kernel + fg.cov_kernel.transpose()).eval();
    return fg;
}

Eigen::VectorXd reconstruct_trajectory(const FittedFpcaModel& model,
                                       const SubjectRecord& subject, int K) {
    ScorePredictive sp = blup_scores(model, subject, K);
    return model.mean.values + model.eigen.eigenfunctions.leftCols(K) * sp.mean;
}

PointwiseBand pointwise_band(const FunctionalGaussian& fg, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw ValidationError("pointwise_band: level must lie in (0,1)");
    }
    const double z = normal_quantile(0.5 * (1.0 + level));
    const int q = fg.grid.size();
    double scale = std::max(fg.cov_kernel.cwiseAbs().maxCoeff(), 1e-300);
    PointwiseBand band;
    band.lower.resize(q);
    band.upper.resize(q);
    for (int g = 0; g < q; ++g) {
        double v = fg.cov_kernel(g, g);
        if (v < -1e-8 * scale) {
            throw ValidationError("pointwise_band: negative variance on the diagonal");
        }
        double half = z * std::sqrt(std::max(v, 0.0));
        band.lower[g] = fg.mean_curve[g] - half;
        band.upper[g] = fg.mean_curve[g] + half;
    }
    return band;
}

Eigen::MatrixX2d contour_ellipse(const ScorePredictive& sp, double level, int n_points) {
    if (sp.mean.size() != 2) {
        throw ValidationError("contour_ellipse: requires a 2-dimensional score predictive");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw ValidationError("contour_ellipse: level must lie in (0,1)");
    }
    if (n_points < 3) throw ValidationError("contour_ellipse: need at least 3 points");

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sp.covariance);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw EstimationError("contour_ellipse: degenerate ellipse (singular covariance)");
    }
    const double q = chi2_2_quantile(level);
    Eigen::Matrix2d axes =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * std::sqrt(q);
    Eigen::MatrixX2d pts(n_points, 2);
    for (int i = 0; i < n_points; ++i) {
        double theta = 2.0 * M_PI * i / n_points;
        Eigen::Vector2d p = sp.mean + axes * Eigen::Vector2d(std::cos(theta), std::sin(theta));
        pts(i, 0) = p[0];
        pts(i, 1) = p[1];
    }
    return pts;
}

double polygon_area(const Eigen::MatrixX2d& points) {
    const int n = static_cast<int>(points.rows());
    if (n < 3) return 0.0;
    double twice = 0.0;
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        twice += points(i, 0) * points(j, 1) - points(j, 0) * points(i, 1);
    }
    return 0.5 * std::abs(twice);
}

}  // namespace fpdist
