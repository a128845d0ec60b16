#include "fpdist/flm.hpp"

#include <cmath>

namespace fpdist {

FlmModel fit_flm_with_cross(const FittedFpcaModel& model, const CrossCovariance& cross,
                            double beta0, int M) {
    if (M < 1) throw ValidationError("fit_flm: M must be >= 1");
    if (M > model.eigen.n_components()) {
        throw ValidationError("fit_flm: M exceeds retained components");
    }
    if (!cross.grid.same_as(model.eigen.grid)) {
        throw ValidationError("fit_flm: cross-covariance grid mismatch");
    }
    const Eigen::VectorXd& lambda = model.eigen.eigenvalues;
    const double lambda1 = lambda[0];

    FlmModel flm;
    flm.beta0 = beta0;
    flm.M = M;
    flm.grid = model.eigen.grid;
    flm.cross = cross;
    flm.sigma_k.resize(M);
    flm.beta_k.resize(M);
    flm.lambda_k = lambda.head(M);
    for (int m = 0; m < M; ++m) {
        if (lambda[m] <= 1e-12 * lambda1) {
            throw EstimationError("fit_flm: division by vanishing eigenvalue at component " +
                                  std::to_string(m + 1));
        }
        double sigma_m = flm.grid.weights.dot(
            cross.values.cwiseProduct(model.eigen.eigenfunctions.col(m)));
        flm.sigma_k[m] = sigma_m;
        flm.beta_k[m] = sigma_m / lambda[m];
    }
    flm.beta_curve = model.eigen.eigenfunctions.leftCols(M) * flm.beta_k;
    return flm;
}

FlmModel fit_flm(const FittedFpcaModel& model, const SparseFunctionalDataset& dataset,
                 int M, double h_cross, Kernel kernel) {
    CrossCovariance cross = estimate_cross_covariance(dataset, model.mean, h_cross, kernel);
    double sum = 0.0;
    int n = 0;
    for (const auto& subj : dataset.subjects) {
        auto it = dataset.responses.find(subj.id);
        if (it == dataset.responses.end()) continue;
        sum += it->second;
        ++n;
    }
    if (n == 0) throw ValidationError("fit_flm: no responses available");
    return fit_flm_with_cross(model, cross, sum / n, M);
}

Gaussian1D response_predictive_distribution(const FlmModel& flm,
                                            const FittedFpcaModel& model,
                                            const SubjectRecord& subject, int K) {
    if (K < 1 || K > flm.M) {
        throw ValidationError("response_predictive_distribution: K must lie in [1, M]");
    }
    ScorePredictive sp = blup_scores(model, subject, K);
    Eigen::VectorXd beta_K = flm.beta_k.head(K);
    Gaussian1D g;
    g.mean = flm.beta0 + beta_K.dot(sp.mean);
    g.variance = std::max(0.0, beta_K.dot(sp.covariance * beta_K));
    return g;
}

Discrepancy wasserstein_discrepancy(const FlmModel& flm, const FittedFpcaModel& model,
                                    const SparseFunctionalDataset& dataset, int K) {
    const int n = dataset.n_subjects();
    if (n == 0) throw ValidationError("wasserstein_discrepancy: empty dataset");
    Discrepancy d;
    for (const auto& subj : dataset.subjects) {
        auto it = dataset.responses.find(subj.id);
        if (it == dataset.responses.end()) {
            throw ValidationError("wasserstein_discrepancy: subject '" + subj.id +
                                  "' has no response");
        }
        Gaussian1D g = response_predictive_distribution(flm, model, subj, K);
        double r = it->second - g.mean;
        d.mse_term += r * r;
        d.variance_term += g.variance;
    }
    d.mse_term /= n;
    d.variance_term /= n;
    d.total = d.mse_term + d.variance_term;
    return d;
}

SigmaYEstimate sigma_y_estimate(const FlmModel& flm, const std::vector<double>& responses) {
    const int n = static_cast<int>(responses.size());
    if (n < 2) throw ValidationError("sigma_y_estimate: need at least 2 responses");
    double mean = 0.0;
    for (double y : responses) mean += y;
    mean /= n;
    double var = 0.0;
    for (double y : responses) var += (y - mean) * (y - mean);
    var /= n;  // divisor n, as printed

    // sum lambda_j beta_j^2 = sum sigma_j beta_j exactly.
    double explained = flm.sigma_k.dot(flm.beta_k);

    SigmaYEstimate est;
    est.value = var - explained;
    est.negative = est.value < 0.0;
    return est;
}

UniformityDiagnostic uniformity_diagnostic(const FlmModel& flm, const FittedFpcaModel& model,
                                           const SparseFunctionalDataset& dataset,
                                           const std::vector<double>& targets, int K) {
    if (targets.size() != static_cast<size_t>(dataset.n_subjects())) {
        throw ValidationError("uniformity_diagnostic: one target per subject required");
    }
    std::vector<double> probs(targets.size());
    UniformityDiagnostic out;
    for (int i = 0; i < dataset.n_subjects(); ++i) {
        Gaussian1D g = response_predictive_distribution(flm, model, dataset.subjects[i], K);
        if (g.variance == 0.0) {
            // Saturated probability-integral transform; 0.5 exactly at the atom.
            ++out.saturated;
            probs[i] = targets[i] < g.mean ? 0.0 : (targets[i] > g.mean ? 1.0 : 0.5);
        } else {
            probs[i] = g.cdf(targets[i]);
        }
    }
    out.u_w = uniformity_statistic(probs);
    return out;
}

}  // namespace fpdist
