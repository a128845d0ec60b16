#include "fpdist/spectral.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace fpdist {

EigenSystem eigendecompose(const CovarianceSurface& cov, int max_components) {
    const Grid& grid = cov.grid;
    grid.validate();
    const int q = grid.size();
    if (cov.values.rows() != q || cov.values.cols() != q) {
        throw ValidationError("eigendecompose: surface/grid size mismatch");
    }
    double scale = cov.values.cwiseAbs().maxCoeff();
    double asym = (cov.values - cov.values.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * std::max(1.0, scale)) {
        throw ValidationError("eigendecompose: surface not symmetric");
    }

    Eigen::VectorXd sqrt_w = grid.weights.cwiseSqrt();
    Eigen::MatrixXd B = sqrt_w.asDiagonal() * cov.values * sqrt_w.asDiagonal();
    B = 0.5 * (B + B.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
    if (solver.info() != Eigen::Success) {
        throw EstimationError("eigendecompose: eigensolver failed");
    }

    // Ascending from Eigen; reverse to nonincreasing.
    Eigen::VectorXd raw_vals = solver.eigenvalues().reverse();
    Eigen::MatrixXd raw_vecs = solver.eigenvectors().rowwise().reverse();

    double top = raw_vals.size() > 0 ? raw_vals[0] : 0.0;
    if (!(top > 0.0)) {
        throw EstimationError("eigendecompose: no positive eigenvalue");
    }
    const double floor = 1e-10 * top;
    int keep = 0;
    while (keep < raw_vals.size() && raw_vals[keep] > floor) ++keep;
    if (max_components > 0) keep = std::min(keep, max_components);

    EigenSystem es;
    es.grid = grid;
    es.eigenvalues = raw_vals.head(keep);
    es.eigenfunctions.resize(q, keep);
    Eigen::VectorXd inv_sqrt_w = sqrt_w.cwiseInverse();
    for (int k = 0; k < keep; ++k) {
        Eigen::VectorXd phi = inv_sqrt_w.asDiagonal() * raw_vecs.col(k);
        // Deterministic sign: first coordinate with magnitude above 1e-8
        // must be positive.
        for (int g = 0; g < q; ++g) {
            if (std::abs(phi[g]) > 1e-8) {
                if (phi[g] < 0.0) phi = -phi;
                break;
            }
        }
        es.eigenfunctions.col(k) = phi;
    }

    es.eigengaps.resize(keep);
    for (int k = 0; k < keep; ++k) {
        double up = k == 0 ? std::numeric_limits<double>::infinity()
                           : es.eigenvalues[k - 1] - es.eigenvalues[k];
        double next = k + 1 < raw_vals.size() ? std::max(raw_vals[k + 1], 0.0) : 0.0;
        double down = es.eigenvalues[k] - next;
        es.eigengaps[k] = std::min(up, down);
    }

    es.fve.resize(keep);
    double total = es.eigenvalues.sum();
    double running = 0.0;
    for (int k = 0; k < keep; ++k) {
        running += es.eigenvalues[k];
        es.fve[k] = running / total;
    }
    if (keep > 0) es.fve[keep - 1] = 1.0;  // guard fp drift at the top
    return es;
}

int select_K_fve(const EigenSystem& eigen, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ValidationError("select_K_fve: threshold must lie in (0,1]");
    }
    if (eigen.n_components() < 1) {
        throw ValidationError("select_K_fve: no positive eigenvalue");
    }
    for (int k = 0; k < eigen.n_components(); ++k) {
        if (eigen.fve[k] >= threshold) return k + 1;
    }
    return eigen.n_components();
}

double evaluate_eigenfunction(const EigenSystem& eigen, int k, double t) {
    if (k < 0 || k >= eigen.n_components()) {
        throw ValidationError("evaluate_eigenfunction: component index out of range");
    }
    return interp_linear(eigen.grid.points, eigen.eigenfunctions.col(k), t);
}

FittedFpcaModel fit_fpca(const SparseFunctionalDataset& dataset, const Grid& grid,
                         const Bandwidths& bw, Kernel kernel, double fve_threshold,
                         int fixed_K) {
    bw.validate(grid.width());
    FittedFpcaModel model;
    model.mean = estimate_mean(dataset, grid, bw.h_mu, kernel);
    model.cov = estimate_covariance(dataset, model.mean, bw.h_cov, kernel);
    model.eigen = eigendecompose(model.cov);
    if (fixed_K > 0) {
        if (fixed_K > model.eigen.n_components()) {
            throw ValidationError("fit_fpca: requested K exceeds retained components");
        }
        model.K = fixed_K;
    } else {
        model.K = select_K_fve(model.eigen, fve_threshold);
    }
    return model;
}

}  // namespace fpdist
