#ifndef FPDIST_SPECTRAL_HPP
#define FPDIST_SPECTRAL_HPP

#include <Eigen/Core>

#include "fpdist/smoothing.hpp"

namespace fpdist {

/// Eigenpairs of the discretized covariance operator under quadrature
/// weights. Eigenfunctions are quadrature-orthonormal columns; signs follow
/// the first-significant-coordinate-positive convention.
struct EigenSystem {
    Grid grid;
    Eigen::VectorXd eigenvalues;     // nonincreasing, > 0 after flooring
    Eigen::MatrixXd eigenfunctions;  // grid.size() x K columns
    Eigen::VectorXd eigengaps;       // delta_k = min(l_{k-1}-l_k, l_k-l_{k+1})
    Eigen::VectorXd fve;             // cumulative fraction of variance

    int n_components() const { return static_cast<int>(eigenvalues.size()); }
};

struct FittedFpcaModel {
    MeanFunction mean;
    CovarianceSurface cov;
    EigenSystem eigen;
    int K = 0;  // selected truncation, <= eigen.n_components()
};

/// Solves the weighted symmetric eigenproblem W^{1/2} G W^{1/2} u = l u and
/// maps back phi = W^{-1/2} u. Eigenvalues below 1e-10 * l_1 are discarded.
EigenSystem eigendecompose(const CovarianceSurface& cov, int max_components = 0);

/// Smallest K whose cumulative fraction of variance reaches `threshold`.
int select_K_fve(const EigenSystem& eigen, double threshold);

/// Linear interpolation of eigenfunction k (0-based) at time t.
double evaluate_eigenfunction(const EigenSystem& eigen, int k, double t);

/// Convenience pipeline: mean, covariance, eigensystem and FVE-selected K.
FittedFpcaModel fit_fpca(const SparseFunctionalDataset& dataset, const Grid& grid,
                         const Bandwidths& bw, Kernel kernel = Kernel::Epanechnikov,
                         double fve_threshold = 0.95, int fixed_K = 0);

}  // namespace fpdist

#endif  // FPDIST_SPECTRAL_HPP
