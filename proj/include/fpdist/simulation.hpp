#ifndef FPDIST_SIMULATION_HPP
#define FPDIST_SIMULATION_HPP

#include <cstdint>
#include <vector>

#include "fpdist/flm.hpp"

namespace fpdist {

enum class Basis { Paper5Trig, Brownian };
enum class MeanSpec { Zero, HalfT, TPlusSin };
enum class DesignType { FixedM0, RandomNi };
enum class TimeSampling { Grid100, Uniform };

/// Generative truth for the simulation studies. The trig preset lives on
/// [0,10] with phi_1 = -cos(pi t/10)/sqrt(5), phi_k = sin((2k-3)pi t/10)/sqrt(5)
/// and lambda_k = 4/(1+k)^2; the Brownian preset on [0,1] with
/// phi_m = sqrt(2) sin((2m-1)pi t/2)and lambda_m = 4/(pi^2 (2m-1)^2).
struct SimConfig {
    Basis basis = Basis::Paper5Trig;
    int K_true = 4;
    Eigen::VectorXd eigenvalues;  // length K_true, positive decreasing
    MeanSpec mean_spec = MeanSpec::HalfT;
    double sigma = 0.5;    // predictor noise sd
    double sigma_y = 0.5;  // response noise sd
    double beta0 = 0.5;
    Eigen::VectorXd beta;  // length K_true
    int n = 500;
    DesignType design = DesignType::FixedM0;
    int m0 = 2;
    TimeSampling time_sampling = TimeSampling::Grid100;
    int grid_size = 51;
    uint64_t seed = 1;
    int replicates = 200;

    double domain_a() const { return 0.0; }
    double domain_b() const { return basis == Basis::Paper5Trig ? 10.0 : 1.0; }
    double mean_at(double t) const;
    double basis_at(int k, double t) const;  // k is 0-based
    Grid make_grid() const { return Grid::uniform(domain_a(), domain_b(), grid_size); }
    Eigen::MatrixXd basis_on_grid(const Grid& grid, int K) const;
    void validate() const;

    /// Table-study preset (Section-5-style four-component trig process).
    static SimConfig paper5();
    /// Shrinkage-figure preset: two components, mean t + sin t, uniform times.
    static SimConfig figure1();
    static SimConfig brownian(int K_true);
};

struct SimulatedData {
    SparseFunctionalDataset dataset;
    Grid grid;
    Eigen::MatrixXd xi;     // n x K_true true scores
    Eigen::MatrixXd paths;  // n x grid_size latent trajectories (uncentered)
    Eigen::VectorXd eta;    // beta0 + beta . xi
    Eigen::VectorXd y;      // eta + response noise
};

/// Draws scores, sampling times, noisy observations and responses; keeps the
/// generative truth for downstream oracles.
SimulatedData simulate_dataset(const SimConfig& config, Rng& rng);

// ---------------------------------------------------------------------------
// Oracle-mode computations: population quantities evaluated analytically at
// the subject's times (no estimation, no interpolation).

/// BLUP and conditional covariance with true population quantities.
ScorePredictive oracle_blup(const SimConfig& config, const std::vector<double>& times,
                            const std::vector<double>& values, int K);

/// FittedFpcaModel whose mean/covariance/eigensystem are the generative truth
/// discretized on `grid` (for oracle-mode table runs).
FittedFpcaModel build_oracle_model(const SimConfig& config, const Grid& grid);

/// FlmModel carrying the true intercept and slope coefficients.
FlmModel build_oracle_flm(const SimConfig& config, const Grid& grid, int M);

struct PopulationDiscrepancy {
    double value = 0.0;
    double se = 0.0;  // Monte Carlo standard error over design draws
};

/// Population-level Wasserstein discrepancy
/// D_K = 2 b' E(Sigma_1K) b + sigma_Y^2 + sum_{k>K} lambda_k beta_k^2
///       - 2 b' E[Lambda_K Phi' Sigma^{-1} sum_{k>K} phi_k(T) lambda_k beta_k],
/// Monte Carlo over independent design draws. Requires n_mc >= 100.
PopulationDiscrepancy population_discrepancy_oracle(const SimConfig& config, int K,
                                                    int n_mc, uint64_t seed);

}  // namespace fpdist

#endif  // FPDIST_SIMULATION_HPP
