#ifndef FPDIST_EXPERIMENTS_HPP
#define FPDIST_EXPERIMENTS_HPP

#include <string>
#include <vector>

#include "fpdist/simulation.hpp"

namespace fpdist {

// ---------------------------------------------------------------------------
// Table experiments: Wasserstein discrepancy and uniformity statistic over a
// grid of noise levels, sparsity designs and sample sizes.

struct TableCell {
    double sigma = 0.5;
    double sigma_y = 0.5;
    int m0 = 2;
    int n = 500;

    std::string label() const;     // compact, e.g. s0.5_sy0.5_m2_n500
    uint64_t stream_key() const;   // stable across cell subsets
};

/// The nine designs of the simulation study: noise rows (0.5,0.5), (0.5,1.0),
/// (1.0,0.5) crossed with m0 in {2,8,20} and n in {500,2000}.
std::vector<TableCell> default_table_cells();

struct TableOptions {
    int replicates = 200;
    uint64_t seed = 1;
    int threads = 0;      // 0 = hardware concurrency
    bool oracle = false;  // true population quantities, no estimation
    int K = 4;
    int M = 4;
    int grid_size = 51;
    std::vector<TableCell> cells = default_table_cells();
};

struct CellResult {
    TableCell cell;
    double d_mean = 0.0, d_se = 0.0;    // discrepancy statistic
    double uw_mean = 0.0, uw_se = 0.0;  // uniformity statistic
    int n_rep = 0;                      // successful replicates
    int fail_count = 0;
    bool valid = true;  // false when more than 5% of replicates failed
};

struct ExperimentResult {
    std::vector<CellResult> cells;
};

/// Full pipeline per replicate (simulate, fit FPCA, fit FLM, both
/// statistics); replicate-indexed RNG streams make the result independent of
/// the worker count. Requires replicates >= 50.
ExperimentResult run_table_experiment(const TableOptions& options);

enum class TableStatistic { Discrepancy, Uniformity };

/// CSV view with header `cell,mean,se,n_rep,fail_count`.
std::string table_csv(const ExperimentResult& result, TableStatistic stat);

ExperimentResult run_table1(const TableOptions& options);  // reports discrepancy
ExperimentResult run_table2(const TableOptions& options);  // reports uniformity

// ---------------------------------------------------------------------------
// Shrinkage figure: predictive-score contours for one latent subject under
// increasing observation density.

struct ShrinkageOptions {
    uint64_t seed = 1;
    std::vector<int> densities = {2, 10, 50};
    int draws = 10;  // independent time/noise realizations per density
    double level = 0.95;
    int n_points = 128;
    double sigma = 0.5;
    TimeSampling time_sampling = TimeSampling::Uniform;
};

struct ShrinkageDraw {
    int m = 0;
    int draw = 0;
    Eigen::MatrixX2d contour;
    Eigen::Vector2d center;
};

struct ShrinkageResult {
    Eigen::Vector2d true_scores;
    std::vector<ShrinkageDraw> draws;
};

ShrinkageResult run_shrinkage_figure(const ShrinkageOptions& options);

/// Writes <prefix>_contours.csv, <prefix>_centers.csv, <prefix>_truth.csv.
void write_shrinkage_csv(const ShrinkageResult& result, const std::string& prefix);

// ---------------------------------------------------------------------------
// Convergence-rate studies in oracle mode (population quantities, uniform
// sampling times).

enum class RateQuantity { ScoreError, SigmaNorm, W2ToAtom };

struct RateOptions {
    std::vector<int> m_values = {10, 20, 40, 80, 160};
    int replicates = 300;
    uint64_t seed = 1;
    int threads = 0;
    int grid_size = 101;
    double sigma = 0.5;
};

struct RateResult {
    RateQuantity quantity;
    std::vector<int> m_values;
    std::vector<double> medians;
    double slope = 0.0;  // OLS slope of log(median) on log(m)
};

/// Requires >= 4 values of m spanning at least one decade.
RateResult run_rate_study(RateQuantity quantity, const RateOptions& options);

std::string rate_json(const RateResult& result);

const char* rate_quantity_name(RateQuantity q);

}  // namespace fpdist

#endif  // FPDIST_EXPERIMENTS_HPP
