#ifndef FPDIST_NUMERICS_HPP
#define FPDIST_NUMERICS_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fpdist {

// Error hierarchy. Preconditions and invariant violations raise
// ValidationError, file/format problems raise ParseError/SchemaError,
// numerical failures inside estimators raise EstimationError.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct EstimationError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Normal distribution helpers

double normal_pdf(double x);
double normal_cdf(double x);

/// Inverse standard normal CDF, accurate to ~1e-15 (rational approximation
/// plus one Halley refinement). Requires p in (0,1).
double normal_quantile(double p);

/// Chi-square(2) quantile: -2 log(1-p).
double chi2_2_quantile(double p);

// ---------------------------------------------------------------------------
// Quadrature

/// Gauss-Legendre nodes and weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Trapezoid quadrature weights for a strictly increasing point set.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& points);

// ---------------------------------------------------------------------------
// Interpolation on sorted abscissae

/// Linear interpolation of (xs, ys) at x. xs strictly increasing; x must lie
/// in [xs.front(), xs.back()] up to a tiny roundoff slack.
double interp_linear(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double x);

/// Index i and fraction u with x = xs[i] + u*(xs[i+1]-xs[i]), u in [0,1].
std::pair<int, double> interp_locate(const Eigen::VectorXd& xs, double x);

// ---------------------------------------------------------------------------
// Small statistics helpers

double median(std::vector<double> values);  // by value: sorts a copy

/// OLS slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Seeded RNG with explicit stream derivation.
//
// Streams are derived from (seed, key...) by SplitMix64 mixing, so
// per-replicate streams are independent of scheduling and worker count.

uint64_t splitmix64(uint64_t& state);
uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> keys);
uint64_t key_from_double(double x);

class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    double uniform();  // [0,1)
    double uniform(double a, double b);
    double normal();  // Box-Muller with cached spare
    double normal(double mean, double sd);
    uint64_t integer_below(uint64_t n);  // uniform on {0,...,n-1}

    /// k distinct indices from {0,...,population-1}, sorted ascending.
    std::vector<int> sample_without_replacement(int population, int k);

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Replicate-level parallelism. fn(i) is called once for each i in
// [0, count); results must be written to preallocated slots so the outcome
// is independent of scheduling.

void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Worker count resolution: FPCA_PREDICT_THREADS env var overrides
/// `requested`; requested == 0 means hardware concurrency.
int resolve_threads(int requested);

}  // namespace fpdist

#endif  // FPDIST_NUMERICS_HPP
