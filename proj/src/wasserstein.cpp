#include "fpdist/wasserstein.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace fpdist {

double Gaussian1D::cdf(double x) const {
    if (variance < 0.0) throw ValidationError("Gaussian1D: negative variance");
    if (variance == 0.0) return x < mean ? 0.0 : 1.0;
    return normal_cdf((x - mean) / std::sqrt(variance));
}

QuantileFunction QuantileFunction::normal(double mean, double sd) {
    if (sd < 0.0) throw ValidationError("QuantileFunction::normal: negative sd");
    QuantileFunction q;
    if (sd == 0.0) {
        q.eval = [mean](double) { return mean; };
    } else {
        q.eval = [mean, sd](double p) { return mean + sd * normal_quantile(p); };
    }
    return q;
}

QuantileFunction QuantileFunction::point_mass(double value) {
    QuantileFunction q;
    q.eval = [value](double) { return value; };
    return q;
}

QuantileFunction QuantileFunction::uniform01() {
    QuantileFunction q;
    q.eval = [](double p) { return p; };
    return q;
}

QuantileFunction QuantileFunction::empirical(std::vector<double> sample) {
    if (sample.empty()) throw ValidationError("QuantileFunction::empirical: empty sample");
    std::sort(sample.begin(), sample.end());
    const int n = static_cast<int>(sample.size());
    QuantileFunction q;
    q.breakpoints.reserve(n - 1);
    for (int i = 1; i < n; ++i) q.breakpoints.push_back(static_cast<double>(i) / n);
    q.eval = [data = std::move(sample), n](double p) {
        // Generalized inverse: inf{s : F(s) >= p} = x_(ceil(n p)).
        int i = static_cast<int>(std::ceil(p * n));
        i = std::clamp(i, 1, n);
        return data[i - 1];
    };
    return q;
}

double w2_univariate(const QuantileFunction& q1, const QuantileFunction& q2, int n_quad) {
    if (n_quad < 16) throw ValidationError("w2_univariate: n_quad must be >= 16");

    // Subdivide (0,1) at the union of breakpoints.
    std::vector<double> cuts{0.0, 1.0};
    cuts.insert(cuts.end(), q1.breakpoints.begin(), q1.breakpoints.end());
    cuts.insert(cuts.end(), q2.breakpoints.begin(), q2.breakpoints.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const int pieces = static_cast<int>(cuts.size()) - 1;
    const int per_piece = std::max(4, (n_quad + pieces - 1) / pieces);
    std::vector<double> nodes, weights;
    gauss_legendre(per_piece, nodes, weights);

    double total = 0.0;
    double prev1 = -std::numeric_limits<double>::infinity();
    double prev2 = prev1;
    const double mono_tol = 1e-9;
    for (int s = 0; s < pieces; ++s) {
        const double a = cuts[s], b = cuts[s + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (int i = 0; i < per_piece; ++i) {
            double p = mid + half * nodes[i];
            double v1 = q1.eval(p);
            double v2 = q2.eval(p);
            double scale1 = std::max(1.0, std::abs(v1));
            double scale2 = std::max(1.0, std::abs(v2));
            if (v1 < prev1 - mono_tol * scale1 || v2 < prev2 - mono_tol * scale2) {
                throw ValidationError("w2_univariate: non-monotone quantile evaluations");
            }
            prev1 = v1;
            prev2 = v2;
            double d = v1 - v2;
            total += weights[i] * half * d * d;
        }
    }
    return total;
}

double w2_gaussian_1d(const Gaussian1D& g1, const Gaussian1D& g2) {
    if (g1.variance < 0.0 || g2.variance < 0.0) {
        throw ValidationError("w2_gaussian_1d: negative variance");
    }
    double dm = g1.mean - g2.mean;
    double ds = g1.sd() - g2.sd();
    return dm * dm + ds * ds;
}

namespace {

// Weighted-space operator matrix A = W^{1/2} G W^{1/2}; eigenvalues below
// -1e-6 * max are rejected, small negatives clipped.
Eigen::MatrixXd weighted_operator(const FunctionalGaussian& g) {
    Eigen::VectorXd sqrt_w = g.grid.weights.cwiseSqrt();
    Eigen::MatrixXd a = sqrt_w.asDiagonal() * g.cov_kernel * sqrt_w.asDiagonal();
    return 0.5 * (a + a.transpose()).eval();
}

void check_psd(const Eigen::VectorXd& eigs, const char* what) {
    double top = std::max(eigs.cwiseAbs().maxCoeff(), 1e-300);
    if (eigs.minCoeff() < -1e-6 * top) {
        throw ValidationError(std::string(what) + ": kernel not PSD to tolerance");
    }
}

}  // namespace

double w2_gaussian_hilbert(const FunctionalGaussian& g1, const FunctionalGaussian& g2) {
    if (!g1.grid.same_as(g2.grid)) {
        throw ValidationError("w2_gaussian_hilbert: mismatched grids");
    }
    Eigen::VectorXd dm = g1.mean_curve - g2.mean_curve;
    double mean_term = dm.cwiseProduct(dm).dot(g1.grid.weights);

    Eigen::MatrixXd a1 = weighted_operator(g1);
    Eigen::MatrixXd a2 = weighted_operator(g2);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(a1);
    check_psd(es1.eigenvalues(), "w2_gaussian_hilbert");
    Eigen::VectorXd sqrt_l1 = es1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd root1 = es1.eigenvectors() * sqrt_l1.asDiagonal() *
                            es1.eigenvectors().transpose();

    Eigen::MatrixXd inner = root1 * a2 * root1;
    inner = 0.5 * (inner + inner.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_inner(inner);
    check_psd(es_inner.eigenvalues(), "w2_gaussian_hilbert");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(a2);
    check_psd(es2.eigenvalues(), "w2_gaussian_hilbert");

    double trace_term = es1.eigenvalues().cwiseMax(0.0).sum() +
                        es2.eigenvalues().cwiseMax(0.0).sum() -
                        2.0 * es_inner.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::max(0.0, mean_term + trace_term);
}

double w2_gaussian_to_atom(const FunctionalGaussian& g, const Eigen::VectorXd& atom) {
    if (atom.size() != g.grid.points.size()) {
        throw ValidationError("w2_gaussian_to_atom: atom not on the same grid");
    }
    Eigen::VectorXd d = g.mean_curve - atom;
    double mean_term = d.cwiseProduct(d).dot(g.grid.weights);
    return mean_term + g.quadrature_trace();
}

double uniformity_statistic(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("uniformity_statistic: empty input");
    std::vector<double> z(values);
    for (double v : z) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValidationError("uniformity_statistic: value outside [0,1]");
        }
    }
    std::sort(z.begin(), z.end());
    const double n = static_cast<double>(z.size());
    double total = 0.0;
    for (size_t idx = 0; idx < z.size(); ++idx) {
        double i = static_cast<double>(idx + 1);
        double im1 = i - 1.0;
        total += z[idx] * z[idx] / n - z[idx] * (i * i - im1 * im1) / (n * n) +
                 (i * i * i - im1 * im1 * im1) / (3.0 * n * n * n);
    }
    return total;
}

}  // namespace fpdist
