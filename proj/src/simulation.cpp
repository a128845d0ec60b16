#include "fpdist/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

namespace fpdist {

double SimConfig::mean_at(double t) const {
    switch (mean_spec) {
        case MeanSpec::Zero:
            return 0.0;
        case MeanSpec::HalfT:
            return 0.5 * t;
        case MeanSpec::TPlusSin:
            return t + std::sin(t);
    }
    return 0.0;
}

double SimConfig::basis_at(int k, double t) const {
    if (basis == Basis::Paper5Trig) {
        static const double inv_sqrt5 = 1.0 / std::sqrt(5.0);
        if (k == 0) return -std::cos(M_PI * t / 10.0) * inv_sqrt5;
        // k >= 1 maps to sin((2(k+1)-3) pi t / 10) = sin((2k-1) pi t / 10).
        return std::sin((2.0 * k - 1.0) * M_PI * t / 10.0) * inv_sqrt5;
    }
    // Brownian motion eigenfunctions on [0,1].
    return std::sqrt(2.0) * std::sin((2.0 * k + 1.0) * M_PI * t / 2.0);
}

Eigen::MatrixXd SimConfig::basis_on_grid(const Grid& grid, int K) const {
    Eigen::MatrixXd phi(grid.size(), K);
    for (int g = 0; g < grid.size(); ++g) {
        for (int k = 0; k < K; ++k) phi(g, k) = basis_at(k, grid.points[g]);
    }
    return phi;
}

void SimConfig::validate() const {
    if (K_true < 1) throw ValidationError("SimConfig: K_true must be >= 1");
    if (eigenvalues.size() != K_true || beta.size() != K_true) {
        throw ValidationError("SimConfig: eigenvalues and beta must have length K_true");
    }
    for (int k = 0; k < K_true; ++k) {
        if (!(eigenvalues[k] > 0.0)) {
            throw ValidationError("SimConfig: eigenvalues must be positive");
        }
        if (k > 0 && eigenvalues[k] > eigenvalues[k - 1]) {
            throw ValidationError("SimConfig: eigenvalues must be nonincreasing");
        }
    }
    if (sigma < 0.0 || sigma_y < 0.0) throw ValidationError("SimConfig: negative noise sd");
    if (n < 1) throw ValidationError("SimConfig: n must be >= 1");
    if (m0 < 1) throw ValidationError("SimConfig: m0 must be >= 1");
    if (design == DesignType::RandomNi && m0 < 2) {
        throw ValidationError("SimConfig: random design needs m0 >= 2");
    }
    if (time_sampling == TimeSampling::Grid100 && m0 > 100) {
        throw ValidationError("SimConfig: m0 exceeds the 100-point sampling grid");
    }
    if (grid_size < 2) throw ValidationError("SimConfig: grid_size must be >= 2");
    if (replicates < 1) throw ValidationError("SimConfig: replicates must be >= 1");
}

SimConfig SimConfig::paper5() {
    SimConfig c;
    c.basis = Basis::Paper5Trig;
    c.K_true = 4;
    c.eigenvalues.resize(4);
    for (int k = 1; k <= 4; ++k) c.eigenvalues[k - 1] = 4.0 / ((1.0 + k) * (1.0 + k));
    c.mean_spec = MeanSpec::HalfT;
    c.beta0 = 0.5;
    c.beta.resize(4);
    c.beta << 1.0, -1.0, 0.5, -0.5;
    return c;
}

SimConfig SimConfig::figure1() {
    SimConfig c;
    c.basis = Basis::Paper5Trig;
    c.K_true = 2;
    c.eigenvalues.resize(2);
    c.eigenvalues << 1.0, 4.0 / 9.0;
    c.mean_spec = MeanSpec::TPlusSin;
    c.sigma = 0.5;
    c.beta0 = 0.0;
    c.beta = Eigen::VectorXd::Zero(2);
    c.time_sampling = TimeSampling::Uniform;
    return c;
}

SimConfig SimConfig::brownian(int K_true) {
    SimConfig c;
    c.basis = Basis::Brownian;
    c.K_true = K_true;
    c.eigenvalues.resize(K_true);
    for (int m = 1; m <= K_true; ++m) {
        double odd = 2.0 * m - 1.0;
        c.eigenvalues[m - 1] = 4.0 / (M_PI * M_PI * odd * odd);
    }
    c.mean_spec = MeanSpec::Zero;
    c.beta0 = 0.0;
    c.beta = Eigen::VectorXd::Zero(K_true);
    return c;
}

namespace {

std::vector<double> draw_times(const SimConfig& config, int m, Rng& rng) {
    const double a = config.domain_a(), b = config.domain_b();
    std::vector<double> times(m);
    if (config.time_sampling == TimeSampling::Grid100) {
        if (m > 100) throw ValidationError("simulate_dataset: n_i exceeds the sampling grid");
        Eigen::VectorXd grid100 = Eigen::VectorXd::LinSpaced(100, a, b);
        std::vector<int> idx = rng.sample_without_replacement(100, m);
        for (int j = 0; j < m; ++j) times[j] = grid100[idx[j]];
    } else {
        for (int j = 0; j < m; ++j) times[j] = rng.uniform(a, b);
        std::sort(times.begin(), times.end());
    }
    return times;
}

}  // namespace

SimulatedData simulate_dataset(const SimConfig& config, Rng& rng) {
    config.validate();
    SimulatedData sim;
    sim.grid = config.make_grid();
    const int n = config.n;
    const int K = config.K_true;

    Eigen::MatrixXd phi_grid = config.basis_on_grid(sim.grid, K);
    Eigen::VectorXd mu_grid(sim.grid.size());
    for (int g = 0; g < sim.grid.size(); ++g) mu_grid[g] = config.mean_at(sim.grid.points[g]);

    sim.xi.resize(n, K);
    sim.paths.resize(n, sim.grid.size());
    sim.eta.resize(n);
    sim.y.resize(n);
    sim.dataset.domain_a = config.domain_a();
    sim.dataset.domain_b = config.domain_b();
    sim.dataset.subjects.reserve(n);

    char idbuf[16];
    for (int i = 0; i < n; ++i) {
        int m = config.m0;
        if (config.design == DesignType::RandomNi) {
            m = 2 + static_cast<int>(rng.integer_below(static_cast<uint64_t>(config.m0 - 1)));
        }
        std::vector<double> times = draw_times(config, m, rng);

        for (int k = 0; k < K; ++k) {
            sim.xi(i, k) = rng.normal(0.0, std::sqrt(config.eigenvalues[k]));
        }

        SubjectRecord subj;
        std::snprintf(idbuf, sizeof(idbuf), "s%05d", i + 1);
        subj.id = idbuf;
        subj.times = times;
        subj.values.resize(m);
        for (int j = 0; j < m; ++j) {
            double latent = config.mean_at(times[j]);
            for (int k = 0; k < K; ++k) latent += sim.xi(i, k) * config.basis_at(k, times[j]);
            subj.values[j] = latent + config.sigma * rng.normal();
        }

        sim.paths.row(i) = (mu_grid + phi_grid * sim.xi.row(i).transpose()).transpose();
        sim.eta[i] = config.beta0 + config.beta.dot(sim.xi.row(i));
        sim.y[i] = sim.eta[i] + config.sigma_y * rng.normal();
        sim.dataset.responses.emplace(subj.id, sim.y[i]);
        sim.dataset.subjects.push_back(std::move(subj));
    }
    return sim;
}

ScorePredictive oracle_blup(const SimConfig& config, const std::vector<double>& times,
                            const std::vector<double>& values, int K) {
    if (K < 1 || K > config.K_true) {
        throw ValidationError("oracle_blup: K must lie in [1, K_true]");
    }
    if (times.size() != values.size() || times.empty()) {
        throw ValidationError("oracle_blup: times/values mismatch");
    }
    const int m = static_cast<int>(times.size());
    Eigen::MatrixXd phi(m, config.K_true);
    Eigen::VectorXd x(m);
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < config.K_true; ++k) phi(j, k) = config.basis_at(k, times[j]);
        x[j] = values[j] - config.mean_at(times[j]);
    }
    Eigen::MatrixXd sigma = phi * config.eigenvalues.asDiagonal() * phi.transpose();
    sigma.diagonal().array() += config.sigma * config.sigma;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw EstimationError("oracle_blup: observation covariance singular");
    }
    Eigen::MatrixXd phi_K = phi.leftCols(K);
    Eigen::VectorXd lambda_K = config.eigenvalues.head(K);

    ScorePredictive sp;
    sp.mean = lambda_K.asDiagonal() * (phi_K.transpose() * llt.solve(x));
    Eigen::MatrixXd phi_lambda = phi_K * lambda_K.asDiagonal();
    Eigen::MatrixXd cond = Eigen::MatrixXd(lambda_K.asDiagonal()) -
                           phi_lambda.transpose() * llt.solve(phi_lambda);
    sp.covariance = 0.5 * (cond + cond.transpose());
    return sp;
}

FittedFpcaModel build_oracle_model(const SimConfig& config, const Grid& grid) {
    FittedFpcaModel model;
    model.mean.grid = grid;
    model.mean.values.resize(grid.size());
    for (int g = 0; g < grid.size(); ++g) {
        model.mean.values[g] = config.mean_at(grid.points[g]);
    }
    Eigen::MatrixXd phi = config.basis_on_grid(grid, config.K_true);
    model.cov.grid = grid;
    model.cov.values = phi * config.eigenvalues.asDiagonal() * phi.transpose();
    model.cov.sigma2 = config.sigma * config.sigma;
    model.eigen.grid = grid;
    model.eigen.eigenvalues = config.eigenvalues;
    model.eigen.eigenfunctions = phi;
    model.eigen.eigengaps.resize(config.K_true);
    for (int k = 0; k < config.K_true; ++k) {
        double up = k == 0 ? std::numeric_limits<double>::infinity()
                           : config.eigenvalues[k - 1] - config.eigenvalues[k];
        double down = config.eigenvalues[k] -
                      (k + 1 < config.K_true ? config.eigenvalues[k + 1] : 0.0);
        model.eigen.eigengaps[k] = std::min(up, down);
    }
    double total = config.eigenvalues.sum();
    model.eigen.fve.resize(config.K_true);
    double running = 0.0;
    for (int k = 0; k < config.K_true; ++k) {
        running += config.eigenvalues[k];
        model.eigen.fve[k] = running / total;
    }
    model.K = config.K_true;
    return model;
}

FlmModel build_oracle_flm(const SimConfig& config, const Grid& grid, int M) {
    if (M < 1 || M > config.K_true) {
        throw ValidationError("build_oracle_flm: M must lie in [1, K_true]");
    }
    FlmModel flm;
    flm.beta0 = config.beta0;
    flm.M = M;
    flm.grid = grid;
    flm.lambda_k = config.eigenvalues.head(M);
    flm.beta_k = config.beta.head(M);
    flm.sigma_k = flm.lambda_k.cwiseProduct(flm.beta_k);
    flm.beta_curve = config.basis_on_grid(grid, M) * flm.beta_k;
    flm.cross.grid = grid;
    flm.cross.values = config.basis_on_grid(grid, config.K_true) *
                       config.eigenvalues.cwiseProduct(config.beta);
    return flm;
}

PopulationDiscrepancy population_discrepancy_oracle(const SimConfig& config, int K,
                                                    int n_mc, uint64_t seed) {
    config.validate();
    if (K < 1 || K > config.K_true) {
        throw ValidationError("population_discrepancy_oracle: K must lie in [1, K_true]");
    }
    if (n_mc < 100) {
        throw ValidationError("population_discrepancy_oracle: n_mc must be >= 100");
    }
    Rng rng(derive_seed(seed, {0x9D15u}));

    const Eigen::VectorXd beta_K = config.beta.head(K);
    const Eigen::VectorXd lambda_K = config.eigenvalues.head(K);
    double tail = 0.0;
    for (int k = K; k < config.K_true; ++k) {
        tail += config.eigenvalues[k] * config.beta[k] * config.beta[k];
    }

    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < n_mc; ++r) {
        int m = config.m0;
        if (config.design == DesignType::RandomNi) {
            m = 2 + static_cast<int>(rng.integer_below(static_cast<uint64_t>(config.m0 - 1)));
        }
        std::vector<double> times = draw_times(config, m, rng);
        Eigen::MatrixXd phi(m, config.K_true);
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < config.K_true; ++k) phi(j, k) = config.basis_at(k, times[j]);
        }
        Eigen::MatrixXd sigma = phi * config.eigenvalues.asDiagonal() * phi.transpose();
        sigma.diagonal().array() += config.sigma * config.sigma;
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) {
            throw EstimationError("population_discrepancy_oracle: singular design draw");
        }
        Eigen::MatrixXd phi_K = phi.leftCols(K);
        Eigen::MatrixXd phi_lambda = phi_K * lambda_K.asDiagonal();
        Eigen::MatrixXd cond = Eigen::MatrixXd(lambda_K.asDiagonal()) -
                               phi_lambda.transpose() * llt.solve(phi_lambda);
        double draw = 2.0 * beta_K.dot(cond * beta_K);

        if (K < config.K_true) {
            Eigen::VectorXd tail_curve = Eigen::VectorXd::Zero(m);
            for (int k = K; k < config.K_true; ++k) {
                tail_curve += config.eigenvalues[k] * config.beta[k] * phi.col(k);
            }
            draw -= 2.0 * beta_K.dot(phi_lambda.transpose() * llt.solve(tail_curve));
        }
        sum += draw;
        sum_sq += draw * draw;
    }
    double mean_draw = sum / n_mc;
    double var_draw = std::max(0.0, sum_sq / n_mc - mean_draw * mean_draw);

    PopulationDiscrepancy out;
    out.value = mean_draw + config.sigma_y * config.sigma_y + tail;
    out.se = std::sqrt(var_draw / n_mc);
    return out;
}

}  // namespace fpdist
