#include "fpdist/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace fpdist {

namespace {

std::string format_compact(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

std::string format_csv_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

}  // namespace

std::string TableCell::label() const {
    return "s" + format_compact(sigma) + "_sy" + format_compact(sigma_y) + "_m" +
           std::to_string(m0) + "_n" + std::to_string(n);
}

uint64_t TableCell::stream_key() const {
    return derive_seed(0xF9C4ull, {key_from_double(sigma), key_from_double(sigma_y),
                                   static_cast<uint64_t>(m0), static_cast<uint64_t>(n)});
}

std::vector<TableCell> default_table_cells() {
    const std::vector<std::pair<double, double>> noise = {{0.5, 0.5}, {0.5, 1.0}, {1.0, 0.5}};
    std::vector<TableCell> cells;
    for (auto [s, sy] : noise) {
        for (int m0 : {2, 8, 20}) {
            for (int n : {500, 2000}) {
                cells.push_back({s, sy, m0, n});
            }
        }
    }
    return cells;
}

namespace {

struct ReplicateOutcome {
    double d = 0.0;
    double uw = 0.0;
    bool failed = false;
};

ReplicateOutcome run_table_replicate(const TableCell& cell, const TableOptions& options,
                                     uint64_t replicate_seed) {
    ReplicateOutcome out;
    try {
        SimConfig config = SimConfig::paper5();
        config.sigma = cell.sigma;
        config.sigma_y = cell.sigma_y;
        config.m0 = cell.m0;
        config.n = cell.n;
        config.grid_size = options.grid_size;
        Rng rng(replicate_seed);
        SimulatedData sim = simulate_dataset(config, rng);

        FittedFpcaModel model;
        FlmModel flm;
        if (options.oracle) {
            model = build_oracle_model(config, sim.grid);
            flm = build_oracle_flm(config, sim.grid, options.M);
        } else {
            Bandwidths bw = Bandwidths::defaults(config.n, sim.grid.width());
            model = fit_fpca(sim.dataset, sim.grid, bw, Kernel::Epanechnikov, 0.95, options.K);
            flm = fit_flm(model, sim.dataset, options.M, bw.h_cross);
        }

        out.d = wasserstein_discrepancy(flm, model, sim.dataset, options.K).total;

        std::vector<double> targets(sim.eta.data(), sim.eta.data() + sim.eta.size());
        out.uw = uniformity_diagnostic(flm, model, sim.dataset, targets, options.K).u_w;
    } catch (const Error&) {
        out.failed = true;
    }
    return out;
}

void reduce_cell(CellResult& res, const std::vector<ReplicateOutcome>& outcomes) {
    double d_sum = 0.0, d_sq = 0.0, uw_sum = 0.0, uw_sq = 0.0;
    int ok = 0;
    for (const auto& o : outcomes) {
        if (o.failed) {
            ++res.fail_count;
            continue;
        }
        ++ok;
        d_sum += o.d;
        d_sq += o.d * o.d;
        uw_sum += o.uw;
        uw_sq += o.uw * o.uw;
    }
    res.n_rep = ok;
    if (ok > 0) {
        res.d_mean = d_sum / ok;
        res.uw_mean = uw_sum / ok;
        if (ok > 1) {
            double dv = std::max(0.0, (d_sq - ok * res.d_mean * res.d_mean) / (ok - 1));
            double uv = std::max(0.0, (uw_sq - ok * res.uw_mean * res.uw_mean) / (ok - 1));
            res.d_se = std::sqrt(dv / ok);
            res.uw_se = std::sqrt(uv / ok);
        }
    }
    res.valid = res.fail_count * 20 <= static_cast<int>(outcomes.size());  // <= 5%
}

}  // namespace

ExperimentResult run_table_experiment(const TableOptions& options) {
    if (options.replicates < 50) {
        throw ValidationError("run_table_experiment: need >= 50 replicates");
    }
    if (options.cells.empty()) {
        throw ValidationError("run_table_experiment: no cells requested");
    }
    const int threads = resolve_threads(options.threads);

    ExperimentResult result;
    result.cells.resize(options.cells.size());
    for (size_t c = 0; c < options.cells.size(); ++c) {
        const TableCell& cell = options.cells[c];
        const uint64_t cell_key = cell.stream_key();
        std::vector<ReplicateOutcome> outcomes(options.replicates);
        parallel_for(options.replicates, threads, [&](int r) {
            uint64_t seed = derive_seed(options.seed, {cell_key, static_cast<uint64_t>(r)});
            outcomes[r] = run_table_replicate(cell, options, seed);
        });
        result.cells[c].cell = cell;
        reduce_cell(result.cells[c], outcomes);
    }
    return result;
}

std::string table_csv(const ExperimentResult& result, TableStatistic stat) {
    std::string out = "cell,mean,se,n_rep,fail_count\n";
    for (const auto& c : result.cells) {
        double mean = stat == TableStatistic::Discrepancy ? c.d_mean : c.uw_mean;
        double se = stat == TableStatistic::Discrepancy ? c.d_se : c.uw_se;
        out += c.cell.label();
        out += ',';
        out += format_csv_double(mean);
        out += ',';
        out += format_csv_double(se);
        out += ',';
        out += std::to_string(c.n_rep);
        out += ',';
        out += std::to_string(c.fail_count);
        out += '\n';
    }
    return out;
}

ExperimentResult run_table1(const TableOptions& options) {
    return run_table_experiment(options);
}

ExperimentResult run_table2(const TableOptions& options) {
    return run_table_experiment(options);
}

ShrinkageResult run_shrinkage_figure(const ShrinkageOptions& options) {
    SimConfig config = SimConfig::figure1();
    config.sigma = options.sigma;
    config.time_sampling = options.time_sampling;
    config.validate();

    // One fixed latent subject shared by every panel.
    Rng subject_rng(derive_seed(options.seed, {0x51Bull}));
    ShrinkageResult result;
    result.true_scores.resize(2);
    for (int k = 0; k < 2; ++k) {
        result.true_scores[k] = subject_rng.normal(0.0, std::sqrt(config.eigenvalues[k]));
    }

    for (int m : options.densities) {
        for (int d = 0; d < options.draws; ++d) {
            Rng rng(derive_seed(options.seed,
                                {static_cast<uint64_t>(m), static_cast<uint64_t>(d) + 1}));
            std::vector<double> times(m);
            if (config.time_sampling == TimeSampling::Grid100) {
                Eigen::VectorXd grid100 =
                    Eigen::VectorXd::LinSpaced(100, config.domain_a(), config.domain_b());
                std::vector<int> idx = rng.sample_without_replacement(100, m);
                for (int j = 0; j < m; ++j) times[j] = grid100[idx[j]];
            } else {
                for (int j = 0; j < m; ++j) {
                    times[j] = rng.uniform(config.domain_a(), config.domain_b());
                }
                std::sort(times.begin(), times.end());
            }
            std::vector<double> values(m);
            for (int j = 0; j < m; ++j) {
                double latent = config.mean_at(times[j]);
                for (int k = 0; k < 2; ++k) {
                    latent += result.true_scores[k] * config.basis_at(k, times[j]);
                }
                values[j] = latent + config.sigma * rng.normal();
            }
            ScorePredictive sp = oracle_blup(config, times, values, 2);
            ShrinkageDraw out;
            out.m = m;
            out.draw = d;
            out.center = sp.mean;
            out.contour = contour_ellipse(sp, options.level, options.n_points);
            result.draws.push_back(std::move(out));
        }
    }
    return result;
}

void write_shrinkage_csv(const ShrinkageResult& result, const std::string& prefix) {
    std::ofstream contours(prefix + "_contours.csv");
    std::ofstream centers(prefix + "_centers.csv");
    std::ofstream truth(prefix + "_truth.csv");
    if (!contours || !centers || !truth) {
        throw ParseError("cannot open shrinkage output files with prefix " + prefix);
    }
    contours << "m,draw,x,y\n";
    centers << "m,draw,x,y\n";
    truth << "x,y\n";
    truth << format_csv_double(result.true_scores[0]) << ','
          << format_csv_double(result.true_scores[1]) << '\n';
    for (const auto& d : result.draws) {
        centers << d.m << ',' << d.draw << ',' << format_csv_double(d.center[0]) << ','
                << format_csv_double(d.center[1]) << '\n';
        for (int i = 0; i < d.contour.rows(); ++i) {
            contours << d.m << ',' << d.draw << ',' << format_csv_double(d.contour(i, 0))
                     << ',' << format_csv_double(d.contour(i, 1)) << '\n';
        }
    }
}

const char* rate_quantity_name(RateQuantity q) {
    switch (q) {
        case RateQuantity::ScoreError:
            return "score_error";
        case RateQuantity::SigmaNorm:
            return "sigma_norm";
        case RateQuantity::W2ToAtom:
            return "w2_to_atom";
    }
    return "unknown";
}

RateResult run_rate_study(RateQuantity quantity, const RateOptions& options) {
    if (options.m_values.size() < 4) {
        throw ValidationError("run_rate_study: need at least 4 values of m");
    }
    auto [mn, mx] = std::minmax_element(options.m_values.begin(), options.m_values.end());
    if (*mn < 1 || *mx < 10 * *mn) {
        throw ValidationError("run_rate_study: m values must span at least one decade");
    }
    if (options.replicates < 10) {
        throw ValidationError("run_rate_study: need at least 10 replicates");
    }

    SimConfig config = SimConfig::paper5();
    config.sigma = options.sigma;
    config.time_sampling = TimeSampling::Uniform;  // m may exceed the 100-point grid
    config.grid_size = options.grid_size;
    Grid grid = config.make_grid();
    Eigen::MatrixXd phi_grid = config.basis_on_grid(grid, config.K_true);
    const int threads = resolve_threads(options.threads);

    RateResult result;
    result.quantity = quantity;
    result.m_values = options.m_values;
    result.medians.resize(options.m_values.size());

    for (size_t mi = 0; mi < options.m_values.size(); ++mi) {
        const int m = options.m_values[mi];
        std::vector<double> stats(options.replicates);
        parallel_for(options.replicates, threads, [&](int r) {
            Rng rng(derive_seed(options.seed, {0xA7E5ull, static_cast<uint64_t>(m),
                                               static_cast<uint64_t>(r)}));
            Eigen::VectorXd xi(config.K_true);
            for (int k = 0; k < config.K_true; ++k) {
                xi[k] = rng.normal(0.0, std::sqrt(config.eigenvalues[k]));
            }
            std::vector<double> times(m), values(m);
            for (int j = 0; j < m; ++j) {
                times[j] = rng.uniform(config.domain_a(), config.domain_b());
            }
            std::sort(times.begin(), times.end());
            for (int j = 0; j < m; ++j) {
                double latent = config.mean_at(times[j]);
                for (int k = 0; k < config.K_true; ++k) {
                    latent += xi[k] * config.basis_at(k, times[j]);
                }
                values[j] = latent + config.sigma * rng.normal();
            }
            ScorePredictive sp = oracle_blup(config, times, values, config.K_true);
            switch (quantity) {
                case RateQuantity::ScoreError:
                    stats[r] = std::abs(sp.mean[0] - xi[0]);
                    break;
                case RateQuantity::SigmaNorm: {
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sp.covariance);
                    stats[r] = es.eigenvalues().cwiseAbs().maxCoeff();
                    break;
                }
                case RateQuantity::W2ToAtom: {
                    FunctionalGaussian fg;
                    fg.grid = grid;
                    fg.mean_curve = phi_grid * sp.mean;
                    fg.cov_kernel = phi_grid * sp.covariance * phi_grid.transpose();
                    Eigen::VectorXd atom = phi_grid * xi;  // centered latent path
                    stats[r] = w2_gaussian_to_atom(fg, atom);
                    break;
                }
            }
        });
        result.medians[mi] = median(stats);
    }

    std::vector<double> log_m, log_med;
    for (size_t i = 0; i < result.m_values.size(); ++i) {
        log_m.push_back(std::log(static_cast<double>(result.m_values[i])));
        log_med.push_back(std::log(result.medians[i]));
    }
    result.slope = ols_slope(log_m, log_med);
    return result;
}

std::string rate_json(const RateResult& result) {
    nlohmann::json j;
    j["quantity"] = rate_quantity_name(result.quantity);
    j["m"] = result.m_values;
    j["medians"] = result.medians;
    j["slope"] = result.slope;
    return j.dump(2) + "\n";
}

}  // namespace fpdist
