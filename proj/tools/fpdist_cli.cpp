// Command-line front end: simulation, fitting, prediction, functional
// regression and the table/figure/rate experiment drivers.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fpdist/experiments.hpp"
#include "fpdist/model_io.hpp"

namespace {

using namespace fpdist;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

Kernel parse_kernel(const std::string& name) {
    if (name == "epanechnikov") return Kernel::Epanechnikov;
    if (name == "gauss") return Kernel::GaussianTruncated;
    if (name == "uniform") return Kernel::Uniform;
    throw ValidationError("unknown kernel '" + name + "'");
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    out << text;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    for (double v : parse_double_list(csv)) out.push_back(static_cast<int>(v));
    return out;
}

struct CommonArgs {
    std::string data, model, config, out, schema;
    uint64_t seed = 1;
    bool seed_set = false;
    int replicates = 0;
    int threads = 0;
    bool oracle = false;
    bool full_scale = false;
};

int cmd_simulate(const CommonArgs& args, const std::string& truth_path) {
    SimConfig config = args.config.empty() ? SimConfig::paper5()
                                           : sim_config_from_json_file(args.config);
    if (args.seed_set) config.seed = args.seed;
    Rng rng(derive_seed(config.seed, {0x51Dull}));
    SimulatedData sim = simulate_dataset(config, rng);
    save_csv(sim.dataset, args.out.empty() ? "simulated.csv" : args.out);
    if (!truth_path.empty()) {
        nlohmann::json j;
        j["grid"] = std::vector<double>(sim.grid.points.data(),
                                        sim.grid.points.data() + sim.grid.size());
        nlohmann::json xi = nlohmann::json::array();
        for (int i = 0; i < sim.xi.rows(); ++i) {
            xi.push_back(std::vector<double>(sim.xi.row(i).data(),
                                             sim.xi.row(i).data() + sim.xi.cols()));
        }
        j["xi"] = std::move(xi);
        j["eta"] = std::vector<double>(sim.eta.data(), sim.eta.data() + sim.eta.size());
        j["y"] = std::vector<double>(sim.y.data(), sim.y.data() + sim.y.size());
        std::ofstream out(truth_path);
        if (!out) throw ParseError("cannot open truth file: " + truth_path);
        out << j.dump(1, '\t') << '\n';
    }
    return 0;
}

int cmd_fit(const CommonArgs& args, int grid_size, double fve, int K, double h_mu,
            double h_cov, const std::string& kernel_name) {
    CsvSchema schema = args.schema.empty() ? CsvSchema{} : CsvSchema::from_json_file(args.schema);
    SparseFunctionalDataset dataset = load_csv(args.data, schema);
    Grid grid = Grid::uniform(dataset.domain_a, dataset.domain_b, grid_size);
    Bandwidths bw = Bandwidths::defaults(dataset.n_subjects(), grid.width());
    if (h_mu > 0) bw.h_mu = h_mu;
    if (h_cov > 0) bw.h_cov = h_cov;
    Kernel kernel = parse_kernel(kernel_name);
    FittedFpcaModel model = fit_fpca(dataset, grid, bw, kernel, fve, K);
    if (model.mean.widen_events > 0 || model.cov.widen_events > 0) {
        std::cerr << "warning: widen-window fallback used in " << model.mean.widen_events
                  << " mean and " << model.cov.widen_events << " covariance windows\n";
    }
    if (model.cov.sigma2_clipped) {
        std::cerr << "warning: sigma^2 estimate clipped at 0\n";
    }
    save_model(model, args.out.empty() ? "model.json" : args.out);
    return 0;
}

int cmd_predict(const CommonArgs& args, double level, int K_arg) {
    FittedFpcaModel model = load_model(args.model);
    SparseFunctionalDataset dataset = load_csv(args.data);
    int K = K_arg > 0 ? K_arg : model.K;

    std::ostringstream out;
    out << "id";
    for (int k = 1; k <= K; ++k) out << ",score_" << k;
    for (int k = 1; k <= K; ++k) out << ",var_" << k;
    const int q = model.eigen.grid.size();
    for (int g = 1; g <= q; ++g) out << ",band_lo_" << g;
    for (int g = 1; g <= q; ++g) out << ",band_hi_" << g;
    out << '\n';

    for (const auto& subj : dataset.subjects) {
        ScorePredictive sp = blup_scores(model, subj, K);
        FunctionalGaussian fg = functional_predictive_distribution(model, subj, K);
        fg.mean_curve += model.mean.values;  // bands on the trajectory scale
        PointwiseBand band = pointwise_band(fg, level);
        out << subj.id;
        for (int k = 0; k < K; ++k) out << ',' << format_double(sp.mean[k]);
        for (int k = 0; k < K; ++k) out << ',' << format_double(sp.covariance(k, k));
        for (int g = 0; g < q; ++g) out << ',' << format_double(band.lower[g]);
        for (int g = 0; g < q; ++g) out << ',' << format_double(band.upper[g]);
        out << '\n';
    }
    write_text(args.out, out.str());
    return 0;
}

int cmd_flm(const CommonArgs& args, int M_arg, int K_arg, double h_arg, bool cv,
            const std::string& kernel_name) {
    FittedFpcaModel model = load_model(args.model);
    SparseFunctionalDataset dataset = load_csv(args.data);
    Kernel kernel = parse_kernel(kernel_name);
    int M = M_arg > 0 ? M_arg : model.K;
    int K = K_arg > 0 ? K_arg : std::min(M, model.K);

    double h = h_arg;
    if (h <= 0) {
        h = Bandwidths::defaults(dataset.n_subjects(), model.eigen.grid.width()).h_cross;
    }
    if (cv) {
        double width = model.eigen.grid.width();
        std::vector<double> ladder;
        for (double f : {0.05, 0.08, 0.12, 0.2, 0.3, 0.45}) ladder.push_back(f * width);
        h = select_bandwidth_cv(dataset, model.eigen.grid, ladder, CvTarget::Cross, kernel);
    }

    FlmModel flm = fit_flm(model, dataset, M, h, kernel);
    if (flm.cross.excluded_subjects > 0) {
        std::cerr << "warning: " << flm.cross.excluded_subjects
                  << " subject(s) without response excluded from the cross-covariance\n";
    }

    std::vector<double> responses;
    std::vector<const SubjectRecord*> with_response;
    for (const auto& subj : dataset.subjects) {
        auto it = dataset.responses.find(subj.id);
        if (it == dataset.responses.end()) continue;
        responses.push_back(it->second);
        with_response.push_back(&subj);
    }
    SigmaYEstimate sy = sigma_y_estimate(flm, responses);
    if (sy.negative) {
        std::cerr << "warning: negative sigma_Y^2 estimate (small-sample bias); reported as-is\n";
    }

    // Plug-in targets: the predictive means themselves. On real data the true
    // linear predictor is unavailable; this mode is labeled in the output.
    SparseFunctionalDataset scored;
    scored.domain_a = dataset.domain_a;
    scored.domain_b = dataset.domain_b;
    for (const auto* s : with_response) {
        scored.subjects.push_back(*s);
        scored.responses.emplace(s->id, dataset.responses.at(s->id));
    }
    std::vector<double> plugin_targets;
    for (const auto* s : with_response) {
        plugin_targets.push_back(response_predictive_distribution(flm, model, *s, K).mean);
    }
    Discrepancy d = wasserstein_discrepancy(flm, model, scored, K);
    UniformityDiagnostic uw = uniformity_diagnostic(flm, model, scored, plugin_targets, K);

    nlohmann::json j;
    j["M"] = flm.M;
    j["K"] = K;
    j["h_cross"] = h;
    j["beta0"] = flm.beta0;
    j["beta_k"] = std::vector<double>(flm.beta_k.data(), flm.beta_k.data() + flm.M);
    j["sigma_k"] = std::vector<double>(flm.sigma_k.data(), flm.sigma_k.data() + flm.M);
    j["lambda_k"] = std::vector<double>(flm.lambda_k.data(), flm.lambda_k.data() + flm.M);
    j["grid"] = std::vector<double>(flm.grid.points.data(),
                                    flm.grid.points.data() + flm.grid.size());
    j["beta_curve"] = std::vector<double>(flm.beta_curve.data(),
                                          flm.beta_curve.data() + flm.beta_curve.size());
    j["sigma_y2"] = {{"value", sy.value}, {"negative_warning", sy.negative}};
    j["discrepancy"] = {{"total", d.total},
                        {"mse_term", d.mse_term},
                        {"variance_term", d.variance_term}};
    j["uniformity"] = {{"u_w", uw.u_w},
                       {"mode", "plugin"},
                       {"saturated", uw.saturated}};
    write_text(args.out, j.dump(1, '\t') + "\n");
    return 0;
}

int cmd_table(const CommonArgs& args, TableStatistic stat,
              const std::vector<std::string>& cell_specs) {
    TableOptions options;
    options.replicates = args.replicates > 0 ? args.replicates : 200;
    if (args.full_scale) options.replicates = 2000;
    options.seed = args.seed;
    options.threads = args.threads;
    options.oracle = args.oracle;
    if (!cell_specs.empty()) {
        options.cells.clear();
        for (const auto& spec : cell_specs) {
            auto vals = parse_double_list(spec);
            if (vals.size() != 4) {
                throw ValidationError("--cell expects sigma,sigma_y,m0,n");
            }
            options.cells.push_back({vals[0], vals[1], static_cast<int>(vals[2]),
                                     static_cast<int>(vals[3])});
        }
    }
    ExperimentResult result = run_table_experiment(options);
    write_text(args.out, table_csv(result, stat));
    return 0;
}

int cmd_shrinkage(const CommonArgs& args, const std::string& densities, double level,
                  int draws) {
    ShrinkageOptions options;
    options.seed = args.seed;
    options.level = level;
    options.draws = draws;
    if (!densities.empty()) options.densities = parse_int_list(densities);
    ShrinkageResult result = run_shrinkage_figure(options);
    write_shrinkage_csv(result, args.out.empty() ? "shrinkage" : args.out);
    return 0;
}

int cmd_rates(const CommonArgs& args, const std::string& quantity, const std::string& ms) {
    RateQuantity q;
    if (quantity == "score_error") {
        q = RateQuantity::ScoreError;
    } else if (quantity == "sigma_norm") {
        q = RateQuantity::SigmaNorm;
    } else if (quantity == "w2_to_atom") {
        q = RateQuantity::W2ToAtom;
    } else {
        throw ValidationError("unknown rate quantity '" + quantity + "'");
    }
    RateOptions options;
    options.seed = args.seed;
    options.threads = args.threads;
    if (args.replicates > 0) options.replicates = args.replicates;
    if (!ms.empty()) options.m_values = parse_int_list(ms);
    RateResult result = run_rate_study(q, options);
    write_text(args.out, rate_json(result));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive distributions for sparse functional data"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string truth_path, kernel_name = "epanechnikov", densities, quantity, ms;
    std::vector<std::string> cell_specs;
    int grid_size = 51, K = 0, M = 0, draws = 10;
    double fve = 0.95, level = 0.95, h_mu = 0, h_cov = 0, h_cross = 0;
    bool cv = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", args.seed, "RNG seed")->each([&](const std::string&) {
            args.seed_set = true;
        });
        cmd->add_option("--threads", args.threads, "worker threads (0 = auto)");
        cmd->add_option("--out", args.out, "output path (default stdout where applicable)");
    };

    auto* sim = app.add_subcommand("simulate", "draw a synthetic dataset");
    sim->add_option("--config", args.config, "simulation config JSON");
    sim->add_option("--truth", truth_path, "also write the generative truth (JSON)");
    add_common(sim);

    auto* fit = app.add_subcommand("fit", "estimate mean/covariance/eigenpairs from CSV");
    fit->add_option("--data", args.data, "input CSV")->required();
    fit->add_option("--schema", args.schema, "column mapping JSON");
    fit->add_option("--grid-size", grid_size, "analysis grid size");
    fit->add_option("--fve", fve, "FVE threshold for K selection");
    fit->add_option("--K", K, "fix the truncation instead of FVE");
    fit->add_option("--h-mu", h_mu, "mean bandwidth (default rate-based)");
    fit->add_option("--h-cov", h_cov, "covariance bandwidth (default rate-based)");
    fit->add_option("--kernel", kernel_name, "epanechnikov|gauss|uniform");
    add_common(fit);

    auto* predict = app.add_subcommand("predict", "per-subject scores, variances and bands");
    predict->add_option("--model", args.model, "model artifact JSON")->required();
    predict->add_option("--data", args.data, "input CSV")->required();
    predict->add_option("--level", level, "band level");
    predict->add_option("--K", K, "truncation (default: model K)");
    add_common(predict);

    auto* flm = app.add_subcommand("flm", "scalar-on-function regression + diagnostics");
    flm->add_option("--model", args.model, "model artifact JSON")->required();
    flm->add_option("--data", args.data, "input CSV with response column")->required();
    flm->add_option("--M", M, "slope truncation (default: model K)");
    flm->add_option("--K", K, "predictive truncation (default: min(M, model K))");
    flm->add_option("--h", h_cross, "cross-covariance bandwidth");
    flm->add_flag("--cv", cv, "choose the cross bandwidth by leave-one-out CV");
    flm->add_option("--kernel", kernel_name, "epanechnikov|gauss|uniform");
    add_common(flm);

    auto* table1 = app.add_subcommand("table1", "Wasserstein discrepancy table");
    auto* table2 = app.add_subcommand("table2", "uniformity statistic table");
    for (auto* cmd : {table1, table2}) {
        cmd->add_option("--replicates", args.replicates, "replicates per cell (default 200)");
        cmd->add_flag("--full-scale", args.full_scale, "2000 replicates per cell");
        cmd->add_flag("--oracle", args.oracle, "use true population quantities");
        cmd->add_option("--cell", cell_specs, "restrict to cells 'sigma,sigma_y,m0,n'");
        add_common(cmd);
    }

    auto* shrink = app.add_subcommand("shrinkage", "predictive-contour shrinkage figure data");
    shrink->add_option("--densities", densities, "comma list of n_i values");
    shrink->add_option("--level", level, "contour level");
    shrink->add_option("--draws", draws, "time/noise draws per density");
    add_common(shrink);

    auto* rates = app.add_subcommand("rates", "oracle-mode convergence-rate study");
    rates->add_option("--quantity", quantity, "score_error|sigma_norm|w2_to_atom")->required();
    rates->add_option("--m", ms, "comma list of observation counts");
    rates->add_option("--replicates", args.replicates, "replicates per m");
    add_common(rates);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(args, truth_path);
        if (fit->parsed()) return cmd_fit(args, grid_size, fve, K, h_mu, h_cov, kernel_name);
        if (predict->parsed()) return cmd_predict(args, level, K);
        if (flm->parsed()) return cmd_flm(args, M, K, h_cross, cv, kernel_name);
        if (table1->parsed()) return cmd_table(args, TableStatistic::Discrepancy, cell_specs);
        if (table2->parsed()) return cmd_table(args, TableStatistic::Uniformity, cell_specs);
        if (shrink->parsed()) return cmd_shrinkage(args, densities, level, draws);
        if (rates->parsed()) return cmd_rates(args, quantity, ms);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
