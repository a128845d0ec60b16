#include "fpdist/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace fpdist {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    if (rows.empty()) return {};
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) {
            throw ParseError("model artifact: ragged matrix");
        }
        for (size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j].get<double>();
        }
    }
    return m;
}

}  // namespace

void save_model(const FittedFpcaModel& model, const std::string& path) {
    json j;
    j["format"] = "fpdist-model";
    j["version"] = 1;
    j["grid"]["points"] = vector_to_json(model.eigen.grid.points);
    j["grid"]["weights"] = vector_to_json(model.eigen.grid.weights);
    j["mean"] = vector_to_json(model.mean.values);
    j["covariance"] = matrix_to_json(model.cov.values);
    j["sigma2"] = model.cov.sigma2;
    j["sigma2_clipped"] = model.cov.sigma2_clipped;
    j["eigenvalues"] = vector_to_json(model.eigen.eigenvalues);
    j["eigenfunctions"] = matrix_to_json(model.eigen.eigenfunctions);
    j["eigengaps"] = vector_to_json(model.eigen.eigengaps);
    j["fve"] = vector_to_json(model.eigen.fve);
    j["K"] = model.K;

    std::ofstream out(path);
    if (!out) throw ParseError("cannot open model output file: " + path);
    out << j.dump(1, '\t') << '\n';
}

FittedFpcaModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("model file " + path + ": " + e.what());
    }
    if (!j.contains("format") || j["format"] != "fpdist-model") {
        throw SchemaError("model file " + path + ": not a fpdist model artifact");
    }
    if (j.value("version", 0) != 1) {
        throw SchemaError("model file " + path + ": unsupported version");
    }
    try {
        FittedFpcaModel model;
        Grid grid;
        grid.points = vector_from_json(j.at("grid").at("points"));
        grid.weights = vector_from_json(j.at("grid").at("weights"));
        grid.validate();
        model.mean.grid = grid;
        model.mean.values = vector_from_json(j.at("mean"));
        model.cov.grid = grid;
        model.cov.values = matrix_from_json(j.at("covariance"));
        model.cov.sigma2 = j.at("sigma2").get<double>();
        model.cov.sigma2_clipped = j.value("sigma2_clipped", false);
        model.eigen.grid = grid;
        model.eigen.eigenvalues = vector_from_json(j.at("eigenvalues"));
        model.eigen.eigenfunctions = matrix_from_json(j.at("eigenfunctions"));
        model.eigen.eigengaps = vector_from_json(j.at("eigengaps"));
        model.eigen.fve = vector_from_json(j.at("fve"));
        model.K = j.at("K").get<int>();
        if (model.mean.values.size() != grid.points.size() ||
            model.eigen.eigenfunctions.rows() != grid.points.size() ||
            model.eigen.eigenfunctions.cols() != model.eigen.eigenvalues.size() ||
            model.K < 1 || model.K > model.eigen.n_components()) {
            throw SchemaError("model file " + path + ": inconsistent dimensions");
        }
        return model;
    } catch (const json::exception& e) {
        throw ParseError("model file " + path + ": " + e.what());
    }
}

namespace {

template <typename T>
T enum_from_string(const std::string& s, std::initializer_list<std::pair<const char*, T>> table,
                   const char* what) {
    for (const auto& [name, value] : table) {
        if (s == name) return value;
    }
    throw SchemaError(std::string("config: unknown ") + what + " '" + s + "'");
}

}  // namespace

SimConfig sim_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }

    SimConfig c = SimConfig::paper5();
    if (j.contains("basis")) {
        auto basis = enum_from_string<Basis>(j["basis"].get<std::string>(),
                                             {{"paper5", Basis::Paper5Trig},
                                              {"brownian", Basis::Brownian}},
                                             "basis");
        int K = j.value("K_true", basis == Basis::Brownian ? 4 : c.K_true);
        c = basis == Basis::Brownian ? SimConfig::brownian(K) : SimConfig::paper5();
    }
    if (j.contains("K_true") && j["K_true"].get<int>() != c.K_true) {
        int K = j["K_true"].get<int>();
        if (c.basis == Basis::Brownian) {
            c = SimConfig::brownian(K);
        } else if (K >= 1) {
            // Extend/truncate the trig preset.
            Eigen::VectorXd ev(K), beta = Eigen::VectorXd::Zero(K);
            for (int k = 1; k <= K; ++k) ev[k - 1] = 4.0 / ((1.0 + k) * (1.0 + k));
            for (int k = 0; k < std::min(K, 4); ++k) beta[k] = c.beta[k];
            c.K_true = K;
            c.eigenvalues = ev;
            c.beta = beta;
        }
    }
    if (j.contains("eigenvalues")) c.eigenvalues = vector_from_json(j["eigenvalues"]);
    if (j.contains("beta")) c.beta = vector_from_json(j["beta"]);
    if (j.contains("mean")) {
        c.mean_spec = enum_from_string<MeanSpec>(j["mean"].get<std::string>(),
                                                 {{"zero", MeanSpec::Zero},
                                                  {"t_half", MeanSpec::HalfT},
                                                  {"t_plus_sin", MeanSpec::TPlusSin}},
                                                 "mean");
    }
    if (j.contains("sigma")) c.sigma = j["sigma"].get<double>();
    if (j.contains("sigma_y")) c.sigma_y = j["sigma_y"].get<double>();
    if (j.contains("beta0")) c.beta0 = j["beta0"].get<double>();
    if (j.contains("n")) c.n = j["n"].get<int>();
    if (j.contains("design")) {
        c.design = enum_from_string<DesignType>(j["design"].get<std::string>(),
                                                {{"fixed", DesignType::FixedM0},
                                                 {"random", DesignType::RandomNi}},
                                                "design");
    }
    if (j.contains("m0")) c.m0 = j["m0"].get<int>();
    if (j.contains("time_sampling")) {
        c.time_sampling =
            enum_from_string<TimeSampling>(j["time_sampling"].get<std::string>(),
                                           {{"grid100", TimeSampling::Grid100},
                                            {"uniform", TimeSampling::Uniform}},
                                           "time_sampling");
    }
    if (j.contains("grid_size")) c.grid_size = j["grid_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
    c.validate();
    return c;
}

SimConfig sim_config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sim_config_from_json(text);
}

}  // namespace fpdist
