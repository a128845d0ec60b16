#include "fpdist/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace fpdist {

Grid Grid::uniform(double a, double b, int n) {
    if (!(a < b)) throw ValidationError("Grid: domain must satisfy a < b");
    if (n < 2) throw ValidationError("Grid: need at least 2 points");
    Eigen::VectorXd pts = Eigen::VectorXd::LinSpaced(n, a, b);
    return from_points(std::move(pts));
}

Grid Grid::from_points(Eigen::VectorXd pts) {
    Grid g;
    g.weights = trapezoid_weights(pts);
    g.points = std::move(pts);
    g.validate();
    return g;
}

bool Grid::same_as(const Grid& other, double tol) const {
    if (size() != other.size()) return false;
    return (points - other.points).cwiseAbs().maxCoeff() <= tol &&
           (weights - other.weights).cwiseAbs().maxCoeff() <= tol;
}

void Grid::validate() const {
    if (points.size() < 2) throw ValidationError("Grid: need at least 2 points");
    for (int i = 0; i + 1 < points.size(); ++i) {
        if (!(points[i] < points[i + 1])) {
            throw ValidationError("Grid: points must be strictly increasing");
        }
    }
    if ((weights.array() <= 0.0).any()) {
        throw ValidationError("Grid: weights must be positive");
    }
    double total = weights.sum();
    double span = width();
    if (std::abs(total - span) > 1e-10 * std::max(1.0, std::abs(span))) {
        throw ValidationError("Grid: weights must sum to the domain width");
    }
}

int SparseFunctionalDataset::total_obs() const {
    int total = 0;
    for (const auto& s : subjects) total += s.n_obs();
    return total;
}

void SparseFunctionalDataset::validate() const {
    if (!(domain_a <= domain_b)) throw ValidationError("dataset: invalid domain");
    std::unordered_map<std::string, int> seen;
    for (const auto& s : subjects) {
        if (s.id.empty()) throw ValidationError("dataset: empty subject id");
        if (++seen[s.id] > 1) {
            throw ValidationError("dataset: duplicate subject id '" + s.id + "'");
        }
        if (s.times.empty()) {
            throw ValidationError("dataset: subject '" + s.id + "' has no observations");
        }
        if (s.times.size() != s.values.size()) {
            throw ValidationError("dataset: times/values length mismatch for '" + s.id + "'");
        }
        double slack = 1e-9 * (domain_b - domain_a);
        for (size_t j = 0; j < s.times.size(); ++j) {
            double t = s.times[j];
            if (!std::isfinite(t) || !std::isfinite(s.values[j])) {
                throw ValidationError("dataset: non-finite entry for '" + s.id + "'");
            }
            if (t < domain_a - slack || t > domain_b + slack) {
                throw ValidationError("dataset: time outside domain for '" + s.id + "'");
            }
            if (j > 0 && s.times[j] < s.times[j - 1]) {
                throw ValidationError("dataset: times not sorted for '" + s.id + "'");
            }
        }
    }
}

CsvSchema CsvSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open schema file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("schema file " + path + ": " + e.what());
    }
    CsvSchema s;
    if (j.contains("id")) s.id_column = j.at("id").get<std::string>();
    if (j.contains("time")) s.time_column = j.at("time").get<std::string>();
    if (j.contains("value")) s.value_column = j.at("value").get<std::string>();
    if (j.contains("y")) s.response_column = j.at("y").get<std::string>();
    if (j.contains("domain")) {
        auto d = j.at("domain");
        if (!d.is_array() || d.size() != 2) {
            throw SchemaError("schema 'domain' must be [a, b]");
        }
        s.domain_override = std::make_pair(d[0].get<double>(), d[1].get<double>());
    }
    return s;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // Trim surrounding whitespace.
        size_t b = cell.find_first_not_of(" \t\r");
        size_t e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

double parse_double_cell(const std::string& cell, int data_row, const std::string& column) {
    double out;
    const char* first = cell.data();
    const char* last = first + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
        throw ParseError("parse error at row " + std::to_string(data_row) + ": column '" +
                         column + "' value '" + cell + "' is not numeric");
    }
    return out;
}

}  // namespace

SparseFunctionalDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open data file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty dataset: " + path);
    std::vector<std::string> header = split_csv_line(line);

    auto find_col = [&](const std::string& name) -> int {
        for (size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    int id_col = find_col(schema.id_column);
    int time_col = find_col(schema.time_column);
    int value_col = find_col(schema.value_column);
    int y_col = find_col(schema.response_column);
    if (id_col < 0 || time_col < 0 || value_col < 0) {
        throw SchemaError("missing required column(s) in " + path + ": need '" +
                          schema.id_column + "', '" + schema.time_column + "', '" +
                          schema.value_column + "'");
    }

    SparseFunctionalDataset ds;
    std::unordered_map<std::string, int> index_of;
    int data_row = 0;
    bool any = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++data_row;
        auto cells = split_csv_line(line);
        int needed = std::max({id_col, time_col, value_col});
        if (static_cast<int>(cells.size()) <= needed) {
            throw ParseError("parse error at row " + std::to_string(data_row) +
                             ": expected at least " + std::to_string(needed + 1) + " columns");
        }
        const std::string& id = cells[id_col];
        if (id.empty()) {
            throw ParseError("parse error at row " + std::to_string(data_row) + ": empty id");
        }
        double t = parse_double_cell(cells[time_col], data_row, schema.time_column);
        double v = parse_double_cell(cells[value_col], data_row, schema.value_column);

        auto it = index_of.find(id);
        int si;
        if (it == index_of.end()) {
            si = static_cast<int>(ds.subjects.size());
            index_of.emplace(id, si);
            ds.subjects.push_back(SubjectRecord{id, {}, {}});
        } else {
            si = it->second;
        }
        ds.subjects[si].times.push_back(t);
        ds.subjects[si].values.push_back(v);
        if (y_col >= 0 && y_col < static_cast<int>(cells.size()) && !cells[y_col].empty()) {
            double y = parse_double_cell(cells[y_col], data_row, schema.response_column);
            auto [rit, inserted] = ds.responses.emplace(id, y);
            if (!inserted && rit->second != y) {
                throw ParseError("parse error at row " + std::to_string(data_row) +
                                 ": conflicting response for subject '" + id + "'");
            }
        }
        any = true;
    }
    if (!any) throw ParseError("empty dataset: " + path);

    // Sort times within subject, values in lockstep; stable so tied times
    // keep their file order.
    for (auto& s : ds.subjects) {
        std::vector<int> order(s.times.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return s.times[a] < s.times[b]; });
        std::vector<double> ts(s.times.size()), vs(s.values.size());
        for (size_t j = 0; j < order.size(); ++j) {
            ts[j] = s.times[order[j]];
            vs[j] = s.values[order[j]];
        }
        s.times = std::move(ts);
        s.values = std::move(vs);
    }

    if (schema.domain_override) {
        ds.domain_a = schema.domain_override->first;
        ds.domain_b = schema.domain_override->second;
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& s : ds.subjects) {
            lo = std::min(lo, s.times.front());
            hi = std::max(hi, s.times.back());
        }
        ds.domain_a = lo;
        ds.domain_b = hi;
    }
    ds.validate();
    return ds;
}

void save_csv(const SparseFunctionalDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    const bool with_y = !dataset.responses.empty();
    out << (with_y ? "id,time,value,y\n" : "id,time,value\n");
    char buf[64];
    auto fmt = [&](double x) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        return std::string(buf);
    };
    for (const auto& s : dataset.subjects) {
        auto rit = dataset.responses.find(s.id);
        for (size_t j = 0; j < s.times.size(); ++j) {
            out << s.id << ',' << fmt(s.times[j]) << ',' << fmt(s.values[j]);
            if (with_y) {
                out << ',';
                if (rit != dataset.responses.end()) out << fmt(rit->second);
            }
            out << '\n';
        }
    }
}

RescaledDataset rescale_domain(const SparseFunctionalDataset& dataset,
                               std::pair<double, double> target) {
    double a = dataset.domain_a, b = dataset.domain_b;
    if (!(a < b)) throw ValidationError("rescale_domain: degenerate domain");
    if (!(target.first < target.second)) {
        throw ValidationError("rescale_domain: degenerate target interval");
    }
    AffineMap m;
    m.scale = (target.second - target.first) / (b - a);
    m.offset = target.first - m.scale * a;

    RescaledDataset out;
    out.map = m;
    out.dataset = dataset;
    out.dataset.domain_a = target.first;
    out.dataset.domain_b = target.second;
    for (auto& s : out.dataset.subjects) {
        for (auto& t : s.times) t = m.apply(t);
    }
    return out;
}

}  // namespace fpdist
