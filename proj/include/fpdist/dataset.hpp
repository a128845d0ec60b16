#ifndef FPDIST_DATASET_HPP
#define FPDIST_DATASET_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpdist/numerics.hpp"

namespace fpdist {

/// Quadrature grid carrying the discretization of every function and
/// operator in the pipeline. Weights default to trapezoid rule and must sum
/// to the domain width.
struct Grid {
    Eigen::VectorXd points;   // strictly increasing, spans [a,b]
    Eigen::VectorXd weights;  // positive quadrature weights

    static Grid uniform(double a, double b, int n);
    static Grid from_points(Eigen::VectorXd pts);

    int size() const { return static_cast<int>(points.size()); }
    double a() const { return points[0]; }
    double b() const { return points[points.size() - 1]; }
    double width() const { return b() - a(); }
    bool same_as(const Grid& other, double tol = 1e-12) const;

    void validate() const;
};

/// One subject's irregular observations. Times sorted ascending (ties kept),
/// values in lockstep.
struct SubjectRecord {
    std::string id;
    std::vector<double> times;
    std::vector<double> values;

    int n_obs() const { return static_cast<int>(times.size()); }
};

struct SparseFunctionalDataset {
    std::vector<SubjectRecord> subjects;
    double domain_a = 0.0;
    double domain_b = 1.0;
    std::map<std::string, double> responses;  // optional scalar Y per subject

    int n_subjects() const { return static_cast<int>(subjects.size()); }
    int total_obs() const;
    bool has_response(const std::string& id) const { return responses.count(id) > 0; }

    /// Enforces the type invariants: unique ids, n_i >= 1, times sorted and
    /// inside [domain_a, domain_b], values in lockstep.
    void validate() const;
};

/// Column mapping for CSV ingestion; defaults match `id,time,value[,y]`.
struct CsvSchema {
    std::string id_column = "id";
    std::string time_column = "time";
    std::string value_column = "value";
    std::string response_column = "y";  // picked up when present
    std::optional<std::pair<double, double>> domain_override;

    static CsvSchema from_json_file(const std::string& path);
};

SparseFunctionalDataset load_csv(const std::string& path, const CsvSchema& schema = {});
void save_csv(const SparseFunctionalDataset& dataset, const std::string& path);

/// Invertible affine time map t -> scale*t + offset.
struct AffineMap {
    double scale = 1.0;
    double offset = 0.0;

    double apply(double t) const { return scale * t + offset; }
    double invert(double t) const { return (t - offset) / scale; }
    AffineMap inverse() const { return {1.0 / scale, -offset / scale}; }
};

struct RescaledDataset {
    SparseFunctionalDataset dataset;
    AffineMap map;  // original time -> target time
};

/// Affine map of all observation times onto `target`; values unchanged.
RescaledDataset rescale_domain(const SparseFunctionalDataset& dataset,
                               std::pair<double, double> target);

}  // namespace fpdist

#endif  // FPDIST_DATASET_HPP
