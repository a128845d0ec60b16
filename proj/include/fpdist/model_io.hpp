#ifndef FPDIST_MODEL_IO_HPP
#define FPDIST_MODEL_IO_HPP

#include <string>

#include "fpdist/simulation.hpp"

namespace fpdist {

/// Versioned JSON model artifact: grid, mean, covariance surface, sigma^2,
/// eigenpairs and the selected truncation.
void save_model(const FittedFpcaModel& model, const std::string& path);
FittedFpcaModel load_model(const std::string& path);

SimConfig sim_config_from_json_file(const std::string& path);
SimConfig sim_config_from_json(const std::string& text);

}  // namespace fpdist

#endif  // FPDIST_MODEL_IO_HPP
