#pragma once

#include "oracles.hpp"
#include "twostage/model_core.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace fixtures {

oracle::Mat to_oracle(const Eigen::MatrixXd& m);
oracle::Vec to_vec(const Eigen::VectorXd& v);
Eigen::MatrixXd random_matrix(std::size_t n, std::size_t p, std::mt19937_64& rng);

// Randomized-trial shape-alikes with equicorrelated blocks of 5 biomarkers.
// start_like: n = 684, 75 covariates, rho = 0.1, linear outcome.
// stopah_like: n = 1068, 40 covariates, rho = 0.8, binary outcome.
twostage::TrialDataset start_like(std::uint64_t seed);
twostage::TrialDataset stopah_like(std::uint64_t seed);

// Writes `data` as CSV with columns id, y, arm (control/treated), then the
// biomarkers under their names.
void write_csv(const std::string& path, const twostage::TrialDataset& data);

}  // namespace fixtures
