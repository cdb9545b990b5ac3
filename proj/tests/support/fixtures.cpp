#include "fixtures.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fixtures {

oracle::Mat to_oracle(const Eigen::MatrixXd& m) {
  oracle::Mat out{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), {}};
  out.a.resize(out.rows * out.cols);
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) = m(i, j);
  }
  return out;
}

oracle::Vec to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::MatrixXd random_matrix(std::size_t n, std::size_t p, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = z(rng);
  }
  return x;
}

namespace {

Eigen::MatrixXd blocks(std::size_t n, std::size_t m, double rho, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double shared = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j % 5 == 0) shared = z(rng);
      x(i, j) = std::sqrt(rho) * shared + std::sqrt(1.0 - rho) * z(rng);
    }
  }
  return x;
}

Eigen::VectorXd arms(std::size_t n, std::mt19937_64& rng) {
  std::bernoulli_distribution b(0.5);
  Eigen::VectorXd t(n);
  for (std::size_t i = 0; i < n; ++i) t(i) = b(rng) ? 1.0 : 0.0;
  return t;
}

std::vector<std::string> names(std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < m; ++j) out.push_back("b" + std::to_string(j + 1));
  return out;
}

}  // namespace

twostage::TrialDataset start_like(std::uint64_t seed) {
  const std::size_t n = 684, m = 75;
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd x = blocks(n, m, 0.1, rng);
  const Eigen::VectorXd t = arms(n, rng);
  std::normal_distribution<double> z;
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mu = 0.5 * t(i);
    // One strong marker in each of the first ten blocks, strengths 1.0 .. 0.55.
    for (std::size_t k = 0; k < 10; ++k) mu += (1.0 - 0.05 * k) * x(i, 5 * k);
    y(i) = mu + 2.0 * z(rng);
  }
  return {y, t, x, names(m), twostage::Family::linear};
}

twostage::TrialDataset stopah_like(std::uint64_t seed) {
  const std::size_t n = 1068, m = 40;
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd x = blocks(n, m, 0.8, rng);
  const Eigen::VectorXd t = arms(n, rng);
  std::uniform_real_distribution<double> u;
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Opposing effects inside block 1 and a single effect in block 2: the
    // marginal signal of a block differs from its conditional one.
    const double eta = -0.5 + 0.3 * t(i) + 1.2 * x(i, 0) - 1.0 * x(i, 1) + 0.6 * x(i, 5);
    y(i) = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return {y, t, x, names(m), twostage::Family::logistic};
}

void write_csv(const std::string& path, const twostage::TrialDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "id,y,arm";
  for (const auto& name : data.names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << "p" << i + 1 << ',' << data.outcome()(i) << ','
        << (data.treatment()(i) == 1.0 ? "treated" : "control");
    for (std::size_t j = 0; j < data.m(); ++j) out << ',' << data.biomarkers()(i, j);
    out << '\n';
  }
}

}  // namespace fixtures
