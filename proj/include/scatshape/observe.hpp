#pragma once

// Point measurements of the total field on a ring, Gaussian noise model,
// and synthetic data generation with recorded provenance.

#include "scatshape/forward.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace scatshape {

struct MeasurementSetup {
  int K = 100;
  double r1 = 0.06;
  enum class Mode { Amplitude, RealPart };
  Mode mode = Mode::Amplitude;

  void validate(double maxShapeRadius, double R) const;
};

std::vector<Eigen::Vector2d> measurementPoints(const MeasurementSetup& setup);

struct NoiseModel {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd invSqrt;   // Sigma^{-1/2}
  Eigen::MatrixXd sqrtCov;   // Sigma^{1/2}
  double lambdaMin = 0;

  static NoiseModel fromCovariance(const Eigen::MatrixXd& cov);
  static NoiseModel isotropic(double variance, int K);
};

struct DataVector {
  Eigen::VectorXd delta;
  int K = 0;
  double r1 = 0;
  MeasurementSetup::Mode mode = MeasurementSetup::Mode::Amplitude;
  std::uint64_t truthSeed = 0;
  std::uint64_t noiseSeed = 0;
  std::string sigmaSpec;  // human-readable covariance provenance
};

// G(r): measurement of the total field for one shape sample.
Eigen::VectorXd forwardMap(const ForwardSolver& solver, const RadiusField& field,
                           const MeasurementSetup& setup);
Eigen::VectorXd applyMeasurement(const Mesh& mesh, const FieldSolution& sol,
                                 const MeasurementSetup& setup);

DataVector generateData(const ForwardSolver& solver, const RadiusField& truth,
                        const MeasurementSetup& setup, const NoiseModel& noise,
                        std::uint64_t truthSeed, std::uint64_t noiseSeed);

std::string dataToJson(const DataVector& data);
DataVector dataFromJson(const std::string& text);

}  // namespace scatshape
