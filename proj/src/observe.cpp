#include "scatshape/observe.hpp"

#include "scatshape/rng.hpp"

#include "json.hpp"

#include <cmath>
#include <stdexcept>

namespace scatshape {

void MeasurementSetup::validate(double maxShapeRadius, double R) const {
  if (K < 1) throw std::invalid_argument("measurement: K must be >= 1");
  if (!(r1 > maxShapeRadius))
    throw std::invalid_argument(
        "measurement: ring radius must exceed the largest admissible shape radius");
  if (!(r1 < R))
    throw std::invalid_argument("measurement: ring must lie inside the physical region");
}

std::vector<Eigen::Vector2d> measurementPoints(const MeasurementSetup& setup) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(setup.K);
  for (int i = 1; i <= setup.K; ++i) {
    double phi = 2 * M_PI * i / setup.K;
    pts.emplace_back(setup.r1 * std::cos(phi), setup.r1 * std::sin(phi));
  }
  return pts;
}

NoiseModel NoiseModel::fromCovariance(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols())
    throw std::invalid_argument("noise: covariance must be square");
  double scale = cov.cwiseAbs().maxCoeff();
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("noise: covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.eigenvalues().minCoeff() <= 0)
    throw std::invalid_argument("noise: covariance must be positive definite");
  NoiseModel nm;
  nm.sigma = cov;
  nm.lambdaMin = eig.eigenvalues().minCoeff();
  Eigen::VectorXd sqrtVals = eig.eigenvalues().cwiseSqrt();
  nm.sqrtCov = eig.eigenvectors() * sqrtVals.asDiagonal() * eig.eigenvectors().transpose();
  nm.invSqrt = eig.eigenvectors() * sqrtVals.cwiseInverse().asDiagonal() *
               eig.eigenvectors().transpose();
  return nm;
}

NoiseModel NoiseModel::isotropic(double variance, int K) {
  return fromCovariance(variance * Eigen::MatrixXd::Identity(K, K));
}

Eigen::VectorXd applyMeasurement(const Mesh& mesh, const FieldSolution& sol,
                                 const MeasurementSetup& setup) {
  auto pts = measurementPoints(setup);
  Eigen::VectorXcd u = totalFieldAt(mesh, sol, pts);
  Eigen::VectorXd g(setup.K);
  for (int i = 0; i < setup.K; ++i)
    g[i] = setup.mode == MeasurementSetup::Mode::Amplitude ? std::abs(u[i])
                                                           : u[i].real();
  return g;
}

Eigen::VectorXd forwardMap(const ForwardSolver& solver, const RadiusField& field,
                           const MeasurementSetup& setup) {
  return applyMeasurement(solver.mesh(), solver.solveField(field), setup);
}

DataVector generateData(const ForwardSolver& solver, const RadiusField& truth,
                        const MeasurementSetup& setup, const NoiseModel& noise,
                        std::uint64_t truthSeed, std::uint64_t noiseSeed) {
  if (noise.sigma.rows() != setup.K)
    throw std::invalid_argument("generateData: noise dimension mismatch");
  Eigen::VectorXd g = forwardMap(solver, truth, setup);
  auto gen = substream(noiseSeed, 1);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd z(setup.K);
  for (int i = 0; i < setup.K; ++i) z[i] = nd(gen);
  DataVector d;
  d.delta = g + noise.sqrtCov * z;
  d.K = setup.K;
  d.r1 = setup.r1;
  d.mode = setup.mode;
  d.truthSeed = truthSeed;
  d.noiseSeed = noiseSeed;
  d.sigmaSpec = "custom";
  if ((noise.sigma - noise.sigma(0, 0) *
                         Eigen::MatrixXd::Identity(setup.K, setup.K))
          .cwiseAbs()
          .maxCoeff() == 0)
    d.sigmaSpec = std::to_string(noise.sigma(0, 0)) + "*I";
  return d;
}

std::string dataToJson(const DataVector& data) {
  nlohmann::json j;
  j["delta"] = std::vector<double>(data.delta.data(), data.delta.data() + data.delta.size());
  j["K"] = data.K;
  j["r1"] = data.r1;
  j["mode"] = data.mode == MeasurementSetup::Mode::Amplitude ? "amplitude" : "real-part";
  j["truth_seed"] = data.truthSeed;
  j["noise_seed"] = data.noiseSeed;
  j["sigma_spec"] = data.sigmaSpec;
  return j.dump(2);
}

DataVector dataFromJson(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DataVector d;
  auto vals = j.at("delta").get<std::vector<double>>();
  d.delta = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
  d.K = j.at("K").get<int>();
  d.r1 = j.at("r1").get<double>();
  std::string mode = j.at("mode").get<std::string>();
  if (mode == "amplitude") d.mode = MeasurementSetup::Mode::Amplitude;
  else if (mode == "real-part") d.mode = MeasurementSetup::Mode::RealPart;
  else throw std::invalid_argument("data: unknown measurement mode " + mode);
  d.truthSeed = j.at("truth_seed").get<std::uint64_t>();
  d.noiseSeed = j.at("noise_seed").get<std::uint64_t>();
  d.sigmaSpec = j.at("sigma_spec").get<std::string>();
  if (static_cast<int>(d.delta.size()) != d.K)
    throw std::invalid_argument("data: delta length disagrees with K");
  return d;
}

}  // namespace scatshape
