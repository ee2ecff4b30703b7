#include "scatshape/bayes.hpp"

#include <cmath>
#include <stdexcept>

namespace scatshape {

double logSumExp(const Eigen::VectorXd& logs) {
  double m = logs.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf stays -inf
  return m + std::log((logs.array() - m).exp().sum());
}

double potential(const Eigen::VectorXd& Gr, const Eigen::VectorXd& delta,
                 const NoiseModel& noise) {
  if (Gr.size() != delta.size() || noise.invSqrt.rows() != Gr.size())
    throw std::invalid_argument("potential: dimension mismatch");
  return 0.5 * (noise.invSqrt * (delta - Gr)).squaredNorm();
}

double temperedLogIncrement(double phi, double tLo, double tHi) {
  if (!(0 <= tLo && tLo <= tHi && tHi <= 1))
    throw std::invalid_argument("temperedLogIncrement: need 0 <= tLo <= tHi <= 1");
  return -(tHi - tLo) * phi;
}

double hellingerEstimate(const Eigen::VectorXd& phiA, const Eigen::VectorXd& phiB) {
  if (phiA.size() != phiB.size() || phiA.size() < 1)
    throw std::invalid_argument("hellingerEstimate: potential vectors must match");
  if (!phiA.allFinite() || !phiB.allFinite())
    throw std::domain_error(
        "hellingerEstimate: non-finite potential; temper the likelihood or "
        "enlarge the noise covariance");
  // d^2 = 1 - mean(sqrt(a b)) / sqrt(mean(a) mean(b)) with a = exp(-phiA);
  // the 1/M factors cancel inside the log-space ratio
  double sa = logSumExp(-phiA);
  double sb = logSumExp(-phiB);
  double sab = logSumExp(-0.5 * (phiA + phiB));
  double d2 = 1.0 - std::exp(sab - 0.5 * (sa + sb));
  d2 = std::min(1.0, std::max(0.0, d2));
  return std::sqrt(d2);
}

double hellingerEstimate(const Eigen::MatrixXd& G, const Eigen::VectorXd& delta,
                         const Eigen::VectorXd& deltaPrime, const NoiseModel& noise) {
  const int M = static_cast<int>(G.rows());
  Eigen::VectorXd phiA(M), phiB(M);
  for (int i = 0; i < M; ++i) {
    phiA[i] = potential(G.row(i).transpose(), delta, noise);
    phiB[i] = potential(G.row(i).transpose(), deltaPrime, noise);
  }
  return hellingerEstimate(phiA, phiB);
}

}  // namespace scatshape
