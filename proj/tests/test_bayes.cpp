#include "scatshape/bayes.hpp"

#include "scatshape/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace scatshape;

TEST_CASE("potential hand values") {
  auto id2 = NoiseModel::isotropic(1.0, 2);
  Eigen::VectorXd g(2), d(2);
  g << 0, 0;
  d << 3, 4;
  CHECK(potential(g, d, id2) == doctest::Approx(12.5).epsilon(1e-14));

  auto nm = NoiseModel::isotropic(0.01, 3);
  Eigen::VectorXd g3 = Eigen::VectorXd::Zero(3), d3 = Eigen::VectorXd::Zero(3);
  d3[0] = 0.1;
  CHECK(potential(g3, d3, nm) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS(potential(g, d3, nm));

  // invariant under orthogonal change of coordinates applied to both the
  // residual and the covariance
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd A(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) A(i, j) = nd(gen);
  Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ();
  Eigen::MatrixXd S = A * A.transpose() + Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd r(4);
  r << 0.3, -1.2, 0.05, 2.0;
  double base = potential(Eigen::VectorXd::Zero(4), r, NoiseModel::fromCovariance(S));
  double rot = potential(Eigen::VectorXd::Zero(4), Eigen::VectorXd(Q * r),
                         NoiseModel::fromCovariance(Q * S * Q.transpose()));
  CHECK(rot == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("tempered log increment") {
  CHECK(temperedLogIncrement(2.0, 0.25, 0.75) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(temperedLogIncrement(5.0, 0.3, 0.3) == 0.0);
  CHECK(temperedLogIncrement(-3.0, 0.0, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK_THROWS(temperedLogIncrement(1.0, 0.5, 0.4));
  CHECK_THROWS(temperedLogIncrement(1.0, -0.1, 0.5));
  CHECK_THROWS(temperedLogIncrement(1.0, 0.5, 1.1));
}

TEST_CASE("log-sum-exp") {
  Eigen::VectorXd v(3);
  v << 0, 0, 0;
  CHECK(logSumExp(v) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  v << -1000, -1000, -1000;  // must not underflow to -inf
  CHECK(logSumExp(v) == doctest::Approx(-1000 + std::log(3.0)).epsilon(1e-12));
  v << 700, 0, -700;  // must not overflow
  CHECK(logSumExp(v) == doctest::Approx(700.0).epsilon(1e-12));
}

TEST_CASE("hellinger estimate basic properties") {
  Eigen::VectorXd phi(4);
  phi << 0.3, 1.1, 0.7, 2.0;
  CHECK(hellingerEstimate(phi, phi) == doctest::Approx(0.0).epsilon(1e-12));

  // shifting one potential by a constant leaves the posterior, hence the
  // distance, unchanged
  Eigen::VectorXd psi(4);
  psi << 1.0, 0.2, 0.5, 0.9;
  double d = hellingerEstimate(phi, psi);
  CHECK(hellingerEstimate(phi, Eigen::VectorXd(psi.array() + 7.0)) ==
        doctest::Approx(d).epsilon(1e-12));
  CHECK(hellingerEstimate(psi, phi) == doctest::Approx(d).epsilon(1e-14));
  CHECK(d > 0);
  CHECK(d <= 1);

  // near-disjoint effective supports: each posterior concentrates on a
  // different sample
  Eigen::VectorXd a(2), b(2);
  a << 0, 1e6;
  b << 1e6, 0;
  CHECK(hellingerEstimate(a, b) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::VectorXd inf(2);
  inf << 0.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS(hellingerEstimate(inf, a));
  CHECK_THROWS(hellingerEstimate(phi, a));  // size mismatch
}

TEST_CASE("hellinger estimate matches a quadrature oracle in one dimension") {
  // toy problem: y ~ uniform[-1, 1], observation map G(y) = y, scalar noise
  // variance s^2; compare the sampling estimator against dense quadrature of
  // the same posterior pair
  const double s2 = 0.09;
  const double deltaA = 0.2, deltaB = -0.35;
  auto phiOf = [&](double y, double delta) {
    return 0.5 * (delta - y) * (delta - y) / s2;
  };

  // composite Simpson on [-1, 1]
  const int n = 20000;
  double za = 0, zb = 0, zab = 0;
  for (int i = 0; i <= n; ++i) {
    double y = -1.0 + 2.0 * i / n;
    double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    double pa = std::exp(-phiOf(y, deltaA));
    double pb = std::exp(-phiOf(y, deltaB));
    za += w * pa;
    zb += w * pb;
    zab += w * std::sqrt(pa * pb);
  }
  double exact = std::sqrt(1.0 - zab / std::sqrt(za * zb));

  const int M = 200000;
  Eigen::VectorXd phiA(M), phiB(M);
  auto gen = substream(42, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < M; ++i) {
    double y = u(gen);
    phiA[i] = phiOf(y, deltaA);
    phiB[i] = phiOf(y, deltaB);
  }
  CHECK(hellingerEstimate(phiA, phiB) == doctest::Approx(exact).epsilon(1e-2));

  // matrix convenience overload agrees with the potential-vector form
  const int Ms = 100;
  Eigen::MatrixXd G(Ms, 1);
  Eigen::VectorXd pA(Ms), pB(Ms);
  auto nm = NoiseModel::isotropic(s2, 1);
  for (int i = 0; i < Ms; ++i) {
    G(i, 0) = u(gen);
    pA[i] = phiOf(G(i, 0), deltaA);
    pB[i] = phiOf(G(i, 0), deltaB);
  }
  Eigen::VectorXd dA(1), dB(1);
  dA << deltaA;
  dB << deltaB;
  CHECK(hellingerEstimate(G, dA, dB, nm) ==
        doctest::Approx(hellingerEstimate(pA, pB)).epsilon(1e-13));
}
