#include "scatshape/shape.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace scatshape;

namespace {

// Brute-force total of the prior fluctuation variance, summing pairs until
// the terms fall below machine noise relative to the running total.
double bruteVariance(const CoefficientSequence& c) {
  double total = 0;
  for (int pair = 1; pair < 50000000; ++pair) {
    double b = c.r0 / (4.0 * c.normalizer * (1.0 + c.s * std::pow(pair, 2.0 + c.eps)));
    double term = 2.0 * b * b * (M_PI / 3.0) / ((1.0 + pair) * (1.0 + pair));
    total += term;
    if (term < 1e-17 * total) break;
  }
  return total;
}

// CDF of a1 U1 + a2 U2 with U_i independent uniform on [-1,1], a1 >= a2 > 0.
double trapezoidCdf(double z, double a1, double a2) {
  if (a1 < a2) std::swap(a1, a2);
  if (z <= -(a1 + a2)) return 0;
  if (z >= a1 + a2) return 1;
  if (z < -(a1 - a2)) {
    double t = z + a1 + a2;
    return t * t / (8 * a1 * a2);
  }
  if (z <= a1 - a2) return (z + a1) / (2 * a1);
  double t = a1 + a2 - z;
  return 1 - t * t / (8 * a1 * a2);
}

}  // namespace

TEST_CASE("basis functions have unit Lipschitz norm") {
  // sup |psi_j| + Lip(psi_j) = 1/(1+k) + k/(1+k) = 1 for every j
  for (int j = 1; j <= 12; ++j) {
    int k = BasisSet::frequency(j);
    CHECK(k == ((j % 2 == 1) ? (j + 1) / 2 : j / 2));
    double sup = 0, lip = 0;
    for (int i = 0; i < 20000; ++i) {
      double phi = 2 * M_PI * i / 20000;
      sup = std::max(sup, std::abs(BasisSet::eval(j, phi)));
      lip = std::max(lip, std::abs(BasisSet::evalDeriv(j, phi)));
    }
    CHECK(sup + lip == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("basis derivatives match finite differences") {
  const double h = 1e-6;
  for (int j = 1; j <= 9; ++j) {
    for (double phi : {0.3, 1.7, 4.2}) {
      double fd = (BasisSet::eval(j, phi + h) - BasisSet::eval(j, phi - h)) / (2 * h);
      CHECK(BasisSet::evalDeriv(j, phi) == doctest::Approx(fd).epsilon(1e-6));
      double fd2 =
          (BasisSet::evalDeriv(j, phi + h) - BasisSet::evalDeriv(j, phi - h)) / (2 * h);
      CHECK(BasisSet::evalDeriv2(j, phi) == doctest::Approx(fd2).epsilon(1e-5));
    }
  }
}

TEST_CASE("coefficient sums reach r0/2 in the limit") {
  auto c = whittleMaternCoeffs(0.01, 0.1, 0.001, 10000);
  // Partial sums increase toward the limit; the tail-corrected limit is r0/2
  // exactly by construction, so this pins the tail machinery to 1e-12.
  CHECK(c.sumLimit() == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(c.gammaBeta() == doctest::Approx(0.5).epsilon(1e-12));
  double prev = 0;
  for (int J : {10, 100, 1000, 10000}) {
    double p = c.partialSum(J);
    CHECK(p > prev);
    CHECK(p < c.sumLimit());
    prev = p;
  }
  CHECK(c.sumLimit() - c.partialSum(10000) < 1e-5);
}

TEST_CASE("coefficient family rejects bad parameters") {
  CHECK_THROWS(whittleMaternCoeffs(0.01, 0.0, 0.001, 4));
  CHECK_THROWS(whittleMaternCoeffs(0.01, -1.0, 0.001, 4));
  CHECK_THROWS(whittleMaternCoeffs(0.01, 0.1, 0.0, 4));
  CHECK_THROWS(whittleMaternCoeffs(0.01, 0.1, -0.5, 4));
  CHECK_THROWS(whittleMaternCoeffs(-0.01, 0.1, 0.001, 4));
}

TEST_CASE("pair members share the coefficient value") {
  auto c = whittleMaternCoeffs(0.01, 0.1, 0.001, 20);
  for (int pair = 1; pair <= 10; ++pair)
    CHECK(c.betaAt(2 * pair - 1) == c.betaAt(2 * pair));
  // Closed form agrees beyond the stored range.
  double b30 = 0.01 / (4.0 * c.normalizer * (1.0 + 0.1 * std::pow(15.0, 2.001)));
  CHECK(c.betaAt(30) == doctest::Approx(b30).epsilon(1e-14));
}

TEST_CASE("fluctuation variance matches brute-force summation") {
  for (double s : {0.1, 0.001}) {
    auto c = whittleMaternCoeffs(0.01, s, 0.001, 100);
    CHECK(c.fluctuationVariance(-1) ==
          doctest::Approx(bruteVariance(c)).epsilon(1e-11));
  }
}

TEST_CASE("truncation level covers the requested variance fraction") {
  for (double s : {0.1, 0.001}) {
    auto c = whittleMaternCoeffs(0.01, s, 0.001, 0);
    double total = bruteVariance(c);
    for (double frac : {0.9, 0.99, 0.999}) {
      int J = truncationLevel(c, frac);
      CHECK(J % 2 == 0);
      // independent cumulative check around the returned level
      double run = 0;
      for (int pair = 1; 2 * pair <= J; ++pair) {
        double b = c.betaAt(2 * pair);
        run += 2.0 * b * b * (M_PI / 3.0) / ((1.0 + pair) * (1.0 + pair));
      }
      CHECK(run >= frac * total * (1 - 1e-12));
      if (J > 2) {
        double bLast = c.betaAt(J);
        double prev = run - 2.0 * bLast * bLast * (M_PI / 3.0) /
                                ((1.0 + J / 2) * (1.0 + J / 2));
        CHECK(prev < frac * total);
      }
    }
  }
  // rougher prior (smaller s) needs more terms
  auto cs = whittleMaternCoeffs(0.01, 0.1, 0.001, 0);
  auto cr = whittleMaternCoeffs(0.01, 0.001, 0.001, 0);
  CHECK(truncationLevel(cr, 0.99) > truncationLevel(cs, 0.99));
  CHECK_THROWS(truncationLevel(cs, 0.0));
  CHECK_THROWS(truncationLevel(cs, 1.0));
}

TEST_CASE("single nonzero pair truncates at two") {
  CoefficientSequence c;
  c.r0 = 0.01;
  c.betas = Eigen::VectorXd::Zero(6);
  c.betas[0] = c.betas[1] = 1e-3;
  CHECK(truncationLevel(c, 0.999) == 2);
  CHECK(c.sumLimit() == doctest::Approx(2e-3));
}

TEST_CASE("radius field evaluates the expansion") {
  auto c = whittleMaternCoeffs(0.01, 0.1, 0.001, 4);
  Eigen::VectorXd y(4);
  y << 0.3, -0.8, 1.0, 0.25;
  RadiusField f(y, c);
  for (double phi : {0.0, 0.9, 2.5, 5.8}) {
    double expected = 0.01;
    for (int j = 1; j <= 4; ++j)
      expected += c.betas[j - 1] * y[j - 1] * BasisSet::eval(j, phi);
    CHECK(f.radius(phi) == doctest::Approx(expected).epsilon(1e-14));
    double h = 1e-6;
    double fd = (f.radius(phi + h) - f.radius(phi - h)) / (2 * h);
    CHECK(f.radiusDeriv(phi) == doctest::Approx(fd).epsilon(1e-6));
  }
  // every admissible radius stays within r0 (1 +- gamma_beta)
  CHECK(f.minRadius() > 0.005);
  CHECK(f.maxRadius() < 0.015);
  Eigen::VectorXd bad(4);
  bad << 0.3, -1.5, 0.0, 0.0;
  CHECK_THROWS(RadiusField(bad, c));
}

TEST_CASE("prior samples are deterministic in the seed and order-free") {
  auto c = whittleMaternCoeffs(0.01, 0.1, 0.001, 6);
  PriorSpec spec{6, 42, c};
  auto a = samplePriorPositions(spec, 50);
  auto b = samplePriorPositions(spec, 50);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  // a shorter run reproduces the prefix
  auto head = samplePriorPositions(spec, 10);
  CHECK((a.topRows(10) - head).cwiseAbs().maxCoeff() == 0.0);
  PriorSpec other{6, 43, c};
  CHECK((a - samplePriorPositions(other, 50)).cwiseAbs().maxCoeff() > 1e-3);
  CHECK(a.maxCoeff() <= 1.0);
  CHECK(a.minCoeff() >= -1.0);
}

TEST_CASE("two-term radius fluctuation follows the uniform convolution") {
  auto c = whittleMaternCoeffs(0.01, 0.1, 0.001, 2);
  PriorSpec spec{2, 7, c};
  const int n = 4000;
  auto ys = samplePriorPositions(spec, n);
  const double phi0 = 0.7;
  double a1 = std::abs(c.betas[0] * BasisSet::eval(1, phi0));
  double a2 = std::abs(c.betas[1] * BasisSet::eval(2, phi0));
  std::vector<double> z(n);
  for (int i = 0; i < n; ++i)
    z[i] = c.betas[0] * ys(i, 0) * BasisSet::eval(1, phi0) +
           c.betas[1] * ys(i, 1) * BasisSet::eval(2, phi0);
  std::sort(z.begin(), z.end());
  double ks = 0;
  for (int i = 0; i < n; ++i) {
    double F = trapezoidCdf(z[i], a1, a2);
    ks = std::max(ks, std::abs(F - (i + 1.0) / n));
    ks = std::max(ks, std::abs(F - static_cast<double>(i) / n));
  }
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));  // alpha = 0.01
}

TEST_CASE("star-shape margin equals the radius for a circle") {
  auto c = whittleMaternCoeffs(0.01, 0.1, 0.001, 4);
  RadiusField circle(Eigen::VectorXd::Zero(4), c);
  CHECK(starShapeMargin(circle) == doctest::Approx(0.01).epsilon(1e-13));
}

TEST_CASE("star-shape margin matches a fine grid search") {
  auto c = whittleMaternCoeffs(0.01, 0.1, 0.001, 8);
  Eigen::VectorXd y(8);
  y << 0.9, -0.7, 0.5, 1.0, -1.0, 0.6, -0.4, 0.8;
  RadiusField f(y, c);
  double fine = 1e300;
  const int N = 1 << 18;
  for (int i = 0; i < N; ++i) {
    double phi = 2 * M_PI * i / N;
    double r = f.radius(phi), dr = f.radiusDeriv(phi);
    fine = std::min(fine, r * r / std::sqrt(r * r + dr * dr));
  }
  CHECK(starShapeMargin(f) == doctest::Approx(fine).epsilon(1e-8));
  CHECK(starShapeMargin(f) <= fine + 1e-15);
  CHECK(starShapeMargin(f) > 0);
}

TEST_CASE("star-shape constant closed forms") {
  // constant reference radius: C^{0,1} norm equals the sup norm
  double g2 = starShapeConstant(2, 0.5, 0.01, 0.01);
  CHECK(g2 == doctest::Approx(1.0 / 18.0).epsilon(1e-14));
  // scale invariance in two dimensions
  CHECK(starShapeConstant(2, 0.5, 1.0, 1.0) == doctest::Approx(g2).epsilon(1e-14));
  double a2 = 1.0 / 18.0;
  double b = (1.0 / (0.5 * 0.01) + 1.0) * 1.5 * 0.01 + 1.0;
  CHECK(starShapeConstant(3, 0.5, 0.01, 0.01) ==
        doctest::Approx(0.5 * a2 / b).epsilon(1e-14));
  CHECK_THROWS(starShapeConstant(4, 0.5, 0.01, 0.01));
  CHECK_THROWS(starShapeConstant(2, 1.0, 0.01, 0.01));
  CHECK_THROWS(starShapeConstant(2, 0.5, 0.02, 0.01));
}
