#pragma once

// Star-shaped boundary parametrization r(y, phi) = r0 + sum_j beta_j y_j psi_j(phi),
// the uniform prior on y in [-1,1]^J, and star-shapedness diagnostics.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace scatshape {

// 2pi-periodic Fourier basis: psi_j = sin(((j+1)/2) phi) for odd j,
// cos((j/2) phi) for even j, j >= 1, scaled so that the C^{0,1} norm
// (sup-norm plus Lipschitz constant) equals one.
struct BasisSet {
  int count = 0;  // number of basis functions J

  static int frequency(int j);            // harmonic index k(j)
  static double normalization(int j);     // 1 / (1 + k(j))
  static double raw(int j, double phi);   // unnormalized sin/cos value
  static double eval(int j, double phi);  // normalized value
  static double evalDeriv(int j, double phi);
  static double evalDeriv2(int j, double phi);
};

// Coefficients beta_{2j-1} = beta_{2j} = r0 / (4 S (1 + s j^{2+eps})) with
// S = sum_k 1/(1 + s k^{2+eps}), so that sum_j |beta_j| = r0/2.
struct CoefficientSequence {
  Eigen::VectorXd betas;  // first J entries
  double r0 = 0;
  double s = 0;    // inverse correlation-length scale; 0 marks a hand-made sequence
  double eps = 0;
  double normalizer = 0;  // S above, tail-corrected

  int count() const { return static_cast<int>(betas.size()); }
  double betaAt(int j) const;  // closed form, any j >= 1 (family sequences only)
  double partialSum(int upTo = -1) const;
  // Tail-corrected limit of the partial sums; equals r0/2 for the family.
  double sumLimit() const;
  double gammaBeta() const;  // sumLimit() / r0

  // Prior variance of the L2 fluctuation carried by basis functions 1..upTo
  // (upTo < 0: tail-corrected total over the infinite sequence).
  double fluctuationVariance(int upTo = -1) const;
};

CoefficientSequence whittleMaternCoeffs(double r0, double s, double eps, int J);

// Smallest (even) J covering at least `fraction` of the total prior variance.
int truncationLevel(const CoefficientSequence& coeffs, double fraction);

struct RadiusField {
  Eigen::VectorXd y;  // in [-1,1]^J
  CoefficientSequence coeffs;

  RadiusField() = default;
  RadiusField(Eigen::VectorXd y, CoefficientSequence coeffs);

  int dim() const { return static_cast<int>(y.size()); }
  double radius(double phi) const;
  double radiusDeriv(double phi) const;
  double radiusDeriv2(double phi) const;
  Eigen::VectorXd radiusOn(const Eigen::VectorXd& phis) const;

  double minRadius(int gridSize = 4096) const;  // grid minimum
  double maxRadius(int gridSize = 4096) const;
};

struct PriorSpec {
  int J = 0;
  std::uint64_t seed = 0;
  CoefficientSequence coeffs;
};

std::vector<RadiusField> samplePrior(const PriorSpec& spec, int count);
// Positions only, one row per sample; used by the SMC initialization.
Eigen::MatrixXd samplePriorPositions(const PriorSpec& spec, int count);

// min over phi of x.n = r^2 / sqrt(r^2 + r'^2) on a uniform grid with one
// Newton polish step at the grid minimizer.
double starShapeMargin(const RadiusField& field, int gridSize = 4096);

// gamma-tilde such that every admissible scatterer is star-shaped w.r.t. a
// ball of radius gamma-tilde * diam(D_in). r0C01 is the C^{0,1} norm of r0.
double starShapeConstant(int d, double gammaBeta, double r0Inf, double r0C01);

}  // namespace scatshape
