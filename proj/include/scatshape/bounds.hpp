#pragma once

// Explicit wavenumber-dependent stability constants for the transmission and
// sound-soft scattering problems, plus numerical verification of the
// computable forward bound against FEM solves.
//
// Incident-wave norms over the unbounded exterior are interpreted on its
// truncation to B_R: a plane wave is not square-integrable on the exterior.
// Observation-functional norms are those of the P1-interpolated point
// evaluations on the given mesh; the continuum norm is mesh-dependent.

#include "scatshape/forward.hpp"
#include "scatshape/observe.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace scatshape {

struct GeometrySummary {
  double R = 0;        // truncation ball holding the sources and observations
  double Rscatt = 0;   // mollifier inner radius, > (1 + gammaBeta) sup r0
  double Rpml = 0;
  double diamMax = 0;  // 2 (1 + gammaBeta) sup r0
  double gammaTilde = 0;
  double cSurf = 0;    // upper bound on sqrt(|Gamma|) over the prior support
  double rMinus = 0;   // tube region: rMinus <= r(phi) <= rPlus for all shapes
  double rPlus = 0;

  double gammaHat() const;  // min(1/2, gammaTilde)
  void validate() const;
};

// All geometric summaries from the prior coefficient sequence (constant r0).
GeometrySummary summarizeGeometry(const CoefficientSequence& coeffs, double Rscatt,
                                  double R, double Rpml, int d = 2);

struct CorollaryConstants {
  double cKappa0 = 0;
  double c1 = 0;
  double c2 = 0;
};

CorollaryConstants corollaryConstants(const PhysicsParams& params,
                                      const GeometrySummary& geom, int d = 2);

// Squared-norm bound for sources f_in, f_out and zero interface jumps.
double theorem41Rhs(const PhysicsParams& params, const GeometrySummary& geom, int d,
                    double diamIn, double fInNorm, double fOutNorm);

// Adds the interface-jump terms; requires n_in/n_out < 1 < alpha_in/alpha_out.
double theorem42Rhs(const PhysicsParams& params, const GeometrySummary& geom, int d,
                    double diamIn, double fInNorm, double fOutNorm, double gradTgDNorm,
                    double gDNorm, double gNNorm);

struct IncidentNorms {
  double gradL2 = 0;    // |grad u^i| over D_out cap B_R
  double l2 = 0;        // |u^i| over the same region
  double weighted = 0;  // weighted H1 norm over D_in cup D_R
};

// Quadrature of the plane-wave norms on the mesh. With a mapping, the
// exterior region is the complement of the mapped scatterer; without one,
// the exterior of the rPlus tube (the hold-all exterior).
IncidentNorms incidentNorms(const Mesh& mesh, const PhysicsParams& params,
                            const DomainMapping* mapping, double rPlus);

struct StabilityConstant {
  double value = 0;           // full three-term constant
  double planeWaveProxy = 0;  // lambda^{-1} gamma + lambda^{-1}|O| kappa0 R
};

StabilityConstant stabilityConstant(const PhysicsParams& params,
                                    const GeometrySummary& geom, double lambdaMin,
                                    double gamma, const Eigen::VectorXd& obsNorms,
                                    const IncidentNorms& incident, int d = 2);

// Wavenumber-suboptimal alternative exposing the material contrast factors;
// requires the strict chain n_in/n_out < 1 < alpha_in/alpha_out.
double suboptimalStabilityConstant(const PhysicsParams& params,
                                   const GeometrySummary& geom, double lambdaMin,
                                   double gamma, const Eigen::VectorXd& obsNorms,
                                   double uiL2InH, double uiC1U, int d = 2);

struct SoundSoftConstants {
  double c1 = 0;
  double c2 = 0;
  double c3 = 0;
};

// Requires kappa0 R >= sqrt(3/8); the heterogeneous-index exterior Dirichlet
// problem with refraction bounds [n_min, n_max] and coercivity margin mu_n.
SoundSoftConstants soundSoftConstants(double kappa0, double R, double nMax, double muN,
                                      const GeometrySummary& geom, int d = 2);

// || O_k ||_{V*} for the P1 point evaluations at the measurement ring, with
// V the weighted H1 space on the non-PML region (no boundary condition).
Eigen::VectorXd observationNorms(const Mesh& mesh, const PhysicsParams& params,
                                 const MeasurementSetup& setup);

struct ForwardBoundReport {
  double lhs = 0;  // weighted norm of the FEM scattered field
  double rhs = 0;
  double ratio = 0;
  bool pass = false;
  CorollaryConstants constants;
  IncidentNorms incident;
};

// LHS <= RHS (1 + slack) for the scattered field of one shape sample.
ForwardBoundReport verifyForwardBound(const ForwardSolver& solver,
                                      const RadiusField& field,
                                      const GeometrySummary& geom,
                                      double slack = 0.05);

}  // namespace scatshape
