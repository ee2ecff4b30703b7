#pragma once

// Helmholtz transmission solver: P1 FEM on the fixed reference mesh, with a
// radial domain mapping carrying the sampled boundary and an annular PML
// closing the truncated exterior. The bilinear form is complex-symmetric.

#include "scatshape/mesh.hpp"
#include "scatshape/shape.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <atomic>
#include <complex>
#include <vector>

namespace scatshape {

using Complex = std::complex<double>;

struct PhysicsParams {
  double kappa0 = 0;  // wavenumber 2 pi f / c
  double alphaIn = 1, alphaOut = 1;
  double nIn = 1, nOut = 1;
  Eigen::Vector2d dir{1, 0};  // incident direction, unit length
  // Absorption strength of the PML ramp. Strong enough that the stretched
  // Hankel tail is negligible at R_PML, weak enough that the stretch stays
  // resolved at the default h (stronger values stall the h^2 convergence).
  double sigmaPml = 300;

  static PhysicsParams fromFrequency(double f, double c);

  double kOut() const { return kappa0 * std::sqrt(nOut / alphaOut); }
  double kIn() const { return kappa0 * std::sqrt(nIn / alphaIn); }
  Complex incident(const Eigen::Vector2d& x) const;
  Eigen::Vector2cd incidentGrad(const Eigen::Vector2d& x) const;
  void validate() const;
};

// Phi(xhat) = xhat + dr(phi) chi(|xhat|) e_rho with chi piecewise linear,
// chi(rhoA) = 0, chi(r0) = 1, chi(rMap) = 0, zero outside [rhoA, rMap].
struct DomainMapping {
  RadiusField field;
  double rhoA = 0, r0 = 0, rMap = 0;

  double deltaR(double phi) const { return field.radius(phi) - r0; }
  double chi(double rho) const;
  double chiPrime(double rho) const;
  Eigen::Vector2d map(const Eigen::Vector2d& xhat) const;
  Eigen::Matrix2d jacobian(const Eigen::Vector2d& xhat) const;
  // Inverse of the radial map at fixed angle; identity outside [rhoA, rMap].
  Eigen::Vector2d pullback(const Eigen::Vector2d& x) const;
  bool identity() const { return field.dim() == 0 || field.y.isZero(0); }
};

// Throws if 1 + chi' dr <= 0 anywhere (fold in the mapping).
DomainMapping buildMapping(const RadiusField& field, const MeshConfig& anchors);

struct AssembledSystem {
  Eigen::SparseMatrix<Complex> A;  // free (non-Dirichlet) nodes
  Eigen::VectorXcd b;
  std::vector<int> freeIndex;  // vertex -> free dof, -1 on the outer boundary
  int vertexCount = 0;
};

struct FieldSolution {
  Eigen::VectorXcd nodal;  // scattered field on all vertices, zeros on boundary
  PhysicsParams params;
  DomainMapping mapping;
};

AssembledSystem assemble(const Mesh& mesh, const PhysicsParams& params,
                         const DomainMapping& mapping);
FieldSolution solve(const Mesh& mesh, const PhysicsParams& params,
                    const DomainMapping& mapping);

// u^i(x) + P1-interpolated scattered field at the pulled-back point.
// Points must lie inside B_R (PML region rejected).
Eigen::VectorXcd totalFieldAt(const Mesh& mesh, const FieldSolution& sol,
                              const std::vector<Eigen::Vector2d>& points);

// Weighted H1 norm over the physical region (PML excluded):
// sqrt( int alpha |grad u|^2 + kappa0^2 n |u|^2 ).
double weightedNorm(const Mesh& mesh, const FieldSolution& sol);
double incidentWeightedNorm(const Mesh& mesh, const PhysicsParams& params,
                            const DomainMapping* mapping = nullptr);

// Shared static assembly for repeated solves over different shapes: element
// matrices outside the mapped annulus do not depend on the sample and are
// built once. Thread-safe; the solve counter is atomic.
class ForwardSolver {
 public:
  ForwardSolver(const Mesh& mesh, const PhysicsParams& params);

  FieldSolution solveField(const RadiusField& field) const;
  long solveCount() const { return solves_.load(); }
  void resetSolveCount() { solves_ = 0; }
  const Mesh& mesh() const { return *mesh_; }
  const PhysicsParams& params() const { return params_; }

 private:
  const Mesh* mesh_;
  PhysicsParams params_;
  std::vector<Eigen::Triplet<Complex>> staticTriplets_;
  Eigen::VectorXcd staticLoad_;
  std::vector<int> freeIndex_;
  int nFree_ = 0;
  mutable std::atomic<long> solves_{0};

  friend AssembledSystem assembleWithCache(const ForwardSolver&, const DomainMapping&);
};

}  // namespace scatshape
