#include "scatshape/forward.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace scatshape {

namespace {

constexpr Complex I{0.0, 1.0};

struct ElemGeom {
  Eigen::Vector2d v[3];
  Eigen::Vector2d grad[3];  // constant P1 gradients
  double area = 0;
  Eigen::Vector2d qp[3];            // edge midpoints, degree-2 quadrature
  double shape[3][3];               // shape[q][k] = phi_k(qp[q])
};

ElemGeom elemGeom(const Mesh& mesh, int t) {
  ElemGeom g;
  for (int k = 0; k < 3; ++k) g.v[k] = mesh.vertices.row(mesh.triangles(t, k));
  double det = (g.v[1].x() - g.v[0].x()) * (g.v[2].y() - g.v[0].y()) -
               (g.v[2].x() - g.v[0].x()) * (g.v[1].y() - g.v[0].y());
  g.area = 0.5 * det;
  g.grad[0] = Eigen::Vector2d(g.v[1].y() - g.v[2].y(), g.v[2].x() - g.v[1].x()) / det;
  g.grad[1] = Eigen::Vector2d(g.v[2].y() - g.v[0].y(), g.v[0].x() - g.v[2].x()) / det;
  g.grad[2] = Eigen::Vector2d(g.v[0].y() - g.v[1].y(), g.v[1].x() - g.v[0].x()) / det;
  for (int q = 0; q < 3; ++q) {
    g.qp[q] = 0.5 * (g.v[q] + g.v[(q + 1) % 3]);
    for (int k = 0; k < 3; ++k)
      g.shape[q][k] = (k == q || k == (q + 1) % 3) ? 0.5 : 0.0;
  }
  return g;
}

// PML coefficient tensor and mass factor at a point in [R, R_PML]:
// radial stretch rho~ = rho (1 + i sigma_bar/kappa0), d = 1 + i sigma/kappa0.
void pmlCoeffs(const PhysicsParams& p, const MeshConfig& cfg,
               const Eigen::Vector2d& x, Eigen::Matrix2cd& C, Complex& mass) {
  double rho = x.norm();
  double ramp = (rho - cfg.R) / (cfg.rPml - cfg.R);
  double sigma = p.sigmaPml * ramp;
  double sigmaBar = p.sigmaPml * (rho - cfg.R) * ramp / (2 * rho);
  Complex rt = rho * (1.0 + I * sigmaBar / p.kappa0);
  Complex d = 1.0 + I * sigma / p.kappa0;
  Eigen::Vector2d er = x / rho;
  Eigen::Vector2d ephi(-er.y(), er.x());
  C = p.alphaOut * (rt / (rho * d) * (er * er.transpose()).cast<Complex>() +
                    rho * d / rt * (ephi * ephi.transpose()).cast<Complex>());
  mass = p.kappa0 * p.kappa0 * p.nOut * rt * d / rho;
}

// One element's stiffness-minus-mass block and load contribution. `mapping`
// may be null for elements where the domain map is the identity.
void elementContrib(const Mesh& mesh, const PhysicsParams& p,
                    const DomainMapping* mapping, int t,
                    Eigen::Matrix3cd& Ke, Eigen::Vector3cd& be) {
  ElemGeom g = elemGeom(mesh, t);
  Ke.setZero();
  be.setZero();
  const Region reg = mesh.region[t];
  const double alpha = reg == Region::Interior ? p.alphaIn : p.alphaOut;
  const double n = reg == Region::Interior ? p.nIn : p.nOut;
  const bool hasLoad = reg == Region::Interior &&
                       (p.alphaIn != p.alphaOut || p.nIn != p.nOut);
  const double w = g.area / 3.0;
  for (int q = 0; q < 3; ++q) {
    if (reg == Region::Pml) {
      Eigen::Matrix2cd C;
      Complex mass;
      pmlCoeffs(p, mesh.config, g.qp[q], C, mass);
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          Ke(k, l) += w * (g.grad[k].cast<Complex>().dot(C * g.grad[l].cast<Complex>()) -
                           mass * g.shape[q][k] * g.shape[q][l]);
      continue;
    }
    Eigen::Matrix2d Jit = Eigen::Matrix2d::Identity();  // J^{-T}
    double detJ = 1.0;
    Eigen::Vector2d x = g.qp[q];
    if (mapping && mesh.mappedTri[t]) {
      Eigen::Matrix2d J = mapping->jacobian(g.qp[q]);
      detJ = J.determinant();
      Jit = J.inverse().transpose();
      x = mapping->map(g.qp[q]);
    }
    // A = J^{-1} alpha J^{-T} |det J|, mass kappa0^2 n |det J|
    Eigen::Matrix2d A = alpha * detJ * (Jit.transpose() * Jit);
    double mass = p.kappa0 * p.kappa0 * n * detJ;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        Ke(k, l) += w * (g.grad[k].dot(A * g.grad[l]) -
                         mass * g.shape[q][k] * g.shape[q][l]);
    if (hasLoad) {
      Complex ui = p.incident(x);
      Eigen::Vector2cd gui = p.incidentGrad(x);
      for (int k = 0; k < 3; ++k) {
        Eigen::Vector2d gk = Jit * g.grad[k];
        Complex gdot = gui.x() * gk.x() + gui.y() * gk.y();  // no conjugation
        be[k] += w * detJ *
                 (-(alpha - p.alphaOut) * gdot +
                  p.kappa0 * p.kappa0 * (n - p.nOut) * ui * g.shape[q][k]);
      }
    }
  }
}

void appendElement(const Mesh& mesh, const std::vector<int>& freeIndex,
                   int t, const Eigen::Matrix3cd& Ke, const Eigen::Vector3cd& be,
                   std::vector<Eigen::Triplet<Complex>>& trips, Eigen::VectorXcd& b) {
  for (int k = 0; k < 3; ++k) {
    int gk = freeIndex[mesh.triangles(t, k)];
    if (gk < 0) continue;
    b[gk] += be[k];
    for (int l = 0; l < 3; ++l) {
      int gl = freeIndex[mesh.triangles(t, l)];
      if (gl >= 0) trips.emplace_back(gk, gl, Ke(k, l));
    }
  }
}

std::vector<int> buildFreeIndex(const Mesh& mesh, int& nFree) {
  std::vector<int> idx(mesh.vertexCount(), -1);
  nFree = 0;
  for (int v = 0; v < mesh.vertexCount(); ++v)
    if (!mesh.outerBoundary[v]) idx[v] = nFree++;
  return idx;
}

Eigen::VectorXcd sparseSolve(const Eigen::SparseMatrix<Complex>& A,
                             const Eigen::VectorXcd& b, double kappa0) {
  if (b.norm() == 0.0) return Eigen::VectorXcd::Zero(b.size());
  // Symmetric diagonal equilibration: the PML coefficients scale like
  // sigma/kappa0 and swamp the physical block otherwise, leaving the raw
  // system too ill-scaled to reach the residual tolerance in doubles.
  Eigen::VectorXcd diag = A.diagonal();
  Eigen::VectorXd d(A.rows());
  for (int i = 0; i < A.rows(); ++i) {
    double aii = std::abs(diag[i]);
    d[i] = aii > 0 ? 1.0 / std::sqrt(aii) : 1.0;
  }
  Eigen::SparseMatrix<Complex> As = d.asDiagonal() * A * d.asDiagonal();
  Eigen::VectorXcd bs = d.asDiagonal() * b;
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
  lu.compute(As);
  if (lu.info() != Eigen::Success) {
    std::ostringstream os;
    os << "solve: factorization failed at kappa0 = " << kappa0
       << " (possible discrete resonance)";
    throw std::runtime_error(os.str());
  }
  Eigen::VectorXcd x = d.asDiagonal() * lu.solve(bs);
  // Residual in extended precision: the load is orders of magnitude below
  // |A||x| here (weak-contrast regime), so a double-precision A*x - b is
  // floored by cancellation noise well above the true residual.
  auto relResidual = [&]() {
    std::vector<std::complex<long double>> r(x.size());
    for (int i = 0; i < x.size(); ++i) r[i] = -static_cast<std::complex<long double>>(b[i]);
    for (int col = 0; col < A.outerSize(); ++col) {
      std::complex<long double> xc = x[col];
      for (Eigen::SparseMatrix<Complex>::InnerIterator it(A, col); it; ++it)
        r[it.row()] += static_cast<std::complex<long double>>(it.value()) * xc;
    }
    long double acc = 0;
    for (auto& v : r) acc += std::norm(v);
    return static_cast<double>(std::sqrt(acc)) / b.norm();
  };
  double rel = relResidual();
  for (int it = 0; it < 3 && rel > 1e-12; ++it) {  // iterative refinement
    x += d.asDiagonal() * lu.solve(d.asDiagonal() * (b - A * x));
    rel = relResidual();
  }
  if (!(rel <= 1e-10)) {
    std::ostringstream os;
    os << "solve: relative residual " << rel << " exceeds 1e-10 at kappa0 = " << kappa0;
    throw std::runtime_error(os.str());
  }
  return x;
}

Eigen::VectorXcd scatterToVertices(const Eigen::VectorXcd& x,
                                   const std::vector<int>& freeIndex) {
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(freeIndex.size());
  for (std::size_t v = 0; v < freeIndex.size(); ++v)
    if (freeIndex[v] >= 0) full[static_cast<int>(v)] = x[freeIndex[v]];
  return full;
}

}  // namespace

PhysicsParams PhysicsParams::fromFrequency(double f, double c) {
  PhysicsParams p;
  p.kappa0 = 2 * M_PI * f / c;
  return p;
}

Complex PhysicsParams::incident(const Eigen::Vector2d& x) const {
  return std::exp(I * (kOut() * dir.dot(x)));
}

Eigen::Vector2cd PhysicsParams::incidentGrad(const Eigen::Vector2d& x) const {
  return (I * kOut() * incident(x)) * dir.cast<Complex>();
}

void PhysicsParams::validate() const {
  if (!(kappa0 > 0)) throw std::invalid_argument("physics: kappa0 must be positive");
  if (!(alphaIn > 0 && alphaOut > 0 && nIn > 0 && nOut > 0))
    throw std::invalid_argument("physics: material parameters must be positive");
  if (std::abs(dir.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("physics: incident direction must be unit length");
  if (!(sigmaPml > 0)) throw std::invalid_argument("physics: sigmaPml must be positive");
}

double DomainMapping::chi(double rho) const {
  if (rho <= rhoA || rho >= rMap) return 0.0;
  if (rho <= r0) return (rho - rhoA) / (r0 - rhoA);
  return (rMap - rho) / (rMap - r0);
}

double DomainMapping::chiPrime(double rho) const {
  if (rho <= rhoA || rho >= rMap) return 0.0;
  if (rho <= r0) return 1.0 / (r0 - rhoA);
  return -1.0 / (rMap - r0);
}

Eigen::Vector2d DomainMapping::map(const Eigen::Vector2d& xhat) const {
  double rho = xhat.norm();
  if (rho <= rhoA || rho >= rMap) return xhat;
  double phi = std::atan2(xhat.y(), xhat.x());
  return xhat * ((rho + deltaR(phi) * chi(rho)) / rho);
}

Eigen::Matrix2d DomainMapping::jacobian(const Eigen::Vector2d& xhat) const {
  double rho = xhat.norm();
  if (rho <= rhoA || rho >= rMap) return Eigen::Matrix2d::Identity();
  double phi = std::atan2(xhat.y(), xhat.x());
  double dr = deltaR(phi);
  double drp = field.radiusDeriv(phi);
  double c = chi(rho), cp = chiPrime(rho);
  double rt = rho + dr * c;
  Eigen::Vector2d er = xhat / rho;
  Eigen::Vector2d ephi(-er.y(), er.x());
  return (1 + cp * dr) * er * er.transpose() + (c * drp / rho) * er * ephi.transpose() +
         (rt / rho) * ephi * ephi.transpose();
}

Eigen::Vector2d DomainMapping::pullback(const Eigen::Vector2d& x) const {
  double rp = x.norm();
  if (rp <= rhoA || rp >= rMap) return x;
  double phi = std::atan2(x.y(), x.x());
  double dr = deltaR(phi);
  // invert rho + dr chi(rho) = rp segment by segment; the radial map is
  // strictly increasing so exactly one segment matches
  double seg1 = (rp * (r0 - rhoA) + dr * rhoA) / ((r0 - rhoA) + dr);
  double rhoHat;
  if (seg1 >= rhoA && seg1 <= r0) {
    rhoHat = seg1;
  } else {
    rhoHat = (rp * (rMap - r0) - dr * rMap) / ((rMap - r0) - dr);
    rhoHat = std::clamp(rhoHat, r0, rMap);
  }
  return x * (rhoHat / rp);
}

DomainMapping buildMapping(const RadiusField& field, const MeshConfig& anchors) {
  DomainMapping m;
  m.field = field;
  m.rhoA = anchors.rhoA;
  m.r0 = anchors.r0;
  m.rMap = anchors.rMap;
  // fold check: 1 + chi' dr > 0 with chi' piecewise constant reduces to
  // -(r0 - rhoA) < dr < rMap - r0 for all angles
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < 4096; ++i) {
    double dr = m.deltaR(2 * M_PI * i / 4096);
    lo = std::min(lo, dr);
    hi = std::max(hi, dr);
  }
  if (lo <= -(m.r0 - m.rhoA) || hi >= m.rMap - m.r0)
    throw std::invalid_argument(
        "buildMapping: shape variation too large for the mapping breakpoints "
        "(Jacobian would fold)");
  return m;
}

AssembledSystem assemble(const Mesh& mesh, const PhysicsParams& params,
                         const DomainMapping& mapping) {
  params.validate();
  AssembledSystem sys;
  sys.vertexCount = mesh.vertexCount();
  int nFree = 0;
  sys.freeIndex = buildFreeIndex(mesh, nFree);
  sys.b = Eigen::VectorXcd::Zero(nFree);
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.triangleCount()) * 9);
  Eigen::Matrix3cd Ke;
  Eigen::Vector3cd be;
  // static elements first, then mapped: same order as the cached path
  for (int pass = 0; pass < 2; ++pass)
    for (int t = 0; t < mesh.triangleCount(); ++t) {
      if ((mesh.mappedTri[t] != 0) != (pass == 1)) continue;
      elementContrib(mesh, params, pass == 1 ? &mapping : nullptr, t, Ke, be);
      appendElement(mesh, sys.freeIndex, t, Ke, be, trips, sys.b);
    }
  sys.A.resize(nFree, nFree);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

FieldSolution solve(const Mesh& mesh, const PhysicsParams& params,
                    const DomainMapping& mapping) {
  AssembledSystem sys = assemble(mesh, params, mapping);
  FieldSolution sol;
  sol.params = params;
  sol.mapping = mapping;
  sol.nodal = scatterToVertices(sparseSolve(sys.A, sys.b, params.kappa0), sys.freeIndex);
  return sol;
}

Eigen::VectorXcd totalFieldAt(const Mesh& mesh, const FieldSolution& sol,
                              const std::vector<Eigen::Vector2d>& points) {
  Eigen::VectorXcd out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector2d& x = points[i];
    if (x.norm() >= mesh.config.R)
      throw std::domain_error("totalFieldAt: point lies in the PML region");
    Eigen::Vector2d xhat = sol.mapping.pullback(x);
    PointLocation loc = locatePoint(mesh, xhat);
    Complex us = 0;
    for (int k = 0; k < 3; ++k)
      us += loc.bary[k] * sol.nodal[mesh.triangles(loc.triangle, k)];
    out[static_cast<int>(i)] = sol.params.incident(x) + us;
  }
  return out;
}

double weightedNorm(const Mesh& mesh, const FieldSolution& sol) {
  const PhysicsParams& p = sol.params;
  double acc = 0;
  for (int t = 0; t < mesh.triangleCount(); ++t) {
    if (mesh.region[t] == Region::Pml) continue;
    ElemGeom g = elemGeom(mesh, t);
    double alpha = mesh.region[t] == Region::Interior ? p.alphaIn : p.alphaOut;
    double n = mesh.region[t] == Region::Interior ? p.nIn : p.nOut;
    Eigen::Vector2cd gradHat = Eigen::Vector2cd::Zero();
    for (int k = 0; k < 3; ++k)
      gradHat += sol.nodal[mesh.triangles(t, k)] * g.grad[k].cast<Complex>();
    double w = g.area / 3.0;
    for (int q = 0; q < 3; ++q) {
      Eigen::Matrix2d Jit = Eigen::Matrix2d::Identity();
      double detJ = 1.0;
      if (mesh.mappedTri[t]) {
        Eigen::Matrix2d J = sol.mapping.jacobian(g.qp[q]);
        detJ = J.determinant();
        Jit = J.inverse().transpose();
      }
      Eigen::Vector2cd gradPhys = Jit.cast<Complex>() * gradHat;
      Complex u = 0;
      for (int k = 0; k < 3; ++k) u += g.shape[q][k] * sol.nodal[mesh.triangles(t, k)];
      acc += w * detJ *
             (alpha * gradPhys.squaredNorm() + p.kappa0 * p.kappa0 * n * std::norm(u));
    }
  }
  return std::sqrt(acc);
}

double incidentWeightedNorm(const Mesh& mesh, const PhysicsParams& p,
                            const DomainMapping* mapping) {
  // |u^i| = 1 and |grad u^i| = kOut pointwise, so only the physical areas of
  // the material regions matter; those come from |det J| quadrature
  double acc = 0;
  const double k2 = p.kOut() * p.kOut();
  for (int t = 0; t < mesh.triangleCount(); ++t) {
    if (mesh.region[t] == Region::Pml) continue;
    double alpha = mesh.region[t] == Region::Interior ? p.alphaIn : p.alphaOut;
    double n = mesh.region[t] == Region::Interior ? p.nIn : p.nOut;
    ElemGeom g = elemGeom(mesh, t);
    double w = g.area / 3.0;
    for (int q = 0; q < 3; ++q) {
      double detJ = (mapping && mesh.mappedTri[t])
                        ? mapping->jacobian(g.qp[q]).determinant()
                        : 1.0;
      acc += w * detJ * (alpha * k2 + p.kappa0 * p.kappa0 * n);
    }
  }
  return std::sqrt(acc);
}

ForwardSolver::ForwardSolver(const Mesh& mesh, const PhysicsParams& params)
    : mesh_(&mesh), params_(params) {
  params_.validate();
  freeIndex_ = buildFreeIndex(mesh, nFree_);
  staticLoad_ = Eigen::VectorXcd::Zero(nFree_);
  Eigen::Matrix3cd Ke;
  Eigen::Vector3cd be;
  for (int t = 0; t < mesh.triangleCount(); ++t) {
    if (mesh.mappedTri[t]) continue;
    elementContrib(mesh, params_, nullptr, t, Ke, be);
    appendElement(mesh, freeIndex_, t, Ke, be, staticTriplets_, staticLoad_);
  }
}

FieldSolution ForwardSolver::solveField(const RadiusField& field) const {
  DomainMapping mapping = buildMapping(field, mesh_->config);
  std::vector<Eigen::Triplet<Complex>> trips = staticTriplets_;
  Eigen::VectorXcd b = staticLoad_;
  Eigen::Matrix3cd Ke;
  Eigen::Vector3cd be;
  for (int t = 0; t < mesh_->triangleCount(); ++t) {
    if (!mesh_->mappedTri[t]) continue;
    elementContrib(*mesh_, params_, &mapping, t, Ke, be);
    appendElement(*mesh_, freeIndex_, t, Ke, be, trips, b);
  }
  Eigen::SparseMatrix<Complex> A(nFree_, nFree_);
  A.setFromTriplets(trips.begin(), trips.end());
  FieldSolution sol;
  sol.params = params_;
  sol.mapping = mapping;
  sol.nodal = scatterToVertices(sparseSolve(A, b, params_.kappa0), freeIndex_);
  ++solves_;
  return sol;
}

}  // namespace scatshape
