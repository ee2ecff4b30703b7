#include "scatshape/bounds.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>

namespace scatshape {

namespace {

// 2 sqrt(n_out/alpha_out) + (d-1)/(kappa0 R), the recurring bracket.
double bracket(const PhysicsParams& p, double R, int d) {
  return 2 * std::sqrt(p.nOut / p.alphaOut) + (d - 1) / (p.kappa0 * R);
}

struct Tri {
  Eigen::Vector2d v[3];
  Eigen::Vector2d grad[3];
  Eigen::Vector2d mid[3];
  double area = 0;
};

Tri triGeom(const Mesh& mesh, int t) {
  Tri g;
  for (int k = 0; k < 3; ++k) g.v[k] = mesh.vertices.row(mesh.triangles(t, k));
  g.area = mesh.signedArea(t);
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector2d e = g.v[(k + 2) % 3] - g.v[(k + 1) % 3];
    g.grad[k] = Eigen::Vector2d(-e.y(), e.x()) / (2 * g.area);
    g.mid[k] = 0.5 * (g.v[(k + 1) % 3] + g.v[(k + 2) % 3]);
  }
  return g;
}

}  // namespace

double GeometrySummary::gammaHat() const { return std::min(0.5, gammaTilde); }

void GeometrySummary::validate() const {
  if (!(Rscatt > 0.5 * diamMax))
    throw std::invalid_argument(
        "geometry: Rscatt must exceed the largest shape radius (1+gamma_beta) sup r0");
  if (!(R > Rscatt)) throw std::invalid_argument("geometry: need R > Rscatt");
  if (!(gammaTilde > 0 && cSurf > 0 && rMinus > 0 && rPlus > rMinus))
    throw std::invalid_argument("geometry: summary fields must be positive");
}

GeometrySummary summarizeGeometry(const CoefficientSequence& coeffs, double Rscatt,
                                  double R, double Rpml, int d) {
  double gb = coeffs.gammaBeta();
  double r0 = coeffs.r0;
  GeometrySummary g;
  g.R = R;
  g.Rscatt = Rscatt;
  g.Rpml = Rpml;
  g.diamMax = 2 * (1 + gb) * r0;
  // Lipschitz bound over the prior support: sup|r| + sup|r'| with the basis
  // derivative amplitudes below 1, so sup|r'| <= sum beta_j = gamma_beta r0.
  double lip = (1 + 2 * gb) * r0;
  g.gammaTilde = starShapeConstant(d, gb, r0, r0);  // constant reference radius
  g.cSurf = std::sqrt(2 * M_PI * lip);  // |Gamma| <= 2 pi sup sqrt(r^2 + r'^2)
  g.rMinus = (1 - gb) * r0;
  g.rPlus = (1 + gb) * r0;
  g.validate();
  return g;
}

CorollaryConstants corollaryConstants(const PhysicsParams& params,
                                      const GeometrySummary& geom, int d) {
  geom.validate();
  params.validate();
  CorollaryConstants c;
  double br = bracket(params, geom.R, d);
  c.cKappa0 = geom.R * std::sqrt(4 / params.alphaOut + br * br / params.nOut);
  double gap = geom.R - geom.Rscatt;
  c.c1 = 1.5 / (geom.Rscatt * gap);
  c.c2 = 6 / (gap * gap) + 1.5 * (d - 1) / (geom.Rscatt * gap);
  return c;
}

double theorem41Rhs(const PhysicsParams& params, const GeometrySummary& geom, int d,
                    double diamIn, double fInNorm, double fOutNorm) {
  if (!(params.nIn / params.nOut <= params.alphaIn / params.alphaOut))
    throw std::invalid_argument("theorem41Rhs: requires n_in/n_out <= alpha_in/alpha_out");
  double k = params.kappa0;
  double br = bracket(params, geom.R, d);
  double inFactor = (4 * (k * diamIn) * (k * diamIn) / params.alphaIn +
                     (k * geom.R) * (k * geom.R) / params.nIn * br * br) /
                    (k * k);
  double outFactor =
      geom.R * geom.R * (4 / params.alphaOut + br * br / params.nOut);
  return inFactor * fInNorm * fInNorm + outFactor * fOutNorm * fOutNorm;
}

double theorem42Rhs(const PhysicsParams& params, const GeometrySummary& geom, int d,
                    double diamIn, double fInNorm, double fOutNorm, double gradTgDNorm,
                    double gDNorm, double gNNorm) {
  if (!(params.nIn / params.nOut < 1 && 1 < params.alphaIn / params.alphaOut))
    throw std::invalid_argument(
        "theorem42Rhs: requires n_in/n_out < 1 < alpha_in/alpha_out");
  double gh = geom.gammaHat();
  double k = params.kappa0;
  double kR = k * geom.R;
  double aIn = params.alphaIn, aOut = params.alphaOut;
  double nIn = params.nIn, nOut = params.nOut;
  double rhs = theorem41Rhs(params, geom, d, diamIn, fInNorm, fOutNorm);
  double dd = (d - 1) * (d - 1) / 4.0;
  rhs += 2 * (diamIn * aOut * ((3 + 2 * gh) * aIn + 2 * aOut) / (gh * (aIn - aOut))) *
         gradTgDNorm * gradTgDNorm;
  rhs += 2 *
         (2 * k * k * diamIn * nOut * nOut / (gh * (nOut - nIn)) +
          (3 + gh) * aIn * (nOut * kR * kR + aOut * dd) / (gh * diamIn * (aIn - aOut))) *
         gDNorm * gDNorm;
  rhs += 2 / (gh * aOut) *
         (diamIn * (4 * aIn + 2 * aOut) / (aIn - aOut) +
          2 * (nOut * kR * kR + aOut * dd) / (k * k * diamIn * (nOut - nIn))) *
         gNNorm * gNNorm;
  return rhs;
}

IncidentNorms incidentNorms(const Mesh& mesh, const PhysicsParams& params,
                            const DomainMapping* mapping, double rPlus) {
  IncidentNorms out;
  double extArea = 0;
  const double kOut2 = params.kOut() * params.kOut();
  for (int t = 0; t < mesh.triangleCount(); ++t) {
    if (mesh.region[t] == Region::Pml) continue;
    Tri g = triGeom(mesh, t);
    double w = g.area / 3.0;
    for (int q = 0; q < 3; ++q) {
      double detJ = (mapping && mesh.mappedTri[t])
                        ? mapping->jacobian(g.mid[q]).determinant()
                        : 1.0;
      bool exterior;
      if (mapping)
        exterior = mesh.region[t] != Region::Interior;
      else
        exterior = g.mid[q].norm() > rPlus;
      if (exterior) extArea += w * detJ;
    }
  }
  out.gradL2 = std::sqrt(kOut2 * extArea);
  out.l2 = std::sqrt(extArea);
  out.weighted = incidentWeightedNorm(mesh, params, mapping);
  return out;
}

StabilityConstant stabilityConstant(const PhysicsParams& params,
                                    const GeometrySummary& geom, double lambdaMin,
                                    double gamma, const Eigen::VectorXd& obsNorms,
                                    const IncidentNorms& incident, int d) {
  if (!(lambdaMin > 0))
    throw std::invalid_argument("stabilityConstant: lambda_min must be positive");
  auto c = corollaryConstants(params, geom, d);
  double obs = obsNorms.norm();
  StabilityConstant s;
  s.value = (gamma +
             obs * (c.cKappa0 * c.c1 * params.alphaOut * incident.gradL2 +
                    (c.cKappa0 * c.c2 * params.alphaOut +
                     std::sqrt(params.alphaOut) * c.c1) *
                        incident.l2) +
             obs * incident.weighted) /
            lambdaMin;
  s.planeWaveProxy = (gamma + obs * params.kappa0 * geom.R) / lambdaMin;
  return s;
}

double suboptimalStabilityConstant(const PhysicsParams& params,
                                   const GeometrySummary& geom, double lambdaMin,
                                   double gamma, const Eigen::VectorXd& obsNorms,
                                   double uiL2InH, double uiC1U, int d) {
  if (!(lambdaMin > 0))
    throw std::invalid_argument("suboptimalStabilityConstant: lambda_min must be positive");
  if (!(params.nIn / params.nOut < 1 && 1 < params.alphaIn / params.alphaOut))
    throw std::invalid_argument(
        "suboptimalStabilityConstant: requires n_in/n_out < 1 < alpha_in/alpha_out");
  double k = params.kappa0;
  double kR = k * geom.R;
  double br = bracket(params, geom.R, d);
  double obs = obsNorms.norm();
  double aIn = params.alphaIn, aOut = params.alphaOut;
  double nIn = params.nIn, nOut = params.nOut;
  double diamIn = geom.diamMax;
  double diamInner = 2 * geom.rMinus;  // diam(D_{in,H} minus the tube)
  double dd = (d - 1) * (d - 1) / 4.0;
  double mid = std::sqrt(4 * (k * diamIn) * (k * diamIn) / aIn +
                         kR * kR / nIn * br * br) *
               k * (aIn / aOut * nIn - nOut) * uiL2InH;
  double last = std::sqrt(diamIn * (4 * aIn + 2 * aOut) / (aIn - aOut) +
                          2 * (nOut * kR * kR + aOut * dd) /
                              (k * k * diamInner * (nOut - nIn))) *
                2 * geom.cSurf * (aIn - aOut) / (geom.gammaHat() * aOut) * uiC1U;
  return (gamma + obs * mid + obs * last) / lambdaMin;
}

SoundSoftConstants soundSoftConstants(double kappa0, double R, double nMax, double muN,
                                      const GeometrySummary& geom, int d) {
  double threshold = std::sqrt(3.0 / 8.0) / kappa0;
  if (!(R >= threshold))
    throw std::invalid_argument("soundSoftConstants: requires R >= sqrt(3/8)/kappa0 = " +
                                std::to_string(threshold));
  if (!(muN > 0 && nMax > 0))
    throw std::invalid_argument("soundSoftConstants: need mu_n > 0 and n_max > 0");
  double kR = kappa0 * R;
  double br2 = 2 + (d - 2) / (2 * kR);
  double grow = 1 + 1.5 * nMax;
  SoundSoftConstants c;
  c.c1 = 2 * std::sqrt(4 * kR * kR / (muN * muN) * (1 + br2 * br2) * grow * grow +
                       2 / nMax);
  double diam = geom.diamMax;
  c.c2 = geom.cSurf * std::sqrt(2 / muN) * std::sqrt(grow) * std::sqrt(diam) *
         std::sqrt(1 + 4 * diam / geom.gammaTilde);
  c.c3 = 2 * geom.cSurf *
         std::sqrt(8 / muN * grow * kR * kR / geom.gammaTilde * br2 * br2 +
                   2 / geom.gammaTilde);
  return c;
}

Eigen::VectorXd observationNorms(const Mesh& mesh, const PhysicsParams& params,
                                 const MeasurementSetup& setup) {
  // Gram matrix of the weighted H1 inner product on the non-PML region.
  const int n = mesh.vertexCount();
  std::vector<Eigen::Triplet<double>> trips;
  const double k2 = params.kappa0 * params.kappa0;
  for (int t = 0; t < mesh.triangleCount(); ++t) {
    if (mesh.region[t] == Region::Pml) continue;
    double alpha = mesh.region[t] == Region::Interior ? params.alphaIn : params.alphaOut;
    double nn = mesh.region[t] == Region::Interior ? params.nIn : params.nOut;
    Tri g = triGeom(mesh, t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double stiff = alpha * g.area * g.grad[a].dot(g.grad[b]);
        double mass = k2 * nn * g.area * (a == b ? 1.0 / 6.0 : 1.0 / 12.0);
        trips.emplace_back(mesh.triangles(t, a), mesh.triangles(t, b), stiff + mass);
      }
  }
  // vertices touched only by PML elements get a unit diagonal; the point
  // functionals are supported away from them, so they do not contribute
  std::vector<char> touched(n, 0);
  for (const auto& tr : trips) touched[tr.row()] = 1;
  for (int i = 0; i < n; ++i)
    if (!touched[i]) trips.emplace_back(i, i, 1.0);
  Eigen::SparseMatrix<double> B(n, n);
  B.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(B);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("observationNorms: Gram matrix factorization failed");

  auto pts = measurementPoints(setup);
  Eigen::VectorXd norms(setup.K);
  for (int k = 0; k < setup.K; ++k) {
    PointLocation loc = locatePoint(mesh, pts[static_cast<size_t>(k)]);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < 3; ++a) c[mesh.triangles(loc.triangle, a)] = loc.bary[a];
    Eigen::VectorXd z = ldlt.solve(c);
    norms[k] = std::sqrt(c.dot(z));
  }
  return norms;
}

ForwardBoundReport verifyForwardBound(const ForwardSolver& solver,
                                      const RadiusField& field,
                                      const GeometrySummary& geom, double slack) {
  const Mesh& mesh = solver.mesh();
  const PhysicsParams& params = solver.params();
  ForwardBoundReport rep;
  rep.constants = corollaryConstants(params, geom);
  FieldSolution sol = solver.solveField(field);
  rep.lhs = weightedNorm(mesh, sol);
  rep.incident = incidentNorms(mesh, params, &sol.mapping, geom.rPlus);
  rep.rhs = rep.constants.cKappa0 * rep.constants.c1 * params.alphaOut *
                rep.incident.gradL2 +
            (rep.constants.cKappa0 * rep.constants.c2 * params.alphaOut +
             std::sqrt(params.alphaOut) * rep.constants.c1) *
                rep.incident.l2 +
            rep.incident.weighted;
  rep.ratio = rep.lhs / rep.rhs;
  rep.pass = rep.lhs <= rep.rhs * (1 + slack);
  return rep;
}

}  // namespace scatshape
