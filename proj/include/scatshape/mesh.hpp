#pragma once

// Structured polar triangulation of the truncated disk B_{R_PML}. Node
// circles are placed on every radius where coefficients or the domain
// mapping kink, so piecewise-smooth data stays smooth per element.

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace scatshape {

struct MeshConfig {
  double h = 0;      // target mesh size
  double rhoA = 0;   // mapping inner anchor
  double r0 = 0;     // nominal interface radius
  double rMap = 0;   // mapping support end
  double R = 0;      // PML start
  double rPml = 0;   // outer boundary

  void validate() const;  // throws on violated ordering or oversized h
};

enum class Region { Interior, MappedAnnulus, Exterior, Pml };

struct Mesh {
  Eigen::Matrix<double, Eigen::Dynamic, 2> vertices;
  Eigen::Matrix<int, Eigen::Dynamic, 3> triangles;  // CCW
  std::vector<Region> region;       // per triangle, by centroid radius
  std::vector<char> mappedTri;      // triangle centroid in (rhoA, rMap)
  std::vector<char> outerBoundary;  // per vertex, on the R_PML circle
  MeshConfig config;

  int vertexCount() const { return static_cast<int>(vertices.rows()); }
  int triangleCount() const { return static_cast<int>(triangles.rows()); }
  double signedArea(int t) const;
  Eigen::Vector2d centroid(int t) const;
  double minAngleDeg() const;

  // point location acceleration, built once by buildDiskMesh
  struct Grid {
    double x0 = 0, y0 = 0, cell = 1;
    int nx = 0, ny = 0;
    std::vector<std::vector<int>> bins;
  };
  Grid grid;
};

struct PointLocation {
  int triangle = -1;
  Eigen::Vector3d bary;
};

Mesh buildDiskMesh(const MeshConfig& config);

// Lowest-triangle-id match; coordinates clamped to [0,1] and renormalized.
// Throws if x lies outside the triangulation (beyond 1e-9 R_PML slack for
// points between the outer polygon and the circle).
PointLocation locatePoint(const Mesh& mesh, const Eigen::Vector2d& x);

// Keeps h^2 kappa^3 constant across frequencies to compensate pollution.
double pollutionMeshSize(double hRef, double kappaRef, double kappa);

// One vertex per line "x y", then one triangle per line "i j k tag".
void writeMeshText(const Mesh& mesh, std::ostream& out);

}  // namespace scatshape
