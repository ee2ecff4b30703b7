#pragma once

// Run configuration: JSON with a strict schema (unknown keys are errors),
// cross-field validation delegated to the module validators, and a run
// manifest for reproducibility.

#include "scatshape/forward.hpp"
#include "scatshape/mesh.hpp"
#include "scatshape/observe.hpp"
#include "scatshape/shape.hpp"
#include "scatshape/smc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scatshape {

struct RunConfig {
  // physics
  double frequency = 1e9;
  double soundSpeed = 3e10;
  double alphaIn = 1, alphaOut = 1;
  double nIn = 0.9, nOut = 1;
  double dirX = 1, dirY = 0;
  // Numerically usable PML absorption; see the solver header note.
  double sigmaPml = 300;

  // shape prior; truncation = 0 selects the level covering 95% of the
  // fluctuation variance
  double r0 = 0.01;
  double s = 0.1;
  double eps = 0.001;
  int truncation = 6;

  // geometry
  double rhoA = 0.00125;
  double rMap = 0.0425;
  double R = 0.07;
  double rPml = 0.11;
  double h = 0.00125;

  // measurement
  int K = 100;
  double r1 = 0.06;
  std::string mode = "amplitude";  // or "real-part"
  double noiseVariance = 0.01;     // isotropic Sigma = variance * I
  bool zeroNoise = false;          // delta = G(truth) exactly
  std::uint64_t truthSeed = 1;
  std::uint64_t noiseSeed = 2;

  // smc
  int M = 1000;
  double essFactor = 1.0 / 1.1;
  int minSweeps = 2;
  int maxSweeps = 25;
  std::string resampling = "multinomial";  // or "systematic"
  std::uint64_t seed = 1;

  std::string outputDir = ".";

  PhysicsParams physics() const;
  MeshConfig meshConfig() const;
  PriorSpec prior() const;  // resolves truncation = 0 to the 95% level
  MeasurementSetup measurement() const;
  SmcConfig smc() const;

  // Cross-field validation; error messages name the violated constraint.
  void validate() const;
};

RunConfig configFromJson(const std::string& text);
std::string configToJson(const RunConfig& config);
RunConfig loadConfigFile(const std::string& path);

// 64-bit FNV-1a of the file bytes, hex encoded.
std::string fileHash(const std::string& path);

struct RunManifest {
  std::string command;
  RunConfig resolved;
  std::string toolVersion;
  double wallSeconds = 0;
  long forwardSolves = 0;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, hash
};

// Written to path atomically (temp file + rename).
void writeManifest(const RunManifest& manifest, const std::string& path);

}  // namespace scatshape
