#pragma once

// Tempered sequential Monte Carlo on [-1,1]^J: adaptive temperature ladder
// targeting a fixed effective sample size, reweight/resample/mutate loop,
// and per-phase cost accounting.
//
// Mutation proposals are per-coordinate normals truncated to the cube, with
// the Hastings correction for the position-dependent truncation mass. Every
// proposal therefore lies inside the cube and costs exactly one potential
// evaluation, so the evaluation count per sweep is exactly the population
// size.

#include "scatshape/shape.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace scatshape {

struct SmcConfig {
  int M = 1000;
  double essFactor = 1.0 / 1.1;  // target ESS as a fraction of M
  int minSweeps = 2;
  int maxSweeps = 25;
  enum class Resampling { Multinomial, Systematic };
  Resampling resampling = Resampling::Multinomial;
  // Default: resample at every temperature step. When false, resample only
  // if ESS drops below essResampleThreshold * M.
  bool resampleAlways = true;
  double essResampleThreshold = 0.5;
  std::uint64_t seed = 0;
  // Worker threads for per-particle potential evaluations. Results are
  // independent of the thread count: the RNG is counter-based per
  // (iteration, sweep, particle) and acceptance is applied serially.
  int threads = 1;

  void validate() const;
};

struct ParticleSystem {
  Eigen::MatrixXd positions;   // M x J, entries in [-1, 1]
  Eigen::VectorXd weights;     // normalized
  Eigen::VectorXd potentials;  // cached Phi(y_i)
  double T = 0;

  int count() const { return static_cast<int>(positions.rows()); }
  int dim() const { return static_cast<int>(positions.cols()); }
  void validate() const;
};

using PotentialFn = std::function<double(const Eigen::VectorXd&)>;

// 1 / sum W_i^2 for normalized weights.
double ess(const Eigen::VectorXd& weights);

// Largest T_next in (T, 1] keeping the tempered ESS >= target, by bisection
// to 1e-6 in T; returns 1 when the full jump already meets the target. If
// even the minimum step 1e-6 violates the target, takes it anyway and sets
// *forcedMinStep.
double selectNextTemperature(const Eigen::VectorXd& phi, const Eigen::VectorXd& weights,
                             double T, double target, bool* forcedMinStep = nullptr);

// W_i <- W_i exp(-(tNext - T) Phi_i), normalized in log space. Throws on
// total-weight underflow. No potential evaluations.
void reweight(ParticleSystem& sys, double tNext);

void resampleParticles(ParticleSystem& sys, SmcConfig::Resampling scheme,
                       std::uint64_t seed, std::uint64_t iteration);

struct MutationStats {
  int sweeps = 0;
  double acceptance = 0;  // mean over sweeps
  long evaluations = 0;
};

// Random walk Metropolis sweeps targeting exp(-T Phi) restricted to the
// cube. sigma_j = lambda * std_j(population); lambda adapts between sweeps
// (x1.1 above 30% acceptance, x0.9 below 15%). Sweeps repeat until the
// cumulative acceptance reaches one expected move per particle, within
// [minSweeps, maxSweeps].
MutationStats mutate(ParticleSystem& sys, const PotentialFn& potential,
                     const SmcConfig& config, std::uint64_t iteration, double& lambda);

struct SmcDiagnostics {
  struct Step {
    double T = 0;
    double essValue = 0;     // realized ESS after reweighting
    double acceptance = 0;   // mutation acceptance at this step
    int sweeps = 0;
    long solvesUpdate = 0;   // external solve-counter deltas per phase
    long solvesResample = 0;
    long solvesMutate = 0;
    bool forcedMinStep = false;
    double wallSeconds = 0;
  };
  std::vector<Step> steps;
  long solvesInit = 0;
  long totalSweeps = 0;
  long totalMutationEvals = 0;
};

struct SmcResult {
  ParticleSystem particles;
  SmcDiagnostics diagnostics;
};

// Full loop: sample the prior, evaluate initial potentials, then
// update/resample/mutate until T = 1. solveCounter, when given, reads an
// external forward-solve counter so the diagnostics can attribute solves to
// phases. Errors are rethrown with the temperature-step index.
SmcResult runSmc(const SmcConfig& config, const PriorSpec& prior,
                 const PotentialFn& potential,
                 const std::function<long()>& solveCounter = {});

void writeDiagnosticsCsv(const SmcDiagnostics& diag, const std::string& path);
void writeParticlesCsv(const ParticleSystem& sys, const std::string& path);
// 720-angle grid: posterior mean radius, posterior std, prior mean.
void writeRadiusSummaryCsv(const ParticleSystem& sys, const CoefficientSequence& coeffs,
                           const std::string& path);

}  // namespace scatshape
