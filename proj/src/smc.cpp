#include "scatshape/smc.hpp"

#include "scatshape/bayes.hpp"
#include "scatshape/rng.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

namespace scatshape {

namespace {

constexpr double kTempTol = 1e-6;

double normalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Truncation mass of N(y_j, sigma_j^2) on [-1, 1].
double truncMass(double y, double sigma) {
  return normalCdf((1.0 - y) / sigma) - normalCdf((-1.0 - y) / sigma);
}

// ESS of weights proportional to W_i exp(-dT Phi_i), in log space.
double temperedEss(const Eigen::VectorXd& phi, const Eigen::VectorXd& weights,
                   double dT) {
  Eigen::VectorXd logw =
      weights.array().log().matrix() - dT * phi;
  return std::exp(2.0 * logSumExp(logw) - logSumExp(2.0 * logw));
}

void writeCsvHeaderless(std::ofstream& out) {
  out << std::setprecision(17) << std::scientific;
}

// Runs body(i) for i in [0, n); exceptions are rethrown on the caller.
void parallelFor(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(errorMutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void SmcConfig::validate() const {
  if (M < 2) throw std::invalid_argument("smc: need at least two particles");
  if (!(essFactor > 0 && essFactor < 1))
    throw std::invalid_argument("smc: ESS target factor must lie in (0, 1)");
  if (minSweeps < 1 || maxSweeps < minSweeps)
    throw std::invalid_argument("smc: sweep bounds must satisfy 1 <= min <= max");
  if (!(essResampleThreshold > 0 && essResampleThreshold <= 1))
    throw std::invalid_argument("smc: resample threshold must lie in (0, 1]");
}

void ParticleSystem::validate() const {
  if (weights.size() != count() || potentials.size() != count())
    throw std::invalid_argument("particles: field sizes disagree");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("particles: weights must be normalized");
  if (positions.size() > 0 && positions.cwiseAbs().maxCoeff() > 1.0)
    throw std::invalid_argument("particles: positions must lie in [-1, 1]");
  if (!(T >= 0 && T <= 1))
    throw std::invalid_argument("particles: temperature must lie in [0, 1]");
}

double ess(const Eigen::VectorXd& weights) {
  return 1.0 / weights.squaredNorm();
}

double selectNextTemperature(const Eigen::VectorXd& phi, const Eigen::VectorXd& weights,
                             double T, double target, bool* forcedMinStep) {
  if (forcedMinStep) *forcedMinStep = false;
  if (!(T < 1)) throw std::invalid_argument("selectNextTemperature: need T < 1");
  if (temperedEss(phi, weights, 1.0 - T) >= target) return 1.0;
  double lo = T, hi = 1.0;  // ESS(lo) >= target > ESS(hi)
  if (temperedEss(phi, weights, kTempTol) < target) {
    if (forcedMinStep) *forcedMinStep = true;
    return std::min(1.0, T + kTempTol);
  }
  while (hi - lo > kTempTol) {
    double mid = 0.5 * (lo + hi);
    (temperedEss(phi, weights, mid - T) >= target ? lo : hi) = mid;
  }
  return lo;
}

void reweight(ParticleSystem& sys, double tNext) {
  if (!(tNext >= sys.T))
    throw std::invalid_argument("reweight: temperature must not decrease");
  Eigen::VectorXd logw =
      sys.weights.array().log().matrix() - (tNext - sys.T) * sys.potentials;
  double norm = logSumExp(logw);
  if (!std::isfinite(norm))
    throw std::runtime_error("reweight: total weight underflowed to zero");
  sys.weights = (logw.array() - norm).exp().matrix();
  sys.T = tNext;
}

void resampleParticles(ParticleSystem& sys, SmcConfig::Resampling scheme,
                       std::uint64_t seed, std::uint64_t iteration) {
  const int M = sys.count();
  std::vector<int> pick(M);
  auto gen = substream(seed, iteration, 1);
  if (scheme == SmcConfig::Resampling::Multinomial) {
    std::discrete_distribution<int> draw(sys.weights.data(),
                                         sys.weights.data() + M);
    for (int i = 0; i < M; ++i) pick[i] = draw(gen);
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0 / M);
    double pos = u(gen);
    double cum = sys.weights[0];
    int j = 0;
    for (int i = 0; i < M; ++i) {
      double p = pos + static_cast<double>(i) / M;
      while (cum < p && j + 1 < M) cum += sys.weights[++j];
      pick[i] = j;
    }
  }
  Eigen::MatrixXd pos(M, sys.dim());
  Eigen::VectorXd phi(M);
  for (int i = 0; i < M; ++i) {
    pos.row(i) = sys.positions.row(pick[i]);
    phi[i] = sys.potentials[pick[i]];
  }
  sys.positions = std::move(pos);
  sys.potentials = std::move(phi);
  sys.weights.setConstant(M, 1.0 / M);
}

MutationStats mutate(ParticleSystem& sys, const PotentialFn& potential,
                     const SmcConfig& config, std::uint64_t iteration, double& lambda) {
  const int M = sys.count();
  const int J = sys.dim();
  MutationStats stats;
  if (J == 0) return stats;
  double cumulative = 0;
  for (int sweep = 0; sweep < config.maxSweeps; ++sweep) {
    Eigen::VectorXd mean = sys.positions.colwise().mean();
    Eigen::VectorXd sigma(J);
    for (int j = 0; j < J; ++j) {
      double var = (sys.positions.col(j).array() - mean[j]).square().sum() / M;
      sigma[j] = std::max(lambda * std::sqrt(var), 1e-12);
    }
    // proposals and potential evaluations are independent across particles;
    // acceptance is applied serially afterwards
    Eigen::MatrixXd proposals(M, J);
    Eigen::VectorXd phiNew(M), logHastings(M), uAccept(M);
    parallelFor(M, config.threads, [&](int i) {
      auto gen = substream(config.seed, iteration, 2,
                           static_cast<std::uint64_t>(sweep),
                           static_cast<std::uint64_t>(i));
      std::normal_distribution<double> nd(0.0, 1.0);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double logH = 0;  // log prod Z_j(y) / Z_j(y')
      for (int j = 0; j < J; ++j) {
        double y = sys.positions(i, j);
        double step;
        do {
          step = sigma[j] * nd(gen);
        } while (std::abs(y + step) > 1.0);
        proposals(i, j) = y + step;
        logH += std::log(truncMass(y, sigma[j])) -
                std::log(truncMass(proposals(i, j), sigma[j]));
      }
      logHastings[i] = logH;
      uAccept[i] = u(gen);
      phiNew[i] = potential(proposals.row(i).transpose());
    });
    stats.evaluations += M;
    int accepted = 0;
    for (int i = 0; i < M; ++i) {
      double logAlpha = -sys.T * (phiNew[i] - sys.potentials[i]) + logHastings[i];
      if (std::log(uAccept[i]) < logAlpha) {
        sys.positions.row(i) = proposals.row(i);
        sys.potentials[i] = phiNew[i];
        ++accepted;
      }
    }
    double rate = static_cast<double>(accepted) / M;
    cumulative += rate;
    stats.acceptance += rate;
    ++stats.sweeps;
    if (rate > 0.3) lambda *= 1.1;
    else if (rate < 0.15) lambda *= 0.9;
    if (stats.sweeps >= config.minSweeps && cumulative >= 1.0) break;
  }
  stats.acceptance /= stats.sweeps;
  return stats;
}

SmcResult runSmc(const SmcConfig& config, const PriorSpec& prior,
                 const PotentialFn& potential,
                 const std::function<long()>& solveCounter) {
  config.validate();
  auto counter = [&]() { return solveCounter ? solveCounter() : 0L; };

  SmcResult out;
  ParticleSystem& sys = out.particles;
  sys.positions = samplePriorPositions(prior, config.M);
  sys.weights.setConstant(config.M, 1.0 / config.M);
  sys.potentials.resize(config.M);
  sys.T = 0;
  long mark = counter();
  parallelFor(config.M, config.threads, [&](int i) {
    sys.potentials[i] = potential(sys.positions.row(i).transpose());
  });
  out.diagnostics.solvesInit = counter() - mark;

  double lambda = 2.38 / std::sqrt(std::max(1, prior.J));
  std::uint64_t iteration = 0;
  while (sys.T < 1) {
    ++iteration;
    SmcDiagnostics::Step step;
    auto t0 = std::chrono::steady_clock::now();
    try {
      mark = counter();
      bool forced = false;
      double tNext = selectNextTemperature(sys.potentials, sys.weights, sys.T,
                                           config.essFactor * config.M, &forced);
      step.forcedMinStep = forced;
      reweight(sys, tNext);
      step.T = tNext;
      step.essValue = ess(sys.weights);
      step.solvesUpdate = counter() - mark;

      mark = counter();
      if (config.resampleAlways ||
          step.essValue < config.essResampleThreshold * config.M)
        resampleParticles(sys, config.resampling, config.seed, iteration);
      step.solvesResample = counter() - mark;

      mark = counter();
      MutationStats ms = mutate(sys, potential, config, iteration, lambda);
      step.solvesMutate = counter() - mark;
      step.acceptance = ms.acceptance;
      step.sweeps = ms.sweeps;
      out.diagnostics.totalSweeps += ms.sweeps;
      out.diagnostics.totalMutationEvals += ms.evaluations;
    } catch (const std::exception& e) {
      throw std::runtime_error("smc: temperature step " + std::to_string(iteration) +
                               ": " + e.what());
    }
    step.wallSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.diagnostics.steps.push_back(step);
  }
  sys.validate();
  return out;
}

void writeDiagnosticsCsv(const SmcDiagnostics& diag, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  writeCsvHeaderless(out);
  out << "T,ess,acceptance,sweeps,solves_update,solves_resample,solves_mutate,"
         "forced_min_step,wall_seconds\n";
  for (const auto& s : diag.steps)
    out << s.T << ',' << s.essValue << ',' << s.acceptance << ',' << s.sweeps << ','
        << s.solvesUpdate << ',' << s.solvesResample << ',' << s.solvesMutate << ','
        << (s.forcedMinStep ? 1 : 0) << ',' << s.wallSeconds << '\n';
}

void writeParticlesCsv(const ParticleSystem& sys, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  writeCsvHeaderless(out);
  for (int j = 0; j < sys.dim(); ++j) out << 'y' << j + 1 << ',';
  out << "weight\n";
  for (int i = 0; i < sys.count(); ++i) {
    for (int j = 0; j < sys.dim(); ++j) out << sys.positions(i, j) << ',';
    out << sys.weights[i] << '\n';
  }
}

void writeRadiusSummaryCsv(const ParticleSystem& sys, const CoefficientSequence& coeffs,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  writeCsvHeaderless(out);
  out << "phi,posterior_mean,posterior_std,prior_mean\n";
  const int grid = 720;
  for (int g = 0; g < grid; ++g) {
    double phi = 2 * M_PI * g / grid;
    double mean = 0, sq = 0;
    for (int i = 0; i < sys.count(); ++i) {
      double r = RadiusField(sys.positions.row(i).transpose(), coeffs).radius(phi);
      mean += sys.weights[i] * r;
      sq += sys.weights[i] * r * r;
    }
    double var = std::max(0.0, sq - mean * mean);
    out << phi << ',' << mean << ',' << std::sqrt(var) << ',' << coeffs.r0 << '\n';
  }
}

}  // namespace scatshape
