// Command line front end: data generation, SMC inversion, bound
// verification, single forward solves, and prior sampling. Exit codes:
// 0 success, 2 configuration error, 3 numerical failure.

#include "scatshape/bayes.hpp"
#include "scatshape/bounds.hpp"
#include "scatshape/config.hpp"
#include "scatshape/smc.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace scatshape;

namespace {

constexpr const char* kToolVersion = "scatshape 1.0.0";

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

std::ofstream openCsv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << std::setprecision(17) << std::scientific;
  return out;
}

void finishManifest(RunManifest& m, const Timer& timer, const fs::path& dir,
                    const std::vector<fs::path>& files) {
  m.toolVersion = kToolVersion;
  m.wallSeconds = timer.seconds();
  for (const auto& f : files) m.outputs.emplace_back(f.string(), fileHash(f.string()));
  writeManifest(m, (dir / "manifest.json").string());
}

int generateData(const RunConfig& cfg, int threads) {
  (void)threads;
  Timer timer;
  fs::path dir(cfg.outputDir);
  fs::create_directories(dir);
  Mesh mesh = buildDiskMesh(cfg.meshConfig());
  ForwardSolver solver(mesh, cfg.physics());
  PriorSpec prior = cfg.prior();
  prior.seed = cfg.truthSeed;
  RadiusField truth = samplePrior(prior, 1)[0];
  MeasurementSetup setup = cfg.measurement();
  NoiseModel noise =
      NoiseModel::isotropic(cfg.zeroNoise ? 1e-300 : cfg.noiseVariance, cfg.K);
  DataVector data =
      generateData(solver, truth, setup, noise, cfg.truthSeed, cfg.noiseSeed);
  if (cfg.zeroNoise) {
    data.delta = forwardMap(solver, truth, setup);
    data.sigmaSpec = "0 (exact data)";
  }
  fs::path dataPath = dir / "data.json";
  {
    std::ofstream out(dataPath);
    out << dataToJson(data) << '\n';
  }
  // truth radius on the summary grid, for later comparison plots
  fs::path truthPath = dir / "truth_radius.csv";
  {
    auto out = openCsv(truthPath);
    out << "phi,radius\n";
    for (int g = 0; g < 720; ++g) {
      double phi = 2 * M_PI * g / 720;
      out << phi << ',' << truth.radius(phi) << '\n';
    }
  }
  RunManifest m;
  m.command = "generate-data";
  m.resolved = cfg;
  m.forwardSolves = solver.solveCount();
  finishManifest(m, timer, dir, {dataPath, truthPath});
  return 0;
}

int runSmcCommand(const RunConfig& cfg, const std::string& dataPath, int threads) {
  Timer timer;
  fs::path dir(cfg.outputDir);
  fs::create_directories(dir);
  std::ifstream in(dataPath);
  if (!in) throw std::invalid_argument("cannot open data file " + dataPath);
  std::stringstream ss;
  ss << in.rdbuf();
  DataVector data = dataFromJson(ss.str());
  if (data.K != cfg.K)
    throw std::invalid_argument("data file has K = " + std::to_string(data.K) +
                                " but the config expects K = " + std::to_string(cfg.K));
  Mesh mesh = buildDiskMesh(cfg.meshConfig());
  ForwardSolver solver(mesh, cfg.physics());
  MeasurementSetup setup = cfg.measurement();
  NoiseModel noise = NoiseModel::isotropic(cfg.noiseVariance, cfg.K);
  PotentialFn pot = [&](const Eigen::VectorXd& y) {
    RadiusField field(y, cfg.prior().coeffs);
    return potential(forwardMap(solver, field, setup), data.delta, noise);
  };
  PriorSpec prior = cfg.prior();
  SmcConfig smcCfg = cfg.smc();
  smcCfg.threads = threads;
  auto res = runSmc(smcCfg, prior, pot, [&]() { return solver.solveCount(); });

  fs::path particles = dir / "particles.csv";
  fs::path diagnostics = dir / "diagnostics.csv";
  fs::path radius = dir / "radius_summary.csv";
  writeParticlesCsv(res.particles, particles.string());
  writeDiagnosticsCsv(res.diagnostics, diagnostics.string());
  writeRadiusSummaryCsv(res.particles, prior.coeffs, radius.string());
  RunManifest m;
  m.command = "run-smc";
  m.resolved = cfg;
  m.forwardSolves = solver.solveCount();
  finishManifest(m, timer, dir, {particles, diagnostics, radius});
  return 0;
}

int verifyBounds(const RunConfig& cfg, int shapes,
                 const std::vector<double>& multipliers, int threads) {
  (void)threads;
  Timer timer;
  fs::path dir(cfg.outputDir);
  fs::create_directories(dir);
  fs::path report = dir / "bounds.csv";
  auto out = openCsv(report);
  out << "kappa0,shape,c_kappa0,c1,c2,lhs,rhs,ratio,pass\n";
  long solves = 0;
  bool allPass = true;
  for (double mult : multipliers) {
    RunConfig scaled = cfg;
    scaled.frequency = cfg.frequency * mult;
    PhysicsParams phys = scaled.physics();
    Mesh mesh = buildDiskMesh(scaled.meshConfig());
    ForwardSolver solver(mesh, phys);
    PriorSpec prior = scaled.prior();
    GeometrySummary geom = summarizeGeometry(
        prior.coeffs, 0.5 * ((1 + prior.coeffs.gammaBeta()) * cfg.r0 + cfg.rMap),
        cfg.R, cfg.rPml);
    auto fields = samplePrior(prior, shapes);
    for (int i = 0; i < shapes; ++i) {
      auto rep = verifyForwardBound(solver, fields[static_cast<size_t>(i)], geom);
      out << phys.kappa0 << ',' << i << ',' << rep.constants.cKappa0 << ','
          << rep.constants.c1 << ',' << rep.constants.c2 << ',' << rep.lhs << ','
          << rep.rhs << ',' << rep.ratio << ',' << (rep.pass ? 1 : 0) << '\n';
      allPass = allPass && rep.pass;
    }
    solves += solver.solveCount();
  }
  out.close();
  RunManifest m;
  m.command = "verify-bounds";
  m.resolved = cfg;
  m.forwardSolves = solves;
  finishManifest(m, timer, dir, {report});
  if (!allPass) throw std::runtime_error("forward bound violated; see bounds.csv");
  return 0;
}

int forwardSolve(const RunConfig& cfg, const std::vector<double>& y, int threads) {
  (void)threads;
  Timer timer;
  fs::path dir(cfg.outputDir);
  fs::create_directories(dir);
  Mesh mesh = buildDiskMesh(cfg.meshConfig());
  ForwardSolver solver(mesh, cfg.physics());
  PriorSpec prior = cfg.prior();
  Eigen::VectorXd yv =
      Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<long>(y.size()));
  RadiusField field(yv, prior.coeffs);
  FieldSolution sol = solver.solveField(field);

  fs::path fieldPath = dir / "field.csv";
  {
    auto out = openCsv(fieldPath);
    out << "x,y,re,im\n";
    for (int v = 0; v < mesh.vertexCount(); ++v)
      out << mesh.vertices(v, 0) << ',' << mesh.vertices(v, 1) << ','
          << sol.nodal[v].real() << ',' << sol.nodal[v].imag() << '\n';
  }
  fs::path measPath = dir / "measurements.csv";
  {
    auto out = openCsv(measPath);
    out << "index,value\n";
    Eigen::VectorXd g = applyMeasurement(mesh, sol, cfg.measurement());
    for (int k = 0; k < g.size(); ++k) out << k + 1 << ',' << g[k] << '\n';
  }
  RunManifest m;
  m.command = "forward-solve";
  m.resolved = cfg;
  m.forwardSolves = solver.solveCount();
  finishManifest(m, timer, dir, {fieldPath, measPath});
  return 0;
}

int priorSample(const RunConfig& cfg, int count, int threads) {
  (void)threads;
  Timer timer;
  fs::path dir(cfg.outputDir);
  fs::create_directories(dir);
  PriorSpec prior = cfg.prior();
  auto fields = samplePrior(prior, count);
  fs::path path = dir / "prior_samples.csv";
  auto out = openCsv(path);
  out << "phi";
  for (int i = 0; i < count; ++i) out << ",sample_" << i + 1;
  out << '\n';
  for (int g = 0; g < 720; ++g) {
    double phi = 2 * M_PI * g / 720;
    out << phi;
    for (int i = 0; i < count; ++i) out << ',' << fields[static_cast<size_t>(i)].radius(phi);
    out << '\n';
  }
  out.close();
  RunManifest m;
  m.command = "prior-sample";
  m.resolved = cfg;
  finishManifest(m, timer, dir, {path});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian shape inversion for time-harmonic acoustic scattering"};
  app.require_subcommand(1);

  std::string configPath, outDir, dataPath;
  std::int64_t seedOverride = -1;
  int threads = 1, shapes = 20, count = 16;
  std::vector<double> multipliers{1, 2, 4};
  std::vector<double> yValues;

  app.add_option("--config", configPath, "JSON configuration file");
  app.add_option("--out", outDir, "output directory (overrides the config)");
  app.add_option("--seed", seedOverride, "seed override for all randomized stages");
  app.add_option("--threads", threads, "worker threads for particle evaluations");

  auto* gen = app.add_subcommand("generate-data", "draw a truth shape, solve, add noise");
  auto* run = app.add_subcommand("run-smc", "tempered SMC inversion from a data file");
  run->add_option("--data", dataPath, "data JSON produced by generate-data")->required();
  auto* ver = app.add_subcommand("verify-bounds", "forward-bound sweep over prior shapes");
  ver->add_option("--shapes", shapes, "prior shapes per wavenumber");
  ver->add_option("--multipliers", multipliers, "wavenumber multipliers");
  auto* fwd = app.add_subcommand("forward-solve", "single solve for a given coefficient vector");
  fwd->add_option("--y", yValues, "coefficient vector in [-1,1]^J");
  auto* pri = app.add_subcommand("prior-sample", "sample radius fields from the prior");
  pri->add_option("--count", count, "number of samples");

  // Let global options (--config, --out, --seed, --threads) appear after the subcommand.
  for (auto* sub : {gen, run, ver, fwd, pri}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    if (!configPath.empty()) cfg = loadConfigFile(configPath);
    if (!outDir.empty()) cfg.outputDir = outDir;
    if (seedOverride >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seedOverride);
      cfg.truthSeed = static_cast<std::uint64_t>(seedOverride) + 1;
      cfg.noiseSeed = static_cast<std::uint64_t>(seedOverride) + 2;
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) return generateData(cfg, threads);
    if (run->parsed()) return runSmcCommand(cfg, dataPath, threads);
    if (ver->parsed()) return verifyBounds(cfg, shapes, multipliers, threads);
    if (fwd->parsed()) return forwardSolve(cfg, yValues, threads);
    if (pri->parsed()) return priorSample(cfg, count, threads);
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
