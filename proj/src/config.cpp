#include "scatshape/config.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scatshape {

namespace {

using nlohmann::json;

void rejectUnknownKeys(const json& obj, const std::string& scope,
                       std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw std::invalid_argument("config: unknown key \"" + scope + it.key() + "\"");
  }
}

template <typename T>
void fetch(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

PhysicsParams RunConfig::physics() const {
  PhysicsParams p = PhysicsParams::fromFrequency(frequency, soundSpeed);
  p.alphaIn = alphaIn;
  p.alphaOut = alphaOut;
  p.nIn = nIn;
  p.nOut = nOut;
  p.dir = Eigen::Vector2d(dirX, dirY);
  p.sigmaPml = sigmaPml;
  return p;
}

MeshConfig RunConfig::meshConfig() const {
  MeshConfig m;
  m.h = h;
  m.rhoA = rhoA;
  m.r0 = r0;
  m.rMap = rMap;
  m.R = R;
  m.rPml = rPml;
  return m;
}

PriorSpec RunConfig::prior() const {
  PriorSpec spec;
  spec.seed = seed;
  if (truncation > 0) {
    spec.J = truncation;
    spec.coeffs = whittleMaternCoeffs(r0, s, eps, truncation);
  } else {
    CoefficientSequence long_ = whittleMaternCoeffs(r0, s, eps, 2000);
    spec.J = truncationLevel(long_, 0.95);
    spec.coeffs = whittleMaternCoeffs(r0, s, eps, spec.J);
  }
  return spec;
}

MeasurementSetup RunConfig::measurement() const {
  MeasurementSetup setup;
  setup.K = K;
  setup.r1 = r1;
  setup.mode = mode == "real-part" ? MeasurementSetup::Mode::RealPart
                                   : MeasurementSetup::Mode::Amplitude;
  return setup;
}

SmcConfig RunConfig::smc() const {
  SmcConfig c;
  c.M = M;
  c.essFactor = essFactor;
  c.minSweeps = minSweeps;
  c.maxSweeps = maxSweeps;
  c.resampling = resampling == "systematic" ? SmcConfig::Resampling::Systematic
                                            : SmcConfig::Resampling::Multinomial;
  c.seed = seed;
  return c;
}

void RunConfig::validate() const {
  physics().validate();
  meshConfig().validate();
  smc().validate();
  if (mode != "amplitude" && mode != "real-part")
    throw std::invalid_argument(
        "config: measurement.mode must be \"amplitude\" or \"real-part\"");
  if (resampling != "multinomial" && resampling != "systematic")
    throw std::invalid_argument(
        "config: smc.resampling must be \"multinomial\" or \"systematic\"");
  if (!(noiseVariance > 0))
    throw std::invalid_argument("config: measurement.noise_variance must be positive");
  if (truncation < 0)
    throw std::invalid_argument("config: prior.truncation must be >= 0 (0 = auto)");
  CoefficientSequence coeffs = whittleMaternCoeffs(r0, s, eps, 0);
  double maxShape = (1 + coeffs.gammaBeta()) * r0;
  measurement().validate(maxShape, R);
  if (!(rMap > maxShape))
    throw std::invalid_argument(
        "config: R_map must exceed the largest admissible shape radius "
        "(1 + gamma_beta) r0");
}

RunConfig configFromJson(const std::string& text) {
  json j = json::parse(text);
  rejectUnknownKeys(j, "",
                    {"physics", "prior", "geometry", "measurement", "smc", "output_dir"});
  RunConfig c;
  if (j.contains("physics")) {
    const json& p = j["physics"];
    rejectUnknownKeys(p, "physics.",
                      {"frequency", "sound_speed", "alpha_in", "alpha_out", "n_in",
                       "n_out", "dir", "sigma_pml"});
    fetch(p, "frequency", c.frequency);
    fetch(p, "sound_speed", c.soundSpeed);
    fetch(p, "alpha_in", c.alphaIn);
    fetch(p, "alpha_out", c.alphaOut);
    fetch(p, "n_in", c.nIn);
    fetch(p, "n_out", c.nOut);
    fetch(p, "sigma_pml", c.sigmaPml);
    if (p.contains("dir")) {
      auto d = p.at("dir").get<std::vector<double>>();
      if (d.size() != 2)
        throw std::invalid_argument("config: physics.dir must have two components");
      c.dirX = d[0];
      c.dirY = d[1];
    }
  }
  if (j.contains("prior")) {
    const json& p = j["prior"];
    rejectUnknownKeys(p, "prior.", {"r0", "s", "eps", "truncation"});
    fetch(p, "r0", c.r0);
    fetch(p, "s", c.s);
    fetch(p, "eps", c.eps);
    fetch(p, "truncation", c.truncation);
  }
  if (j.contains("geometry")) {
    const json& p = j["geometry"];
    rejectUnknownKeys(p, "geometry.", {"rho_a", "r_map", "R", "r_pml", "h"});
    fetch(p, "rho_a", c.rhoA);
    fetch(p, "r_map", c.rMap);
    fetch(p, "R", c.R);
    fetch(p, "r_pml", c.rPml);
    fetch(p, "h", c.h);
  }
  if (j.contains("measurement")) {
    const json& p = j["measurement"];
    rejectUnknownKeys(p, "measurement.",
                      {"K", "r1", "mode", "noise_variance", "zero_noise", "truth_seed",
                       "noise_seed"});
    fetch(p, "K", c.K);
    fetch(p, "r1", c.r1);
    fetch(p, "mode", c.mode);
    fetch(p, "noise_variance", c.noiseVariance);
    fetch(p, "zero_noise", c.zeroNoise);
    fetch(p, "truth_seed", c.truthSeed);
    fetch(p, "noise_seed", c.noiseSeed);
  }
  if (j.contains("smc")) {
    const json& p = j["smc"];
    rejectUnknownKeys(p, "smc.",
                      {"M", "ess_factor", "min_sweeps", "max_sweeps", "resampling",
                       "seed"});
    fetch(p, "M", c.M);
    fetch(p, "ess_factor", c.essFactor);
    fetch(p, "min_sweeps", c.minSweeps);
    fetch(p, "max_sweeps", c.maxSweeps);
    fetch(p, "resampling", c.resampling);
    fetch(p, "seed", c.seed);
  }
  fetch(j, "output_dir", c.outputDir);
  return c;
}

std::string configToJson(const RunConfig& c) {
  json j;
  j["physics"] = {{"frequency", c.frequency}, {"sound_speed", c.soundSpeed},
                  {"alpha_in", c.alphaIn},    {"alpha_out", c.alphaOut},
                  {"n_in", c.nIn},            {"n_out", c.nOut},
                  {"dir", {c.dirX, c.dirY}},  {"sigma_pml", c.sigmaPml}};
  j["prior"] = {{"r0", c.r0}, {"s", c.s}, {"eps", c.eps}, {"truncation", c.truncation}};
  j["geometry"] = {{"rho_a", c.rhoA},
                   {"r_map", c.rMap},
                   {"R", c.R},
                   {"r_pml", c.rPml},
                   {"h", c.h}};
  j["measurement"] = {{"K", c.K},
                      {"r1", c.r1},
                      {"mode", c.mode},
                      {"noise_variance", c.noiseVariance},
                      {"zero_noise", c.zeroNoise},
                      {"truth_seed", c.truthSeed},
                      {"noise_seed", c.noiseSeed}};
  j["smc"] = {{"M", c.M},
              {"ess_factor", c.essFactor},
              {"min_sweeps", c.minSweeps},
              {"max_sweeps", c.maxSweeps},
              {"resampling", c.resampling},
              {"seed", c.seed}};
  j["output_dir"] = c.outputDir;
  return j.dump(2);
}

RunConfig loadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return configFromJson(ss.str());
}

std::string fileHash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash: cannot open " + path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void writeManifest(const RunManifest& m, const std::string& path) {
  json j;
  j["command"] = m.command;
  j["tool_version"] = m.toolVersion;
  j["wall_seconds"] = m.wallSeconds;
  j["forward_solves"] = m.forwardSolves;
  j["config"] = json::parse(configToJson(m.resolved));
  json outs = json::array();
  for (const auto& [p, hash] : m.outputs) outs.push_back({{"path", p}, {"hash", hash}});
  j["outputs"] = outs;
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("manifest: cannot open " + tmp);
    out << j.dump(2) << '\n';
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("manifest: cannot rename " + tmp + " to " + path);
}

}  // namespace scatshape
