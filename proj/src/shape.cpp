#include "scatshape/shape.hpp"

#include "scatshape/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace scatshape {

namespace {

// Nodes/weights for 64-point Gauss-Legendre on [0,1], generated on first use
// by Newton iteration on the Legendre polynomial.
struct GaussRule {
  Eigen::VectorXd x, w;
  GaussRule() {
    const int n = 64;
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
      double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = t;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (t * p1 - p0) / (t * t - 1);
        double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      x[i] = 0.5 * (1 + t);
      w[i] = 1.0 / ((1 - t * t) * dp * dp);
    }
  }
};

const GaussRule& gaussRule() {
  static const GaussRule rule;
  return rule;
}

// sum_{k=1}^inf f(k) for smooth decreasing f with integrable tail:
// direct sum to N plus the midpoint-rule tail integral int_{N+1/2}^inf f,
// computed under the substitution x = (N+1/2)/t on t in (0,1].
template <typename F>
double seriesSum(F f, long N) {
  double head = 0;
  for (long k = N; k >= 1; --k) head += f(static_cast<double>(k));
  const double a = N + 0.5;
  const GaussRule& g = gaussRule();
  double tail = 0;
  for (int i = 0; i < g.x.size(); ++i) {
    double t = g.x[i];
    tail += g.w[i] * f(a / t) * a / (t * t);
  }
  return head + tail;
}

}  // namespace

int BasisSet::frequency(int j) { return (j % 2 == 1) ? (j + 1) / 2 : j / 2; }

double BasisSet::normalization(int j) { return 1.0 / (1.0 + frequency(j)); }

double BasisSet::raw(int j, double phi) {
  int k = frequency(j);
  return (j % 2 == 1) ? std::sin(k * phi) : std::cos(k * phi);
}

double BasisSet::eval(int j, double phi) { return normalization(j) * raw(j, phi); }

double BasisSet::evalDeriv(int j, double phi) {
  int k = frequency(j);
  double d = (j % 2 == 1) ? k * std::cos(k * phi) : -k * std::sin(k * phi);
  return normalization(j) * d;
}

double BasisSet::evalDeriv2(int j, double phi) {
  int k = frequency(j);
  return -static_cast<double>(k) * k * eval(j, phi);
}

double CoefficientSequence::betaAt(int j) const {
  if (j < 1) throw std::invalid_argument("betaAt: j must be >= 1");
  if (j <= count()) return betas[j - 1];
  if (s <= 0) return 0;  // hand-made sequences carry no tail
  int pair = (j + 1) / 2;
  return r0 / (4.0 * normalizer * (1.0 + s * std::pow(pair, 2.0 + eps)));
}

double CoefficientSequence::partialSum(int upTo) const {
  if (upTo < 0) upTo = count();
  double sum = 0;
  for (int j = 1; j <= upTo; ++j) sum += std::abs(betaAt(j));
  return sum;
}

double CoefficientSequence::sumLimit() const {
  if (s <= 0) return betas.cwiseAbs().sum();
  // 2 per pair: sum_j |beta_j| = (r0 / (2 S)) sum_k 1/(1 + s k^{2+eps}) = r0/2.
  double total = seriesSum(
      [&](double k) { return 1.0 / (1.0 + s * std::pow(k, 2.0 + eps)); }, 1000000);
  return r0 * total / (2.0 * normalizer);
}

double CoefficientSequence::gammaBeta() const { return sumLimit() / r0; }

double CoefficientSequence::fluctuationVariance(int upTo) const {
  // Var(y_j) = 1/3 for y_j uniform on [-1,1]; ||psi_j||_{L2}^2 = pi/(1+k)^2.
  auto term = [&](double pair) {
    int k = static_cast<int>(pair);
    double b = betaAt(2 * k);  // pair members share one beta value
    return 2.0 * b * b * (M_PI / 3.0) / ((1.0 + pair) * (1.0 + pair));
  };
  if (upTo < 0) {
    if (s <= 0) upTo = count();
    else {
      // Terms decay like pair^{-2(3+eps)}; the tail past 10^5 is negligible
      // at double precision, picked up by the same midpoint correction.
      auto smooth = [&](double p) {
        double b = r0 / (4.0 * normalizer * (1.0 + s * std::pow(p, 2.0 + eps)));
        return 2.0 * b * b * (M_PI / 3.0) / ((1.0 + p) * (1.0 + p));
      };
      return seriesSum(smooth, 100000);
    }
  }
  double sum = 0;
  for (int p = 1; 2 * p <= upTo + 1; ++p) {
    if (2 * p <= upTo) {
      sum += term(p);
    } else {
      // odd truncation: only the sine member of the last pair
      double b = betaAt(2 * p - 1);
      sum += b * b * (M_PI / 3.0) / ((1.0 + p) * (1.0 + p));
    }
  }
  return sum;
}

CoefficientSequence whittleMaternCoeffs(double r0, double s, double eps, int J) {
  if (s <= 0) throw std::invalid_argument("whittleMaternCoeffs: s must be positive");
  if (eps <= 0) throw std::invalid_argument("whittleMaternCoeffs: eps must be positive");
  if (r0 <= 0) throw std::invalid_argument("whittleMaternCoeffs: r0 must be positive");
  if (J < 0) throw std::invalid_argument("whittleMaternCoeffs: J must be nonnegative");
  CoefficientSequence c;
  c.r0 = r0;
  c.s = s;
  c.eps = eps;
  c.normalizer = seriesSum(
      [&](double k) { return 1.0 / (1.0 + s * std::pow(k, 2.0 + eps)); }, 1000000);
  c.betas.resize(J);
  for (int j = 1; j <= J; ++j) {
    int pair = (j + 1) / 2;
    c.betas[j - 1] = r0 / (4.0 * c.normalizer * (1.0 + s * std::pow(pair, 2.0 + eps)));
  }
  return c;
}

int truncationLevel(const CoefficientSequence& coeffs, double fraction) {
  if (fraction <= 0 || fraction >= 1)
    throw std::invalid_argument("truncationLevel: fraction must be in (0,1)");
  double total = coeffs.fluctuationVariance(-1);
  if (total <= 0) throw std::invalid_argument("truncationLevel: zero total variance");
  double target = fraction * total;
  double run = 0;
  for (int pair = 1;; ++pair) {
    double b = coeffs.betaAt(2 * pair);
    run += 2.0 * b * b * (M_PI / 3.0) / ((1.0 + pair) * (1.0 + pair));
    if (run >= target) return 2 * pair;
    if (pair > 10000000) throw std::runtime_error("truncationLevel: did not converge");
  }
}

RadiusField::RadiusField(Eigen::VectorXd y_, CoefficientSequence coeffs_)
    : y(std::move(y_)), coeffs(std::move(coeffs_)) {
  if (y.size() > coeffs.betas.size())
    throw std::invalid_argument("RadiusField: more positions than coefficients");
  if ((y.cwiseAbs().array() > 1.0 + 1e-12).any())
    throw std::invalid_argument("RadiusField: position outside [-1,1]^J");
}

double RadiusField::radius(double phi) const {
  double r = coeffs.r0;
  for (int j = 1; j <= dim(); ++j)
    r += coeffs.betas[j - 1] * y[j - 1] * BasisSet::eval(j, phi);
  return r;
}

double RadiusField::radiusDeriv(double phi) const {
  double d = 0;
  for (int j = 1; j <= dim(); ++j)
    d += coeffs.betas[j - 1] * y[j - 1] * BasisSet::evalDeriv(j, phi);
  return d;
}

double RadiusField::radiusDeriv2(double phi) const {
  double d = 0;
  for (int j = 1; j <= dim(); ++j)
    d += coeffs.betas[j - 1] * y[j - 1] * BasisSet::evalDeriv2(j, phi);
  return d;
}

Eigen::VectorXd RadiusField::radiusOn(const Eigen::VectorXd& phis) const {
  Eigen::VectorXd out(phis.size());
  for (int i = 0; i < phis.size(); ++i) out[i] = radius(phis[i]);
  return out;
}

double RadiusField::minRadius(int gridSize) const {
  double m = radius(0);
  for (int i = 1; i < gridSize; ++i)
    m = std::min(m, radius(2 * M_PI * i / gridSize));
  return m;
}

double RadiusField::maxRadius(int gridSize) const {
  double m = radius(0);
  for (int i = 1; i < gridSize; ++i)
    m = std::max(m, radius(2 * M_PI * i / gridSize));
  return m;
}

std::vector<RadiusField> samplePrior(const PriorSpec& spec, int count) {
  Eigen::MatrixXd ys = samplePriorPositions(spec, count);
  std::vector<RadiusField> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.emplace_back(ys.row(i).transpose(), spec.coeffs);
  return out;
}

Eigen::MatrixXd samplePriorPositions(const PriorSpec& spec, int count) {
  if (spec.J > spec.coeffs.count())
    throw std::invalid_argument("samplePrior: J exceeds coefficient count");
  Eigen::MatrixXd ys(count, spec.J);
  for (int i = 0; i < count; ++i) {
    auto gen = substream(spec.seed, 0, i);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int j = 0; j < spec.J; ++j) ys(i, j) = u(gen);
  }
  return ys;
}

double starShapeMargin(const RadiusField& field, int gridSize) {
  // m(phi) = r^2 / sqrt(r^2 + r'^2) is the distance from the origin to the
  // tangent line, i.e. x.n scaled to the boundary point.
  auto m = [&](double phi) {
    double r = field.radius(phi), dr = field.radiusDeriv(phi);
    return r * r / std::sqrt(r * r + dr * dr);
  };
  auto dm = [&](double phi) {
    double r = field.radius(phi);
    double dr = field.radiusDeriv(phi);
    double ddr = field.radiusDeriv2(phi);
    double q = r * r + dr * dr;
    // d/dphi [r^2 q^{-1/2}] = 2 r dr q^{-1/2} - r^2 (r dr + dr ddr) q^{-3/2}
    return (2 * r * dr * q - r * r * (r * dr + dr * ddr)) / std::pow(q, 1.5);
  };
  double best = m(0), bestPhi = 0;
  for (int i = 1; i < gridSize; ++i) {
    double phi = 2 * M_PI * i / gridSize;
    double v = m(phi);
    if (v < best) {
      best = v;
      bestPhi = phi;
    }
  }
  // One Newton polish on m' with a finite-difference second derivative.
  double h = 2 * M_PI / gridSize;
  double d1 = dm(bestPhi);
  double d2 = (dm(bestPhi + h) - dm(bestPhi - h)) / (2 * h);
  if (d2 > 0) {
    double polished = m(bestPhi - d1 / d2);
    best = std::min(best, polished);
  }
  return best;
}

double starShapeConstant(int d, double gammaBeta, double r0Inf, double r0C01) {
  if (gammaBeta < 0 || gammaBeta >= 1)
    throw std::invalid_argument("starShapeConstant: gammaBeta must be in [0,1)");
  if (r0Inf <= 0 || r0C01 < r0Inf)
    throw std::invalid_argument("starShapeConstant: invalid r0 norms");
  double a = (1.0 - gammaBeta) * r0Inf / (std::sqrt(2.0) * (1.0 + gammaBeta) * r0C01);
  double a2 = a * a;
  if (d == 2) return a2;
  if (d == 3) {
    double b = (1.0 / ((1.0 - gammaBeta) * r0Inf) + 1.0) * (1.0 + gammaBeta) * r0C01 + 1.0;
    return 0.5 * a2 / b;
  }
  throw std::invalid_argument("starShapeConstant: d must be 2 or 3");
}

}  // namespace scatshape
