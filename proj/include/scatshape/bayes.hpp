#pragma once

// Gaussian-noise potential, tempering increments, and a self-normalized
// importance-sampling estimate of the Hellinger distance between posteriors
// that share a prior sample set.

#include "scatshape/observe.hpp"

#include <Eigen/Dense>

namespace scatshape {

// 0.5 |delta - Gr|^2 weighted by Sigma^{-1}, through the stored Sigma^{-1/2}.
double potential(const Eigen::VectorXd& Gr, const Eigen::VectorXd& delta,
                 const NoiseModel& noise);

// log of the incremental weight when tempering from tLo to tHi.
double temperedLogIncrement(double phi, double tLo, double tHi);

// d_Hell between the two posteriors defined by potentials phiA, phiB against
// the common prior samples; estimator works entirely in log space. The small
// sample bias of self-normalized importance sampling applies at small M.
double hellingerEstimate(const Eigen::VectorXd& phiA, const Eigen::VectorXd& phiB);

// Convenience: shared forward evaluations G (M x K) against two data vectors.
double hellingerEstimate(const Eigen::MatrixXd& G, const Eigen::VectorXd& delta,
                         const Eigen::VectorXd& deltaPrime, const NoiseModel& noise);

double logSumExp(const Eigen::VectorXd& logs);

}  // namespace scatshape
