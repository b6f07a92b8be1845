#pragma once

#include "emoflow/random.hpp"
#include "emoflow/tensor.hpp"

namespace emoflow {

/// Linear noise rate beta(t) = beta0 + t (beta1 - beta0) on [0, horizon].
class NoiseSchedule {
 public:
  static constexpr double kDefaultBeta0 = 0.05;
  static constexpr double kDefaultBeta1 = 20.0;
  static constexpr double kHorizon = 1.0;

  NoiseSchedule() : NoiseSchedule(kDefaultBeta0, kDefaultBeta1) {}
  NoiseSchedule(double beta0, double beta1);

  double beta0() const { return beta0_; }
  double beta1() const { return beta1_; }
  double horizon() const { return kHorizon; }

  double beta(double t) const;
  /// B(t), the integral of beta from 0 to t.
  double cum_beta(double t) const;

 private:
  void check_time(double t) const;

  double beta0_;
  double beta1_;
};

/// Terminal law N(mu, Sigma) of the forward process. The mean is per frame
/// (same shape as the state); Sigma is diagonal, one entry per channel.
class PriorField {
 public:
  PriorField(Matrix mean, Vector sigma_diag);

  /// mu = 0, Sigma = I.
  static PriorField standard(Eigen::Index frames, Eigen::Index channels);
  /// Every frame shares the same mean row.
  static PriorField tiled(const RowVector& mean_row, Eigen::Index frames, Vector sigma_diag);

  const Matrix& mean() const { return mean_; }
  const Vector& sigma() const { return sigma_; }
  Eigen::Index frames() const { return mean_.rows(); }
  Eigen::Index channels() const { return mean_.cols(); }

  void require_matches(const Matrix& state) const;

 private:
  Matrix mean_;
  Vector sigma_;
};

struct ForwardMarginal {
  StateTensor mean;
  Vector var;  // per channel; the same for every frame
};

/// exp(-B(t) / (2 sigma)): how much of (x0 - mu) survives to time t.
double mean_decay(const NoiseSchedule& schedule, double sigma, double t);

ForwardMarginal forward_marginal(const NoiseSchedule& schedule, const PriorField& prior,
                                 const StateTensor& x0, double t);

StateTensor sample_forward(const NoiseSchedule& schedule, const PriorField& prior,
                           const StateTensor& x0, double t, RandomStream& rng);

}  // namespace emoflow
