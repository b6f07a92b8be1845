#include "emoflow/noise_schedule.hpp"

#include "emoflow/errors.hpp"

#include <cmath>
#include <string>

namespace emoflow {

NoiseSchedule::NoiseSchedule(double beta0, double beta1) : beta0_(beta0), beta1_(beta1) {
  if (!(beta0 > 0.0) || !(beta1 > 0.0) || !std::isfinite(beta0) || !std::isfinite(beta1))
    throw DomainError("noise schedule: beta0 and beta1 must be positive and finite");
}

void NoiseSchedule::check_time(double t) const {
  if (!(t >= 0.0 && t <= kHorizon))
    throw DomainError("noise schedule: time " + std::to_string(t) + " outside [0, 1]");
}

double NoiseSchedule::beta(double t) const {
  check_time(t);
  return beta0_ + t * (beta1_ - beta0_);
}

double NoiseSchedule::cum_beta(double t) const {
  check_time(t);
  return beta0_ * t + 0.5 * (beta1_ - beta0_) * t * t;
}

PriorField::PriorField(Matrix mean, Vector sigma_diag)
    : mean_(std::move(mean)), sigma_(std::move(sigma_diag)) {
  if (mean_.cols() != sigma_.size())
    throw ShapeError("prior: mean has " + std::to_string(mean_.cols()) + " channels but sigma has " +
                     std::to_string(sigma_.size()));
  for (Eigen::Index i = 0; i < sigma_.size(); ++i) {
    if (!(sigma_(i) > 0.0) || !std::isfinite(sigma_(i)))
      throw DomainError("prior: sigma entry " + std::to_string(i) + " must be positive, got " +
                        std::to_string(sigma_(i)));
  }
  if (!mean_.allFinite()) throw DomainError("prior: mean must be finite");
}

PriorField PriorField::standard(Eigen::Index frames, Eigen::Index channels) {
  return PriorField(Matrix::Zero(frames, channels), Vector::Ones(channels));
}

PriorField PriorField::tiled(const RowVector& mean_row, Eigen::Index frames, Vector sigma_diag) {
  return PriorField(mean_row.replicate(frames, 1), std::move(sigma_diag));
}

void PriorField::require_matches(const Matrix& state) const {
  require_same_shape(state, mean_, "state vs prior mean");
}

double mean_decay(const NoiseSchedule& schedule, double sigma, double t) {
  return std::exp(-schedule.cum_beta(t) / (2.0 * sigma));
}

ForwardMarginal forward_marginal(const NoiseSchedule& schedule, const PriorField& prior,
                                 const StateTensor& x0, double t) {
  prior.require_matches(x0);
  const double big_b = schedule.cum_beta(t);
  if (big_b == 0.0) return {x0, Vector::Zero(x0.cols())};
  ForwardMarginal out{Matrix(x0.rows(), x0.cols()), Vector(x0.cols())};
  for (Eigen::Index c = 0; c < x0.cols(); ++c) {
    const double sigma = prior.sigma()(c);
    const double a = std::exp(-big_b / (2.0 * sigma));
    out.mean.col(c) = prior.mean().col(c).array() + (x0.col(c) - prior.mean().col(c)).array() * a;
    out.var(c) = -sigma * std::expm1(-big_b / sigma);
  }
  return out;
}

StateTensor sample_forward(const NoiseSchedule& schedule, const PriorField& prior,
                           const StateTensor& x0, double t, RandomStream& rng) {
  ForwardMarginal m = forward_marginal(schedule, prior, x0, t);
  if (t == 0.0) return m.mean;
  const Matrix z = rng.normal_matrix(x0.rows(), x0.cols());
  return m.mean + (z.array().rowwise() * m.var.transpose().array().sqrt()).matrix();
}

}  // namespace emoflow
