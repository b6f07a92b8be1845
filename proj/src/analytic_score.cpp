#include "emoflow/analytic_score.hpp"

#include "emoflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace emoflow {

AnalyticScoreField::AnalyticScoreField(std::vector<GaussianComponent> components,
                                       NoiseSchedule schedule, Vector sigma, EmotionLabel baseline)
    : components_(std::move(components)),
      schedule_(schedule),
      sigma_(std::move(sigma)),
      baseline_(baseline) {
  if (components_.empty()) throw InputError("analytic field: no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != sigma_.size() || c.var.size() != sigma_.size())
      throw ShapeError("analytic field: component dimension does not match sigma");
    if (!(c.weight >= 0.0)) throw DomainError("analytic field: negative component weight");
    if ((c.var.array() <= 0.0).any()) throw DomainError("analytic field: non-positive variance");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw DomainError("analytic field: component weights sum to " + std::to_string(total));
  if ((sigma_.array() <= 0.0).any()) throw DomainError("analytic field: non-positive sigma");
}

bool AnalyticScoreField::has_label(Emotion e) const {
  if (baseline_ && *baseline_ == e) return true;
  return std::any_of(components_.begin(), components_.end(),
                     [e](const auto& c) { return c.label && *c.label == e; });
}

std::vector<int> AnalyticScoreField::active_components(EmotionLabel label) const {
  std::vector<int> idx;
  const bool full = !label || (baseline_ && *baseline_ == *label);
  double weight = 0.0;
  for (int k = 0; k < static_cast<int>(components_.size()); ++k) {
    if (full || (components_[k].label && *components_[k].label == *label)) {
      idx.push_back(k);
      weight += components_[k].weight;
    }
  }
  if (idx.empty() || !(weight > 0.0))
    throw DomainError("analytic field: label " + label_to_string(label) + " has zero weight");
  return idx;
}

namespace {

struct Evolved {
  RowVector mean;
  RowVector var;
};

// Law of X_t for X_0 ~ N(m0, v0): the OU map keeps it Gaussian with
// mean mu + (m0 - mu) a and variance sigma + (v0 - sigma) a^2.
Evolved evolve(const GaussianComponent& c, const RowVector& mu, const RowVector& decay,
               const Vector& sigma) {
  Evolved e;
  e.mean = mu.array() + (c.mean.transpose() - mu).array() * decay.array();
  e.var = sigma.transpose().array() +
          (c.var.transpose() - sigma.transpose()).array() * decay.array().square();
  return e;
}

double log_gaussian(const RowVector& x, const Evolved& e) {
  const double quad = ((x - e.mean).array().square() / e.var.array()).sum();
  const double logdet = e.var.array().log().sum();
  return -0.5 * (quad + logdet + x.size() * std::log(2.0 * std::numbers::pi));
}

}  // namespace

StateTensor AnalyticScoreField::score(const StateTensor& x, const Matrix& mu, double t,
                                      const ConditioningContext& ctx) const {
  return score(x, mu, t, ctx.emotion);
}

StateTensor AnalyticScoreField::score(const StateTensor& x, const Matrix& mu, double t,
                                      EmotionLabel label) const {
  require_same_shape(x, mu, "analytic score: state vs mu");
  if (x.cols() != sigma_.size()) throw ShapeError("analytic score: channel count mismatch");
  const std::vector<int> active = active_components(label);
  const double big_b = schedule_.cum_beta(t);
  RowVector decay(sigma_.size());
  for (Eigen::Index c = 0; c < sigma_.size(); ++c) decay(c) = std::exp(-big_b / (2.0 * sigma_(c)));

  StateTensor out(x.rows(), x.cols());
  std::vector<Evolved> evolved(active.size());
  std::vector<double> logp(active.size());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const RowVector xr = x.row(r);
    const RowVector mur = mu.row(r);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < active.size(); ++j) {
      const auto& comp = components_[active[j]];
      evolved[j] = evolve(comp, mur, decay, sigma_);
      logp[j] = std::log(comp.weight) + log_gaussian(xr, evolved[j]);
      best = std::max(best, logp[j]);
    }
    double norm = 0.0;
    for (double& lp : logp) {
      lp = std::exp(lp - best);
      norm += lp;
    }
    RowVector s = RowVector::Zero(x.cols());
    for (std::size_t j = 0; j < active.size(); ++j) {
      const double resp = logp[j] / norm;
      s.array() += resp * (-(xr - evolved[j].mean).array() / evolved[j].var.array());
    }
    out.row(r) = s;
  }
  return out;
}

std::vector<double> AnalyticScoreField::label_responsibilities(const RowVector& x,
                                                               const RowVector& mu,
                                                               double t) const {
  const double big_b = schedule_.cum_beta(t);
  RowVector decay(sigma_.size());
  for (Eigen::Index c = 0; c < sigma_.size(); ++c) decay(c) = std::exp(-big_b / (2.0 * sigma_(c)));
  std::vector<double> logp(components_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < components_.size(); ++k) {
    logp[k] = std::log(components_[k].weight) +
              log_gaussian(x, evolve(components_[k], mu, decay, sigma_));
    best = std::max(best, logp[k]);
  }
  double norm = 0.0;
  for (double& lp : logp) {
    lp = std::exp(lp - best);
    norm += lp;
  }
  std::vector<double> out(kEmotionCount, 0.0);
  for (std::size_t k = 0; k < components_.size(); ++k)
    if (components_[k].label) out[static_cast<int>(*components_[k].label)] += logp[k] / norm;
  return out;
}

}  // namespace emoflow
