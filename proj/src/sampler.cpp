#include "emoflow/sampler.hpp"

#include "emoflow/errors.hpp"
#include "emoflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace emoflow {

Solver parse_solver(std::string_view text) {
  if (text == "ode") return Solver::ProbabilityFlow;
  if (text == "sde") return Solver::ReverseSde;
  throw InputError("unknown solver '" + std::string(text) + "'; expected ode or sde");
}

std::string_view to_string(Solver s) { return s == Solver::ProbabilityFlow ? "ode" : "sde"; }

void SamplerConfig::validate() const {
  if (steps < 1) throw InputError("sampler: steps must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw InputError("sampler: temperature must be positive");
}

StateTensor terminal_draw(const PriorField& prior, double temperature, RandomStream& rng) {
  const Matrix z = rng.normal_matrix(prior.frames(), prior.channels());
  const RowVector scale = temperature * prior.sigma().transpose().array().sqrt();
  return prior.mean() + (z.array().rowwise() * scale.array()).matrix();
}

namespace {

void check_step(double t, double h) {
  if (!(h > 0.0) || h > t * (1.0 + 1e-12))
    throw DomainError("sampler step: need 0 < h <= t, got h = " + std::to_string(h) +
                      ", t = " + std::to_string(t));
}

// Sigma^{-1} (mu - x), per channel.
Matrix pull_to_prior(const StateTensor& x, const PriorField& prior) {
  return ((prior.mean() - x).array().rowwise() / prior.sigma().transpose().array()).matrix();
}

}  // namespace

StateTensor ode_step(const StateTensor& x, double t, double h, const StateTensor& score,
                     const NoiseSchedule& schedule, const PriorField& prior) {
  check_step(t, h);
  prior.require_matches(x);
  require_same_shape(x, score, "ode_step: score");
  const double beta = schedule.beta(t);
  return x - (h * 0.5 * beta) * (pull_to_prior(x, prior) - score);
}

StateTensor sde_step(const StateTensor& x, double t, double h, const StateTensor& score,
                     const NoiseSchedule& schedule, const PriorField& prior, RandomStream& rng) {
  check_step(t, h);
  prior.require_matches(x);
  require_same_shape(x, score, "sde_step: score");
  const double beta = schedule.beta(t);
  const Matrix z = rng.normal_matrix(x.rows(), x.cols());
  return x - (h * beta) * (0.5 * pull_to_prior(x, prior) - score) + std::sqrt(beta * h) * z;
}

SampleResult sample(const ScoreField& field, const NoiseSchedule& schedule,
                    const PriorField& prior, const Vector& speaker, EmotionLabel emotion,
                    const SamplerConfig& config, bool record_trajectory) {
  config.validate();
  RandomStream rng(config.seed);
  const double horizon = schedule.horizon();
  const double h = horizon / config.steps;

  SampleResult result{terminal_draw(prior, config.temperature, rng), std::nullopt};
  StateTensor& x = result.final;
  if (record_trajectory) {
    result.trajectory.emplace();
    result.trajectory->times.push_back(horizon);
    result.trajectory->states.push_back(x);
  }
  for (int k = config.steps; k >= 1; --k) {
    const double t = horizon * k / config.steps;
    const double t_eval = std::max(t, kMinScoreTime);
    const StateTensor s = guided_score(field, x, prior.mean(), t_eval, speaker, emotion,
                                       config.intensity);
    const double step = k == 1 ? t : h;  // land exactly on 0
    x = config.solver == Solver::ProbabilityFlow
            ? ode_step(x, t, step, s, schedule, prior)
            : sde_step(x, t, step, s, schedule, prior, rng);
    if (!x.allFinite())
      throw DivergenceError("sampling diverged at step " + std::to_string(config.steps - k + 1) +
                            " (t = " + std::to_string(t) + ")");
    if (record_trajectory) {
      result.trajectory->times.push_back(horizon * (k - 1) / config.steps);
      result.trajectory->states.push_back(x);
    }
  }
  return result;
}

StateTensor sample_many(const ScoreField& field, const NoiseSchedule& schedule,
                        const RowVector& prior_mean, const Vector& sigma, const Vector& speaker,
                        EmotionLabel emotion, const SamplerConfig& config, Eigen::Index n) {
  constexpr Eigen::Index kChunk = 1024;
  const Eigen::Index chunks = (n + kChunk - 1) / kChunk;
  StateTensor out(n, prior_mean.size());
  parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
    const Eigen::Index rows = std::min(kChunk, n - begin);
    SamplerConfig chunk_config = config;
    chunk_config.seed = derive_seed(config.seed, c);
    const PriorField prior = PriorField::tiled(prior_mean, rows, sigma);
    out.middleRows(begin, rows) =
        sample(field, schedule, prior, speaker, emotion, chunk_config).final;
  });
  return out;
}

}  // namespace emoflow
