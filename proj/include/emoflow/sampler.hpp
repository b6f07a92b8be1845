#pragma once

#include "emoflow/guidance.hpp"
#include "emoflow/noise_schedule.hpp"
#include "emoflow/random.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace emoflow {

enum class Solver { ProbabilityFlow, ReverseSde };

Solver parse_solver(std::string_view text);
std::string_view to_string(Solver s);

struct SamplerConfig {
  Solver solver = Solver::ProbabilityFlow;
  int steps = 100;
  GuidanceWeight intensity{1.0};
  double temperature = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Smallest time at which a score is evaluated.
inline constexpr double kMinScoreTime = 1e-4;

struct Trajectory {
  std::vector<double> times;  // strictly decreasing, T .. 0
  std::vector<StateTensor> states;
};

struct SampleResult {
  StateTensor final;
  std::optional<Trajectory> trajectory;
};

/// X_T = mu + temperature * sqrt(Sigma) * z.
StateTensor terminal_draw(const PriorField& prior, double temperature, RandomStream& rng);

/// One backward Euler step of the probability-flow ODE, t -> t - h.
StateTensor ode_step(const StateTensor& x, double t, double h, const StateTensor& score,
                     const NoiseSchedule& schedule, const PriorField& prior);

/// One backward Euler-Maruyama step of the reverse SDE, t -> t - h.
StateTensor sde_step(const StateTensor& x, double t, double h, const StateTensor& score,
                     const NoiseSchedule& schedule, const PriorField& prior, RandomStream& rng);

/// Draws X_T, then marches `steps` uniform steps from T to 0 with the guided
/// score. Deterministic given the config. Throws DivergenceError naming the
/// step on a non-finite state.
SampleResult sample(const ScoreField& field, const NoiseSchedule& schedule,
                    const PriorField& prior, const Vector& speaker, EmotionLabel emotion,
                    const SamplerConfig& config, bool record_trajectory = false);

/// n independent samples of a single-frame prior, returned as n rows.
/// Rows are generated in fixed chunks with streams derived from
/// (seed, chunk), so the output does not depend on the thread count.
StateTensor sample_many(const ScoreField& field, const NoiseSchedule& schedule,
                        const RowVector& prior_mean, const Vector& sigma, const Vector& speaker,
                        EmotionLabel emotion, const SamplerConfig& config, Eigen::Index n);

}  // namespace emoflow
