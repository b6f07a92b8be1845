#include "emoflow/analytic_score.hpp"
#include "emoflow/corpus.hpp"
#include "emoflow/errors.hpp"
#include "emoflow/toy_score_net.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <numbers>

using namespace emoflow;

namespace {

// log p_t(x) of a diagonal Gaussian mixture pushed through the forward
// process, built from the transition kernel alone.
double diffused_log_density(const std::vector<GaussianComponent>& comps, const NoiseSchedule& s,
                            const RowVector& mu, const Vector& sigma, const RowVector& x, double t) {
  const PriorField prior(mu, sigma);
  double total = 0.0;
  for (const auto& c : comps) {
    // Kernel mean is affine in x0: evaluate it at x0 = m and x0 = m + 1.
    const ForwardMarginal at_m = forward_marginal(s, prior, c.mean.transpose(), t);
    const ForwardMarginal at_m1 = forward_marginal(s, prior, (c.mean.array() + 1.0).matrix().transpose(), t);
    double logp = std::log(c.weight);
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      const double slope = at_m1.mean(0, d) - at_m.mean(0, d);
      const double v = c.var(d) * slope * slope + at_m.var(d);
      const double r = x(d) - at_m.mean(0, d);
      logp += -0.5 * (std::log(2 * std::numbers::pi * v) + r * r / v);
    }
    total += std::exp(logp);
  }
  return std::log(total);
}

RowVector fd_gradient(const std::vector<GaussianComponent>& comps, const NoiseSchedule& s,
                      const RowVector& mu, const Vector& sigma, const RowVector& x, double t) {
  RowVector g(x.size());
  const double h = 1e-5;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    RowVector up = x;
    RowVector down = x;
    up(d) += h;
    down(d) -= h;
    g(d) = (diffused_log_density(comps, s, mu, sigma, up, t) -
            diffused_log_density(comps, s, mu, sigma, down, t)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("stationary component: score is -(x - mu) / sigma at every t") {
  const NoiseSchedule s;
  const AnalyticScoreField f({{1.0, Vector::Zero(1), Vector::Ones(1), std::nullopt}}, s, Vector::Ones(1));
  for (double t : {0.0, 1e-4, 0.3, 1.0}) {
    const Matrix out = f.score(Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1), t, std::nullopt);
    CHECK(out(0, 0) == -2.0);
  }
}

TEST_CASE("single Gaussian N(1, 1) at t = 0.5") {
  const NoiseSchedule s;
  const std::vector<GaussianComponent> comps{{1.0, Vector::Ones(1), Vector::Ones(1), std::nullopt}};
  const AnalyticScoreField f(comps, s, Vector::Ones(1));
  const double got = f.score(Matrix::Zero(1, 1), Matrix::Zero(1, 1), 0.5, std::nullopt)(0, 0);
  const double oracle = fd_gradient(comps, s, RowVector::Zero(1), Vector::Ones(1), RowVector::Zero(1), 0.5)(0);
  CHECK(testing::rel_err(got, oracle) < 1e-6);
  // Unit data variance equals sigma, so the diffused variance stays 1.
  CHECK(got == doctest::Approx(std::exp(-2.51875 / 2)).epsilon(1e-12));
}

TEST_CASE("near point mass at 1 gives -(x - mean_t) / var_t of the transition kernel") {
  const NoiseSchedule s;
  const AnalyticScoreField f({{1.0, Vector::Ones(1), Vector::Constant(1, 1e-14), std::nullopt}}, s,
                             Vector::Ones(1));
  const double got = f.score(Matrix::Zero(1, 1), Matrix::Zero(1, 1), 0.5, std::nullopt)(0, 0);
  const double a = std::exp(-2.51875 / 2);
  CHECK(got == doctest::Approx(a / (1 - a * a)).epsilon(1e-10));
  CHECK(got == doctest::Approx(0.3088).epsilon(2e-4));
}

TEST_CASE("symmetric two-component mixture has zero score at the midpoint") {
  const NoiseSchedule s;
  const AnalyticScoreField f({{0.5, Vector::Constant(2, 1.3), Vector::Constant(2, 0.2), Emotion::Anger},
                              {0.5, Vector::Constant(2, -1.3), Vector::Constant(2, 0.2), Emotion::Sad}},
                             s, Vector::Ones(2));
  for (double t : {0.01, 0.5, 0.99})
    CHECK(f.score(Matrix::Zero(1, 2), Matrix::Zero(1, 2), t, std::nullopt).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("analytic score agrees with finite differences of the log-density") {
  const NoiseSchedule s;
  RandomStream rng(11);
  const Vector sigma = (Vector(3) << 1.0, 0.5, 2.0).finished();
  const RowVector mu = (RowVector(3) << 0.2, -0.3, 0.1).finished();
  std::vector<GaussianComponent> comps;
  const double weights[] = {0.2, 0.5, 0.3};
  for (int k = 0; k < 3; ++k)
    comps.push_back({weights[k], rng.normal_matrix(3, 1), (rng.normal_matrix(3, 1).array().square() + 0.1).matrix(),
                     kAllEmotions[static_cast<std::size_t>(k)]});
  const AnalyticScoreField f(comps, s, sigma);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform(0.01, 1.0);
    const RowVector x = rng.normal_matrix(1, 3) * 1.5;
    const RowVector got = f.score(x, mu, t, std::nullopt);
    const RowVector fd = fd_gradient(comps, s, mu, sigma, x, t);
    for (int d = 0; d < 3; ++d) worst = std::max(worst, testing::rel_err(got(d), fd(d), 1e-6));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("unconditional score decomposes over per-label conditionals") {
  const NoiseSchedule s;
  const SyntheticEmotionCorpus corpus =
      SyntheticEmotionCorpus::ring({Emotion::Anger, Emotion::Happy, Emotion::Sad}, 3, 1.2, 0.3, 500);
  const AnalyticScoreField f = corpus.analytic_field(s, Vector::Ones(3));
  RandomStream rng(5);
  for (int i = 0; i < 50; ++i) {
    const RowVector x = rng.normal_matrix(1, 3);
    const RowVector mu = RowVector::Zero(3);
    const double t = rng.uniform(0.001, 1.0);
    const auto r = f.label_responsibilities(x, mu, t);
    RowVector combined = RowVector::Zero(3);
    double total = 0;
    for (Emotion e : corpus.labels()) {
      const double w = r[static_cast<std::size_t>(e)];
      total += w;
      combined += w * RowVector(f.score(x, mu, t, e));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((combined - RowVector(f.score(x, mu, t, std::nullopt))).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("analytic field validation") {
  const NoiseSchedule s;
  CHECK_THROWS_AS(AnalyticScoreField({{0.4, Vector::Zero(1), Vector::Ones(1), std::nullopt},
                                      {0.4, Vector::Zero(1), Vector::Ones(1), std::nullopt}},
                                     s, Vector::Ones(1)),
                  InputError);
  const AnalyticScoreField f({{1.0, Vector::Zero(1), Vector::Ones(1), Emotion::Anger}}, s, Vector::Ones(1));
  CHECK_THROWS_AS(f.score(Matrix::Zero(1, 1), Matrix::Zero(1, 1), 0.5, Emotion::Fear), DomainError);
  CHECK_THROWS_AS(f.score(Matrix::Zero(1, 2), Matrix::Zero(1, 2), 0.5, std::nullopt), ShapeError);
}

TEST_CASE("time embedding") {
  const Vector e0 = time_embedding(0.0);
  REQUIRE(e0.size() == kTimeEmbeddingDim);
  for (int k = 0; k < 32; ++k) {
    CHECK(e0(2 * k) == 0.0);
    CHECK(e0(2 * k + 1) == 1.0);
  }
  CHECK((time_embedding(0.1) - time_embedding(0.2)).norm() > 0.0);
  RandomStream rng(1);
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform();
    const double u = rng.uniform();
    CHECK(((time_embedding(t) - time_embedding(u)).cwiseAbs().array() <= 1e4 * std::abs(t - u) + 1e-15).all());
  }
  // Frequencies: the highest pair oscillates at 1e4 rad per unit time.
  CHECK(time_embedding(1e-3)(62) == doctest::Approx(std::sin(10.0)).epsilon(1e-12));
  CHECK(time_embedding(0.5)(0) == doctest::Approx(std::sin(0.5)).epsilon(1e-15));
  CHECK_THROWS_AS(time_embedding(1.5), DomainError);
}

TEST_CASE("emotion labels") {
  CHECK(parse_label("null") == std::nullopt);
  CHECK(parse_label("ANGER") == Emotion::Anger);
  CHECK(parse_label("surprise") == Emotion::Surprise);
  try {
    parse_label("joy");
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    for (Emotion em : kAllEmotions) CHECK(msg.find(std::string(to_string(em))) != std::string::npos);
  }
  CHECK(table_row(std::nullopt) == 7);
  CHECK(table_row(Emotion::Sad) == 5);
}

namespace {

ToyScoreNet::Batch random_batch(int rows, int dim, RandomStream& rng) {
  ToyScoreNet::Batch b;
  b.x = rng.normal_matrix(rows, dim);
  b.mu = rng.normal_matrix(rows, dim);
  b.t.resize(rows);
  for (int i = 0; i < rows; ++i) b.t(i) = rng.uniform(0.01, 1.0);
  b.speaker = make_speaker_table(rows, 3);
  for (int i = 0; i < rows; ++i)
    b.emotion.push_back(i % 3 == 0 ? EmotionLabel{} : EmotionLabel{kAllEmotions[static_cast<std::size_t>(i % 7)]});
  return b;
}

}  // namespace

TEST_CASE("toy net: zero parameters give zero output") {
  const ToyScoreNet net(4);
  RandomStream rng(1);
  const ConditioningContext ctx{make_speaker_table(1, 1).row(0).transpose(), Emotion::Happy};
  CHECK(net.score(rng.normal_matrix(3, 4), rng.normal_matrix(3, 4), 0.4, ctx).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toy net: score is pure and matches the batch forward pass") {
  RandomStream rng(2);
  const ToyScoreNet net(3, rng);
  const Matrix x = rng.normal_matrix(5, 3);
  const Matrix mu = rng.normal_matrix(5, 3);
  const ConditioningContext ctx{make_speaker_table(1, 4).row(0).transpose(), Emotion::Fear};
  const Matrix a = net.score(x, mu, 0.37, ctx);
  const Matrix b = net.score(x, mu, 0.37, ctx);
  CHECK((a.array() == b.array()).all());
  ToyScoreNet::Batch batch{x, mu, Vector::Constant(5, 0.37), ctx.speaker.transpose().replicate(5, 1),
                           std::vector<EmotionLabel>(5, Emotion::Fear)};
  ToyScoreNet::Cache cache;
  CHECK((net.forward(batch, cache) - a).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("toy net: shape errors are reported, not broadcast") {
  RandomStream rng(2);
  const ToyScoreNet net(3, rng);
  const ConditioningContext ctx{Vector::Zero(kSpeakerDim), std::nullopt};
  CHECK_THROWS_AS(net.score(Matrix::Zero(2, 4), Matrix::Zero(2, 4), 0.5, ctx), ShapeError);
  CHECK_THROWS_AS(net.score(Matrix::Zero(2, 3), Matrix::Zero(1, 3), 0.5, ctx), ShapeError);
  CHECK_THROWS_AS(net.score(Matrix::Zero(2, 3), Matrix::Zero(2, 3), 0.5, {Vector::Zero(100), std::nullopt}),
                  ShapeError);
}

TEST_CASE("toy net: null label selects table row 7") {
  RandomStream rng(4);
  ToyScoreNet net(2, rng);
  const Matrix& table = net.parameters()[ToyScoreNet::kEmotionTable].value;
  CHECK(table.rows() == 8);
  CHECK(table.cols() == kEmotionDim);
  CHECK((net.emotion_embedding(std::nullopt).array() == table.row(7).array()).all());
  CHECK((net.emotion_embedding(Emotion::Sad).array() == table.row(5).array()).all());
}

TEST_CASE("toy net: every parameter group passes finite differences") {
  RandomStream rng(8);
  ToyScoreNet net(3, rng, 16);
  for (auto& g : net.parameters().groups()) g.value += rng.normal_matrix(g.value.rows(), g.value.cols()) * 0.1;
  const ToyScoreNet::Batch batch = random_batch(6, 3, rng);
  // Single output coordinate as the objective.
  Matrix seed = Matrix::Zero(6, 3);
  seed(2, 1) = 1.0;
  seed(4, 0) = -0.5;
  net.parameters().zero_grad();
  ToyScoreNet::Cache cache;
  net.forward(batch, cache);
  net.backward(batch, cache, seed);
  const double h = 1e-5;
  for (auto& g : net.parameters().groups()) {
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const int i = rng.index(static_cast<int>(g.value.rows()));
      const int j = rng.index(static_cast<int>(g.value.cols()));
      const double saved = g.value(i, j);
      g.value(i, j) = saved + h;
      ToyScoreNet::Cache c1;
      const double up = (net.forward(batch, c1).array() * seed.array()).sum();
      g.value(i, j) = saved - h;
      ToyScoreNet::Cache c2;
      const double down = (net.forward(batch, c2).array() * seed.array()).sum();
      g.value(i, j) = saved;
      const double fd = (up - down) / (2 * h);
      if (std::max(std::abs(fd), std::abs(g.grad(i, j))) > 1e-9)
        worst = std::max(worst, testing::rel_err(fd, g.grad(i, j)));
    }
    INFO(g.name);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("toy net: backward accumulates") {
  RandomStream rng(9);
  ToyScoreNet net(2, rng, 8);
  const ToyScoreNet::Batch batch = random_batch(3, 2, rng);
  const Matrix seed = rng.normal_matrix(3, 2);
  net.parameters().zero_grad();
  ToyScoreNet::Cache cache;
  net.forward(batch, cache);
  net.backward(batch, cache, seed);
  std::vector<Matrix> once;
  for (const auto& g : net.parameters().groups()) once.push_back(g.grad);
  net.backward(batch, cache, seed);
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK((net.parameters()[i].grad - 2 * once[i]).cwiseAbs().maxCoeff() < 1e-12);
}
