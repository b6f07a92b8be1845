#include "emoflow/corpus.hpp"
#include "emoflow/errors.hpp"
#include "emoflow/guidance.hpp"
#include "recording_field.hpp"

#include <doctest.h>

#include <limits>

using namespace emoflow;

TEST_CASE("combine_scores: w = 2 extrapolates past the conditional score") {
  const Matrix cond = Matrix::Constant(1, 1, 1.0);
  const Matrix uncond = Matrix::Constant(1, 1, 0.4);
  CHECK(combine_scores(cond, uncond, GuidanceWeight(2.0))(0, 0) == doctest::Approx(1.6).epsilon(1e-15));
}

TEST_CASE("combine_scores: w = 0 and w = 1 reproduce the inputs exactly") {
  RandomStream rng(3);
  for (int i = 0; i < 50; ++i) {
    const Matrix cond = rng.normal_matrix(4, 3) * 10;
    const Matrix uncond = rng.normal_matrix(4, 3) * 10;
    CHECK((combine_scores(cond, uncond, GuidanceWeight(0.0)).array() == uncond.array()).all());
    CHECK((combine_scores(cond, uncond, GuidanceWeight(1.0)).array() == cond.array()).all());
  }
}

TEST_CASE("combine_scores: affine in w") {
  RandomStream rng(4);
  for (int i = 0; i < 50; ++i) {
    const Matrix cond = rng.normal_matrix(2, 2);
    const Matrix uncond = rng.normal_matrix(2, 2);
    const double w = rng.uniform(0.0, 20.0);
    const Matrix expected = uncond + w * (cond - uncond);
    CHECK((combine_scores(cond, uncond, GuidanceWeight(w)) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(combine_scores(Matrix::Zero(2, 2), Matrix::Zero(2, 3), GuidanceWeight(2.0)), ShapeError);
}

TEST_CASE("guidance weight validation") {
  CHECK_NOTHROW(GuidanceWeight(0.0));
  CHECK_NOTHROW(GuidanceWeight(100.0));
  CHECK_THROWS_AS(GuidanceWeight(-0.5), DomainError);
  CHECK_THROWS_AS(GuidanceWeight(std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_THROWS_AS(GuidanceWeight(std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("guided_score: number of field evaluations") {
  const Matrix x = Matrix::Constant(2, 3, 0.5);
  const Matrix mu = Matrix::Zero(2, 3);
  const Vector spk = Vector::Ones(kSpeakerDim);
  struct Case {
    double w;
    EmotionLabel label;
    std::size_t calls;
  };
  for (const Case c : {Case{0.0, Emotion::Happy, 1}, Case{1.0, Emotion::Happy, 1},
                       Case{3.0, std::nullopt, 1}, Case{3.0, Emotion::Happy, 2},
                       Case{0.5, Emotion::Fear, 2}}) {
    testing::RecordingField f;
    guided_score(f, x, mu, 0.3, spk, c.label, GuidanceWeight(c.w));
    CHECK(f.calls.size() == c.calls);
  }
}

TEST_CASE("guided_score: the null branch keeps the speaker embedding") {
  RandomStream rng(5);
  const Vector spk = rng.normal_matrix(kSpeakerDim, 1);
  testing::RecordingField f;
  const Matrix out = guided_score(f, Matrix::Zero(1, 2), Matrix::Zero(1, 2), 0.4, spk, Emotion::Sad,
                                  GuidanceWeight(3.0));
  REQUIRE(f.calls.size() == 2);
  // One conditional and one null call, in either order.
  CHECK(f.calls[0].emotion != f.calls[1].emotion);
  CHECK((f.calls[0].emotion == Emotion::Sad || f.calls[1].emotion == Emotion::Sad));
  CHECK((!f.calls[0].emotion || !f.calls[1].emotion));
  for (const auto& ctx : f.calls) CHECK((ctx.speaker.array() == spk.array()).all());
  for (double t : f.times) CHECK(t == 0.4);
  // cond = 6, uncond = 0 for the recording field at x = mu.
  CHECK(out(0, 0) == doctest::Approx(18.0));
}

TEST_CASE("guided_score: w > 1 amplifies the conditional direction on a symmetric mixture") {
  const NoiseSchedule s;
  const auto corpus = SyntheticEmotionCorpus::ring({Emotion::Anger, Emotion::Happy}, 2, 1.5, 0.1, 100);
  const AnalyticScoreField f = corpus.analytic_field(s, Vector::Ones(2));
  const Vector spk = Vector::Zero(kSpeakerDim);
  const Matrix x = (Matrix(1, 2) << 0.2, 0.1).finished();
  const Matrix mu = Matrix::Zero(1, 2);
  const double t = 0.3;
  const RowVector uncond = f.score(x, mu, t, std::nullopt);
  const RowVector anger_dir = corpus.law(Emotion::Anger).mean.transpose().normalized();
  double previous = -1e300;
  for (double w : {1.0, 2.0, 4.0, 8.0}) {
    const RowVector g = guided_score(f, x, mu, t, spk, Emotion::Anger, GuidanceWeight(w));
    const double along = (g - uncond).dot(anger_dir);
    CHECK(along > previous);
    previous = along;
  }
  CHECK(previous > 0.0);
  const RowVector g4 = guided_score(f, x, mu, t, spk, Emotion::Anger, GuidanceWeight(4.0));
  const RowVector g1 = guided_score(f, x, mu, t, spk, Emotion::Anger, GuidanceWeight(1.0));
  CHECK((g4 - uncond).norm() == doctest::Approx(4.0 * (g1 - uncond).norm()).epsilon(1e-12));
}
