#include "emoflow/errors.hpp"
#include "emoflow/random.hpp"
#include "emoflow/text_prior.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace emoflow;

TEST_CASE("expand repeats token rows by duration") {
  const Matrix mu = (Matrix(3, 1) << 0, 1, 2).finished();
  const std::vector<int> d{2, 1, 3};
  const Matrix out = expand(mu, d);
  REQUIRE(out.rows() == 6);
  const double expected[] = {0, 0, 1, 2, 2, 2};
  for (int i = 0; i < 6; ++i) CHECK(out(i, 0) == expected[i]);
  CHECK_THROWS_AS(expand(mu, std::vector<int>{1, 0, 1}), InputError);
  CHECK_THROWS_AS(expand(mu, std::vector<int>{1, 1}), ShapeError);
}

TEST_CASE("expand properties on random inputs") {
  RandomStream rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int tokens = 1 + rng.index(10);
    const int channels = 1 + rng.index(5);
    const Matrix mu = rng.normal_matrix(tokens, channels);
    std::vector<int> d(static_cast<std::size_t>(tokens));
    for (int& v : d) v = 1 + rng.index(6);
    const Matrix out = expand(mu, d);
    CHECK(out.rows() == std::accumulate(d.begin(), d.end(), 0));
    CHECK(out.cols() == channels);
    // Every frame copies some token row, in non-decreasing token order.
    int token = 0;
    int used = 0;
    for (Eigen::Index f = 0; f < out.rows(); ++f) {
      if (used == d[static_cast<std::size_t>(token)]) {
        ++token;
        used = 0;
      }
      CHECK((out.row(f).array() == mu.row(token).array()).all());
      ++used;
    }
    // collapse is the adjoint of expand: <expand(a), b> = <a, collapse(b)>.
    const Matrix b = rng.normal_matrix(out.rows(), channels);
    CHECK((out.array() * b.array()).sum() ==
          doctest::Approx((mu.array() * collapse(b, d).array()).sum()).epsilon(1e-12));
  }
}

TEST_CASE("round_durations") {
  const Vector ld = (Vector(6) << std::log(2.5), std::log(2.49), std::log(0.2), -50.0, std::log(1.5), std::log(7.0)).finished();
  const std::vector<int> got = round_durations(ld);
  const std::vector<int> expected{3, 2, 1, 1, 2, 7};
  CHECK(got == expected);
}

TEST_CASE("zero parameters encode to zeros") {
  const TextPriorNet net(12, 6, 8);
  const EncodedText e = net.encode({{3, 1, 11, 0}});
  CHECK(e.token_mu.rows() == 4);
  CHECK(e.token_mu.cols() == 6);
  CHECK(e.token_mu.cwiseAbs().maxCoeff() == 0.0);
  CHECK(e.log_duration.cwiseAbs().maxCoeff() == 0.0);
  CHECK(round_durations(e.log_duration) == std::vector<int>(4, 1));
}

TEST_CASE("encoding is per token: permuting tokens permutes the output") {
  RandomStream rng(3);
  const TextPriorNet net(20, 5, rng, 16);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> tokens(8);
    for (int& t : tokens) t = rng.index(20);
    std::vector<int> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(trial));
    std::vector<int> shuffled(8);
    for (int i = 0; i < 8; ++i) shuffled[i] = tokens[perm[i]];
    const EncodedText a = net.encode({tokens});
    const EncodedText b = net.encode({shuffled});
    for (int i = 0; i < 8; ++i) {
      CHECK((b.token_mu.row(i).array() == a.token_mu.row(perm[i]).array()).all());
      CHECK(b.log_duration(i) == a.log_duration(perm[i]));
    }
  }
}

TEST_CASE("out-of-vocabulary tokens are rejected with their position") {
  const TextPriorNet net(10, 4, 8);
  try {
    net.encode({{1, 2, 10}});
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("token 10") != std::string::npos);
    CHECK(msg.find("position 2") != std::string::npos);
  }
  CHECK_THROWS_AS(net.encode({{-1}}), InputError);
  CHECK_THROWS_AS(net.encode({{}}), InputError);
  CHECK_THROWS_AS(TextPriorNet(65, 4), InputError);
}

TEST_CASE("prior and duration losses") {
  const Matrix one = Matrix::Constant(1, 1, 0.3);
  CHECK(prior_loss(one, Matrix::Constant(1, 1, 1.0)) == doctest::Approx(0.49 / 2).epsilon(1e-15));
  const Vector zero = Vector::Zero(1);
  CHECK(duration_loss(zero, std::vector<int>{2}) == doctest::Approx(0.480453).epsilon(1e-6));
  CHECK(duration_loss(Vector::Constant(1, std::log(5.0)), std::vector<int>{5}) == doctest::Approx(0.0));

  RandomStream rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int frames = 1 + rng.index(20);
    const int channels = 1 + rng.index(8);
    const Matrix mu = rng.normal_matrix(frames, channels);
    const Matrix target = rng.normal_matrix(frames, channels);
    double naive = 0.0;
    for (int f = 0; f < frames; ++f)
      for (int c = 0; c < channels; ++c) naive += 0.5 * (target(f, c) - mu(f, c)) * (target(f, c) - mu(f, c));
    naive /= frames * channels;
    CHECK(prior_loss(mu, target) == doctest::Approx(naive).epsilon(1e-12));
    const Matrix g = prior_loss_grad(mu, target);
    const int f = rng.index(frames);
    const int c = rng.index(channels);
    CHECK(g(f, c) == doctest::Approx((mu(f, c) - target(f, c)) / (frames * channels)).epsilon(1e-12));

    const int tokens = 1 + rng.index(10);
    const Vector ld = rng.normal_matrix(tokens, 1);
    std::vector<int> d(static_cast<std::size_t>(tokens));
    for (int& v : d) v = 1 + rng.index(9);
    double dnaive = 0.0;
    for (int i = 0; i < tokens; ++i) dnaive += std::pow(ld(i) - std::log(d[i]), 2);
    CHECK(duration_loss(ld, d) == doctest::Approx(dnaive / tokens).epsilon(1e-12));
    const Vector dg = duration_loss_grad(ld, d);
    const double h = 1e-6;
    Vector up = ld;
    Vector down = ld;
    up(0) += h;
    down(0) -= h;
    CHECK(dg(0) == doctest::Approx((duration_loss(up, d) - duration_loss(down, d)) / (2 * h)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(duration_loss(zero, std::vector<int>{0}), InputError);
  CHECK_THROWS_AS(duration_loss(zero, std::vector<int>{1, 2}), ShapeError);
}

TEST_CASE("text prior gradients match finite differences") {
  RandomStream rng(21);
  TextPriorNet net(9, 5, rng, 7);
  for (auto& g : net.parameters().groups()) g.value += rng.normal_matrix(g.value.rows(), g.value.cols()) * 0.1;
  const TokenSequence seq{{4, 0, 4, 8, 2}};
  const Matrix wmu = rng.normal_matrix(5, 5);
  const Vector wld = rng.normal_matrix(5, 1);
  auto objective = [&] {
    const EncodedText e = net.encode(seq);
    return (e.token_mu.array() * wmu.array()).sum() + e.log_duration.dot(wld);
  };
  net.parameters().zero_grad();
  net.backward(seq, wmu, wld);
  const double h = 1e-6;
  for (auto& g : net.parameters().groups()) {
    for (Eigen::Index i = 0; i < g.value.rows(); ++i)
      for (Eigen::Index j = 0; j < g.value.cols(); ++j) {
        const double saved = g.value(i, j);
        g.value(i, j) = saved + h;
        const double up = objective();
        g.value(i, j) = saved - h;
        const double down = objective();
        g.value(i, j) = saved;
        INFO(g.name);
        CHECK(g.grad(i, j) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6).scale(1.0));
      }
  }
}
