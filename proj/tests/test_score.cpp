#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scoremc/oracle.hpp"
#include "scoremc/rng.hpp"
#include "scoremc/score.hpp"

using namespace scoremc;

namespace {

Vector vec1(double x) {
  Vector v(1);
  v << x;
  return v;
}

GaussianMixtureSpec sym_mixture() {
  GaussianMixtureSpec spec;
  spec.means.resize(1, 2);
  spec.means << -2.0, 2.0;
  spec.weights.resize(2);
  spec.weights << 0.5, 0.5;
  return spec;
}

struct EstimatorStats {
  Vector mean_s1, se_s1, mean_s2, se_s2, mean_dispatched, se_dispatched;
};

// Runs `batches` independent score estimates at (theta, t); s1 and s2 are
// evaluated on the same draws, the dispatched column follows the policy.
EstimatorStats replicate(const TargetDensity& target, const Vector& theta,
                         double t, Index K, Index batches, std::uint64_t seed) {
  const auto time = make_time(t);
  const SwitchPolicy policy;
  const Index d = theta.size();
  Matrix s1(d, batches), s2(d, batches), dispatched(d, batches);
  ScoreBatch batch;
  Matrix grads;
  for (Index b = 0; b < batches; ++b) {
    NoiseStream noise(seed, static_cast<std::uint32_t>(b), 1);
    estimate_score(target, theta, time, K, policy, noise, batch);
    dispatched.col(b) = batch.score;
    s1.col(b) = score_s1(theta, time, batch.draws, batch.weights);
    grads.resize(d, K);
    for (Index k = 0; k < K; ++k)
      grad_log_likelihood(target, batch.points.col(k), grads.col(k));
    s2.col(b) = score_s2(theta, time, grads, batch.weights);
  }
  auto summarize = [&](const Matrix& m, Vector& mean, Vector& se) {
    mean = m.rowwise().mean();
    se.resize(d);
    for (Index j = 0; j < d; ++j) {
      const double var = (m.row(j).array() - mean[j]).square().sum() /
                         static_cast<double>(batches - 1);
      se[j] = std::sqrt(var / static_cast<double>(batches));
    }
  };
  EstimatorStats out;
  summarize(s1, out.mean_s1, out.se_s1);
  summarize(s2, out.mean_s2, out.se_s2);
  summarize(dispatched, out.mean_dispatched, out.se_dispatched);
  return out;
}

}  // namespace

TEST_CASE("importance weights examples") {
  Vector equal(3);
  equal << 0.0, 0.0, 0.0;
  const Vector w = importance_weights(equal);
  CHECK(w[0] == 1.0 / 3.0);
  CHECK(w[1] == 1.0 / 3.0);
  CHECK(w[2] == 1.0 / 3.0);

  Vector pair(2);
  pair << 0.0, std::log(3.0);
  const Vector w2 = importance_weights(pair);
  CHECK(w2[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(w2[1] == doctest::Approx(0.75).epsilon(1e-12));

  Vector huge(2);
  huge << 10000.0, 10000.0;
  const Vector w3 = importance_weights(huge);
  CHECK(w3[0] == 0.5);
  CHECK(w3[1] == 0.5);
  CHECK(w3.allFinite());
}

TEST_CASE("importance weights errors") {
  CHECK_THROWS_AS(importance_weights(Vector(0)), UsageError);
  Vector bad(3);
  bad << 1.0, std::nan(""), 2.0;
  try {
    importance_weights(bad);
    FAIL("expected EstimationError");
  } catch (const EstimationError& e) {
    CHECK(e.index == 1);
  }
  bad[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(importance_weights(bad), EstimationError);
}

TEST_CASE("importance weights normalize for extreme magnitudes") {
  NoiseStream u(23, 0, 0);
  for (int rep = 0; rep < 200; ++rep) {
    Vector v(64);
    for (Index i = 0; i < v.size(); ++i) v[i] = (2.0 * u.uniform() - 1.0) * 1e6;
    const Vector w = importance_weights(v);
    CHECK(w.allFinite());
    CHECK(w.minCoeff() >= 0.0);
    CHECK(std::abs(w.sum() - 1.0) <= 1e-10);
  }
}

TEST_CASE("importance weights are exactly shift invariant") {
  // dyadic inputs, so v + c introduces no rounding of its own
  Vector v(4);
  v << -0.5, 0.25, 2.0, 1.75;
  for (double c : {1.0, -4.0, 1024.0, 1048576.0}) {
    const Vector shifted = v.array() + c;
    const Vector w0 = importance_weights(v);
    const Vector w1 = importance_weights(shifted);
    for (Index i = 0; i < v.size(); ++i) CHECK(w0[i] == w1[i]);
  }
}

TEST_CASE("score_s1 closed-form cases") {
  const auto time = make_time(0.8);
  Vector theta(1);
  theta << 1.7;

  Matrix sym(1, 2);
  sym << 1.0, -1.0;
  Vector w = Vector::Constant(2, 0.5);
  CHECK(score_s1(theta, time, sym, w)[0] == -1.7);

  Matrix zeros = Matrix::Zero(1, 5);
  Vector w5 = Vector::Constant(5, 0.2);
  CHECK(score_s1(theta, time, zeros, w5)[0] == -1.7);

  const auto half = make_time(std::log(2.0));
  Matrix one(1, 1);
  one << 1.0;
  Vector w1 = Vector::Constant(1, 1.0);
  CHECK(score_s1(vec1(0.0), half, one, w1)[0] ==
        doctest::Approx(0.5773502691896258).epsilon(1e-15));

  CHECK_THROWS_AS(score_s1(theta, make_time(0.0), sym, w), UsageError);
  Vector unnormalized = Vector::Constant(2, 0.4);
  CHECK_THROWS_AS(score_s1(theta, time, sym, unnormalized), UsageError);
}

TEST_CASE("score_s2 closed-form cases") {
  const auto time = make_time(0.8);
  Vector theta(1);
  theta << -0.6;

  Matrix zero_grads = Matrix::Zero(1, 4);
  Vector w = Vector::Constant(4, 0.25);
  CHECK(score_s2(theta, time, zero_grads, w)[0] == 0.6);

  // linear f (single-component mixture): s2 equals the exact score of
  // p_t = N(e^{-t} mu, I) regardless of the draws
  GaussianMixtureSpec single;
  single.means = Matrix::Constant(1, 1, 2.0);
  single.weights = Vector::Constant(1, 1.0);
  auto target = make_gaussian_mixture(single);
  NoiseStream noise(3, 0, 0);
  ScoreBatch batch =
      estimate_score(target, theta, time, 32, SwitchPolicy{10.0}, noise);
  REQUIRE(batch.estimator_used == Estimator::S2);
  const Vector exact = analytic_score_gaussian_mixture(single, theta, time);
  CHECK(batch.score[0] == doctest::Approx(exact[0]).epsilon(1e-12));

  // t -> 0 with the gradient taken at theta itself: the target score
  const auto tiny = make_time(1e-12);
  Matrix grad_at_theta(1, 1);
  grad_at_theta << 3.25;
  Vector w1 = Vector::Constant(1, 1.0);
  CHECK(score_s2(theta, tiny, grad_at_theta, w1)[0] ==
        doctest::Approx(0.6 + 3.25).epsilon(1e-9));

  Matrix bad(1, 1);
  bad << std::nan("");
  CHECK_THROWS_AS(score_s2(theta, time, bad, w1), EstimationError);
}

TEST_CASE("estimate_score dispatches on the switch time") {
  auto target = make_constant(1);
  const SwitchPolicy policy;  // 0.1
  NoiseStream a(1, 0, 0), b(1, 0, 1), c(1, 0, 2);
  CHECK(estimate_score(target, vec1(0.3), make_time(0.5), 8, policy, a).estimator_used ==
        Estimator::S1);
  CHECK(estimate_score(target, vec1(0.3), make_time(0.05), 8, policy, b).estimator_used ==
        Estimator::S2);
  // the boundary itself goes to s2 ("large times" are strictly above)
  CHECK(estimate_score(target, vec1(0.3), make_time(0.1), 8, policy, c).estimator_used ==
        Estimator::S2);
}

TEST_CASE("estimate_score on the constant target is exact") {
  auto target = make_constant(2);
  Vector theta(2);
  theta << 0.4, -2.5;
  NoiseStream noise(5, 0, 0);
  const ScoreBatch batch =
      estimate_score(target, theta, make_time(0.05), 16, SwitchPolicy{}, noise);
  CHECK(batch.score == -theta);
  CHECK(batch.estimator_used == Estimator::S2);
  CHECK(std::abs(batch.weights.sum() - 1.0) <= 1e-10);
}

TEST_CASE("estimate_score oracle-call accounting") {
  auto target = make_constant(1);
  NoiseStream noise(9, 0, 0);
  estimate_score(target, vec1(1.0), make_time(0.5), 77, SwitchPolicy{}, noise);
  CHECK(target.f_evals() == 77);
  CHECK(target.grad_evals() == 0);

  target.reset_counters();
  estimate_score(target, vec1(1.0), make_time(0.05), 77, SwitchPolicy{}, noise);
  CHECK(target.f_evals() == 77);
  CHECK(target.grad_evals() == 77);
}

TEST_CASE("estimate_score validates inputs") {
  auto target = make_constant(1);
  NoiseStream noise(1, 0, 0);
  CHECK_THROWS_AS(
      estimate_score(target, vec1(0.0), make_time(0.5), 0, SwitchPolicy{}, noise),
      UsageError);
  CHECK_THROWS_AS(
      estimate_score(target, vec1(0.0), make_time(0.0), 4, SwitchPolicy{}, noise),
      UsageError);
  Vector theta2(2);
  theta2 << 0, 0;
  CHECK_THROWS_AS(
      estimate_score(target, theta2, make_time(0.5), 4, SwitchPolicy{}, noise),
      UsageError);
  CHECK_THROWS_AS(
      estimate_score(target, vec1(0.0), make_time(0.5), 4, SwitchPolicy{0.0}, noise),
      UsageError);
}

TEST_CASE("s1 and s2 agree in the mean (integration by parts)") {
  auto spec = sym_mixture();
  auto target = make_gaussian_mixture(spec);
  int cell = 0;
  for (double theta_v : {-3.0, 0.0, 3.0}) {
    for (double t : {0.05, 0.3, 1.0}) {
      const Vector theta = vec1(theta_v);
      const auto stats =
          replicate(target, theta, t, 2000, 200, 1000 + 17 * cell++);
      const double diff = std::abs(stats.mean_s1[0] - stats.mean_s2[0]);
      const double se = std::hypot(stats.se_s1[0], stats.se_s2[0]);
      INFO("theta=", theta_v, " t=", t, " diff=", diff, " se=", se);
      CHECK(diff < 4.0 * se);
    }
  }
}

TEST_CASE("dispatched estimator is consistent with the analytic oracle") {
  auto spec = sym_mixture();
  auto target = make_gaussian_mixture(spec);
  int cell = 0;
  for (double theta_v : {-3.0, 0.0, 3.0}) {
    for (double t : {0.05, 0.3, 1.0}) {
      const Vector theta = vec1(theta_v);
      const auto stats =
          replicate(target, theta, t, 2000, 200, 5000 + 31 * cell++);
      const double oracle =
          analytic_score_gaussian_mixture(spec, theta, make_time(t))[0];
      const double diff = std::abs(stats.mean_dispatched[0] - oracle);
      INFO("theta=", theta_v, " t=", t, " diff=", diff, " se=", stats.se_dispatched[0]);
      CHECK(diff < 4.0 * stats.se_dispatched[0]);
    }
  }
}

TEST_CASE("s1 RMS error shrinks from K=100 to K=10000") {
  auto spec = sym_mixture();
  auto target = make_gaussian_mixture(spec);
  const Vector theta = vec1(1.0);
  const double t = 0.3;
  const double oracle = analytic_score_gaussian_mixture(spec, theta, make_time(t))[0];

  auto rms = [&](Index K, std::uint64_t seed) {
    const auto time = make_time(t);
    ScoreBatch batch;
    double acc = 0;
    for (Index b = 0; b < 200; ++b) {
      NoiseStream noise(seed, static_cast<std::uint32_t>(b), 1);
      estimate_score(target, theta, time, K, SwitchPolicy{}, noise, batch);
      const Vector s1 = score_s1(theta, time, batch.draws, batch.weights);
      acc += (s1[0] - oracle) * (s1[0] - oracle);
    }
    return std::sqrt(acc / 200.0);
  };
  CHECK(rms(10000, 77) < rms(100, 78));
}

TEST_CASE("s2 deviation from -theta is bounded by the gradient bound") {
  auto target = make_tanh_bumps_1d();
  // global bound on |f'| by dense scan; f' vanishes far from the bumps
  double G = 0;
  Vector x(1), g(1);
  for (double v = -9.0; v <= 9.0; v += 1e-3) {
    x[0] = v;
    target.eval_grad(x, g);
    G = std::max(G, std::abs(g[0]));
  }
  ScoreBatch batch;
  Matrix grads;
  for (double t : {0.01, 0.05, 0.1}) {
    const auto time = make_time(t);
    for (int rep = 0; rep < 20; ++rep) {
      NoiseStream noise(400 + rep, 0, static_cast<std::uint32_t>(1000 * t));
      const Vector theta = vec1(4.0 * (noise.uniform() - 0.5));
      estimate_score(target, theta, time, 64, SwitchPolicy{}, noise, batch);
      REQUIRE(batch.estimator_used == Estimator::S2);
      CHECK((batch.score + theta).norm() <= time.decay * G + 1e-12);
    }
  }
}
