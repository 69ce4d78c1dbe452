#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "spotsim/nn.hpp"
#include "spotsim/util.hpp"

using namespace spotsim;
using namespace spotsim::nn;

namespace {

std::vector<EncodedSample> random_samples(int n, int t, int f, int p,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<EncodedSample> out;
  for (int i = 0; i < n; ++i) {
    EncodedSample s;
    s.history.resize(t, f);
    for (int r = 0; r < t; ++r) {
      for (int c = 0; c < f; ++c) s.history(r, c) = dist(rng);
    }
    s.present.resize(p);
    for (int c = 0; c < p; ++c) s.present[c] = dist(rng);
    s.label = (i % 2 == 0) ? 1.0 : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

// Labels follow the sign of a shared shift applied to every input.
std::vector<EncodedSample> separable_samples(int n, int t, int f, int p,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.3);
  std::vector<EncodedSample> out;
  for (int i = 0; i < n; ++i) {
    const double y = (i % 2 == 0) ? 1.0 : 0.0;
    const double shift = y > 0.5 ? 0.8 : -0.8;
    EncodedSample s;
    s.history.resize(t, f);
    for (int r = 0; r < t; ++r) {
      for (int c = 0; c < f; ++c) s.history(r, c) = shift + dist(rng);
    }
    s.present.resize(p);
    for (int c = 0; c < p; ++c) s.present[c] = shift + dist(rng);
    s.label = y;
    out.push_back(std::move(s));
  }
  return out;
}

double accuracy(const Model& model, const std::vector<EncodedSample>& samples) {
  int correct = 0;
  for (const auto& s : samples) {
    const bool predicted = model.p_hat(s) >= 0.5;
    if (predicted == (s.label > 0.5)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

}  // namespace

TEST_CASE("sigmoid and softplus basics") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(40.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-40.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(50.0) == doctest::Approx(50.0));
}

TEST_CASE("balanced weights reduce to half the plain cross-entropy") {
  LogisticNet net(LogisticConfig{2, 3});
  net.init_params(5);
  auto samples = random_samples(8, 4, 2, 3, 6);
  std::vector<const EncodedSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  const double balanced = net.loss(batch, LossWeights{0.5, 0.5});
  const double plain = net.loss(batch, LossWeights{1.0, 1.0});
  CHECK(balanced == doctest::Approx(0.5 * plain).epsilon(1e-12));
}

TEST_CASE("ten-parameter logistic gradients match finite differences") {
  LogisticNet net(LogisticConfig{2, 5});
  REQUIRE(net.layout().size() == 10);
  net.init_params(7);
  auto samples = random_samples(12, 6, 2, 5, 8);
  std::vector<const EncodedSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  const double err =
      max_gradient_error(net, batch, LossWeights{0.7, 0.3}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("stacked recurrent gradients match finite differences") {
  SequenceConfig cfg;
  cfg.input_dim = 2;
  cfg.present_dim = 3;
  cfg.hidden = 3;
  cfg.lstm_layers = 2;
  cfg.dense_dim = 4;
  SequenceNet net(cfg);
  net.init_params(11);
  auto samples = random_samples(6, 7, 2, 3, 12);
  std::vector<const EncodedSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  const double err =
      max_gradient_error(net, batch, LossWeights{0.9, 0.1}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("full-depth recurrent gradients match finite differences") {
  SequenceConfig cfg;
  cfg.input_dim = 3;
  cfg.present_dim = 4;
  cfg.hidden = 2;
  cfg.lstm_layers = 3;
  cfg.dense_dim = 3;
  SequenceNet net(cfg);
  net.init_params(13);
  auto samples = random_samples(4, 10, 3, 4, 14);
  std::vector<const EncodedSample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  const double err =
      max_gradient_error(net, batch, LossWeights{0.5, 0.5}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("training separates a separable dataset") {
  auto samples = separable_samples(200, 6, 2, 3, 21);

  LogisticNet logistic(LogisticConfig{2, 3});
  logistic.init_params(1);
  TrainOptions options;
  options.epochs = 20;
  options.learning_rate = 0.05;
  options.batch_size = 16;
  options.seed = 2;
  auto stats = train_model(logistic, samples, LossWeights{0.5, 0.5}, options);
  CHECK(stats.epoch_losses.front() > stats.epoch_losses.back());
  CHECK(accuracy(logistic, samples) >= 0.95);

  SequenceConfig cfg;
  cfg.input_dim = 2;
  cfg.present_dim = 3;
  cfg.hidden = 4;
  cfg.lstm_layers = 2;
  cfg.dense_dim = 4;
  SequenceNet seq(cfg);
  seq.init_params(1);
  auto seq_stats = train_model(seq, samples, LossWeights{0.5, 0.5}, options);
  CHECK(seq_stats.epoch_losses.front() > seq_stats.epoch_losses.back());
  CHECK(accuracy(seq, samples) >= 0.95);
}

TEST_CASE("training is bit-identical under a fixed seed") {
  auto samples = separable_samples(60, 5, 2, 3, 33);
  TrainOptions options;
  options.epochs = 5;
  options.learning_rate = 0.02;
  options.batch_size = 8;
  options.seed = 9;

  SequenceConfig cfg;
  cfg.input_dim = 2;
  cfg.present_dim = 3;
  cfg.hidden = 3;
  cfg.lstm_layers = 2;
  cfg.dense_dim = 3;

  SequenceNet a(cfg), b(cfg);
  a.init_params(4);
  b.init_params(4);
  train_model(a, samples, LossWeights{0.6, 0.4}, options);
  train_model(b, samples, LossWeights{0.6, 0.4}, options);
  REQUIRE(a.params().size() == b.params().size());
  for (Eigen::Index i = 0; i < a.params().size(); ++i) {
    CHECK(a.params()[i] == b.params()[i]);
  }
}
