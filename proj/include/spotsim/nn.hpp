#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace spotsim::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Class weights for the binary cross-entropy: `positive` scales the loss of
// label-1 samples, `negative` of label-0 samples.
struct LossWeights {
  double positive = 0.5;
  double negative = 0.5;
};

struct EncodedSample {
  Matrix history;  // T x F, one normalized feature row per past minute
  Vector present;  // normalized present features (and declared ceiling price)
  double label = 0.0;
};

// Named matrix blocks laid out in one flat parameter vector, so optimizers
// and finite-difference checks can treat the model as a single vector.
class ParamLayout {
 public:
  int add(const std::string& name, int rows, int cols);
  Eigen::Index size() const { return size_; }

  Eigen::Map<Matrix> view(Vector& store, int id) const;
  Eigen::Map<const Matrix> view(const Vector& store, int id) const;

 private:
  struct Block {
    std::string name;
    int rows = 0, cols = 0;
    Eigen::Index offset = 0;
  };
  std::vector<Block> blocks_;
  Eigen::Index size_ = 0;
};

double softplus(double x);
double sigmoid(double x);

// Weighted BCE of one sample expressed through the pre-sigmoid score.
double loss_term(double score, double label, const LossWeights& w);
double dloss_dscore(double score, double label, const LossWeights& w);

class Model {
 public:
  virtual ~Model() = default;

  virtual const ParamLayout& layout() const = 0;
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  // Pre-sigmoid score of one sample.
  virtual double score(const EncodedSample& sample) const = 0;
  double p_hat(const EncodedSample& sample) const {
    return sigmoid(score(sample));
  }

  // Mean weighted BCE over the batch; `grad` is resized and overwritten.
  virtual double loss_and_grad(const std::vector<const EncodedSample*>& batch,
                               const LossWeights& weights,
                               Vector& grad) const = 0;

  double loss(const std::vector<const EncodedSample*>& batch,
              const LossWeights& weights) const;

  // Seeded uniform init scaled by fan-in; recurrent forget gates start open.
  virtual void init_params(std::uint64_t seed) = 0;

 protected:
  Vector params_;
};

struct SequenceConfig {
  int input_dim = 6;    // features per history minute
  int present_dim = 7;  // present features plus ceiling price
  int hidden = 32;
  int lstm_layers = 3;
  int dense_dim = 16;  // width of the three present-record layers
};

// History minutes run through a stacked LSTM; the present record runs through
// three dense tanh layers; both embeddings concatenate into one scoring unit.
class SequenceNet : public Model {
 public:
  explicit SequenceNet(const SequenceConfig& config);

  const ParamLayout& layout() const override { return layout_; }
  const SequenceConfig& config() const { return config_; }

  double score(const EncodedSample& sample) const override;
  double loss_and_grad(const std::vector<const EncodedSample*>& batch,
                       const LossWeights& weights, Vector& grad) const override;
  void init_params(std::uint64_t seed) override;

 private:
  struct Cache;
  double forward(const EncodedSample& sample, Cache* cache) const;
  void backward(const EncodedSample& sample, const Cache& cache, double dscore,
                Vector& grad) const;

  SequenceConfig config_;
  ParamLayout layout_;
  std::vector<int> wx_, wh_, lb_;  // per-LSTM-layer block ids
  int d1_, db1_, d2_, db2_, d3_, db3_;
  int sw_, sb_;
};

struct LogisticConfig {
  int input_dim = 6;
  int present_dim = 7;
};

// Baseline: logistic regression over per-feature mean and deviation of the
// history window concatenated with the present record.
class LogisticNet : public Model {
 public:
  explicit LogisticNet(const LogisticConfig& config);

  const ParamLayout& layout() const override { return layout_; }
  const LogisticConfig& config() const { return config_; }

  static Vector summarize(const EncodedSample& sample);

  double score(const EncodedSample& sample) const override;
  double loss_and_grad(const std::vector<const EncodedSample*>& batch,
                       const LossWeights& weights, Vector& grad) const override;
  void init_params(std::uint64_t seed) override;

 private:
  LogisticConfig config_;
  ParamLayout layout_;
  int w_, b_;
};

struct TrainOptions {
  int epochs = 8;
  double learning_rate = 0.01;
  int batch_size = 32;
  std::uint64_t seed = 1;
};

struct TrainStats {
  std::vector<double> epoch_losses;  // mean training loss per epoch
};

// Adam over the flat parameter vector with a deterministic seeded shuffle.
TrainStats train_model(Model& model, const std::vector<EncodedSample>& samples,
                       const LossWeights& weights, const TrainOptions& options);

// Largest discrepancy between analytic gradients and central finite
// differences, normalized by max(|analytic| + |numeric|, floor).
double max_gradient_error(Model& model,
                          const std::vector<const EncodedSample*>& batch,
                          const LossWeights& weights, double step,
                          double floor = 1e-2);

}  // namespace spotsim::nn
