#include "spotsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spotsim/util.hpp"

namespace spotsim::nn {

int ParamLayout::add(const std::string& name, int rows, int cols) {
  blocks_.push_back({name, rows, cols, size_});
  size_ += static_cast<Eigen::Index>(rows) * cols;
  return static_cast<int>(blocks_.size()) - 1;
}

Eigen::Map<Matrix> ParamLayout::view(Vector& store, int id) const {
  const Block& b = blocks_[static_cast<std::size_t>(id)];
  return Eigen::Map<Matrix>(store.data() + b.offset, b.rows, b.cols);
}

Eigen::Map<const Matrix> ParamLayout::view(const Vector& store, int id) const {
  const Block& b = blocks_[static_cast<std::size_t>(id)];
  return Eigen::Map<const Matrix>(store.data() + b.offset, b.rows, b.cols);
}

double softplus(double x) {
  return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double loss_term(double score, double label, const LossWeights& w) {
  return w.positive * label * softplus(-score) +
         w.negative * (1.0 - label) * softplus(score);
}

double dloss_dscore(double score, double label, const LossWeights& w) {
  const double p = sigmoid(score);
  return w.positive * label * (p - 1.0) + w.negative * (1.0 - label) * p;
}

double Model::loss(const std::vector<const EncodedSample*>& batch,
                   const LossWeights& weights) const {
  double total = 0.0;
  for (const EncodedSample* s : batch) {
    total += loss_term(score(*s), s->label, weights);
  }
  return total / static_cast<double>(batch.size());
}

namespace {

void uniform_fill(Eigen::Map<Matrix> block, double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      block(r, c) = dist(rng);
    }
  }
}

}  // namespace

SequenceNet::SequenceNet(const SequenceConfig& config) : config_(config) {
  const int h = config_.hidden;
  for (int l = 0; l < config_.lstm_layers; ++l) {
    const int in = l == 0 ? config_.input_dim : h;
    wx_.push_back(layout_.add("wx" + std::to_string(l), 4 * h, in));
    wh_.push_back(layout_.add("wh" + std::to_string(l), 4 * h, h));
    lb_.push_back(layout_.add("lb" + std::to_string(l), 4 * h, 1));
  }
  const int d = config_.dense_dim;
  d1_ = layout_.add("d1", d, config_.present_dim);
  db1_ = layout_.add("db1", d, 1);
  d2_ = layout_.add("d2", d, d);
  db2_ = layout_.add("db2", d, 1);
  d3_ = layout_.add("d3", d, d);
  db3_ = layout_.add("db3", d, 1);
  sw_ = layout_.add("sw", 1, h + d);
  sb_ = layout_.add("sb", 1, 1);
  params_ = Vector::Zero(layout_.size());
}

void SequenceNet::init_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int h = config_.hidden;
  for (int l = 0; l < config_.lstm_layers; ++l) {
    const int in = l == 0 ? config_.input_dim : h;
    uniform_fill(layout_.view(params_, wx_[l]), 1.0 / std::sqrt(double(in)), rng);
    uniform_fill(layout_.view(params_, wh_[l]), 1.0 / std::sqrt(double(h)), rng);
    auto bias = layout_.view(params_, lb_[l]);
    bias.setZero();
    bias.block(h, 0, h, 1).setConstant(1.0);  // open forget gates at start
  }
  const int d = config_.dense_dim;
  uniform_fill(layout_.view(params_, d1_),
               1.0 / std::sqrt(double(config_.present_dim)), rng);
  layout_.view(params_, db1_).setZero();
  uniform_fill(layout_.view(params_, d2_), 1.0 / std::sqrt(double(d)), rng);
  layout_.view(params_, db2_).setZero();
  uniform_fill(layout_.view(params_, d3_), 1.0 / std::sqrt(double(d)), rng);
  layout_.view(params_, db3_).setZero();
  uniform_fill(layout_.view(params_, sw_), 1.0 / std::sqrt(double(h + d)), rng);
  layout_.view(params_, sb_).setZero();
}

// Per-sample activations kept for backpropagation. Gate rows are ordered
// input, forget, cell, output.
struct SequenceNet::Cache {
  // [layer][t]: gate activations (4H), cell state, tanh(cell), hidden.
  std::vector<std::vector<Vector>> gates, cell, tcell, hidden;
  Vector a1, a2, a3;  // dense tanh activations
  double score = 0.0;
};

double SequenceNet::forward(const EncodedSample& sample, Cache* cache) const {
  const int h = config_.hidden;
  const int layers = config_.lstm_layers;
  const Eigen::Index T = sample.history.rows();

  if (cache) {
    cache->gates.assign(layers, {});
    cache->cell.assign(layers, {});
    cache->tcell.assign(layers, {});
    cache->hidden.assign(layers, {});
  }

  Matrix below = sample.history.transpose();  // F x T, columns are timesteps
  for (int l = 0; l < layers; ++l) {
    const auto wx = layout_.view(params_, wx_[l]);
    const auto wh = layout_.view(params_, wh_[l]);
    const auto b = layout_.view(params_, lb_[l]);
    Matrix outputs(h, T);
    Vector hprev = Vector::Zero(h);
    Vector cprev = Vector::Zero(h);
    for (Eigen::Index t = 0; t < T; ++t) {
      Vector z = wx * below.col(t) + wh * hprev + b.col(0);
      Vector g(4 * h);
      for (int r = 0; r < h; ++r) {
        g[r] = sigmoid(z[r]);                      // input gate
        g[h + r] = sigmoid(z[h + r]);              // forget gate
        g[2 * h + r] = std::tanh(z[2 * h + r]);    // cell candidate
        g[3 * h + r] = sigmoid(z[3 * h + r]);      // output gate
      }
      Vector c(h), tc(h), hout(h);
      for (int r = 0; r < h; ++r) {
        c[r] = g[h + r] * cprev[r] + g[r] * g[2 * h + r];
        tc[r] = std::tanh(c[r]);
        hout[r] = g[3 * h + r] * tc[r];
      }
      if (cache) {
        cache->gates[l].push_back(g);
        cache->cell[l].push_back(c);
        cache->tcell[l].push_back(tc);
        cache->hidden[l].push_back(hout);
      }
      outputs.col(t) = hout;
      hprev = hout;
      cprev = c;
    }
    below = std::move(outputs);
  }
  const Vector h_final = below.col(T - 1);

  const auto w1 = layout_.view(params_, d1_);
  const auto w2 = layout_.view(params_, d2_);
  const auto w3 = layout_.view(params_, d3_);
  Vector a1 = (w1 * sample.present + layout_.view(params_, db1_).col(0))
                  .array()
                  .tanh();
  Vector a2 = (w2 * a1 + layout_.view(params_, db2_).col(0)).array().tanh();
  Vector a3 = (w3 * a2 + layout_.view(params_, db3_).col(0)).array().tanh();

  const auto sw = layout_.view(params_, sw_);
  Vector joint(h + config_.dense_dim);
  joint << h_final, a3;
  const double s = (sw * joint)(0, 0) + layout_.view(params_, sb_)(0, 0);
  if (cache) {
    cache->a1 = std::move(a1);
    cache->a2 = std::move(a2);
    cache->a3 = std::move(a3);
    cache->score = s;
  }
  return s;
}

double SequenceNet::score(const EncodedSample& sample) const {
  return forward(sample, nullptr);
}

void SequenceNet::backward(const EncodedSample& sample, const Cache& cache,
                           double dscore, Vector& grad) const {
  const int h = config_.hidden;
  const int d = config_.dense_dim;
  const int layers = config_.lstm_layers;
  const Eigen::Index T = sample.history.rows();

  const auto sw = layout_.view(params_, sw_);
  Vector joint(h + d);
  joint << cache.hidden[layers - 1][T - 1], cache.a3;
  layout_.view(grad, sw_) += dscore * joint.transpose();
  layout_.view(grad, sb_)(0, 0) += dscore;
  Vector djoint = sw.transpose() * dscore;

  // Dense branch.
  Vector da3 = djoint.tail(d);
  Vector dz3 = da3.cwiseProduct(
      (1.0 - cache.a3.array().square()).matrix());
  layout_.view(grad, d3_) += dz3 * cache.a2.transpose();
  layout_.view(grad, db3_).col(0) += dz3;
  Vector da2 = layout_.view(params_, d3_).transpose() * dz3;
  Vector dz2 = da2.cwiseProduct((1.0 - cache.a2.array().square()).matrix());
  layout_.view(grad, d2_) += dz2 * cache.a1.transpose();
  layout_.view(grad, db2_).col(0) += dz2;
  Vector da1 = layout_.view(params_, d2_).transpose() * dz2;
  Vector dz1 = da1.cwiseProduct((1.0 - cache.a1.array().square()).matrix());
  layout_.view(grad, d1_) += dz1 * sample.present.transpose();
  layout_.view(grad, db1_).col(0) += dz1;

  // Recurrent branch, backwards through layers and time. `dabove[t]` holds
  // the gradient flowing into layer l's hidden output at step t from the
  // layer above (or from the scorer for the top layer's last step).
  std::vector<Vector> dabove(T, Vector::Zero(h));
  dabove[T - 1] = djoint.head(h);

  for (int l = layers - 1; l >= 0; --l) {
    const auto wx = layout_.view(params_, wx_[l]);
    const auto wh = layout_.view(params_, wh_[l]);
    auto gwx = layout_.view(grad, wx_[l]);
    auto gwh = layout_.view(grad, wh_[l]);
    auto gb = layout_.view(grad, lb_[l]);

    const int in = l == 0 ? config_.input_dim : h;
    std::vector<Vector> dbelow(T, Vector::Zero(in));
    Vector dh_rec = Vector::Zero(h);
    Vector dc = Vector::Zero(h);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const Vector& g = cache.gates[l][t];
      const Vector& tc = cache.tcell[l][t];
      const Vector cprev =
          t > 0 ? cache.cell[l][t - 1] : Vector::Zero(h);
      Vector dh = dabove[t] + dh_rec;
      Vector dz(4 * h);
      for (int r = 0; r < h; ++r) {
        const double gi = g[r], gf = g[h + r], gg = g[2 * h + r],
                     go = g[3 * h + r];
        const double dci = dc[r] + dh[r] * go * (1.0 - tc[r] * tc[r]);
        dz[r] = dci * gg * gi * (1.0 - gi);
        dz[h + r] = dci * cprev[r] * gf * (1.0 - gf);
        dz[2 * h + r] = dci * gi * (1.0 - gg * gg);
        dz[3 * h + r] = dh[r] * tc[r] * go * (1.0 - go);
        dc[r] = dci * gf;
      }
      const auto x_t = l == 0 ? Vector(sample.history.row(t).transpose())
                              : cache.hidden[l - 1][t];
      const Vector hprev = t > 0 ? cache.hidden[l][t - 1] : Vector::Zero(h);
      gwx += dz * x_t.transpose();
      gwh += dz * hprev.transpose();
      gb.col(0) += dz;
      dbelow[t] = wx.transpose() * dz;
      dh_rec = wh.transpose() * dz;
    }
    if (l > 0) dabove = std::move(dbelow);
  }
}

double SequenceNet::loss_and_grad(
    const std::vector<const EncodedSample*>& batch, const LossWeights& weights,
    Vector& grad) const {
  grad = Vector::Zero(layout_.size());
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const EncodedSample* s : batch) {
    Cache cache;
    const double sc = forward(*s, &cache);
    total += loss_term(sc, s->label, weights);
    backward(*s, cache, dloss_dscore(sc, s->label, weights) * inv, grad);
  }
  return total * inv;
}

LogisticNet::LogisticNet(const LogisticConfig& config) : config_(config) {
  const int dim = 2 * config_.input_dim + config_.present_dim;
  w_ = layout_.add("w", 1, dim);
  b_ = layout_.add("b", 1, 1);
  params_ = Vector::Zero(layout_.size());
}

void LogisticNet::init_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  uniform_fill(layout_.view(params_, w_),
               1.0 / std::sqrt(double(2 * config_.input_dim +
                                      config_.present_dim)),
               rng);
  layout_.view(params_, b_).setZero();
}

Vector LogisticNet::summarize(const EncodedSample& sample) {
  const Eigen::Index f = sample.history.cols();
  const Eigen::Index T = sample.history.rows();
  Vector out(2 * f + sample.present.size());
  for (Eigen::Index c = 0; c < f; ++c) {
    const double mean = sample.history.col(c).mean();
    const double var =
        (sample.history.col(c).array() - mean).square().sum() /
        static_cast<double>(T);
    out[c] = mean;
    out[f + c] = std::sqrt(var);
  }
  out.tail(sample.present.size()) = sample.present;
  return out;
}

double LogisticNet::score(const EncodedSample& sample) const {
  const Vector x = summarize(sample);
  return (layout_.view(params_, w_) * x)(0, 0) +
         layout_.view(params_, b_)(0, 0);
}

double LogisticNet::loss_and_grad(
    const std::vector<const EncodedSample*>& batch, const LossWeights& weights,
    Vector& grad) const {
  grad = Vector::Zero(layout_.size());
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const EncodedSample* s : batch) {
    const Vector x = summarize(*s);
    const double sc = (layout_.view(params_, w_) * x)(0, 0) +
                      layout_.view(params_, b_)(0, 0);
    total += loss_term(sc, s->label, weights);
    const double ds = dloss_dscore(sc, s->label, weights) * inv;
    layout_.view(grad, w_) += ds * x.transpose();
    layout_.view(grad, b_)(0, 0) += ds;
  }
  return total * inv;
}

TrainStats train_model(Model& model, const std::vector<EncodedSample>& samples,
                       const LossWeights& weights,
                       const TrainOptions& options) {
  if (samples.empty()) throw TrainError("no training samples");
  const Eigen::Index n = model.layout().size();
  Vector m = Vector::Zero(n), v = Vector::Zero(n), grad(n);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(mix_seed(options.seed, "train/shuffle"));

  TrainStats stats;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options.batch_size)) {
      std::vector<const EncodedSample*> batch;
      const std::size_t stop =
          std::min(order.size(),
                   start + static_cast<std::size_t>(options.batch_size));
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(&samples[order[i]]);
      }
      epoch_loss += model.loss_and_grad(batch, weights, grad);
      ++batches;
      ++step;
      const double corr1 = 1.0 - std::pow(beta1, double(step));
      const double corr2 = 1.0 - std::pow(beta2, double(step));
      for (Eigen::Index i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        model.params()[i] -= options.learning_rate * (m[i] / corr1) /
                             (std::sqrt(v[i] / corr2) + eps);
      }
    }
    stats.epoch_losses.push_back(epoch_loss / double(batches));
  }
  return stats;
}

double max_gradient_error(Model& model,
                          const std::vector<const EncodedSample*>& batch,
                          const LossWeights& weights, double step,
                          double floor) {
  Vector analytic;
  model.loss_and_grad(batch, weights, analytic);
  double worst = 0.0;
  Vector& theta = model.params();
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + step;
    const double up = model.loss(batch, weights);
    theta[i] = saved - step;
    const double down = model.loss(batch, weights);
    theta[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric) /
                       std::max(std::abs(analytic[i]) + std::abs(numeric),
                                floor);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace spotsim::nn
