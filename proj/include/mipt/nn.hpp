// Convolutional decoder trained on outcome matrices: two valid-padded conv
// layers, 2x2 max pool, two dense layers with dropout, sigmoid head. Scalar
// type is a template parameter so training runs in float while gradient
// checking runs in double. All loops use a fixed order; given the same seeds
// the final parameters are bit-stable.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipt/io.hpp"
#include "mipt/rng.hpp"
#include "mipt/trajectory.hpp"

namespace mipt::nn {

// Hidden width grows with the training-set size in steps of 1024 per 2000
// samples.
inline size_t hidden_units(size_t n_train) { return 512 * (1 + 2 * (n_train / 2000)); }

// Static shape of the network. rows/cols are the record shape; inputs
// narrower than the two convolutions support are zero-padded (bottom/right)
// up to 6x6. Filter count is half the site count of the window.
struct ModelConfig {
  size_t rows = 0, cols = 0;
  size_t filters = 0;
  size_t hidden = 0;
  size_t in_rows = 0, in_cols = 0;
  size_t c1_rows = 0, c1_cols = 0;
  size_t c2_rows = 0, c2_cols = 0;
  size_t p_rows = 0, p_cols = 0;
  size_t flat = 0;

  static ModelConfig make(size_t rows, size_t cols, size_t n_train) {
    if (rows == 0 || cols == 0) {
      throw std::invalid_argument("model input must be nonempty");
    }
    if (cols % 2 != 0) {
      throw std::invalid_argument("window width must be even (filter count is width/2)");
    }
    ModelConfig c;
    c.rows = rows;
    c.cols = cols;
    c.filters = cols / 2;
    c.hidden = hidden_units(n_train);
    c.in_rows = std::max<size_t>(rows, 6);
    c.in_cols = std::max<size_t>(cols, 6);
    c.c1_rows = c.in_rows - 3;
    c.c1_cols = c.in_cols - 3;
    c.c2_rows = c.c1_rows - 2;
    c.c2_cols = c.c1_cols - 2;
    c.p_rows = (c.c2_rows + 1) / 2;
    c.p_cols = (c.c2_cols + 1) / 2;
    c.flat = c.p_rows * c.p_cols * c.filters;
    return c;
  }

  bool operator==(const ModelConfig&) const = default;
};

// Parameter block; doubles as a gradient and optimizer-moment container.
// Segment order is the checkpoint tensor order.
template <class S>
struct Params {
  std::vector<S> w1, b1;  // conv1: filters x 1 x 4 x 4
  std::vector<S> w2, b2;  // conv2: filters x filters x 3 x 3
  std::vector<S> w3, b3;  // dense1: hidden x flat
  std::vector<S> w4, b4;  // dense2: 1 x hidden

  void resize(const ModelConfig& c) {
    w1.assign(c.filters * 16, S(0));
    b1.assign(c.filters, S(0));
    w2.assign(c.filters * c.filters * 9, S(0));
    b2.assign(c.filters, S(0));
    w3.assign(c.hidden * c.flat, S(0));
    b3.assign(c.hidden, S(0));
    w4.assign(c.hidden, S(0));
    b4.assign(1, S(0));
  }

  std::array<std::vector<S>*, 8> segments() {
    return {&w1, &b1, &w2, &b2, &w3, &b3, &w4, &b4};
  }
  std::array<const std::vector<S>*, 8> segments() const {
    return {&w1, &b1, &w2, &b2, &w3, &b3, &w4, &b4};
  }

  size_t size() const {
    size_t n = 0;
    for (const auto* seg : segments()) {
      n += seg->size();
    }
    return n;
  }

  S& at(size_t i) {
    for (auto* seg : segments()) {
      if (i < seg->size()) {
        return (*seg)[i];
      }
      i -= seg->size();
    }
    throw std::out_of_range("parameter index");
  }

  void fill(S v) {
    for (auto* seg : segments()) {
      std::fill(seg->begin(), seg->end(), v);
    }
  }
};

// Per-sample forward activations kept for the backward pass.
template <class S>
struct Trace {
  std::vector<S> x;       // padded input
  std::vector<S> z1, a1;  // conv1 pre/post ReLU
  std::vector<S> z2, a2;  // conv2 pre/post ReLU
  std::vector<S> pool;    // after max pool (flat)
  std::vector<size_t> argmax;
  std::vector<S> d1;      // after dropout 1 (flat)
  std::vector<S> z3, h;   // dense1 pre/post ReLU
  std::vector<S> d2;      // after dropout 2 (hidden)
  S z4 = 0, out = 0;

  // The padded border of x is written once and never touched again; every
  // other buffer is fully overwritten by each forward pass.
  void resize(const ModelConfig& c) {
    if (x.size() == c.in_rows * c.in_cols && d2.size() == c.hidden && d1.size() == c.flat) {
      return;
    }
    x.assign(c.in_rows * c.in_cols, S(0));
    z1.assign(c.filters * c.c1_rows * c.c1_cols, S(0));
    a1 = z1;
    z2.assign(c.filters * c.c2_rows * c.c2_cols, S(0));
    a2 = z2;
    pool.assign(c.flat, S(0));
    argmax.assign(c.flat, 0);
    d1.assign(c.flat, S(0));
    z3.assign(c.hidden, S(0));
    h = z3;
    d2.assign(c.hidden, S(0));
  }
};

// Inverted dropout mask: entries are 0 or 1/(1-rate), so the expectation of
// mask*x over masks equals x and inference needs no rescaling.
template <class S>
void fill_dropout_mask(RandomStream& stream, double rate, std::vector<S>& mask) {
  S boost = S(1.0 / (1.0 - rate));
  for (S& m : mask) {
    m = stream.next_double() < rate ? S(0) : boost;
  }
}

template <class S>
class Cnn {
 public:
  ModelConfig cfg;
  Params<S> p;

  Cnn() = default;
  explicit Cnn(const ModelConfig& c) : cfg(c) { p.resize(c); }

  // He-uniform fan-in limits for the ReLU layers, Glorot-uniform for the
  // sigmoid head; all biases zero.
  void init(RandomStream& stream) {
    auto uniform = [&](std::vector<S>& w, double limit) {
      for (S& v : w) {
        v = S((2.0 * stream.next_double() - 1.0) * limit);
      }
    };
    uniform(p.w1, std::sqrt(6.0 / 16.0));
    uniform(p.w2, std::sqrt(6.0 / (9.0 * static_cast<double>(cfg.filters))));
    uniform(p.w3, std::sqrt(6.0 / static_cast<double>(cfg.flat)));
    uniform(p.w4, std::sqrt(6.0 / static_cast<double>(cfg.hidden + 1)));
  }

  size_t num_params() const { return p.size(); }

  // image is rows*cols row-major; masks are null for inference.
  S forward(const S* image, Trace<S>& t, const S* mask1 = nullptr,
            const S* mask2 = nullptr) const {
    const ModelConfig& c = cfg;
    t.resize(c);
    for (size_t r = 0; r < c.rows; ++r) {
      for (size_t col = 0; col < c.cols; ++col) {
        t.x[r * c.in_cols + col] = image[r * c.cols + col];
      }
    }
    for (size_t f = 0; f < c.filters; ++f) {
      const S* w = &p.w1[f * 16];
      for (size_t r = 0; r < c.c1_rows; ++r) {
        for (size_t col = 0; col < c.c1_cols; ++col) {
          S acc = p.b1[f];
          for (size_t kr = 0; kr < 4; ++kr) {
            for (size_t kc = 0; kc < 4; ++kc) {
              acc += w[kr * 4 + kc] * t.x[(r + kr) * c.in_cols + (col + kc)];
            }
          }
          size_t i = (f * c.c1_rows + r) * c.c1_cols + col;
          t.z1[i] = acc;
          t.a1[i] = acc > S(0) ? acc : S(0);
        }
      }
    }
    for (size_t f = 0; f < c.filters; ++f) {
      for (size_t r = 0; r < c.c2_rows; ++r) {
        for (size_t col = 0; col < c.c2_cols; ++col) {
          S acc = p.b2[f];
          for (size_t g = 0; g < c.filters; ++g) {
            const S* w = &p.w2[(f * c.filters + g) * 9];
            const S* plane = &t.a1[g * c.c1_rows * c.c1_cols];
            for (size_t kr = 0; kr < 3; ++kr) {
              for (size_t kc = 0; kc < 3; ++kc) {
                acc += w[kr * 3 + kc] * plane[(r + kr) * c.c1_cols + (col + kc)];
              }
            }
          }
          size_t i = (f * c.c2_rows + r) * c.c2_cols + col;
          t.z2[i] = acc;
          t.a2[i] = acc > S(0) ? acc : S(0);
        }
      }
    }
    // 2x2 max pool, stride 2; odd edges read only the cells that exist, which
    // matches zero padding because the activations are nonnegative.
    for (size_t f = 0; f < c.filters; ++f) {
      const S* plane = &t.a2[f * c.c2_rows * c.c2_cols];
      for (size_t r = 0; r < c.p_rows; ++r) {
        for (size_t col = 0; col < c.p_cols; ++col) {
          S best = -std::numeric_limits<S>::infinity();
          size_t best_i = 0;
          for (size_t dr = 0; dr < 2; ++dr) {
            for (size_t dc = 0; dc < 2; ++dc) {
              size_t rr = 2 * r + dr, cc = 2 * col + dc;
              if (rr >= c.c2_rows || cc >= c.c2_cols) {
                continue;
              }
              S v = plane[rr * c.c2_cols + cc];
              if (v > best) {
                best = v;
                best_i = f * c.c2_rows * c.c2_cols + rr * c.c2_cols + cc;
              }
            }
          }
          size_t i = (f * c.p_rows + r) * c.p_cols + col;
          t.pool[i] = best;
          t.argmax[i] = best_i;
        }
      }
    }
    for (size_t i = 0; i < c.flat; ++i) {
      t.d1[i] = mask1 ? t.pool[i] * mask1[i] : t.pool[i];
    }
    for (size_t j = 0; j < c.hidden; ++j) {
      S acc = p.b3[j];
      const S* w = &p.w3[j * c.flat];
      for (size_t i = 0; i < c.flat; ++i) {
        acc += w[i] * t.d1[i];
      }
      t.z3[j] = acc;
      S a = acc > S(0) ? acc : S(0);
      t.h[j] = a;
      t.d2[j] = mask2 ? a * mask2[j] : a;
    }
    S acc = p.b4[0];
    for (size_t j = 0; j < c.hidden; ++j) {
      acc += p.w4[j] * t.d2[j];
    }
    t.z4 = acc;
    t.out = S(1) / (S(1) + std::exp(-acc));
    return t.out;
  }

  // dz4 = dL/dz4 (out - target for BCE through the sigmoid). Gradients are
  // accumulated into g so a batch can share one container.
  void backward(const Trace<S>& t, S dz4, Params<S>& g, const S* mask1 = nullptr,
                const S* mask2 = nullptr) const {
    const ModelConfig& c = cfg;
    g.b4[0] += dz4;
    std::vector<S> dh(c.hidden);
    for (size_t j = 0; j < c.hidden; ++j) {
      g.w4[j] += dz4 * t.d2[j];
      S d = dz4 * p.w4[j];
      if (mask2) {
        d *= mask2[j];
      }
      dh[j] = t.z3[j] > S(0) ? d : S(0);
    }
    std::vector<S> dd1(c.flat, S(0));
    for (size_t j = 0; j < c.hidden; ++j) {
      S d = dh[j];
      if (d == S(0)) {
        continue;
      }
      g.b3[j] += d;
      S* gw = &g.w3[j * c.flat];
      const S* w = &p.w3[j * c.flat];
      for (size_t i = 0; i < c.flat; ++i) {
        gw[i] += d * t.d1[i];
        dd1[i] += d * w[i];
      }
    }
    std::vector<S> da2(c.filters * c.c2_rows * c.c2_cols, S(0));
    for (size_t i = 0; i < c.flat; ++i) {
      S d = dd1[i];
      if (mask1) {
        d *= mask1[i];
      }
      da2[t.argmax[i]] += d;
    }
    std::vector<S> da1(c.filters * c.c1_rows * c.c1_cols, S(0));
    for (size_t f = 0; f < c.filters; ++f) {
      for (size_t r = 0; r < c.c2_rows; ++r) {
        for (size_t col = 0; col < c.c2_cols; ++col) {
          size_t i = (f * c.c2_rows + r) * c.c2_cols + col;
          S d = t.z2[i] > S(0) ? da2[i] : S(0);
          if (d == S(0)) {
            continue;
          }
          g.b2[f] += d;
          for (size_t gch = 0; gch < c.filters; ++gch) {
            S* gw = &g.w2[(f * c.filters + gch) * 9];
            const S* w = &p.w2[(f * c.filters + gch) * 9];
            const S* plane = &t.a1[gch * c.c1_rows * c.c1_cols];
            S* dplane = &da1[gch * c.c1_rows * c.c1_cols];
            for (size_t kr = 0; kr < 3; ++kr) {
              for (size_t kc = 0; kc < 3; ++kc) {
                gw[kr * 3 + kc] += d * plane[(r + kr) * c.c1_cols + (col + kc)];
                dplane[(r + kr) * c.c1_cols + (col + kc)] += d * w[kr * 3 + kc];
              }
            }
          }
        }
      }
    }
    for (size_t f = 0; f < c.filters; ++f) {
      for (size_t r = 0; r < c.c1_rows; ++r) {
        for (size_t col = 0; col < c.c1_cols; ++col) {
          size_t i = (f * c.c1_rows + r) * c.c1_cols + col;
          S d = t.z1[i] > S(0) ? da1[i] : S(0);
          if (d == S(0)) {
            continue;
          }
          g.b1[f] += d;
          S* gw = &g.w1[f * 16];
          for (size_t kr = 0; kr < 4; ++kr) {
            for (size_t kc = 0; kc < 4; ++kc) {
              gw[kr * 4 + kc] += d * t.x[(r + kr) * c.in_cols + (col + kc)];
            }
          }
        }
      }
    }
  }
};

template <class S>
Cnn<S> build_model(size_t rows, size_t cols, size_t n_train, uint64_t init_seed) {
  Cnn<S> model(ModelConfig::make(rows, cols, n_train));
  RandomStream stream(hash_u64s({init_seed, tag::kInit}));
  model.init(stream);
  return model;
}

template <class S>
S bce_loss(S out, S target) {
  S eps = S(1e-7);
  S q = std::min(std::max(out, eps), S(1) - eps);
  return -(target * std::log(q) + (S(1) - target) * std::log(S(1) - q));
}

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  size_t batch = 32;
  size_t max_epochs = 200;
  size_t patience = 10;
  double val_fraction = 0.2;
  double dropout = 0.2;
  uint64_t seed = 0;
};

struct TrainResult {
  size_t epochs = 0;
  double best_val_loss = 0.0;
  std::vector<double> train_loss;
  std::vector<double> val_loss;
};

template <class S>
class Adam {
 public:
  Adam(const ModelConfig& cfg, const TrainConfig& tc) : tc_(tc) {
    m_.resize(cfg);
    v_.resize(cfg);
  }

  // grads hold batch sums; inv_batch converts them to means.
  void step(Params<S>& params, Params<S>& grads, S inv_batch) {
    ++t_;
    S b1 = S(tc_.beta1), b2 = S(tc_.beta2);
    S corr1 = S(1) - std::pow(b1, S(t_));
    S corr2 = S(1) - std::pow(b2, S(t_));
    S lr = S(tc_.learning_rate);
    S eps = S(tc_.epsilon);
    auto ps = params.segments();
    auto gs = grads.segments();
    auto ms = m_.segments();
    auto vs = v_.segments();
    for (size_t s = 0; s < ps.size(); ++s) {
      std::vector<S>& pv = *ps[s];
      std::vector<S>& gv = *gs[s];
      std::vector<S>& mv = *ms[s];
      std::vector<S>& vv = *vs[s];
      for (size_t i = 0; i < pv.size(); ++i) {
        S g = gv[i] * inv_batch;
        mv[i] = b1 * mv[i] + (S(1) - b1) * g;
        vv[i] = b2 * vv[i] + (S(1) - b2) * g * g;
        S mhat = mv[i] / corr1;
        S vhat = vv[i] / corr2;
        pv[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

 private:
  TrainConfig tc_;
  Params<S> m_, v_;
  uint64_t t_ = 0;
};

// Mini-batch BCE with Adam, a validation split carved from the input, and
// early stopping on validation loss. The best-validation parameters are
// restored at the end. Deterministic given cfg.seed.
template <class S>
TrainResult train(Cnn<S>& model, const std::vector<std::vector<S>>& images,
                  const std::vector<S>& targets, const TrainConfig& cfg) {
  if (images.empty() || images.size() != targets.size()) {
    throw std::invalid_argument("training set empty or mismatched");
  }
  size_t n = images.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) {
    order[i] = i;
  }
  RandomStream shuffle(hash_u64s({cfg.seed, tag::kShuffle}));
  RandomStream dropout(hash_u64s({cfg.seed, tag::kDropout}));
  auto fisher_yates = [&](std::vector<size_t>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[shuffle.next_below(i)]);
    }
  };
  fisher_yates(order);
  size_t val_n = 0;
  if (cfg.val_fraction > 0 && n > 1) {
    val_n = std::max<size_t>(1, static_cast<size_t>(std::llround(
                                    cfg.val_fraction * static_cast<double>(n))));
    val_n = std::min(val_n, n - 1);
  }
  std::vector<size_t> val_idx(order.end() - static_cast<ptrdiff_t>(val_n), order.end());
  std::vector<size_t> train_idx(order.begin(), order.end() - static_cast<ptrdiff_t>(val_n));

  Trace<S> trace;
  Params<S> grads;
  grads.resize(model.cfg);
  Adam<S> adam(model.cfg, cfg);
  std::vector<S> mask1(model.cfg.flat), mask2(model.cfg.hidden);
  bool use_dropout = cfg.dropout > 0;

  auto mean_loss = [&](const std::vector<size_t>& idx) {
    double total = 0;
    for (size_t i : idx) {
      S out = model.forward(images[i].data(), trace);
      total += static_cast<double>(bce_loss(out, targets[i]));
    }
    return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
  };

  TrainResult res;
  Params<S> best = model.p;
  double best_val = std::numeric_limits<double>::infinity();
  size_t since_best = 0;
  for (size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    fisher_yates(train_idx);
    double epoch_loss = 0;
    for (size_t start = 0; start < train_idx.size(); start += cfg.batch) {
      size_t stop = std::min(start + cfg.batch, train_idx.size());
      grads.fill(S(0));
      for (size_t k = start; k < stop; ++k) {
        size_t i = train_idx[k];
        const S* m1 = nullptr;
        const S* m2 = nullptr;
        if (use_dropout) {
          fill_dropout_mask(dropout, cfg.dropout, mask1);
          fill_dropout_mask(dropout, cfg.dropout, mask2);
          m1 = mask1.data();
          m2 = mask2.data();
        }
        S out = model.forward(images[i].data(), trace, m1, m2);
        epoch_loss += static_cast<double>(bce_loss(out, targets[i]));
        model.backward(trace, out - targets[i], grads, m1, m2);
      }
      adam.step(model.p, grads, S(1) / S(stop - start));
    }
    epoch_loss /= static_cast<double>(train_idx.size());
    double val = val_n > 0 ? mean_loss(val_idx) : epoch_loss;
    if (std::isnan(epoch_loss) || std::isnan(val)) {
      throw std::runtime_error("training diverged (loss is NaN)");
    }
    res.train_loss.push_back(epoch_loss);
    res.val_loss.push_back(val);
    res.epochs = epoch + 1;
    if (val < best_val) {
      best_val = val;
      best = model.p;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  model.p = best;
  res.best_val_loss = best_val;
  return res;
}

// Hard classification: probability >= 0.5 reads as +1 (exact ties resolve to
// +1), below as -1.
template <class S>
int classify(const Cnn<S>& model, Trace<S>& trace, const std::vector<S>& image) {
  return model.forward(image.data(), trace) >= S(0.5) ? 1 : -1;
}

struct EvalReport {
  size_t n_test = 0;
  size_t misclassified = 0;
  double error = 0.0;
  double epsilon = 0.0;
  bool learned = false;
};

template <class S>
EvalReport evaluate(const Cnn<S>& model, const std::vector<std::vector<S>>& images,
                    const std::vector<int>& labels, double epsilon = 0.02) {
  if (images.empty() || images.size() != labels.size()) {
    throw std::invalid_argument("test set empty or mismatched");
  }
  EvalReport rep;
  rep.n_test = images.size();
  rep.epsilon = epsilon;
  Trace<S> trace;
  for (size_t i = 0; i < images.size(); ++i) {
    if (classify(model, trace, images[i]) != labels[i]) {
      ++rep.misclassified;
    }
  }
  rep.error = static_cast<double>(rep.misclassified) / static_cast<double>(rep.n_test);
  rep.learned = rep.error <= epsilon;
  return rep;
}

// Dataset records as network inputs: -1/0/+1 as real values, labels both as
// BCE targets {0,1} and as signed labels for evaluation.
template <class S>
std::vector<std::vector<S>> images_of(const Dataset& ds) {
  std::vector<std::vector<S>> images;
  images.reserve(ds.records.size());
  for (const DatasetRecord& r : ds.records) {
    std::vector<S> img(r.outcomes.size());
    for (size_t i = 0; i < r.outcomes.size(); ++i) {
      img[i] = S(r.outcomes[i]);
    }
    images.push_back(std::move(img));
  }
  return images;
}

template <class S>
std::vector<S> targets_of(const Dataset& ds) {
  std::vector<S> t;
  t.reserve(ds.records.size());
  for (const DatasetRecord& r : ds.records) {
    t.push_back(r.label > 0 ? S(1) : S(0));
  }
  return t;
}

inline std::vector<int> labels_of(const Dataset& ds) {
  std::vector<int> l;
  l.reserve(ds.records.size());
  for (const DatasetRecord& r : ds.records) {
    l.push_back(r.label);
  }
  return l;
}

// Central-difference check of the analytic gradient on up to max_params
// randomly chosen parameters; returns the worst relative error. Dropout is
// off; S should be double.
template <class S>
S gradient_check(Cnn<S>& model, const std::vector<S>& image, S target,
                 RandomStream& pick, size_t max_params = 200, S h = S(1e-5)) {
  Trace<S> trace;
  Params<S> grads;
  grads.resize(model.cfg);
  S out = model.forward(image.data(), trace);
  model.backward(trace, out - target, grads);

  size_t total = model.num_params();
  std::vector<size_t> chosen;
  if (total <= max_params) {
    chosen.resize(total);
    for (size_t i = 0; i < total; ++i) {
      chosen[i] = i;
    }
  } else {
    while (chosen.size() < max_params) {
      size_t i = pick.next_below(total);
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
        chosen.push_back(i);
      }
    }
  }
  S worst = 0;
  for (size_t i : chosen) {
    S& theta = model.p.at(i);
    S saved = theta;
    theta = saved + h;
    S up = bce_loss(model.forward(image.data(), trace), target);
    theta = saved - h;
    S down = bce_loss(model.forward(image.data(), trace), target);
    theta = saved;
    S fd = (up - down) / (2 * h);
    S g = grads.at(i);
    S denom = std::max(S(1e-8), std::abs(fd) + std::abs(g));
    worst = std::max(worst, std::abs(fd - g) / denom);
  }
  return worst;
}

inline constexpr char kModelMagic[8] = {'M', 'I', 'P', 'T', '-', 'N', 'N', '\0'};
inline constexpr uint16_t kModelVersion = 1;

inline void save_model(std::ostream& os, const Cnn<float>& model) {
  io::put_bytes(os, kModelMagic, 8);
  io::put_u16(os, kModelVersion);
  io::put_u16(os, static_cast<uint16_t>(model.cfg.rows));
  io::put_u16(os, static_cast<uint16_t>(model.cfg.cols));
  io::put_u16(os, static_cast<uint16_t>(model.cfg.filters));
  io::put_u32(os, static_cast<uint32_t>(model.cfg.hidden));
  for (const auto* seg : model.p.segments()) {
    for (float v : *seg) {
      io::put_f32(os, v);
    }
  }
}

inline void save_model(const std::string& path, const Cnn<float>& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  save_model(os, model);
  if (!os) {
    throw std::runtime_error("write failed: " + path);
  }
}

inline Cnn<float> load_model(std::istream& is) {
  char magic[8];
  io::get_bytes(is, magic, 8);
  for (int k = 0; k < 8; ++k) {
    if (magic[k] != kModelMagic[k]) {
      throw std::runtime_error("not a model file (bad magic)");
    }
  }
  if (io::get_u16(is) != kModelVersion) {
    throw std::runtime_error("unsupported model version");
  }
  size_t rows = io::get_u16(is);
  size_t cols = io::get_u16(is);
  size_t filters = io::get_u16(is);
  size_t hidden = io::get_u32(is);
  ModelConfig cfg = ModelConfig::make(rows, cols, 0);
  cfg.hidden = hidden;
  cfg.flat = cfg.p_rows * cfg.p_cols * cfg.filters;
  if (cfg.filters != filters) {
    throw std::runtime_error("model file filter count mismatch");
  }
  Cnn<float> model(cfg);
  for (auto* seg : model.p.segments()) {
    for (float& v : *seg) {
      v = io::get_f32(is);
    }
  }
  return model;
}

inline Cnn<float> load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot open for reading: " + path);
  }
  return load_model(is);
}

// Geometric sample grid 250, 500, 1000, ... capped at max_samples.
inline std::vector<size_t> sample_grid(size_t max_samples, size_t first = 250) {
  std::vector<size_t> grid;
  for (size_t m = first; m <= max_samples; m *= 2) {
    grid.push_back(m);
  }
  return grid;
}

struct MinSamplesOptions {
  std::vector<size_t> grid = sample_grid(16000);
  double epsilon = 0.02;
  size_t n_test = 2000;
  TrainConfig train;
  uint64_t model_seed = 1;
  // Test trajectories start far above any training index so seed sets are
  // disjoint.
  uint64_t test_first_seed = uint64_t{1} << 32;
  bool stop_at_success = true;
};

struct GridPointResult {
  size_t n_train = 0;
  double error = 0.0;
  size_t epochs = 0;
};

struct MinSamplesResult {
  bool reached = false;
  size_t min_samples = 0;
  std::vector<GridPointResult> points;
};

// Smallest grid size whose freshly trained model reaches the error criterion
// on a fixed held-out set. A new model (width from the grid size) is built
// per point; training uses the first m records of one shared dataset.
inline MinSamplesResult min_training_samples(const CircuitInstance& inst,
                                             const std::optional<WindowSpec>& window,
                                             const MinSamplesOptions& opts) {
  if (opts.grid.empty()) {
    throw std::invalid_argument("sample grid is empty");
  }
  size_t n_max = *std::max_element(opts.grid.begin(), opts.grid.end());
  Dataset train_ds = generate_dataset(inst, n_max, window);
  GenerateOptions test_gen;
  test_gen.first_trajectory_seed = opts.test_first_seed;
  Dataset test_ds = generate_dataset(inst, opts.n_test, window, test_gen);

  auto train_images = images_of<float>(train_ds);
  auto train_targets = targets_of<float>(train_ds);
  auto test_images = images_of<float>(test_ds);
  auto test_labels = labels_of(test_ds);
  size_t rows = train_ds.record_rows();
  size_t cols = train_ds.record_cols();

  MinSamplesResult res;
  for (size_t k = 0; k < opts.grid.size(); ++k) {
    size_t m = opts.grid[k];
    if (m > train_images.size()) {
      break;
    }
    Cnn<float> model = build_model<float>(rows, cols, m, hash_u64s({opts.model_seed, k}));
    TrainConfig tc = opts.train;
    tc.seed = hash_u64s({opts.model_seed, k, tag::kShuffle});
    std::vector<std::vector<float>> slice(train_images.begin(),
                                          train_images.begin() + static_cast<ptrdiff_t>(m));
    std::vector<float> slice_t(train_targets.begin(),
                               train_targets.begin() + static_cast<ptrdiff_t>(m));
    TrainResult tr = train(model, slice, slice_t, tc);
    EvalReport rep = evaluate(model, test_images, test_labels, opts.epsilon);
    res.points.push_back({m, rep.error, tr.epochs});
    if (rep.learned && !res.reached) {
      res.reached = true;
      res.min_samples = m;
      if (opts.stop_at_success) {
        break;
      }
    }
  }
  return res;
}

}  // namespace mipt::nn
