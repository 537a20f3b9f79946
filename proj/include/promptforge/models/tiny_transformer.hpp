// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "promptforge/core/random.hpp"

namespace promptforge::models {

struct TinyTransformerConfig {
  int vocab_size = 64;
  int d_model = 16;
  int n_layers = 2;
  int n_heads = 2;
  int d_hidden = 32;
  double norm_eps = 1e-5;

  int head_dim() const noexcept { return d_model / n_heads; }
};

/// Parameters of a pre-norm decoder-only transformer: RMSNorm, causal
/// multi-head attention, tanh MLP, sinusoidal positions, untied unembedding.
template <typename Scalar>
struct TinyTransformerWeights {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Vector attn_norm;
    Matrix wq, wk, wv, wo;  // d_model x d_model, applied as x * W
    Vector mlp_norm;
    Matrix w1;  // d_model x d_hidden
    Vector b1;
    Matrix w2;  // d_hidden x d_model
    Vector b2;
  };

  Matrix token_embedding;  // vocab x d_model
  std::vector<Layer> layers;
  Vector final_norm;
  Matrix unembedding;  // vocab x d_model

  template <typename Other>
  TinyTransformerWeights<Other> cast() const {
    TinyTransformerWeights<Other> w;
    w.token_embedding = token_embedding.template cast<Other>();
    for (const auto& l : layers) {
      w.layers.push_back({l.attn_norm.template cast<Other>(), l.wq.template cast<Other>(),
                          l.wk.template cast<Other>(), l.wv.template cast<Other>(),
                          l.wo.template cast<Other>(), l.mlp_norm.template cast<Other>(),
                          l.w1.template cast<Other>(), l.b1.template cast<Other>(),
                          l.w2.template cast<Other>(), l.b2.template cast<Other>()});
    }
    w.final_norm = final_norm.template cast<Other>();
    w.unembedding = unembedding.template cast<Other>();
    return w;
  }

  bool operator==(const TinyTransformerWeights& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& a = layers[i];
      const auto& b = o.layers[i];
      if (a.attn_norm != b.attn_norm || a.wq != b.wq || a.wk != b.wk || a.wv != b.wv ||
          a.wo != b.wo || a.mlp_norm != b.mlp_norm || a.w1 != b.w1 || a.b1 != b.b1 ||
          a.w2 != b.w2 || a.b2 != b.b2) {
        return false;
      }
    }
    return token_embedding == o.token_embedding && final_norm == o.final_norm &&
           unembedding == o.unembedding;
  }
};

/// Seeded initialization. Draw order is fixed, so a seed pins the weights bit
/// for bit on every platform.
inline TinyTransformerWeights<double> init_tiny_weights(const TinyTransformerConfig& cfg,
                                                        std::uint64_t seed) {
  using W = TinyTransformerWeights<double>;
  Rng rng(seed);
  auto fill = [&rng](Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
    W::Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
    return m;
  };
  auto fill_vec = [&](Eigen::Index n, double lo, double hi) -> W::Vector {
    return fill(n, 1, lo, hi);
  };
  const double a_model = std::sqrt(3.0 / cfg.d_model);
  const double a_hidden = std::sqrt(3.0 / cfg.d_hidden);

  W w;
  w.token_embedding = fill(cfg.vocab_size, cfg.d_model, -1.0, 1.0);
  for (int l = 0; l < cfg.n_layers; ++l) {
    W::Layer layer;
    layer.attn_norm = fill_vec(cfg.d_model, 0.9, 1.1);
    layer.wq = fill(cfg.d_model, cfg.d_model, -a_model, a_model);
    layer.wk = fill(cfg.d_model, cfg.d_model, -a_model, a_model);
    layer.wv = fill(cfg.d_model, cfg.d_model, -a_model, a_model);
    layer.wo = fill(cfg.d_model, cfg.d_model, -a_model, a_model);
    layer.mlp_norm = fill_vec(cfg.d_model, 0.9, 1.1);
    layer.w1 = fill(cfg.d_model, cfg.d_hidden, -a_model, a_model);
    layer.b1 = fill_vec(cfg.d_hidden, -0.1, 0.1);
    layer.w2 = fill(cfg.d_hidden, cfg.d_model, -a_hidden, a_hidden);
    layer.b2 = fill_vec(cfg.d_model, -0.1, 0.1);
    w.layers.push_back(std::move(layer));
  }
  w.final_norm = fill_vec(cfg.d_model, 0.9, 1.1);
  w.unembedding = fill(cfg.vocab_size, cfg.d_model, -1.0, 1.0);
  return w;
}

/// Forward pass, reverse-mode gradient with respect to the input embeddings,
/// and KV-cached incremental decoding.
///
/// Inputs are token-embedding rows (one row per position) without the
/// positional part; positions are added internally, so the gradient returned
/// by backward() is d loss / d (token embedding row) at every position.
template <typename Scalar>
class TinyTransformer {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using Weights = TinyTransformerWeights<Scalar>;

  TinyTransformer(TinyTransformerConfig config, Weights weights)
      : config_(config), weights_(std::move(weights)) {}

  const TinyTransformerConfig& config() const noexcept { return config_; }
  const Weights& weights() const noexcept { return weights_; }

  Matrix positional(Eigen::Index rows, Eigen::Index offset = 0) const {
    const int d = config_.d_model;
    Matrix p(rows, d);
    for (Eigen::Index t = 0; t < rows; ++t) {
      for (int i = 0; i < d; i += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / d);
        const double angle = static_cast<double>(t + offset) * freq;
        p(t, i) = static_cast<Scalar>(std::sin(angle));
        if (i + 1 < d) p(t, i + 1) = static_cast<Scalar>(std::cos(angle));
      }
    }
    return p;
  }

  /// Activations recorded by forward() for backward().
  struct Tape {
    struct Layer {
      Matrix x_in;
      Vector inv_rms1;
      Matrix u1, q, k, v;
      std::vector<Matrix> probs;  // one L x L matrix per head
      Matrix h;
      Vector inv_rms2;
      Matrix u2, z;
    };
    std::vector<Layer> layers;
    Matrix x_final;
    Vector inv_rms_final;
  };

  /// Logits, one row per input position.
  Matrix forward(const Matrix& input_embeddings, Tape* tape = nullptr) const {
    const Eigen::Index len = input_embeddings.rows();
    Matrix x = input_embeddings + positional(len);
    if (tape) tape->layers.clear();
    for (const auto& layer : weights_.layers) {
      typename Tape::Layer rec;
      Vector inv1;
      Matrix u1 = rms_norm(x, layer.attn_norm, inv1);
      Matrix q = u1 * layer.wq;
      Matrix k = u1 * layer.wk;
      Matrix v = u1 * layer.wv;
      Matrix attn(len, config_.d_model);
      const int hd = config_.head_dim();
      const Scalar scale = Scalar(1) / sqrt_(Scalar(hd));
      for (int head = 0; head < config_.n_heads; ++head) {
        Matrix scores = q.middleCols(head * hd, hd) * k.middleCols(head * hd, hd).transpose() * scale;
        Matrix probs = causal_softmax(scores);
        attn.middleCols(head * hd, hd) = probs * v.middleCols(head * hd, hd);
        if (tape) rec.probs.push_back(std::move(probs));
      }
      Matrix h = x + attn * layer.wo;
      Vector inv2;
      Matrix u2 = rms_norm(h, layer.mlp_norm, inv2);
      Matrix z = ((u2 * layer.w1).rowwise() + layer.b1.transpose()).array().tanh().matrix();
      Matrix out = h + ((z * layer.w2).rowwise() + layer.b2.transpose());
      if (tape) {
        rec.x_in = std::move(x);
        rec.inv_rms1 = std::move(inv1);
        rec.u1 = std::move(u1);
        rec.q = std::move(q);
        rec.k = std::move(k);
        rec.v = std::move(v);
        rec.h = std::move(h);
        rec.inv_rms2 = std::move(inv2);
        rec.u2 = std::move(u2);
        rec.z = std::move(z);
        tape->layers.push_back(std::move(rec));
      }
      x = std::move(out);
    }
    Vector invf;
    Matrix uf = rms_norm(x, weights_.final_norm, invf);
    if (tape) {
      tape->x_final = x;
      tape->inv_rms_final = invf;
    }
    return uf * weights_.unembedding.transpose();
  }

  /// d loss / d input_embeddings given d loss / d logits.
  Matrix backward(const Tape& tape, const Matrix& dlogits) const {
    Matrix duf = dlogits * weights_.unembedding;
    Matrix dx = rms_norm_backward(tape.x_final, weights_.final_norm, tape.inv_rms_final, duf);
    const int hd = config_.head_dim();
    const Scalar scale = Scalar(1) / sqrt_(Scalar(hd));
    for (std::size_t li = weights_.layers.size(); li-- > 0;) {
      const auto& layer = weights_.layers[li];
      const auto& rec = tape.layers[li];
      // MLP branch: out = h + tanh(u2 W1 + b1) W2 + b2
      Matrix dz = dx * layer.w2.transpose();
      Matrix da = (dz.array() * (Scalar(1) - rec.z.array().square())).matrix();
      Matrix du2 = da * layer.w1.transpose();
      Matrix dh = dx + rms_norm_backward(rec.h, layer.mlp_norm, rec.inv_rms2, du2);
      // attention branch: h = x + attn Wo
      Matrix dattn = dh * layer.wo.transpose();
      Matrix dq(dattn.rows(), config_.d_model), dk(dattn.rows(), config_.d_model),
          dv(dattn.rows(), config_.d_model);
      for (int head = 0; head < config_.n_heads; ++head) {
        const Matrix& probs = rec.probs[static_cast<std::size_t>(head)];
        const auto d_out = dattn.middleCols(head * hd, hd);
        Matrix dprobs = d_out * rec.v.middleCols(head * hd, hd).transpose();
        dv.middleCols(head * hd, hd) = probs.transpose() * d_out;
        Vector row_dot = (dprobs.array() * probs.array()).rowwise().sum();
        Matrix dscores =
            (probs.array() * (dprobs.colwise() - row_dot).array()).matrix() * scale;
        dq.middleCols(head * hd, hd) = dscores * rec.k.middleCols(head * hd, hd);
        dk.middleCols(head * hd, hd) = dscores.transpose() * rec.q.middleCols(head * hd, hd);
      }
      Matrix du1 = dq * layer.wq.transpose() + dk * layer.wk.transpose() + dv * layer.wv.transpose();
      dx = dh + rms_norm_backward(rec.x_in, layer.attn_norm, rec.inv_rms1, du1);
    }
    return dx;  // positional encodings are constant
  }

  /// Incremental decoder holding per-layer key/value caches.
  class Decoder {
   public:
    explicit Decoder(const TinyTransformer& model) : model_(&model) {
      caches_.resize(model.weights_.layers.size());
    }

    Eigen::Index length() const noexcept { return length_; }

    /// Appends one position; returns that position's logits.
    RowVector push(const RowVector& token_embedding) {
      const auto& cfg = model_->config_;
      const int hd = cfg.head_dim();
      const Scalar scale = Scalar(1) / sqrt_(Scalar(hd));
      RowVector x = token_embedding + model_->positional(1, length_);
      for (std::size_t li = 0; li < caches_.size(); ++li) {
        const auto& layer = model_->weights_.layers[li];
        auto& cache = caches_[li];
        if (cache.keys.rows() <= length_) {
          const Eigen::Index cap = std::max<Eigen::Index>(64, 2 * cache.keys.rows());
          cache.keys.conservativeResize(cap, cfg.d_model);
          cache.values.conservativeResize(cap, cfg.d_model);
        }
        Vector inv;
        RowVector u = model_->rms_norm(x, layer.attn_norm, inv);
        RowVector q = u * layer.wq;
        cache.keys.row(length_) = u * layer.wk;
        cache.values.row(length_) = u * layer.wv;
        RowVector attn(cfg.d_model);
        const Eigen::Index n = length_ + 1;
        for (int head = 0; head < cfg.n_heads; ++head) {
          RowVector s = q.segment(head * hd, hd) *
                        cache.keys.topRows(n).middleCols(head * hd, hd).transpose() * scale;
          const Scalar m = s.maxCoeff();
          RowVector p = (s.array() - m).exp().matrix();
          p /= p.sum();
          attn.segment(head * hd, hd) = p * cache.values.topRows(n).middleCols(head * hd, hd);
        }
        RowVector h = x + attn * layer.wo;
        Vector inv2;
        RowVector u2 = model_->rms_norm(h, layer.mlp_norm, inv2);
        RowVector z = (u2 * layer.w1 + layer.b1.transpose()).array().tanh().matrix();
        x = h + z * layer.w2 + layer.b2.transpose();
      }
      ++length_;
      Vector invf;
      RowVector uf = model_->rms_norm(x, model_->weights_.final_norm, invf);
      return uf * model_->weights_.unembedding.transpose();
    }

   private:
    struct Cache {
      Matrix keys;
      Matrix values;
    };
    const TinyTransformer* model_;
    std::vector<Cache> caches_;
    Eigen::Index length_ = 0;
  };

 private:
  static Scalar sqrt_(Scalar v) {
    using std::sqrt;
    return sqrt(v);
  }

  template <typename Derived>
  Matrix rms_norm(const Eigen::MatrixBase<Derived>& x, const Vector& gain, Vector& inv_rms) const {
    const Scalar n = Scalar(x.cols());
    inv_rms = ((x.array().square().rowwise().sum() / n) + Scalar(config_.norm_eps)).rsqrt().matrix();
    return ((x.array().colwise() * inv_rms.array()).rowwise() * gain.transpose().array()).matrix();
  }

  Matrix rms_norm_backward(const Matrix& x, const Vector& gain, const Vector& inv_rms,
                           const Matrix& dy) const {
    const Scalar n = Scalar(x.cols());
    Matrix gdy = (dy.array().rowwise() * gain.transpose().array()).matrix();
    Vector dot = (gdy.array() * x.array()).rowwise().sum();
    Vector coeff = (inv_rms.array().cube() * dot.array() / n).matrix();
    return (gdy.array().colwise() * inv_rms.array() - x.array().colwise() * coeff.array()).matrix();
  }

  static Matrix causal_softmax(const Matrix& scores) {
    Matrix p = Matrix::Zero(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      const auto visible = scores.row(i).head(i + 1);
      const Scalar m = visible.maxCoeff();
      p.row(i).head(i + 1) = (visible.array() - m).exp().matrix();
      p.row(i).head(i + 1) /= p.row(i).head(i + 1).sum();
    }
    return p;
  }

  TinyTransformerConfig config_;
  Weights weights_;
};

}  // namespace promptforge::models
