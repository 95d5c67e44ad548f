// Transformer-encoder trace classifier with hand-written backpropagation.
//
// Pipeline per sequence: scaled token embedding plus sinusoidal positions, a stack of
// post-norm encoder layers (multi-head self-attention, residual, layer norm,
// position-wise ReLU feed-forward, residual, layer norm), a masked mean over non-PAD
// positions, then a two-layer ReLU head producing two logits (pass, fail).
//
// PAD positions are dropped before the encoder runs. Because attention never looks
// at PAD keys and pooling never reads PAD rows, this is exact, and the cost of a
// sequence scales with its unpadded length.
//
// Everything is templated on the scalar type; float and double are instantiated.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "traceoracle/ops.hpp"
#include "traceoracle/tokenizer.hpp"
#include "traceoracle/trace_model.hpp"

namespace traceoracle {

struct ModelConfig {
  int vocab_size = 0;
  int seq_len = 2048;
  int embed_dim = 128;
  int num_layers = 2;
  int num_heads = 2;
  int ffn_dim = 512;
  int mlp_hidden = 64;
  double dropout = 0.1;
  int num_classes = 2;

  /// Throws Error(InvalidConfig).
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Precision : std::uint8_t { Float32 = 0, Float64 = 1 };

std::string_view precision_name(Precision p);

struct TrainConfig {
  int steps = 2500;
  int batch_size = 8;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  /// Loss weights for (pass, fail).
  std::optional<std::array<double, 2>> class_weights;
  Precision precision = Precision::Float32;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

template <typename Scalar>
struct EncoderLayerParams {
  Matrix<Scalar> wq, wk, wv, wo;  // d x d
  Matrix<Scalar> bq, bk, bv, bo;  // 1 x d
  Matrix<Scalar> ln1_gamma, ln1_beta;
  Matrix<Scalar> w1;  // d x ffn
  Matrix<Scalar> b1;  // 1 x ffn
  Matrix<Scalar> w2;  // ffn x d
  Matrix<Scalar> b2;  // 1 x d
  Matrix<Scalar> ln2_gamma, ln2_beta;
};

template <typename Scalar>
struct ModelParams {
  ModelConfig config;
  Matrix<Scalar> embedding;  // vocab x d
  std::vector<EncoderLayerParams<Scalar>> layers;
  Matrix<Scalar> head_w1;  // d x mlp_hidden
  Matrix<Scalar> head_b1;
  Matrix<Scalar> head_w2;  // mlp_hidden x 2
  Matrix<Scalar> head_b2;

  /// Every tensor with the right shape, filled with zeros.
  static ModelParams zeros(const ModelConfig& config);

  /// Visits every tensor in a fixed order as f(name, matrix).
  template <typename F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  std::size_t num_parameters() const;
  bool all_finite() const;

  template <typename To>
  ModelParams<To> cast() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    if (!(a.config == b.config)) return false;
    bool equal = true;
    std::vector<const Matrix<Scalar>*> rhs;
    b.for_each_tensor([&](std::string_view, const Matrix<Scalar>& m) { rhs.push_back(&m); });
    std::size_t k = 0;
    a.for_each_tensor([&](std::string_view, const Matrix<Scalar>& m) {
      const Matrix<Scalar>& o = *rhs[k++];
      equal = equal && m.rows() == o.rows() && m.cols() == o.cols() && m == o;
    });
    return equal;
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f("embedding", self.embedding);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& L = self.layers[l];
      const std::string p = "layer" + std::to_string(l) + ".";
      f(p + "wq", L.wq);
      f(p + "bq", L.bq);
      f(p + "wk", L.wk);
      f(p + "bk", L.bk);
      f(p + "wv", L.wv);
      f(p + "bv", L.bv);
      f(p + "wo", L.wo);
      f(p + "bo", L.bo);
      f(p + "ln1_gamma", L.ln1_gamma);
      f(p + "ln1_beta", L.ln1_beta);
      f(p + "w1", L.w1);
      f(p + "b1", L.b1);
      f(p + "w2", L.w2);
      f(p + "b2", L.b2);
      f(p + "ln2_gamma", L.ln2_gamma);
      f(p + "ln2_beta", L.ln2_beta);
    }
    f("head_w1", self.head_w1);
    f("head_b1", self.head_b1);
    f("head_w2", self.head_w2);
    f("head_b2", self.head_b2);
  }
};

/// True for the weight matrices that get fan-scaled uniform initialisation (not
/// biases, layer-norm parameters or the embedding table).
bool is_fan_initialised(std::string_view tensor_name);

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), N(0, 1/d) embeddings,
/// zero biases, unit layer-norm gains. Drawn in double, then rounded to Scalar, so
/// float and double models from one seed agree up to rounding.
template <typename Scalar>
ModelParams<Scalar> init_model(const ModelConfig& config, std::uint64_t seed);

template <typename Scalar>
struct ForwardOutput {
  Matrix<Scalar> logits;  // batch x 2
  Matrix<Scalar> pooled;  // batch x d
};

/// Evaluation-mode forward pass (no dropout). Throws Error(DimensionMismatch) when a
/// sequence length differs from config.seq_len or an id is outside the vocabulary.
template <typename Scalar>
ForwardOutput<Scalar> forward(const ModelParams<Scalar>& params, std::span<const TokenSequence> batch);

/// Dropout masks are drawn from (seed, step, item); leaving it unset disables dropout.
struct DropoutContext {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

template <typename Scalar>
struct LossAndGrad {
  double loss = 0.0;
  ModelParams<Scalar> grad;
};

/// Mean cross-entropy over the batch, each item scaled by its class weight when given.
/// Labels are 0 = pass, 1 = fail.
template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const ModelParams<Scalar>& params, std::span<const TokenSequence> batch,
                                  std::span<const int> labels,
                                  const std::optional<std::array<double, 2>>& class_weights = std::nullopt,
                                  const std::optional<DropoutContext>& dropout = std::nullopt);

struct Example {
  TokenSequence tokens;
  Verdict label = Verdict::Pass;
};

template <typename Scalar>
struct TrainResult {
  ModelParams<Scalar> params;
  std::vector<double> loss_log;  // one entry per step
};

using StepCallback = std::function<void(int step, double loss)>;

/// Adam over batches sampled uniformly with replacement. Throws Error(EmptyDataset).
template <typename Scalar>
TrainResult<Scalar> train(ModelParams<Scalar> params, std::span<const Example> data, const TrainConfig& cfg,
                          const StepCallback& on_step = {});

struct Prediction {
  Verdict verdict = Verdict::Fail;
  std::array<double, 2> probability{0.5, 0.5};  // (pass, fail)
};

/// Argmax of the softmax; an exact tie goes to Fail.
Prediction prediction_from_logits(double pass_logit, double fail_logit);

template <typename Scalar>
Prediction predict(const ModelParams<Scalar>& params, const TokenSequence& seq);

template <typename Scalar>
std::vector<Prediction> predict_batch(const ModelParams<Scalar>& params, std::span<const TokenSequence> seqs);

}  // namespace traceoracle
