#include "traceoracle/model.hpp"

#include <algorithm>
#include <cmath>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "traceoracle/error.hpp"
#include "traceoracle/rng.hpp"

namespace traceoracle {

void ModelConfig::validate() const {
  const auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
  if (vocab_size < kNumReserved) bad("vocab_size must cover the reserved tokens");
  if (seq_len < 1 || embed_dim < 1 || num_layers < 1 || num_heads < 1 || ffn_dim < 1 || mlp_hidden < 1) {
    bad("all dimensions must be >= 1");
  }
  if (embed_dim % num_heads != 0) bad("embed_dim must be divisible by num_heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (num_classes != 2) bad("num_classes is fixed at 2");
}

std::string_view precision_name(Precision p) { return p == Precision::Float32 ? "f32" : "f64"; }

bool is_fan_initialised(std::string_view name) {
  const auto dot = name.rfind('.');
  const std::string_view leaf = dot == std::string_view::npos ? name : name.substr(dot + 1);
  return leaf == "wq" || leaf == "wk" || leaf == "wv" || leaf == "wo" || leaf == "w1" || leaf == "w2" ||
         leaf == "head_w1" || leaf == "head_w2";
}

template <typename Scalar>
ModelParams<Scalar> ModelParams<Scalar>::zeros(const ModelConfig& c) {
  const int d = c.embed_dim;
  ModelParams p;
  p.config = c;
  p.embedding = Matrix<Scalar>::Zero(c.vocab_size, d);
  p.layers.resize(static_cast<std::size_t>(c.num_layers));
  for (auto& L : p.layers) {
    for (Matrix<Scalar>* m : {&L.wq, &L.wk, &L.wv, &L.wo}) *m = Matrix<Scalar>::Zero(d, d);
    for (Matrix<Scalar>* m : {&L.bq, &L.bk, &L.bv, &L.bo, &L.ln1_gamma, &L.ln1_beta, &L.b2, &L.ln2_gamma,
                              &L.ln2_beta}) {
      *m = Matrix<Scalar>::Zero(1, d);
    }
    L.w1 = Matrix<Scalar>::Zero(d, c.ffn_dim);
    L.b1 = Matrix<Scalar>::Zero(1, c.ffn_dim);
    L.w2 = Matrix<Scalar>::Zero(c.ffn_dim, d);
  }
  p.head_w1 = Matrix<Scalar>::Zero(d, c.mlp_hidden);
  p.head_b1 = Matrix<Scalar>::Zero(1, c.mlp_hidden);
  p.head_w2 = Matrix<Scalar>::Zero(c.mlp_hidden, c.num_classes);
  p.head_b2 = Matrix<Scalar>::Zero(1, c.num_classes);
  return p;
}

template <typename Scalar>
std::size_t ModelParams<Scalar>::num_parameters() const {
  std::size_t n = 0;
  for_each_tensor([&](std::string_view, const Matrix<Scalar>& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

template <typename Scalar>
bool ModelParams<Scalar>::all_finite() const {
  bool ok = true;
  for_each_tensor([&](std::string_view, const Matrix<Scalar>& m) { ok = ok && m.allFinite(); });
  return ok;
}

template <typename Scalar>
template <typename To>
ModelParams<To> ModelParams<Scalar>::cast() const {
  ModelParams<To> out = ModelParams<To>::zeros(config);
  std::vector<const Matrix<Scalar>*> src;
  for_each_tensor([&](std::string_view, const Matrix<Scalar>& m) { src.push_back(&m); });
  std::size_t k = 0;
  out.for_each_tensor([&](std::string_view, Matrix<To>& m) { m = src[k++]->template cast<To>(); });
  return out;
}

template <typename Scalar>
ModelParams<Scalar> init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams<Scalar> p = ModelParams<Scalar>::zeros(config);
  Rng rng(mix_seed(seed, fnv1a("init")));
  const double emb_sigma = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
  p.for_each_tensor([&](std::string_view name, Matrix<Scalar>& m) {
    const bool gain = name.ends_with("_gamma");
    if (name == "embedding") {
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(emb_sigma * rng.normal());
    } else if (is_fan_initialised(name)) {
      const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    } else if (gain) {
      m.setOnes();
    }
  });
  return p;
}

namespace {

template <typename Scalar>
struct LayerCache {
  Matrix<Scalar> x_in, q, k, v;
  std::vector<Matrix<Scalar>> attn;  // per head, n x n
  Matrix<Scalar> concat;
  Matrix<Scalar> drop_attn;  // scaled keep-mask, empty when dropout is off
  LayerNormCache<Scalar> ln1;
  Matrix<Scalar> y;
  Matrix<Scalar> hpre, hact;
  Matrix<Scalar> drop_ffn;
  LayerNormCache<Scalar> ln2;
};

template <typename Scalar>
struct ItemCache {
  std::vector<int> ids;
  Matrix<Scalar> drop_embed;
  std::vector<LayerCache<Scalar>> layers;
  RowVector<Scalar> pooled, z1, h1, logits;
  int n = 0;
};

template <typename Scalar>
Matrix<Scalar> dropout_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double rate) {
  Matrix<Scalar> m(rows, cols);
  const auto keep = static_cast<Scalar>(1.0 / (1.0 - rate));
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform() < rate ? Scalar(0) : keep;
  return m;
}

template <typename Scalar>
void check_sequence(const ModelConfig& c, const TokenSequence& seq) {
  if (static_cast<int>(seq.ids.size()) != c.seq_len) {
    throw Error(ErrorCode::DimensionMismatch, "sequence length " + std::to_string(seq.ids.size()) +
                                                  " differs from model length " + std::to_string(c.seq_len));
  }
  for (int id : seq.ids) {
    if (id < 0 || id >= c.vocab_size) {
      throw Error(ErrorCode::DimensionMismatch, "token id " + std::to_string(id) + " outside vocabulary of " +
                                                    std::to_string(c.vocab_size));
    }
  }
}

// Forward pass of one sequence, filling the cache needed by backward().
template <typename Scalar>
void forward_item(const ModelParams<Scalar>& P, const Matrix<Scalar>& pe, const TokenSequence& seq,
                  Rng* dropout_rng, ItemCache<Scalar>& cache) {
  const ModelConfig& c = P.config;
  const int d = c.embed_dim;
  const int heads = c.num_heads;
  const int dh = d / heads;
  const auto scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh)));
  const auto emb_scale = static_cast<Scalar>(std::sqrt(static_cast<double>(d)));
  const bool drop = dropout_rng != nullptr && c.dropout > 0.0;

  std::vector<int> positions;
  cache.ids.clear();
  for (int i = 0; i < c.seq_len; ++i) {
    const int id = seq.ids[static_cast<std::size_t>(i)];
    if (id == kPadId) continue;
    cache.ids.push_back(id);
    positions.push_back(i);
  }
  const int n = static_cast<int>(cache.ids.size());
  cache.n = n;
  cache.layers.assign(static_cast<std::size_t>(c.num_layers), LayerCache<Scalar>{});

  if (n == 0) {
    cache.pooled = RowVector<Scalar>::Zero(d);
  } else {
    Matrix<Scalar> x(n, d);
    for (int i = 0; i < n; ++i) {
      x.row(i) = emb_scale * P.embedding.row(cache.ids[static_cast<std::size_t>(i)]) +
                 pe.row(positions[static_cast<std::size_t>(i)]);
    }
    if (drop) {
      cache.drop_embed = dropout_mask<Scalar>(*dropout_rng, n, d, c.dropout);
      x.array() *= cache.drop_embed.array();
    }

    for (int l = 0; l < c.num_layers; ++l) {
      const auto& L = P.layers[static_cast<std::size_t>(l)];
      auto& lc = cache.layers[static_cast<std::size_t>(l)];
      lc.x_in = x;
      lc.q.noalias() = x * L.wq;
      lc.q.rowwise() += L.bq.row(0);
      lc.k.noalias() = x * L.wk;
      lc.k.rowwise() += L.bk.row(0);
      lc.v.noalias() = x * L.wv;
      lc.v.rowwise() += L.bv.row(0);

      lc.concat.resize(n, d);
      lc.attn.resize(static_cast<std::size_t>(heads));
      for (int h = 0; h < heads; ++h) {
        Matrix<Scalar>& a = lc.attn[static_cast<std::size_t>(h)];
        a.noalias() = lc.q.middleCols(h * dh, dh) * lc.k.middleCols(h * dh, dh).transpose();
        a *= scale;
        softmax_rows_inplace(a);
        lc.concat.middleCols(h * dh, dh).noalias() = a * lc.v.middleCols(h * dh, dh);
      }
      Matrix<Scalar> att = lc.concat * L.wo;
      att.rowwise() += L.bo.row(0);
      if (drop) {
        lc.drop_attn = dropout_mask<Scalar>(*dropout_rng, n, d, c.dropout);
        att.array() *= lc.drop_attn.array();
      }
      lc.y = layer_norm_forward<Scalar>(x + att, L.ln1_gamma, L.ln1_beta, lc.ln1);

      lc.hpre.noalias() = lc.y * L.w1;
      lc.hpre.rowwise() += L.b1.row(0);
      lc.hact = relu(lc.hpre);
      Matrix<Scalar> ffn = lc.hact * L.w2;
      ffn.rowwise() += L.b2.row(0);
      if (drop) {
        lc.drop_ffn = dropout_mask<Scalar>(*dropout_rng, n, d, c.dropout);
        ffn.array() *= lc.drop_ffn.array();
      }
      x = layer_norm_forward<Scalar>(lc.y + ffn, L.ln2_gamma, L.ln2_beta, lc.ln2);
    }
    cache.pooled = x.colwise().mean();
  }

  cache.z1 = cache.pooled * P.head_w1 + P.head_b1;
  cache.h1 = relu(cache.z1);
  cache.logits = cache.h1 * P.head_w2 + P.head_b2;
}

// Accumulates into G the gradient given d(loss)/d(logits) for one item.
template <typename Scalar>
void backward_item(const ModelParams<Scalar>& P, const ItemCache<Scalar>& cache, const RowVector<Scalar>& dlogits,
                   ModelParams<Scalar>& G) {
  const ModelConfig& c = P.config;
  const int d = c.embed_dim;
  const int heads = c.num_heads;
  const int dh = d / heads;
  const auto scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh)));
  const auto emb_scale = static_cast<Scalar>(std::sqrt(static_cast<double>(d)));

  G.head_w2.noalias() += cache.h1.transpose() * dlogits;
  G.head_b2.row(0) += dlogits;
  RowVector<Scalar> dz1 = dlogits * P.head_w2.transpose();
  relu_backward_inplace(dz1, cache.z1);
  G.head_w1.noalias() += cache.pooled.transpose() * dz1;
  G.head_b1.row(0) += dz1;

  const int n = cache.n;
  if (n == 0) return;

  const RowVector<Scalar> dpooled = (dz1 * P.head_w1.transpose()) / static_cast<Scalar>(n);
  Matrix<Scalar> dx = dpooled.replicate(n, 1);

  for (int l = c.num_layers - 1; l >= 0; --l) {
    const auto& L = P.layers[static_cast<std::size_t>(l)];
    auto& GL = G.layers[static_cast<std::size_t>(l)];
    const auto& lc = cache.layers[static_cast<std::size_t>(l)];

    // x_out = LN2(y + dropout(ffn(y)))
    Matrix<Scalar> dres2 = layer_norm_backward<Scalar>(dx, lc.ln2, L.ln2_gamma, GL.ln2_gamma, GL.ln2_beta);
    Matrix<Scalar> dy = dres2;
    Matrix<Scalar> dffn = dres2;
    if (lc.drop_ffn.size() > 0) dffn.array() *= lc.drop_ffn.array();
    GL.w2.noalias() += lc.hact.transpose() * dffn;
    GL.b2.row(0) += dffn.colwise().sum();
    Matrix<Scalar> dh_act = dffn * L.w2.transpose();
    relu_backward_inplace(dh_act, lc.hpre);
    GL.w1.noalias() += lc.y.transpose() * dh_act;
    GL.b1.row(0) += dh_act.colwise().sum();
    dy.noalias() += dh_act * L.w1.transpose();

    // y = LN1(x_in + dropout(attn(x_in)))
    Matrix<Scalar> dres1 = layer_norm_backward<Scalar>(dy, lc.ln1, L.ln1_gamma, GL.ln1_gamma, GL.ln1_beta);
    dx = dres1;
    Matrix<Scalar> datt = dres1;
    if (lc.drop_attn.size() > 0) datt.array() *= lc.drop_attn.array();
    GL.wo.noalias() += lc.concat.transpose() * datt;
    GL.bo.row(0) += datt.colwise().sum();
    const Matrix<Scalar> dconcat = datt * L.wo.transpose();

    Matrix<Scalar> dq(n, d), dk(n, d), dv(n, d);
    for (int h = 0; h < heads; ++h) {
      const Matrix<Scalar>& a = lc.attn[static_cast<std::size_t>(h)];
      const auto dout = dconcat.middleCols(h * dh, dh);
      const Matrix<Scalar> da = dout * lc.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh).noalias() = a.transpose() * dout;
      Matrix<Scalar> ds = softmax_rows_backward(a, da);
      ds *= scale;
      dq.middleCols(h * dh, dh).noalias() = ds * lc.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = ds.transpose() * lc.q.middleCols(h * dh, dh);
    }
    GL.wq.noalias() += lc.x_in.transpose() * dq;
    GL.bq.row(0) += dq.colwise().sum();
    GL.wk.noalias() += lc.x_in.transpose() * dk;
    GL.bk.row(0) += dk.colwise().sum();
    GL.wv.noalias() += lc.x_in.transpose() * dv;
    GL.bv.row(0) += dv.colwise().sum();
    dx.noalias() += dq * L.wq.transpose();
    dx.noalias() += dk * L.wk.transpose();
    dx.noalias() += dv * L.wv.transpose();
  }

  if (cache.drop_embed.size() > 0) dx.array() *= cache.drop_embed.array();
  for (int i = 0; i < n; ++i) {
    G.embedding.row(cache.ids[static_cast<std::size_t>(i)]) += emb_scale * dx.row(i);
  }
}

}  // namespace

template <typename Scalar>
ForwardOutput<Scalar> forward(const ModelParams<Scalar>& params, std::span<const TokenSequence> batch) {
  const ModelConfig& c = params.config;
  for (const TokenSequence& s : batch) check_sequence<Scalar>(c, s);
  const Matrix<Scalar> pe = sinusoidal_table<Scalar>(c.seq_len, c.embed_dim);
  ForwardOutput<Scalar> out;
  out.logits.resize(static_cast<Eigen::Index>(batch.size()), c.num_classes);
  out.pooled.resize(static_cast<Eigen::Index>(batch.size()), c.embed_dim);
  ItemCache<Scalar> cache;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    forward_item(params, pe, batch[b], nullptr, cache);
    out.logits.row(static_cast<Eigen::Index>(b)) = cache.logits;
    out.pooled.row(static_cast<Eigen::Index>(b)) = cache.pooled;
  }
  return out;
}

namespace {

template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad_impl(const ModelParams<Scalar>& params, const Matrix<Scalar>& pe,
                                       std::span<const TokenSequence> batch, std::span<const int> labels,
                                       const std::optional<std::array<double, 2>>& class_weights,
                                       const std::optional<DropoutContext>& dropout) {
  if (labels.size() != batch.size()) {
    throw Error(ErrorCode::LengthMismatch, "labels and batch differ in size");
  }
  const ModelConfig& c = params.config;
  LossAndGrad<Scalar> out;
  out.grad = ModelParams<Scalar>::zeros(c);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  ItemCache<Scalar> cache;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    check_sequence<Scalar>(c, batch[b]);
    const int y = labels[b];
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidConfig, "label must be 0 or 1");

    std::optional<Rng> rng;
    if (dropout) rng.emplace(mix_seed(mix_seed(dropout->seed, dropout->step), b));
    forward_item(params, pe, batch[b], rng ? &*rng : nullptr, cache);

    const double l0 = static_cast<double>(cache.logits(0));
    const double l1 = static_cast<double>(cache.logits(1));
    const double m = std::max(l0, l1);
    const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
    const double w = class_weights ? (*class_weights)[static_cast<std::size_t>(y)] : 1.0;
    out.loss += w * (lse - (y == 0 ? l0 : l1)) * inv_n;

    RowVector<Scalar> dlogits(2);
    dlogits(0) = static_cast<Scalar>(w * inv_n * (std::exp(l0 - lse) - (y == 0 ? 1.0 : 0.0)));
    dlogits(1) = static_cast<Scalar>(w * inv_n * (std::exp(l1 - lse) - (y == 1 ? 1.0 : 0.0)));
    backward_item(params, cache, dlogits, out.grad);
  }
  return out;
}

// Attention maps are larger than glibc's default mmap threshold.
void keep_heap_mapped() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)once;
#endif
}

template <typename Scalar>
void adam_update(ModelParams<Scalar>& params, const ModelParams<Scalar>& grad, ModelParams<Scalar>& m,
                 ModelParams<Scalar>& v, int t, double lr) {
  const auto b1 = static_cast<Scalar>(kAdamBeta1);
  const auto b2 = static_cast<Scalar>(kAdamBeta2);
  const auto bc1 = static_cast<Scalar>(1.0 - std::pow(kAdamBeta1, t));
  const auto bc2 = static_cast<Scalar>(1.0 - std::pow(kAdamBeta2, t));
  const auto step = static_cast<Scalar>(lr);
  const auto eps = static_cast<Scalar>(kAdamEpsilon);

  std::vector<const Matrix<Scalar>*> gs;
  std::vector<Matrix<Scalar>*> ms, vs;
  grad.for_each_tensor([&](std::string_view, const Matrix<Scalar>& x) { gs.push_back(&x); });
  m.for_each_tensor([&](std::string_view, Matrix<Scalar>& x) { ms.push_back(&x); });
  v.for_each_tensor([&](std::string_view, Matrix<Scalar>& x) { vs.push_back(&x); });
  std::size_t k = 0;
  params.for_each_tensor([&](std::string_view, Matrix<Scalar>& p) {
    const auto g = gs[k]->array();
    auto mk = ms[k]->array();
    auto vk = vs[k]->array();
    mk = b1 * mk + (Scalar(1) - b1) * g;
    vk = b2 * vk + (Scalar(1) - b2) * g.square();
    p.array() -= step * (mk / bc1) / ((vk / bc2).sqrt() + eps);
    ++k;
  });
}

}  // namespace

template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const ModelParams<Scalar>& params, std::span<const TokenSequence> batch,
                                  std::span<const int> labels,
                                  const std::optional<std::array<double, 2>>& class_weights,
                                  const std::optional<DropoutContext>& dropout) {
  const Matrix<Scalar> pe = sinusoidal_table<Scalar>(params.config.seq_len, params.config.embed_dim);
  return loss_and_grad_impl(params, pe, batch, labels, class_weights, dropout);
}

template <typename Scalar>
TrainResult<Scalar> train(ModelParams<Scalar> params, std::span<const Example> data, const TrainConfig& cfg,
                          const StepCallback& on_step) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no training examples");
  if (cfg.steps < 1 || cfg.batch_size < 1) throw Error(ErrorCode::InvalidConfig, "steps and batch_size must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be >= 0");
  params.config.validate();
  keep_heap_mapped();

  const Matrix<Scalar> pe = sinusoidal_table<Scalar>(params.config.seq_len, params.config.embed_dim);
  ModelParams<Scalar> m = ModelParams<Scalar>::zeros(params.config);
  ModelParams<Scalar> v = ModelParams<Scalar>::zeros(params.config);
  Rng sampler(mix_seed(cfg.seed, fnv1a("batches")));
  const std::uint64_t dropout_seed = mix_seed(cfg.seed, fnv1a("dropout"));

  TrainResult<Scalar> result;
  result.loss_log.reserve(static_cast<std::size_t>(cfg.steps));
  std::vector<TokenSequence> batch(static_cast<std::size_t>(cfg.batch_size));
  std::vector<int> labels(static_cast<std::size_t>(cfg.batch_size));

  for (int step = 1; step <= cfg.steps; ++step) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Example& ex = data[sampler.below(data.size())];
      batch[static_cast<std::size_t>(b)] = ex.tokens;
      labels[static_cast<std::size_t>(b)] = ex.label == Verdict::Fail ? 1 : 0;
    }
    const auto lg = loss_and_grad_impl<Scalar>(params, pe, batch, labels, cfg.class_weights,
                                               DropoutContext{dropout_seed, static_cast<std::uint64_t>(step)});
    adam_update(params, lg.grad, m, v, step, cfg.learning_rate);
    result.loss_log.push_back(lg.loss);
    if (on_step) on_step(step, lg.loss);
  }
  result.params = std::move(params);
  return result;
}

Prediction prediction_from_logits(double pass_logit, double fail_logit) {
  Prediction p;
  const double m = std::max(pass_logit, fail_logit);
  const double e0 = std::exp(pass_logit - m);
  const double e1 = std::exp(fail_logit - m);
  p.probability = {e0 / (e0 + e1), e1 / (e0 + e1)};
  p.verdict = pass_logit > fail_logit ? Verdict::Pass : Verdict::Fail;
  return p;
}

template <typename Scalar>
std::vector<Prediction> predict_batch(const ModelParams<Scalar>& params, std::span<const TokenSequence> seqs) {
  const auto out = forward(params, seqs);
  std::vector<Prediction> preds;
  preds.reserve(seqs.size());
  for (Eigen::Index i = 0; i < out.logits.rows(); ++i) {
    preds.push_back(prediction_from_logits(static_cast<double>(out.logits(i, 0)),
                                           static_cast<double>(out.logits(i, 1))));
  }
  return preds;
}

template <typename Scalar>
Prediction predict(const ModelParams<Scalar>& params, const TokenSequence& seq) {
  return predict_batch(params, std::span(&seq, 1)).front();
}

#define TRACEORACLE_INSTANTIATE(S)                                                                              \
  template struct ModelParams<S>;                                                                               \
  template ModelParams<S> init_model<S>(const ModelConfig&, std::uint64_t);                                    \
  template ForwardOutput<S> forward<S>(const ModelParams<S>&, std::span<const TokenSequence>);                 \
  template LossAndGrad<S> loss_and_grad<S>(const ModelParams<S>&, std::span<const TokenSequence>,              \
                                           std::span<const int>, const std::optional<std::array<double, 2>>&, \
                                           const std::optional<DropoutContext>&);                              \
  template TrainResult<S> train<S>(ModelParams<S>, std::span<const Example>, const TrainConfig&,               \
                                   const StepCallback&);                                                       \
  template Prediction predict<S>(const ModelParams<S>&, const TokenSequence&);                                 \
  template std::vector<Prediction> predict_batch<S>(const ModelParams<S>&, std::span<const TokenSequence>);

TRACEORACLE_INSTANTIATE(float)
TRACEORACLE_INSTANTIATE(double)

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

}  // namespace traceoracle
