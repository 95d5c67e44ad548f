#include <gtest/gtest.h>

#include "gradient_oracle.hpp"
#include "traceoracle/rng.hpp"

using namespace traceoracle;

namespace {

std::vector<TokenSequence> batch_for(const ModelConfig& c, std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<TokenSequence> out;
  for (int b = 0; b < n; ++b) {
    TokenSequence s;
    s.true_len = static_cast<int>(rng.between(2, c.seq_len));
    s.ids.assign(static_cast<std::size_t>(c.seq_len), kPadId);
    for (int i = 0; i < s.true_len; ++i) s.ids[static_cast<std::size_t>(i)] = static_cast<int>(rng.between(1, c.vocab_size - 1));
    out.push_back(s);
  }
  return out;
}

}  // namespace

class GradientCheck : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(GradientCheck, EveryTensorAgreesWithFiniteDifferences) {
  const auto [layers, heads] = GetParam();
  ModelConfig c;
  c.vocab_size = 20;
  c.seq_len = 16;
  c.embed_dim = 8;
  c.num_layers = layers;
  c.num_heads = heads;
  c.ffn_dim = 12;
  c.mlp_hidden = 6;
  c.dropout = 0.0;
  auto params = init_model<double>(c, 31);
  // Non-trivial biases and gains so their gradients are exercised.
  Rng rng(3);
  params.for_each_tensor([&](std::string_view name, Matrix<double>& m) {
    if (!is_fan_initialised(name) && name != "embedding") {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += rng.uniform(-0.2, 0.2);
    }
  });
  const auto batch = batch_for(c, 8, 3);
  const std::vector<int> labels = {1, 0, 1};
  const auto checks = oracle::gradient_check(params, batch, labels);
  ASSERT_FALSE(checks.empty());
  for (const auto& t : checks) {
    EXPECT_LT(t.rel_error, 1e-3) << t.name << " analytic " << t.analytic_norm << " numeric " << t.numeric_norm;
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, GradientCheck, ::testing::Values(std::tuple{1, 1}, std::tuple{2, 2}));

TEST(GradientCheck, ClassWeightedGradientScales) {
  ModelConfig c;
  c.vocab_size = 20;
  c.seq_len = 8;
  c.embed_dim = 8;
  c.num_layers = 1;
  c.num_heads = 2;
  c.ffn_dim = 8;
  c.mlp_hidden = 4;
  c.dropout = 0.0;
  const auto p = init_model<double>(c, 2);
  const auto batch = batch_for(c, 1, 1);
  const std::vector<int> labels = {1};
  const auto a = loss_and_grad<double>(p, batch, labels);
  const auto b = loss_and_grad<double>(p, batch, labels, std::array<double, 2>{1.0, 3.0});
  EXPECT_LT((b.grad.embedding - 3 * a.grad.embedding).norm(), 1e-12);
}
