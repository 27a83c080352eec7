#include "xscript/fusion.hpp"

#include <random>

#include "xscript/errors.hpp"
#include "xscript/text.hpp"

namespace xscript {

namespace {

const std::string kPoolingNames[] = {"mean", "cls"};

constexpr double kInitStddev = 0.02;

}  // namespace

Pooling parse_pooling(const std::string& text) {
  for (int i = 0; i < 2; ++i)
    if (text == kPoolingNames[i]) return static_cast<Pooling>(i);
  throw ConfigError("unknown pooling '" + text + "' (expected mean or cls)");
}

const std::string& pooling_name(Pooling pooling) {
  return kPoolingNames[static_cast<int>(pooling)];
}

void FusionConfig::validate() const {
  if (num_heads < 1 || d_model < 1)
    throw ConfigError("fusion config counts must be >= 1");
  if (d_model % num_heads != 0)
    throw ConfigError("fusion d_model " + std::to_string(d_model) +
                      " is not divisible by num_heads " +
                      std::to_string(num_heads));
}

FusionParams FusionParams::init(const FusionConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  FusionParams p;
  p.config = config;
  const int d = config.d_model;
  p.heads.resize(config.num_heads);
  for (auto& head : p.heads) {
    head.wq = Tensor::randn({d, config.head_dim()}, kInitStddev, rng, true);
    head.wk = Tensor::randn({d, config.head_dim()}, kInitStddev, rng, true);
    head.wv = Tensor::randn({d, config.head_dim()}, kInitStddev, rng, true);
  }
  p.wo = Tensor::randn({d, d}, kInitStddev, rng, true);
  p.cls_w = Tensor::randn({d, kNumClasses}, kInitStddev, rng, true);
  p.cls_b = Tensor::zeros({kNumClasses}, true);
  return p;
}

NamedTensors FusionParams::named_params(const std::string& prefix) const {
  NamedTensors out;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const std::string hp = prefix + "head" + std::to_string(h) + ".";
    out.emplace_back(hp + "wq", heads[h].wq);
    out.emplace_back(hp + "wk", heads[h].wk);
    out.emplace_back(hp + "wv", heads[h].wv);
  }
  out.emplace_back(prefix + "wo", wo);
  out.emplace_back(prefix + "classifier.w", cls_w);
  out.emplace_back(prefix + "classifier.b", cls_b);
  return out;
}

Tensor cross_attend(const Tensor& h_a, const Tensor& h_b,
                    const std::vector<double>& mask_b,
                    const FusionParams& params) {
  if (h_a.rank() != 3 || h_b.rank() != 3)
    throw ShapeError("cross_attend expects [B,T,d] inputs");
  if (h_a.shape() != h_b.shape())
    throw ShapeError("cross_attend input shapes differ: " +
                     detail::shape_str(h_a.shape()) + " vs " +
                     detail::shape_str(h_b.shape()));
  const int batch = h_a.dim(0), seq_len = h_a.dim(1), d = h_a.dim(2);
  if (d != params.config.d_model)
    throw ShapeError("cross_attend hidden size " + std::to_string(d) +
                     " does not match fusion d_model " +
                     std::to_string(params.config.d_model));
  Tensor key_mask = expand_key_mask(mask_b, batch, seq_len);
  Tensor fused = multi_head_attention(
      reshape(h_a, {batch * seq_len, d}), reshape(h_b, {batch * seq_len, d}),
      key_mask, params.heads, params.wo, batch, seq_len,
      params.config.head_dim());
  return reshape(fused, {batch, seq_len, d});
}

Tensor pool_and_classify(const Tensor& fused, const std::vector<double>& mask_a,
                         const FusionParams& params) {
  if (fused.rank() != 3)
    throw ShapeError("pool_and_classify expects [B,T,d]");
  const int batch = fused.dim(0), seq_len = fused.dim(1), d = fused.dim(2);
  Tensor pooled;
  if (params.config.pooling == Pooling::mean) {
    std::vector<std::uint8_t> mask8(mask_a.size());
    for (std::size_t i = 0; i < mask_a.size(); ++i)
      mask8[i] = mask_a[i] != 0.0 ? 1 : 0;
    pooled = masked_mean_rows(fused, mask8);
  } else {
    // Position 0 is CLS by construction of the batching layer.
    std::vector<int> cls_rows(batch);
    for (int b = 0; b < batch; ++b) cls_rows[b] = b * seq_len;
    pooled = gather_rows(reshape(fused, {batch * seq_len, d}), cls_rows);
  }
  Tensor logits = add_bias(matmul(pooled, params.cls_w), params.cls_b);
  return softmax_rows(logits);
}

Tensor ce_loss(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2 || probs.dim(1) != kNumClasses)
    throw ShapeError("ce_loss expects probabilities [B,3]");
  if (static_cast<int>(labels.size()) != probs.dim(0))
    throw ShapeError("ce_loss label count " + std::to_string(labels.size()) +
                     " does not match batch " + std::to_string(probs.dim(0)));
  return scale(mean_all(log_clamped(pick_class(probs, labels))), -1.0);
}

}  // namespace xscript
