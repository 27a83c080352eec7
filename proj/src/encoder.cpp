#include "xscript/encoder.hpp"

#include <cmath>
#include <random>

#include "xscript/errors.hpp"

namespace xscript {

namespace {

constexpr double kInitStddev = 0.02;

}  // namespace

void EncoderConfig::validate() const {
  if (num_layers < 1 || num_heads < 1 || d_model < 1 || d_ff < 1 ||
      vocab_size < 1 || max_len < 1)
    throw ConfigError("encoder config counts must all be >= 1");
  if (d_model % num_heads != 0)
    throw ConfigError("d_model " + std::to_string(d_model) +
                      " is not divisible by num_heads " +
                      std::to_string(num_heads));
}

EncoderParams EncoderParams::init(const EncoderConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  EncoderParams p;
  p.config = config;
  const int d = config.d_model;
  p.token_embedding = Tensor::randn({config.vocab_size, d}, kInitStddev, rng, true);
  p.position_embedding = Tensor::randn({config.max_len, d}, kInitStddev, rng, true);
  p.layers.resize(config.num_layers);
  for (auto& layer : p.layers) {
    layer.heads.resize(config.num_heads);
    for (auto& head : layer.heads) {
      head.wq = Tensor::randn({d, config.head_dim()}, kInitStddev, rng, true);
      head.wk = Tensor::randn({d, config.head_dim()}, kInitStddev, rng, true);
      head.wv = Tensor::randn({d, config.head_dim()}, kInitStddev, rng, true);
    }
    layer.wo = Tensor::randn({d, d}, kInitStddev, rng, true);
    layer.ln1_gain = Tensor::ones({d}, true);
    layer.ln1_bias = Tensor::zeros({d}, true);
    layer.ff_w1 = Tensor::randn({d, config.d_ff}, kInitStddev, rng, true);
    layer.ff_b1 = Tensor::zeros({config.d_ff}, true);
    layer.ff_w2 = Tensor::randn({config.d_ff, d}, kInitStddev, rng, true);
    layer.ff_b2 = Tensor::zeros({d}, true);
    layer.ln2_gain = Tensor::ones({d}, true);
    layer.ln2_bias = Tensor::zeros({d}, true);
  }
  return p;
}

EncoderParams EncoderParams::frozen_copy() const {
  EncoderParams p;
  p.config = config;
  p.token_embedding = token_embedding.detached_copy(false);
  p.position_embedding = position_embedding.detached_copy(false);
  p.layers.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& src = layers[i];
    auto& dst = p.layers[i];
    dst.heads.resize(src.heads.size());
    for (std::size_t h = 0; h < src.heads.size(); ++h) {
      dst.heads[h].wq = src.heads[h].wq.detached_copy(false);
      dst.heads[h].wk = src.heads[h].wk.detached_copy(false);
      dst.heads[h].wv = src.heads[h].wv.detached_copy(false);
    }
    dst.wo = src.wo.detached_copy(false);
    dst.ln1_gain = src.ln1_gain.detached_copy(false);
    dst.ln1_bias = src.ln1_bias.detached_copy(false);
    dst.ff_w1 = src.ff_w1.detached_copy(false);
    dst.ff_b1 = src.ff_b1.detached_copy(false);
    dst.ff_w2 = src.ff_w2.detached_copy(false);
    dst.ff_b2 = src.ff_b2.detached_copy(false);
    dst.ln2_gain = src.ln2_gain.detached_copy(false);
    dst.ln2_bias = src.ln2_bias.detached_copy(false);
  }
  return p;
}

NamedTensors EncoderParams::named_params(const std::string& prefix) const {
  NamedTensors out;
  out.emplace_back(prefix + "token_embedding", token_embedding);
  out.emplace_back(prefix + "position_embedding", position_embedding);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lp = prefix + "layer" + std::to_string(i) + ".";
    const auto& layer = layers[i];
    for (std::size_t h = 0; h < layer.heads.size(); ++h) {
      const std::string hp = lp + "head" + std::to_string(h) + ".";
      out.emplace_back(hp + "wq", layer.heads[h].wq);
      out.emplace_back(hp + "wk", layer.heads[h].wk);
      out.emplace_back(hp + "wv", layer.heads[h].wv);
    }
    out.emplace_back(lp + "wo", layer.wo);
    out.emplace_back(lp + "ln1.gain", layer.ln1_gain);
    out.emplace_back(lp + "ln1.bias", layer.ln1_bias);
    out.emplace_back(lp + "ff.w1", layer.ff_w1);
    out.emplace_back(lp + "ff.b1", layer.ff_b1);
    out.emplace_back(lp + "ff.w2", layer.ff_w2);
    out.emplace_back(lp + "ff.b2", layer.ff_b2);
    out.emplace_back(lp + "ln2.gain", layer.ln2_gain);
    out.emplace_back(lp + "ln2.bias", layer.ln2_bias);
  }
  return out;
}

Tensor expand_key_mask(const std::vector<double>& mask, int batch,
                       int seq_len) {
  if (static_cast<int>(mask.size()) != batch * seq_len)
    throw ShapeError("mask length " + std::to_string(mask.size()) +
                     " does not match batch " + std::to_string(batch) +
                     " x seq_len " + std::to_string(seq_len));
  std::vector<double> expanded(static_cast<std::size_t>(batch) * seq_len *
                               seq_len);
  for (int b = 0; b < batch; ++b)
    for (int i = 0; i < seq_len; ++i)
      for (int j = 0; j < seq_len; ++j)
        expanded[(static_cast<std::size_t>(b) * seq_len + i) * seq_len + j] =
            mask[static_cast<std::size_t>(b) * seq_len + j];
  return Tensor::from_data({batch, seq_len, seq_len}, std::move(expanded));
}

Tensor multi_head_attention(const Tensor& q_src, const Tensor& kv_src,
                            const Tensor& key_mask_btt,
                            const std::vector<AttentionHeadParams>& heads,
                            const Tensor& wo, int batch, int seq_len,
                            int head_dim) {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Tensor> contexts;
  contexts.reserve(heads.size());
  for (const auto& head : heads) {
    Tensor q = reshape(matmul(q_src, head.wq), {batch, seq_len, head_dim});
    Tensor k = reshape(matmul(kv_src, head.wk), {batch, seq_len, head_dim});
    Tensor v = reshape(matmul(kv_src, head.wv), {batch, seq_len, head_dim});
    Tensor scores = scale(bmm(q, transpose_last2(k)), inv_sqrt);
    Tensor attn = softmax_rows(scores, key_mask_btt);
    contexts.push_back(bmm(attn, v));
  }
  Tensor merged = concat_last(contexts);  // [B, T, d]
  const int d = merged.shape().back();
  return matmul(reshape(merged, {batch * seq_len, d}), wo);
}

EncoderStates encoder_forward(const EncoderParams& params,
                              const std::vector<int>& ids,
                              const std::vector<double>& mask, int batch,
                              int seq_len) {
  const EncoderConfig& cfg = params.config;
  if (batch < 1 || seq_len < 1)
    throw ShapeError("encoder batch and seq_len must be >= 1");
  if (seq_len > cfg.max_len)
    throw ConfigError("seq_len " + std::to_string(seq_len) +
                      " exceeds configured max_len " +
                      std::to_string(cfg.max_len));
  if (static_cast<int>(ids.size()) != batch * seq_len)
    throw ShapeError("ids length " + std::to_string(ids.size()) +
                     " does not match batch x seq_len");
  const int d = cfg.d_model;

  std::vector<int> positions(ids.size());
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < seq_len; ++t)
      positions[static_cast<std::size_t>(b) * seq_len + t] = t;

  Tensor h = add(embedding_lookup(params.token_embedding, ids),
                 gather_rows(params.position_embedding, positions));

  EncoderStates states;
  states.mask = Tensor::from_data({batch, seq_len}, mask);
  Tensor key_mask = expand_key_mask(mask, batch, seq_len);
  states.hidden.push_back(reshape(h, {batch, seq_len, d}));

  for (const auto& layer : params.layers) {
    Tensor attn_out =
        multi_head_attention(h, h, key_mask, layer.heads, layer.wo, batch,
                             seq_len, cfg.head_dim());
    h = layer_norm(add(h, attn_out), layer.ln1_gain, layer.ln1_bias);
    Tensor ff = matmul(gelu(add_bias(matmul(h, layer.ff_w1), layer.ff_b1)),
                       layer.ff_w2);
    h = layer_norm(add(h, add_bias(ff, layer.ff_b2)), layer.ln2_gain,
                   layer.ln2_bias);
    states.hidden.push_back(reshape(h, {batch, seq_len, d}));
  }
  return states;
}

}  // namespace xscript
