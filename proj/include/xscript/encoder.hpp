#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xscript/checkpoint.hpp"
#include "xscript/tensor.hpp"

namespace xscript {

struct EncoderConfig {
  int num_layers = 2;
  int num_heads = 4;
  int d_model = 64;
  int d_ff = 128;
  int vocab_size = 0;
  int max_len = 100;
  std::uint64_t seed = 1;

  void validate() const;  // ConfigError
  int head_dim() const { return d_model / num_heads; }
};

struct AttentionHeadParams {
  Tensor wq, wk, wv;  // each [d_model, head_dim]
};

struct EncoderLayerParams {
  std::vector<AttentionHeadParams> heads;
  Tensor wo;  // [d_model, d_model]
  Tensor ln1_gain, ln1_bias;
  Tensor ff_w1, ff_b1;  // [d_model, d_ff], [d_ff]
  Tensor ff_w2, ff_b2;  // [d_ff, d_model], [d_model]
  Tensor ln2_gain, ln2_bias;
};

// One script-specific encoder's parameters. Blocks are post-norm: attention,
// residual, norm, feed-forward, residual, norm. Keeping the running hidden
// state normalized matters here: the cross-script alignment distance reads
// raw hidden states, and unnormalized residual streams at init scale would
// make that distance vanish relative to the task loss.
struct EncoderParams {
  EncoderConfig config;
  Tensor token_embedding;     // [vocab_size, d_model]
  Tensor position_embedding;  // [max_len, d_model]
  std::vector<EncoderLayerParams> layers;

  static EncoderParams init(const EncoderConfig& config);

  // Deep copy with gradients disabled; the regularization reference.
  EncoderParams frozen_copy() const;

  // Stable names (prefix + "token_embedding", prefix + "layer0.head1.wq", ...)
  // for checkpointing and optimizer iteration. Order is deterministic.
  NamedTensors named_params(const std::string& prefix) const;
};

// hidden[0] is embeddings + positions; hidden[L] is the last layer. All are
// [batch, max_len, d_model]. mask is the [batch, max_len] attention mask.
struct EncoderStates {
  std::vector<Tensor> hidden;
  Tensor mask;

  const Tensor& last() const { return hidden.back(); }
  int num_layers() const { return static_cast<int>(hidden.size()) - 1; }
};

// ids and mask are row-major [batch * seq_len]; seq_len <= config.max_len.
// PAD positions are excluded from every attention row via the mask.
EncoderStates encoder_forward(const EncoderParams& params,
                              const std::vector<int>& ids,
                              const std::vector<double>& mask, int batch,
                              int seq_len);

// Key mask [B,T] expanded to score shape [B,T,T] (constant, no gradient).
Tensor expand_key_mask(const std::vector<double>& mask, int batch, int seq_len);

// Multi-head attention with queries from q_src and keys/values from kv_src,
// both flat [B*T, d]. Scores are scaled by 1/sqrt(head_dim); key positions
// with mask 0 are excluded from every row. Returns flat [B*T, d].
Tensor multi_head_attention(const Tensor& q_src, const Tensor& kv_src,
                            const Tensor& key_mask_btt,
                            const std::vector<AttentionHeadParams>& heads,
                            const Tensor& wo, int batch, int seq_len,
                            int head_dim);

}  // namespace xscript
