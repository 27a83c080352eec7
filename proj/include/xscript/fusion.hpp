#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xscript/checkpoint.hpp"
#include "xscript/encoder.hpp"
#include "xscript/tensor.hpp"

namespace xscript {

enum class Pooling { mean, cls };

Pooling parse_pooling(const std::string& text);  // ConfigError
const std::string& pooling_name(Pooling pooling);

struct FusionConfig {
  int num_heads = 4;
  int d_model = 64;
  std::uint64_t seed = 99;
  Pooling pooling = Pooling::mean;

  void validate() const;  // ConfigError
  int head_dim() const { return d_model / num_heads; }
};

// Cross-attention fusion: queries from script A's last layer, keys and
// values from script B's, then pooling and a 3-class linear classifier.
struct FusionParams {
  FusionConfig config;
  std::vector<AttentionHeadParams> heads;  // [d_model, head_dim] each
  Tensor wo;                               // [d_model, d_model]
  Tensor cls_w;                            // [d_model, 3]
  Tensor cls_b;                            // [3]

  static FusionParams init(const FusionConfig& config);
  NamedTensors named_params(const std::string& prefix) const;
};

// h_a, h_b: [B,T,d] last-layer states. mask_b masks B's PAD keys.
Tensor cross_attend(const Tensor& h_a, const Tensor& h_b,
                    const std::vector<double>& mask_b,
                    const FusionParams& params);

// Pools fused vectors over mask_a-true positions (mean) or takes position 0
// (cls), then classifies. Returns probabilities [B,3], rows summing to 1.
Tensor pool_and_classify(const Tensor& fused, const std::vector<double>& mask_a,
                         const FusionParams& params);

// Mean over the batch of -log p(true class), log clamped at 1e-12.
Tensor ce_loss(const Tensor& probs, const std::vector<int>& labels);

}  // namespace xscript
