#pragma once

#include "xscript/encoder.hpp"
#include "xscript/tensor.hpp"

namespace xscript {

// Mean over the batch of per-example earth mover's distance between the two
// encoders' layer-i hidden vectors (1-based i; non-PAD positions only, CLS
// included, uniform point weights). Differentiable through both sides.
Tensor alignment_loss(const EncoderStates& states_a,
                      const EncoderStates& states_b, int layer);

// Identical machinery between the live encoder and its frozen snapshot run
// on the same input. Gradients flow only into the live side because the
// snapshot's parameters do not require gradients.
Tensor regularization_loss(const EncoderStates& states_live,
                           const EncoderStates& states_frozen, int layer);

}  // namespace xscript
