#include "xscript/alignment.hpp"

#include <algorithm>

#include "xscript/errors.hpp"
#include "xscript/transport.hpp"

namespace xscript {

namespace {

// Rows of one example's non-PAD positions from flat [B*T, d] states.
std::vector<int> unmasked_rows(const Tensor& mask, int example, int seq_len) {
  std::vector<int> rows;
  const auto& mv = mask.data();
  for (int t = 0; t < seq_len; ++t)
    if (mv[static_cast<std::size_t>(example) * seq_len + t] != 0.0)
      rows.push_back(example * seq_len + t);
  if (rows.empty())
    throw NumericError("alignment: example " + std::to_string(example) +
                       " has no unmasked positions");
  return rows;
}

Tensor batch_emd(const EncoderStates& states_a, const EncoderStates& states_b,
                 int layer) {
  const int layers_a = states_a.num_layers();
  const int layers_b = states_b.num_layers();
  if (layer < 1 || layer > layers_a || layer > layers_b)
    throw ConfigError("alignment layer " + std::to_string(layer) +
                      " outside [1, " +
                      std::to_string(std::min(layers_a, layers_b)) + "]");
  const Tensor& ha = states_a.hidden[layer];
  const Tensor& hb = states_b.hidden[layer];
  if (ha.dim(0) != hb.dim(0))
    throw ShapeError("alignment batch sizes differ: " +
                     std::to_string(ha.dim(0)) + " vs " +
                     std::to_string(hb.dim(0)));
  const int batch = ha.dim(0);
  const int ta = ha.dim(1), tb = hb.dim(1);
  const int da = ha.dim(2), db = hb.dim(2);
  if (da != db)
    throw ShapeError("alignment hidden sizes differ: " + std::to_string(da) +
                     " vs " + std::to_string(db));
  Tensor flat_a = reshape(ha, {batch * ta, da});
  Tensor flat_b = reshape(hb, {batch * tb, db});
  Tensor total = Tensor::scalar(0.0);
  for (int e = 0; e < batch; ++e) {
    Tensor pa = gather_rows(flat_a, unmasked_rows(states_a.mask, e, ta));
    Tensor pb = gather_rows(flat_b, unmasked_rows(states_b.mask, e, tb));
    total = add(total, emd_loss(pa, pb));
  }
  return scale(total, 1.0 / batch);
}

}  // namespace

Tensor alignment_loss(const EncoderStates& states_a,
                      const EncoderStates& states_b, int layer) {
  return batch_emd(states_a, states_b, layer);
}

Tensor regularization_loss(const EncoderStates& states_live,
                           const EncoderStates& states_frozen, int layer) {
  return batch_emd(states_live, states_frozen, layer);
}

}  // namespace xscript
