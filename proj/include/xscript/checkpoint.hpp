#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xscript/tensor.hpp"

namespace xscript {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary checkpoint mapping parameter names to shape + row-major float64
// payload. Round-trips bit-exactly on the writing platform.
void save_checkpoint(const std::string& path, const NamedTensors& params);

// Loads every entry; tensors come back as non-trainable leaves in file order.
NamedTensors load_checkpoint(const std::string& path);

// Copies stored values into `params` by name. Name or shape mismatches in
// either direction raise DataError.
void load_checkpoint_into(const std::string& path, NamedTensors& params);

}  // namespace xscript
