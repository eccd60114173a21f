#pragma once

#include <string>

#include "mcnet/model.hpp"

namespace mcnet {

// Little-endian container: "MCNT" magic, format version, the JSON-serialized
// ModelConfig, then each parameter tensor and BN running statistic as
// (name length, name, shape, float32 payload). Round-trips byte-exactly for
// float models.
template <typename T>
void save_model(const Model<T>& model, const std::string& path);

template <typename T>
Model<T> load_model(const std::string& path);

}  // namespace mcnet
