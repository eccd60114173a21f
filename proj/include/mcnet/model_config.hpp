#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcnet {

enum class BnReluOrder { relu_then_bn, bn_then_relu };

// Which encoder-kernel feature map is added onto which decoder kernel.
// cyclic: enc-k2 -> dec-k3, enc-k3 -> dec-k4, enc-k4 -> dec-k2.
enum class CrossMapping { cyclic, identity, anticyclic };

// Ablation presets over the two structural strategies.
enum class Strategy { none, integration_only, cross_only, full };

struct ModelConfig {
  int depth = 5;
  std::vector<int> encoder_widths;      // length depth, each divisible by 3
  std::vector<int> integration_widths;  // length depth + 1 (raw-image branch)
  std::vector<int> decoder_widths;      // length depth
  int input_size = 256;                 // divisible by 2^depth
  int in_channels = 1;
  int n_classes = 1;
  BnReluOrder bn_relu_order = BnReluOrder::relu_then_bn;
  bool use_integration_module = true;
  bool use_cross_deconv = true;
  bool bn_affine = false;
  CrossMapping cross_mapping = CrossMapping::cyclic;
  uint64_t seed = 0;

  int bottleneck() const { return input_size >> depth; }
};

// Canonical filter widths [72, 144, 288, 288, 576], truncated from the front
// for reduced depths; the decoder list is the reverse and the integration
// list appends one raw-image entry equal to the deepest width.
ModelConfig default_config(int depth = 5);

// Fills decoder/integration lists from the encoder list.
void derive_width_lists(ModelConfig& cfg, const std::vector<int>& encoder);

void validate_config(const ModelConfig& cfg);

Strategy strategy_of(const ModelConfig& cfg);
void apply_strategy(ModelConfig& cfg, Strategy s);
const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& text);

}  // namespace mcnet
