#include "mcnet/model_config.hpp"

#include <json.hpp>

#include "mcnet/error.hpp"

namespace mcnet {

namespace {

const std::vector<int> kCanonicalWidths = {72, 144, 288, 288, 576};

std::string order_name(BnReluOrder o) {
  return o == BnReluOrder::relu_then_bn ? "relu_then_bn" : "bn_then_relu";
}

BnReluOrder parse_order(const std::string& s) {
  if (s == "relu_then_bn") return BnReluOrder::relu_then_bn;
  if (s == "bn_then_relu") return BnReluOrder::bn_then_relu;
  fail(ErrorClass::config, "unknown bn_relu_order '" + s + "'");
}

std::string mapping_name(CrossMapping m) {
  switch (m) {
    case CrossMapping::cyclic:
      return "cyclic";
    case CrossMapping::identity:
      return "identity";
    case CrossMapping::anticyclic:
      return "anticyclic";
  }
  return "cyclic";
}

CrossMapping parse_mapping(const std::string& s) {
  if (s == "cyclic") return CrossMapping::cyclic;
  if (s == "identity") return CrossMapping::identity;
  if (s == "anticyclic") return CrossMapping::anticyclic;
  fail(ErrorClass::config, "unknown cross_mapping '" + s + "'");
}

}  // namespace

void derive_width_lists(ModelConfig& cfg, const std::vector<int>& encoder) {
  cfg.encoder_widths = encoder;
  cfg.decoder_widths.assign(encoder.rbegin(), encoder.rend());
  cfg.integration_widths = encoder;
  cfg.integration_widths.push_back(encoder.back());
}

ModelConfig default_config(int depth) {
  if (depth < 2 || depth > 5) {
    fail(ErrorClass::config,
         "depth must be in 2..5, got " + std::to_string(depth));
  }
  ModelConfig cfg;
  cfg.depth = depth;
  std::vector<int> enc(kCanonicalWidths.end() - depth, kCanonicalWidths.end());
  derive_width_lists(cfg, enc);
  return cfg;
}

void validate_config(const ModelConfig& cfg) {
  if (cfg.depth < 2 || cfg.depth > 5) {
    fail(ErrorClass::config,
         "depth must be in 2..5, got " + std::to_string(cfg.depth));
  }
  if (int(cfg.encoder_widths.size()) != cfg.depth) {
    fail(ErrorClass::config,
         "encoder_widths must have " + std::to_string(cfg.depth) +
             " entries, got " + std::to_string(cfg.encoder_widths.size()));
  }
  if (int(cfg.decoder_widths.size()) != cfg.depth) {
    fail(ErrorClass::config,
         "decoder_widths must have " + std::to_string(cfg.depth) +
             " entries, got " + std::to_string(cfg.decoder_widths.size()));
  }
  if (int(cfg.integration_widths.size()) != cfg.depth + 1) {
    fail(ErrorClass::config,
         "integration_widths must have " + std::to_string(cfg.depth + 1) +
             " entries, got " + std::to_string(cfg.integration_widths.size()));
  }
  auto check_widths = [](const std::vector<int>& ws, const char* which) {
    for (int w : ws) {
      if (w <= 0 || w % 3 != 0) {
        fail(ErrorClass::config,
             std::string(which) + " width " + std::to_string(w) +
                 " must be positive and divisible by 3");
      }
    }
  };
  check_widths(cfg.encoder_widths, "encoder");
  check_widths(cfg.decoder_widths, "decoder");
  check_widths(cfg.integration_widths, "integration");
  if (cfg.input_size < (1 << cfg.depth) ||
      cfg.input_size % (1 << cfg.depth) != 0) {
    fail(ErrorClass::config,
         "input_size " + std::to_string(cfg.input_size) +
             " must be divisible by 2^depth = " +
             std::to_string(1 << cfg.depth));
  }
  if (cfg.in_channels < 1) {
    fail(ErrorClass::config, "in_channels must be >= 1");
  }
  if (cfg.n_classes < 1) {
    fail(ErrorClass::config, "n_classes must be >= 1");
  }
}

Strategy strategy_of(const ModelConfig& cfg) {
  if (cfg.use_integration_module && cfg.use_cross_deconv) {
    return Strategy::full;
  }
  if (cfg.use_integration_module) return Strategy::integration_only;
  if (cfg.use_cross_deconv) return Strategy::cross_only;
  return Strategy::none;
}

void apply_strategy(ModelConfig& cfg, Strategy s) {
  cfg.use_integration_module =
      s == Strategy::full || s == Strategy::integration_only;
  cfg.use_cross_deconv = s == Strategy::full || s == Strategy::cross_only;
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::none:
      return "none";
    case Strategy::integration_only:
      return "1";
    case Strategy::cross_only:
      return "2";
    case Strategy::full:
      return "full";
  }
  return "full";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "none") return Strategy::none;
  if (name == "1" || name == "strategy1") return Strategy::integration_only;
  if (name == "2" || name == "strategy2") return Strategy::cross_only;
  if (name == "full") return Strategy::full;
  fail(ErrorClass::config, "unknown strategy '" + name +
                               "' (expected none, 1, 2 or full)");
}

std::string config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["depth"] = cfg.depth;
  j["encoder_widths"] = cfg.encoder_widths;
  j["integration_widths"] = cfg.integration_widths;
  j["decoder_widths"] = cfg.decoder_widths;
  j["input_size"] = cfg.input_size;
  j["in_channels"] = cfg.in_channels;
  j["n_classes"] = cfg.n_classes;
  j["bn_relu_order"] = order_name(cfg.bn_relu_order);
  j["use_integration_module"] = cfg.use_integration_module;
  j["use_cross_deconv"] = cfg.use_cross_deconv;
  j["bn_affine"] = cfg.bn_affine;
  j["cross_mapping"] = mapping_name(cfg.cross_mapping);
  j["seed"] = cfg.seed;
  return j.dump(2);
}

ModelConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorClass::config, std::string("bad config JSON: ") + e.what());
  }
  ModelConfig cfg;
  try {
    if (j.contains("depth")) cfg.depth = j["depth"].get<int>();
    if (j.contains("encoder_widths")) {
      cfg.encoder_widths = j["encoder_widths"].get<std::vector<int>>();
    }
    if (j.contains("integration_widths")) {
      cfg.integration_widths =
          j["integration_widths"].get<std::vector<int>>();
    }
    if (j.contains("decoder_widths")) {
      cfg.decoder_widths = j["decoder_widths"].get<std::vector<int>>();
    }
    if (j.contains("input_size")) cfg.input_size = j["input_size"].get<int>();
    if (j.contains("in_channels")) {
      cfg.in_channels = j["in_channels"].get<int>();
    }
    if (j.contains("n_classes")) cfg.n_classes = j["n_classes"].get<int>();
    if (j.contains("bn_relu_order")) {
      cfg.bn_relu_order = parse_order(j["bn_relu_order"].get<std::string>());
    }
    if (j.contains("use_integration_module")) {
      cfg.use_integration_module = j["use_integration_module"].get<bool>();
    }
    if (j.contains("use_cross_deconv")) {
      cfg.use_cross_deconv = j["use_cross_deconv"].get<bool>();
    }
    if (j.contains("bn_affine")) cfg.bn_affine = j["bn_affine"].get<bool>();
    if (j.contains("cross_mapping")) {
      cfg.cross_mapping = parse_mapping(j["cross_mapping"].get<std::string>());
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorClass::config, std::string("bad config field: ") + e.what());
  }
  // Missing lists default to the canonical widths for the chosen depth.
  if (cfg.encoder_widths.empty()) {
    ModelConfig d = default_config(cfg.depth);
    cfg.encoder_widths = d.encoder_widths;
  }
  if (cfg.decoder_widths.empty()) {
    cfg.decoder_widths.assign(cfg.encoder_widths.rbegin(),
                              cfg.encoder_widths.rend());
  }
  if (cfg.integration_widths.empty()) {
    cfg.integration_widths = cfg.encoder_widths;
    cfg.integration_widths.push_back(cfg.encoder_widths.back());
  }
  validate_config(cfg);
  return cfg;
}

}  // namespace mcnet
