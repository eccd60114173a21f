#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "mcnet/checkpoint.hpp"
#include "mcnet/grad_check.hpp"
#include "mcnet/model.hpp"
#include "test_util.hpp"

using namespace mcnet;
using namespace mcnet::testutil;

namespace {

ModelConfig toy_config(int depth, std::vector<int> enc, int input_size,
                       int in_channels = 1, int n_classes = 1) {
  ModelConfig cfg;
  cfg.depth = depth;
  derive_width_lists(cfg, enc);
  cfg.input_size = input_size;
  cfg.in_channels = in_channels;
  cfg.n_classes = n_classes;
  cfg.seed = 7;
  return cfg;
}

Shape layer_out(const Model<float>& m, const std::string& name) {
  const LayerRecord* rec = m.find_layer(name);
  REQUIRE(rec != nullptr);
  return m.node_shape(rec->output);
}

}  // namespace

TEST_CASE("default config carries the canonical width lists") {
  ModelConfig cfg = default_config(5);
  CHECK(cfg.encoder_widths == std::vector<int>{72, 144, 288, 288, 576});
  CHECK(cfg.decoder_widths == std::vector<int>{576, 288, 288, 144, 72});
  CHECK(cfg.integration_widths ==
        std::vector<int>{72, 144, 288, 288, 576, 576});
  CHECK(cfg.bottleneck() == 8);

  ModelConfig d3 = default_config(3);
  CHECK(d3.encoder_widths == std::vector<int>{288, 288, 576});
  CHECK(d3.decoder_widths == std::vector<int>{576, 288, 288});
  CHECK(d3.integration_widths == std::vector<int>{288, 288, 576, 576});
}

TEST_CASE("config validation rejects bad inputs") {
  ModelConfig cfg = default_config(5);
  cfg.encoder_widths[0] = 70;  // not divisible by 3
  CHECK_THROWS_AS(validate_config(cfg), Error);

  cfg = default_config(5);
  cfg.input_size = 250;  // not divisible by 32
  CHECK_THROWS_AS(validate_config(cfg), Error);

  cfg = default_config(5);
  cfg.encoder_widths.pop_back();
  CHECK_THROWS_AS(validate_config(cfg), Error);

  CHECK_THROWS_AS(default_config(6), Error);
}

TEST_CASE("config JSON round trip") {
  ModelConfig cfg = default_config(4);
  cfg.in_channels = 4;
  cfg.n_classes = 4;
  cfg.bn_relu_order = BnReluOrder::bn_then_relu;
  cfg.use_cross_deconv = false;
  cfg.seed = 1234;
  ModelConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.depth == cfg.depth);
  CHECK(back.encoder_widths == cfg.encoder_widths);
  CHECK(back.in_channels == 4);
  CHECK(back.n_classes == 4);
  CHECK(back.bn_relu_order == BnReluOrder::bn_then_relu);
  CHECK_FALSE(back.use_cross_deconv);
  CHECK(back.seed == 1234);
  CHECK(config_to_json(back) == config_to_json(cfg));
}

TEST_CASE("strategy presets toggle the two modules") {
  ModelConfig cfg = default_config(2);
  apply_strategy(cfg, Strategy::none);
  CHECK_FALSE(cfg.use_integration_module);
  CHECK_FALSE(cfg.use_cross_deconv);
  CHECK(strategy_of(cfg) == Strategy::none);
  apply_strategy(cfg, Strategy::integration_only);
  CHECK(strategy_of(cfg) == Strategy::integration_only);
  apply_strategy(cfg, Strategy::cross_only);
  CHECK(strategy_of(cfg) == Strategy::cross_only);
  apply_strategy(cfg, Strategy::full);
  CHECK(strategy_of(cfg) == Strategy::full);
  CHECK(parse_strategy("1") == Strategy::integration_only);
  CHECK(parse_strategy("2") == Strategy::cross_only);
  CHECK_THROWS_AS(parse_strategy("3"), Error);
}

TEST_CASE("default depth-5 model walks the full resolution ladder") {
  auto model = Model<float>::assemble(default_config(5));

  // Encoder pooled outputs: sides 128/64/32/16/8, channels 72..576.
  CHECK(layer_out(model, "enc1/pool") == Shape{1, 72, 128, 128});
  CHECK(layer_out(model, "enc2/pool") == Shape{1, 144, 64, 64});
  CHECK(layer_out(model, "enc3/pool") == Shape{1, 288, 32, 32});
  CHECK(layer_out(model, "enc4/pool") == Shape{1, 288, 16, 16});
  CHECK(layer_out(model, "enc5/pool") == Shape{1, 576, 8, 8});

  // Stage-1 branches: 24 channels each at full resolution.
  CHECK(layer_out(model, "enc1/k2/conv") == Shape{1, 24, 256, 256});
  CHECK(layer_out(model, "enc1/k3/conv") == Shape{1, 24, 256, 256});
  CHECK(layer_out(model, "enc1/k4/conv") == Shape{1, 24, 256, 256});
  CHECK(layer_out(model, "enc1/concat") == Shape{1, 72, 256, 256});

  // Integration: per-branch pool sizes 16/8/4/2/1 plus 32 on the raw image,
  // all landing at the 8x8 bottleneck, concatenated to 1944 channels.
  CHECK(model.find_layer("integ/s1/pool16") != nullptr);
  CHECK(model.find_layer("integ/s2/pool8") != nullptr);
  CHECK(model.find_layer("integ/s3/pool4") != nullptr);
  CHECK(model.find_layer("integ/s4/pool2") != nullptr);
  CHECK(model.find_layer("integ/s5/pool1") != nullptr);
  CHECK(model.find_layer("integ/raw/pool32") != nullptr);
  CHECK(layer_out(model, "integ/concat") == Shape{1, 1944, 8, 8});
  for (const char* n :
       {"integ/s1/pool16", "integ/s2/pool8", "integ/s3/pool4",
        "integ/s4/pool2", "integ/s5/pool1", "integ/raw/pool32"}) {
    Shape s = layer_out(model, n);
    CHECK(s.h == 8);
    CHECK(s.w == 8);
  }

  // Decoder: stage 1 consumes the 1944-channel bottleneck, upsamples to 16,
  // and the ladder climbs back to 256 with channels 576..72.
  CHECK(layer_out(model, "dec1/upsample") == Shape{1, 1944, 16, 16});
  CHECK(layer_out(model, "dec1/k2/conv") == Shape{1, 192, 16, 16});
  CHECK(layer_out(model, "dec1/mine/conv3x3") == Shape{1, 576, 16, 16});
  CHECK(layer_out(model, "dec2/mine/conv3x3") == Shape{1, 288, 32, 32});
  CHECK(layer_out(model, "dec3/mine/conv3x3") == Shape{1, 288, 64, 64});
  CHECK(layer_out(model, "dec4/mine/conv3x3") == Shape{1, 144, 128, 128});
  CHECK(layer_out(model, "dec5/mine/conv3x3") == Shape{1, 72, 256, 256});
  CHECK(layer_out(model, "head/conv1x1") == Shape{1, 1, 256, 256});
  CHECK(model.output_shape() == Shape{1, 1, 256, 256});

  // Cross links: every decoder branch is fused with the mirror encoder
  // stage under the cyclic kernel mapping.
  CHECK(model.cross_links().size() == 15);
  for (const CrossLink& link : model.cross_links()) {
    CHECK(link.encoder_stage == 6 - link.decoder_stage);
    const int expected_partner =
        link.decoder_kernel == 3 ? 2 : link.decoder_kernel == 4 ? 3 : 4;
    CHECK(link.encoder_kernel == expected_partner);
  }
  MESSAGE("default depth-5 parameter count: ", model.parameter_count());
}

TEST_CASE("resolution ladder holds for every depth 2..5") {
  for (int depth = 2; depth <= 5; ++depth) {
    ModelConfig cfg = default_config(depth);
    cfg.input_size = 64;  // keep the audit cheap
    auto model = Model<float>::assemble(cfg);
    const int bottleneck = cfg.bottleneck();
    for (int s = 1; s <= depth; ++s) {
      Shape pooled = layer_out(model, "enc" + std::to_string(s) + "/pool");
      CHECK(pooled.h == cfg.input_size >> s);
      CHECK(pooled.c == cfg.encoder_widths[size_t(s - 1)]);
    }
    Shape integ = layer_out(model, "integ/concat");
    CHECK(integ.h == bottleneck);
    int sum = 0;
    for (int w : cfg.integration_widths) sum += w;
    CHECK(integ.c == sum);
    for (int j = 1; j <= depth; ++j) {
      Shape out =
          layer_out(model, "dec" + std::to_string(j) + "/mine/conv3x3");
      CHECK(out.h == bottleneck << j);
      CHECK(out.c == cfg.decoder_widths[size_t(j - 1)]);
    }
    CHECK(model.output_shape().h == cfg.input_size);
  }
}

TEST_CASE("depth-2 toy model with width 6 splits into 2-channel branches") {
  auto cfg = toy_config(2, {6, 12}, 32);
  auto model = Model<float>::assemble(cfg);
  CHECK(layer_out(model, "enc1/k2/conv") == Shape{1, 2, 32, 32});
  CHECK(layer_out(model, "enc1/concat") == Shape{1, 6, 32, 32});
  // Bottleneck 8: branch pools 2 and 1, raw-image pool 4.
  CHECK(model.find_layer("integ/s1/pool2") != nullptr);
  CHECK(model.find_layer("integ/s2/pool1") != nullptr);
  CHECK(model.find_layer("integ/raw/pool4") != nullptr);
}

TEST_CASE("ablation variants differ exactly in adds and integration branches") {
  auto base = toy_config(2, {6, 12}, 32);

  auto make = [&](Strategy s) {
    ModelConfig cfg = base;
    apply_strategy(cfg, s);
    return Model<float>::assemble(cfg);
  };
  auto full = make(Strategy::full);
  auto s1 = make(Strategy::integration_only);
  auto s2 = make(Strategy::cross_only);
  auto none = make(Strategy::none);

  CHECK(full.count_layers(LayerKind::add) == 6);
  CHECK(s1.count_layers(LayerKind::add) == 0);
  CHECK(s2.count_layers(LayerKind::add) == 6);
  CHECK(none.count_layers(LayerKind::add) == 0);

  CHECK(full.find_layer("integ/concat") != nullptr);
  CHECK(s1.find_layer("integ/concat") != nullptr);
  CHECK(s2.find_layer("integ/concat") == nullptr);
  CHECK(none.find_layer("integ/concat") == nullptr);

  CHECK(s1.cross_links().empty());
  CHECK(full.cross_links().size() == 6);

  // The cross branch carries its own 1x1 fuse convolutions, the integration
  // module its own 1x1 convolutions, so parameters order strictly.
  CHECK(s1.parameter_count() < full.parameter_count());
  CHECK(s2.parameter_count() < full.parameter_count());
  CHECK(none.parameter_count() < s1.parameter_count());
  CHECK(none.parameter_count() < s2.parameter_count());
}

TEST_CASE("parameter counting closed form") {
  auto p = LayerParams<float>::make("x", {5, 3, 1, 1}, 5);
  CHECK(p.count() == 3 * 5 + 5);
}

TEST_CASE("forward produces sigmoid scores and is deterministic") {
  auto cfg = toy_config(2, {6, 12}, 32);
  auto model = Model<float>::assemble(cfg);
  Rng rng(77);
  auto batch = random_tensor<float>({2, 1, 32, 32}, rng, false, 0.0, 1.0);
  auto out1 = model.forward(batch, RunMode::eval);
  CHECK(out1->shape == Shape{2, 1, 32, 32});
  for (float v : out1->v) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  auto out2 = model.forward(batch, RunMode::eval);
  CHECK(out1->v == out2->v);

  // Rebuilding from the same seed reproduces the same function.
  auto model2 = Model<float>::assemble(cfg);
  auto out3 = model2.forward(batch, RunMode::eval);
  CHECK(out1->v == out3->v);
}

TEST_CASE("multimodal multiclass forward: per-pixel softmax sums to one") {
  auto cfg = toy_config(2, {6, 12}, 32, /*in_channels=*/4, /*n_classes=*/4);
  auto model = Model<float>::assemble(cfg);
  Rng rng(78);
  auto batch = random_tensor<float>({1, 4, 32, 32}, rng, false, 0.0, 1.0);
  auto out = model.forward(batch, RunMode::eval);
  CHECK(out->shape == Shape{1, 4, 32, 32});
  for (int p = 0; p < 32 * 32; ++p) {
    double sum = 0;
    for (int c = 0; c < 4; ++c) sum += out->v[size_t(c * 32 * 32 + p)];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("forward rejects a wrong input shape") {
  auto model = Model<float>::assemble(toy_config(2, {6, 12}, 32));
  auto bad = make_tensor<float>({1, 1, 16, 16});
  CHECK_THROWS_AS(model.forward(bad, RunMode::eval), Error);
  auto bad_c = make_tensor<float>({1, 3, 32, 32});
  CHECK_THROWS_AS(model.forward(bad_c, RunMode::eval), Error);
}

TEST_CASE("cross-fusion rejects mismatched custom widths with the quadruple") {
  ModelConfig cfg;
  cfg.depth = 2;
  cfg.encoder_widths = {6, 12};
  cfg.decoder_widths = {12, 9};  // 9/3 = 3 != enc1 6/3 = 2 at stage 2
  cfg.integration_widths = {6, 12, 12};
  cfg.input_size = 32;
  try {
    Model<float>::assemble(cfg);
    FAIL("expected cross-fusion shape error");
  } catch (const Error& e) {
    CHECK(e.cls() == ErrorClass::shape);
    CHECK(std::string(e.what()).find("cross-fusion") != std::string::npos);
    CHECK(std::string(e.what()).find("dec 2") != std::string::npos);
  }
}

TEST_CASE("eval forward leaves running statistics untouched") {
  auto cfg = toy_config(2, {6, 12}, 32);
  auto model = Model<float>::assemble(cfg);
  Rng rng(79);
  auto batch = random_tensor<float>({2, 1, 32, 32}, rng, false, 0.0, 1.0);
  auto before = model.bn_states();
  model.forward(batch, RunMode::eval);
  for (size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].running_mean == model.bn_states()[i].running_mean);
    CHECK(before[i].running_var == model.bn_states()[i].running_var);
  }
  // Train mode folds batch statistics in.
  Tape<float> tape;
  model.forward(batch, RunMode::train, &tape);
  bool changed = false;
  for (size_t i = 0; i < before.size(); ++i) {
    changed = changed ||
              before[i].running_mean != model.bn_states()[i].running_mean;
  }
  CHECK(changed);
}

TEST_CASE("every parameter of a depth-2 toy model receives gradient") {
  auto cfg = toy_config(2, {6, 12}, 32);
  auto model = Model<double>::assemble(cfg);
  Rng rng(80);
  auto batch = random_tensor<double>({2, 1, 32, 32}, rng, false, 0.0, 1.0);
  auto truth = make_tensor<double>({2, 1, 32, 32});
  for (auto& t : truth->v) t = rng.uniform() < 0.3 ? 1.0 : 0.0;

  zero_grads(model.parameters());
  Tape<double> tape;
  auto out = model.forward(batch, RunMode::train, &tape);
  auto loss = bce_loss(&tape, out, truth);
  tape.backward(loss);

  for (LayerParams<double>* p : model.parameters()) {
    double wmax = 0, bmax = 0;
    for (double g : p->weights->g) wmax = std::max(wmax, std::abs(g));
    for (double g : p->bias->g) bmax = std::max(bmax, std::abs(g));
    CAPTURE(p->name);
    CHECK(wmax > 0.0);
    CHECK(bmax > 0.0);
  }
}

TEST_CASE("model gradients match finite differences (sampled)") {
  auto cfg = toy_config(2, {6, 6}, 16);
  auto model = Model<double>::assemble(cfg);
  Rng rng(81);
  auto batch = random_tensor<double>({1, 1, 16, 16}, rng, false, 0.0, 1.0);
  auto truth = make_tensor<double>({1, 1, 16, 16});
  for (auto& t : truth->v) t = rng.uniform() < 0.5 ? 1.0 : 0.0;

  auto loss_fn = [&]() {
    auto out = model.forward(batch, RunMode::eval);
    return double(bce_loss<double>(nullptr, out, truth)->v[0]);
  };
  auto grad_fn = [&]() {
    zero_grads(model.parameters());
    Tape<double> tape;
    auto out = model.forward(batch, RunMode::train, &tape);
    auto loss = bce_loss(&tape, out, truth);
    tape.backward(loss);
  };
  // Eval differs from train (running stats), so probe the loss through the
  // train-mode path as well for the finite differences.
  auto train_loss_fn = [&]() {
    Tape<double> tape;
    auto out = model.forward(batch, RunMode::train, &tape);
    return double(bce_loss(&tape, out, truth)->v[0]);
  };
  auto report = grad_check<double>(model.parameter_leaves(), train_loss_fn,
                                   grad_fn, 25, 1e-5, 1e-3, 82);
  CHECK(report.pass);
}

TEST_CASE("checkpoint round trip is byte-exact and reproduces outputs") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "mcnet_ckpt_test.mcnt").string();
  const std::string path2 = path + ".resave";

  auto cfg = toy_config(2, {6, 12}, 32);
  auto model = Model<float>::assemble(cfg);
  // Touch the BN running stats so they are not all defaults.
  Rng rng(83);
  auto batch = random_tensor<float>({2, 1, 32, 32}, rng, false, 0.0, 1.0);
  Tape<float> tape;
  model.forward(batch, RunMode::train, &tape);

  save_model(model, path);
  auto loaded = load_model<float>(path);
  save_model(loaded, path2);

  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)),
                 std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)),
                 std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK_FALSE(b1.empty());

  auto out1 = model.forward(batch, RunMode::eval);
  auto out2 = loaded.forward(batch, RunMode::eval);
  CHECK(out1->v == out2->v);

  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("checkpoint loader rejects garbage") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "mcnet_bad.mcnt").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(load_model<float>(path), Error);
  fs::remove(path);
  CHECK_THROWS_AS(load_model<float>("/nonexistent/path.mcnt"), Error);
}
