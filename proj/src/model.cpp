#include "mcnet/model.hpp"

#include <array>
#include <iomanip>
#include <sstream>

#include "mcnet/error.hpp"
#include "mcnet/rng.hpp"

namespace mcnet {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv:
      return "conv";
    case LayerKind::relu:
      return "relu";
    case LayerKind::batch_norm:
      return "batch_norm";
    case LayerKind::affine:
      return "affine";
    case LayerKind::concat:
      return "concat";
    case LayerKind::max_pool:
      return "max_pool";
    case LayerKind::upsample:
      return "upsample";
    case LayerKind::add:
      return "add";
    case LayerKind::sigmoid:
      return "sigmoid";
    case LayerKind::softmax:
      return "softmax";
  }
  return "?";
}

std::string ShapeAuditReport::table() const {
  std::ostringstream out;
  size_t name_w = 4;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  out << std::left << std::setw(int(name_w) + 2) << "layer" << std::setw(12)
      << "kind" << std::setw(26) << "in" << std::setw(18) << "out"
      << "params\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(int(name_w) + 2) << r.name << std::setw(12)
        << r.kind << std::setw(26) << r.in_shape << std::setw(18)
        << r.out_shape.str() << r.param_count << "\n";
  }
  out << "total parameters: " << total_params << "\n";
  return out.str();
}

namespace {

// Encoder kernel whose branch is added onto the decoder branch of kernel k.
int cross_partner(CrossMapping m, int dec_kernel) {
  switch (m) {
    case CrossMapping::cyclic:
      // enc2 -> dec3, enc3 -> dec4, enc4 -> dec2
      return dec_kernel == 3 ? 2 : dec_kernel == 4 ? 3 : 4;
    case CrossMapping::identity:
      return dec_kernel;
    case CrossMapping::anticyclic:
      // enc2 -> dec4, enc3 -> dec2, enc4 -> dec3
      return dec_kernel == 4 ? 2 : dec_kernel == 2 ? 3 : 4;
  }
  return dec_kernel;
}

}  // namespace

// Incrementally wires layer records while tracking static node shapes.
template <typename T>
class ModelBuilder {
 public:
  explicit ModelBuilder(const ModelConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  int new_node(Shape s) {
    shapes_.push_back(s);
    return int(shapes_.size()) - 1;
  }

  Shape shape(int node) const { return shapes_[size_t(node)]; }

  int conv(const std::string& name, int in, int out_channels, int k) {
    Shape is = shape(in);
    auto p = LayerParams<T>::make(name, {out_channels, is.c, k, k},
                                  out_channels);
    he_init(p, rng_);
    params_.push_back(std::move(p));
    int out = new_node({is.n, out_channels, is.h, is.w});
    layers_.push_back({LayerKind::conv, name, {in}, out,
                       int(params_.size()) - 1, -1, 0, 0, k});
    return out;
  }

  int relu(const std::string& name, int in) {
    int out = new_node(shape(in));
    layers_.push_back({LayerKind::relu, name, {in}, out});
    return out;
  }

  int batch_norm(const std::string& name, int in) {
    Shape is = shape(in);
    BnState<T> st;
    st.running_mean.assign(size_t(is.c), T(0));
    st.running_var.assign(size_t(is.c), T(1));
    bn_states_.push_back(std::move(st));
    bn_names_.push_back(name);
    int out = new_node(is);
    layers_.push_back({LayerKind::batch_norm, name, {in}, out, -1,
                       int(bn_states_.size()) - 1});
    if (cfg_.bn_affine) {
      auto p = LayerParams<T>::make(name + "/affine", {1, is.c, 1, 1}, is.c);
      for (auto& g : p.weights->v) g = T(1);
      params_.push_back(std::move(p));
      int aout = new_node(is);
      layers_.push_back({LayerKind::affine, name + "/affine", {out}, aout,
                         int(params_.size()) - 1});
      return aout;
    }
    return out;
  }

  // ReLU and BN in the configured order after a convolution.
  int act_norm(const std::string& prefix, int in) {
    if (cfg_.bn_relu_order == BnReluOrder::relu_then_bn) {
      return batch_norm(prefix + "/bn", relu(prefix + "/relu", in));
    }
    return relu(prefix + "/relu", batch_norm(prefix + "/bn", in));
  }

  int concat(const std::string& name, const std::vector<int>& ins) {
    Shape first = shape(ins[0]);
    int total_c = 0;
    for (int i : ins) total_c += shape(i).c;
    int out = new_node({first.n, total_c, first.h, first.w});
    layers_.push_back({LayerKind::concat, name, ins, out});
    return out;
  }

  int max_pool(const std::string& name, int in, int pool) {
    Shape is = shape(in);
    if (pool < 1 || is.h % pool != 0 || is.w % pool != 0) {
      fail(ErrorClass::config, "layer '" + name + "': pool " +
                                   std::to_string(pool) +
                                   " does not divide " + is.str());
    }
    int out = new_node({is.n, is.c, is.h / pool, is.w / pool});
    LayerRecord rec{LayerKind::max_pool, name, {in}, out};
    rec.pool = pool;
    layers_.push_back(rec);
    return out;
  }

  int upsample(const std::string& name, int in, int factor) {
    Shape is = shape(in);
    int out = new_node({is.n, is.c, is.h * factor, is.w * factor});
    LayerRecord rec{LayerKind::upsample, name, {in}, out};
    rec.factor = factor;
    layers_.push_back(rec);
    return out;
  }

  int add(const std::string& name, int a, int b) {
    int out = new_node(shape(a));
    layers_.push_back({LayerKind::add, name, {a, b}, out});
    return out;
  }

  int sigmoid(const std::string& name, int in) {
    int out = new_node(shape(in));
    layers_.push_back({LayerKind::sigmoid, name, {in}, out});
    return out;
  }

  int softmax(const std::string& name, int in) {
    int out = new_node(shape(in));
    layers_.push_back({LayerKind::softmax, name, {in}, out});
    return out;
  }

  struct EncoderStage {
    std::array<int, 3> branches;  // post act/norm maps for kernels 2, 3, 4
    int concat_out = -1;
    int pooled = -1;
  };

  EncoderStage encoder_stage(int stage, int in) {
    const int width = cfg_.encoder_widths[size_t(stage - 1)];
    const std::string prefix = "enc" + std::to_string(stage);
    EncoderStage out;
    std::vector<int> branch_nodes;
    for (int k : {2, 3, 4}) {
      const std::string bp = prefix + "/k" + std::to_string(k);
      int node = conv(bp + "/conv", in, width / 3, k);
      node = act_norm(bp, node);
      out.branches[size_t(k - 2)] = node;
      branch_nodes.push_back(node);
    }
    out.concat_out = concat(prefix + "/concat", branch_nodes);
    out.pooled = max_pool(prefix + "/pool", out.concat_out, 2);
    return out;
  }

  int integration_module(const std::vector<int>& pooled, int input_node) {
    const int bottleneck = cfg_.bottleneck();
    std::vector<int> branches;
    for (int i = 0; i < cfg_.depth; ++i) {
      const std::string prefix = "integ/s" + std::to_string(i + 1);
      const int side = cfg_.input_size >> (i + 1);
      const int pool = side / bottleneck;
      int node = conv(prefix + "/conv1x1", pooled[size_t(i)],
                      cfg_.integration_widths[size_t(i)], 1);
      node = relu(prefix + "/relu", node);
      node = max_pool(prefix + "/pool" + std::to_string(pool), node, pool);
      branches.push_back(node);
    }
    const int raw_pool = cfg_.input_size / bottleneck;
    int raw = conv("integ/raw/conv1x1", input_node,
                   cfg_.integration_widths[size_t(cfg_.depth)], 1);
    raw = relu("integ/raw/relu", raw);
    raw = max_pool("integ/raw/pool" + std::to_string(raw_pool), raw,
                   raw_pool);
    branches.push_back(raw);
    return concat("integ/concat", branches);
  }

  int decoder_stage(int stage, int in,
                    const std::array<int, 3>& encoder_branches) {
    const int width = cfg_.decoder_widths[size_t(stage - 1)];
    const int enc_stage = cfg_.depth + 1 - stage;
    const std::string prefix = "dec" + std::to_string(stage);
    int up = upsample(prefix + "/upsample", in, 2);
    std::vector<int> branch_nodes;
    for (int k : {2, 3, 4}) {
      const std::string bp = prefix + "/k" + std::to_string(k);
      int node = conv(bp + "/conv", up, width / 3, k);
      node = act_norm(bp, node);
      if (cfg_.use_cross_deconv) {
        const int partner = cross_partner(cfg_.cross_mapping, k);
        const int enc_node = encoder_branches[size_t(partner - 2)];
        if (!(shape(enc_node) == shape(node))) {
          fail(ErrorClass::shape,
               "cross-fusion (enc " + std::to_string(enc_stage) + " k" +
                   std::to_string(partner) + " -> dec " +
                   std::to_string(stage) + " k" + std::to_string(k) +
                   "): encoder " + shape(enc_node).str() + " vs decoder " +
                   shape(node).str());
        }
        node = add(bp + "/add", node, enc_node);
        cross_links_.push_back({enc_stage, partner, stage, k});
        node = conv(bp + "/fuse/conv1x1", node, width / 3, 1);
        node = act_norm(bp + "/fuse", node);
      }
      branch_nodes.push_back(node);
    }
    int node = concat(prefix + "/concat", branch_nodes);
    node = conv(prefix + "/mix/conv1x1", node, width, 1);
    node = act_norm(prefix + "/mix", node);
    node = conv(prefix + "/mine/conv3x3", node, width, 3);
    node = act_norm(prefix + "/mine", node);
    return node;
  }

  void build(Model<T>& model) {
    const int S = cfg_.input_size;
    // Static shapes carry a nominal batch of 1; forward() substitutes the
    // actual batch size.
    int input = new_node({1, cfg_.in_channels, S, S});
    model.input_node_ = input;

    std::vector<EncoderStage> stages;
    int node = input;
    for (int s = 1; s <= cfg_.depth; ++s) {
      EncoderStage st = encoder_stage(s, node);
      node = st.pooled;
      stages.push_back(st);
    }

    int decoder_in;
    if (cfg_.use_integration_module) {
      std::vector<int> pooled;
      for (const auto& st : stages) pooled.push_back(st.pooled);
      decoder_in = integration_module(pooled, input);
    } else {
      decoder_in = stages.back().pooled;
    }

    node = decoder_in;
    for (int j = 1; j <= cfg_.depth; ++j) {
      node = decoder_stage(j, node,
                           stages[size_t(cfg_.depth - j)].branches);
    }

    node = conv("head/conv1x1", node, cfg_.n_classes, 1);
    if (cfg_.n_classes == 1) {
      node = sigmoid("head/sigmoid", node);
    } else {
      node = softmax("head/softmax", node);
    }
    model.output_node_ = node;

    model.layers_ = std::move(layers_);
    model.params_ = std::move(params_);
    model.bn_states_ = std::move(bn_states_);
    model.bn_names_ = std::move(bn_names_);
    model.node_shapes_ = std::move(shapes_);
    model.cross_links_ = std::move(cross_links_);
  }

 private:
  const ModelConfig& cfg_;
  Rng rng_;
  std::vector<Shape> shapes_;
  std::vector<LayerRecord> layers_;
  std::deque<LayerParams<T>> params_;
  std::vector<BnState<T>> bn_states_;
  std::vector<std::string> bn_names_;
  std::vector<CrossLink> cross_links_;
};

template <typename T>
Model<T> Model<T>::assemble(const ModelConfig& cfg) {
  validate_config(cfg);
  Model<T> model;
  model.cfg_ = cfg;
  ModelBuilder<T> builder(cfg);
  builder.build(model);
  return model;
}

template <typename T>
TensorPtr<T> Model<T>::forward(const TensorPtr<T>& batch, RunMode mode,
                               Tape<T>* tape) {
  const Shape bs = batch->shape;
  if (bs.c != cfg_.in_channels || bs.h != cfg_.input_size ||
      bs.w != cfg_.input_size || bs.n < 1) {
    fail(ErrorClass::shape,
         "forward: batch " + bs.str() + " does not match model input (N," +
             std::to_string(cfg_.in_channels) + "," +
             std::to_string(cfg_.input_size) + "," +
             std::to_string(cfg_.input_size) + ")");
  }
  if (mode == RunMode::eval) tape = nullptr;

  std::vector<TensorPtr<T>> nodes(node_shapes_.size());
  nodes[size_t(input_node_)] = batch;
  for (const LayerRecord& L : layers_) {
    auto in = [&](size_t i) { return nodes[size_t(L.inputs[i])]; };
    TensorPtr<T> out;
    switch (L.kind) {
      case LayerKind::conv:
        out = conv2d(tape, in(0), params_[size_t(L.param)].weights,
                     params_[size_t(L.param)].bias);
        break;
      case LayerKind::relu:
        out = mcnet::relu(tape, in(0));
        break;
      case LayerKind::batch_norm: {
        BnState<T>& st = bn_states_[size_t(L.bn)];
        if (mode == RunMode::train) {
          std::vector<T> bm, bv;
          out = batch_norm_train(tape, in(0), T(kBnEps), &bm, &bv);
          for (size_t c = 0; c < bm.size(); ++c) {
            st.running_mean[c] = T(kBnMomentum) * st.running_mean[c] +
                                 T(1 - kBnMomentum) * bm[c];
            st.running_var[c] = T(kBnMomentum) * st.running_var[c] +
                                T(1 - kBnMomentum) * bv[c];
          }
        } else {
          out = batch_norm_eval(in(0), T(kBnEps), st.running_mean,
                                st.running_var);
        }
        break;
      }
      case LayerKind::affine:
        out = channel_affine(tape, in(0), params_[size_t(L.param)].weights,
                             params_[size_t(L.param)].bias);
        break;
      case LayerKind::concat: {
        std::vector<TensorPtr<T>> ins;
        for (int node : L.inputs) ins.push_back(nodes[size_t(node)]);
        out = concat_channels(tape, ins);
        break;
      }
      case LayerKind::max_pool:
        out = max_pool2d(tape, in(0), L.pool);
        break;
      case LayerKind::upsample:
        out = upsample_bilinear(tape, in(0), L.factor);
        break;
      case LayerKind::add:
        out = mcnet::add(tape, in(0), in(1));
        break;
      case LayerKind::sigmoid:
        out = mcnet::sigmoid(tape, in(0));
        break;
      case LayerKind::softmax:
        out = softmax_channels(tape, in(0));
        break;
    }
    nodes[size_t(L.output)] = std::move(out);
  }
  return nodes[size_t(output_node_)];
}

template <typename T>
ShapeAuditReport Model<T>::shape_audit() const {
  ShapeAuditReport report;
  for (const LayerRecord& L : layers_) {
    AuditRow row;
    row.name = L.name;
    row.kind = layer_kind_name(L.kind);
    for (size_t i = 0; i < L.inputs.size(); ++i) {
      if (i) row.in_shape += "+";
      row.in_shape += node_shapes_[size_t(L.inputs[i])].str();
    }
    row.out_shape = node_shapes_[size_t(L.output)];
    if (L.param >= 0) row.param_count = params_[size_t(L.param)].count();
    report.total_params += row.param_count;
    report.rows.push_back(std::move(row));
  }
  return report;
}

template <typename T>
int64_t Model<T>::parameter_count() const {
  int64_t total = 0;
  for (const auto& p : params_) total += p.count();
  return total;
}

template <typename T>
std::vector<LayerParams<T>*> Model<T>::parameters() {
  std::vector<LayerParams<T>*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, TensorPtr<T>>> Model<T>::parameter_leaves() {
  std::vector<std::pair<std::string, TensorPtr<T>>> out;
  for (auto& p : params_) {
    out.emplace_back(p.name + "/weights", p.weights);
    out.emplace_back(p.name + "/bias", p.bias);
  }
  return out;
}

template <typename T>
const LayerRecord* Model<T>::find_layer(const std::string& name) const {
  for (const auto& L : layers_) {
    if (L.name == name) return &L;
  }
  return nullptr;
}

template <typename T>
size_t Model<T>::count_layers(LayerKind k) const {
  size_t n = 0;
  for (const auto& L : layers_) n += L.kind == k;
  return n;
}

template class Model<float>;
template class Model<double>;

}  // namespace mcnet
