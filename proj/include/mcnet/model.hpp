#pragma once

#include <deque>
#include <string>
#include <vector>

#include "mcnet/model_config.hpp"
#include "mcnet/ops.hpp"
#include "mcnet/params.hpp"
#include "mcnet/tape.hpp"

namespace mcnet {

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.9;

enum class LayerKind {
  conv,
  relu,
  batch_norm,
  affine,
  concat,
  max_pool,
  upsample,
  add,
  sigmoid,
  softmax
};

const char* layer_kind_name(LayerKind k);

// One interpreted step of the network: consumes input node ids, produces one
// output node.
struct LayerRecord {
  LayerKind kind;
  std::string name;
  std::vector<int> inputs;
  int output = -1;
  int param = -1;   // conv / affine
  int bn = -1;      // batch_norm running-state slot
  int pool = 0;     // max_pool
  int factor = 0;   // upsample
  int kernel = 0;   // conv kernel size, for diagnostics
};

// (encoder submodule, encoder branch kernel) added onto
// (decoder submodule, decoder branch kernel).
struct CrossLink {
  int encoder_stage = 0;
  int encoder_kernel = 0;
  int decoder_stage = 0;
  int decoder_kernel = 0;
};

template <typename T>
struct BnState {
  std::vector<T> running_mean;
  std::vector<T> running_var;  // initialized to 1
};

struct AuditRow {
  std::string name;
  std::string kind;
  std::string in_shape;
  Shape out_shape;
  int64_t param_count = 0;
};

struct ShapeAuditReport {
  std::vector<AuditRow> rows;
  int64_t total_params = 0;
  std::string table() const;
};

enum class RunMode { train, eval };

template <typename T>
class Model {
 public:
  static Model assemble(const ModelConfig& cfg);

  // Train mode records onto the tape and folds batch statistics into the BN
  // running averages; eval mode reads the running averages and never mutates
  // the model, so a frozen model may serve concurrent eval calls.
  TensorPtr<T> forward(const TensorPtr<T>& batch, RunMode mode,
                       Tape<T>* tape = nullptr);

  ShapeAuditReport shape_audit() const;
  int64_t parameter_count() const;

  std::vector<LayerParams<T>*> parameters();
  std::vector<std::pair<std::string, TensorPtr<T>>> parameter_leaves();

  const ModelConfig& config() const { return cfg_; }
  const std::vector<LayerRecord>& layers() const { return layers_; }
  const std::vector<CrossLink>& cross_links() const { return cross_links_; }
  const LayerRecord* find_layer(const std::string& name) const;
  Shape node_shape(int node) const { return node_shapes_.at(size_t(node)); }
  Shape output_shape() const { return node_shapes_.at(size_t(output_node_)); }

  size_t count_layers(LayerKind k) const;

  std::deque<LayerParams<T>>& params_store() { return params_; }
  const std::deque<LayerParams<T>>& params_store() const { return params_; }
  std::vector<BnState<T>>& bn_states() { return bn_states_; }
  const std::vector<BnState<T>>& bn_states() const { return bn_states_; }
  const std::vector<std::string>& bn_names() const { return bn_names_; }

 private:
  template <typename>
  friend class ModelBuilder;
  ModelConfig cfg_;
  std::vector<LayerRecord> layers_;
  std::deque<LayerParams<T>> params_;
  std::vector<BnState<T>> bn_states_;
  std::vector<std::string> bn_names_;
  std::vector<Shape> node_shapes_;
  std::vector<CrossLink> cross_links_;
  int input_node_ = 0;
  int output_node_ = 0;
};

}  // namespace mcnet
