#pragma once

#include <vector>

#include "mcnet/dataset.hpp"
#include "mcnet/metrics.hpp"
#include "mcnet/model.hpp"

namespace mcnet {

enum class LossKind { bce, cce };
LossKind default_loss(const ModelConfig& cfg);

struct EpochResult {
  std::vector<double> batch_losses;
  double mean_loss = 0;  // weighted by batch size
};

// forward -> loss -> backward -> adam over one shuffled pass; deterministic
// under (seed, epoch) and a fixed dataset order. Aborts on a non-finite
// loss, naming the batch.
template <typename T>
EpochResult train_epoch(Model<T>& model, const std::vector<Sample>& data,
                        LossKind loss_kind, const AdamConfig& opt,
                        int batch_size, uint64_t seed, int epoch,
                        bool shuffle = true);

// Mean loss in eval mode (running BN statistics, no updates).
template <typename T>
double dataset_loss(Model<T>& model, const std::vector<Sample>& data,
                    LossKind loss_kind, int batch_size);

// Argmax over channels for multi-class scores; 0.5 threshold on the sigmoid
// channel for binary.
template <typename T>
LabelMask scores_to_mask(const Tensor<T>& scores, int sample_in_batch = 0);

template <typename T>
LabelMask predict_mask(Model<T>& model, const TensorPtr<T>& image);

enum class EvalTask { binary, chaos, brats };
EvalTask parse_task(const std::string& name);

// Micro-averaged (pooled-count) metrics over the whole dataset.
template <typename T>
MetricsReport evaluate_dataset(Model<T>& model,
                               const std::vector<Sample>& data,
                               EvalTask task);

}  // namespace mcnet
