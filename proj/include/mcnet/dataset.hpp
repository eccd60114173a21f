#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mcnet/metrics.hpp"
#include "mcnet/tensor.hpp"

namespace mcnet {

// One image/mask pair; the image tensor is (1, channels, H, W) in [0,1].
struct Sample {
  TensorPtr<float> image;
  LabelMask mask;
  std::string id;
};

struct ManifestEntry {
  std::string stem;
  std::vector<std::string> image_files;  // one per modality
  std::string mask_file;
};

struct DatasetManifest {
  std::string root;
  std::vector<ManifestEntry> entries;
  int n_classes = 2;
  std::vector<int> labels;
  std::vector<std::string> modalities;  // empty means single-channel files
};

// Directory layout: root/images/*.pgm and root/masks/*.pgm matched by stem;
// multimodal datasets name files <stem>.<modality>.pgm with the modality
// order declared in root/manifest.json.
DatasetManifest load_manifest(const std::string& root);

// Deterministic shuffle then proportional split; the training side receives
// the rounding remainder.
std::pair<DatasetManifest, DatasetManifest> split_dataset(
    const DatasetManifest& manifest, int ratio_train, int ratio_test,
    uint64_t seed);

enum class Preprocess { none, resize, pad };
Preprocess parse_preprocess(const std::string& name);

Sample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry,
                   Preprocess prep, int target_side);
std::vector<Sample> load_all(const DatasetManifest& manifest, Preprocess prep,
                             int target_side);

// Noisy canvases with 1..4 random ellipses/rectangles per non-background
// class; mask labels are exact. A pure function of the seed; retries
// internally until every declared class is present in each sample.
std::vector<Sample> synth_dataset(uint64_t seed, int n_samples, int side,
                                  int n_classes);

// Writes samples in the directory layout understood by load_manifest.
void write_dataset(const std::vector<Sample>& samples, const std::string& root,
                   int n_classes);

// Index batches with a per-epoch deterministic shuffle; the final batch may
// be short.
std::vector<std::vector<int>> make_batches(size_t n, int batch_size,
                                           uint64_t seed, int epoch,
                                           bool shuffle);

template <typename T>
TensorPtr<T> stack_images(const std::vector<Sample>& samples,
                          const std::vector<int>& idx);

// Binary targets (n_classes == 1): label > 0 marks the positive channel.
// Multi-class: one-hot over n_classes channels.
template <typename T>
TensorPtr<T> masks_to_targets(const std::vector<Sample>& samples,
                              const std::vector<int>& idx, int n_classes);

}  // namespace mcnet
