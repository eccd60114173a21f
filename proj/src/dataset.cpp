#include "mcnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>

#include "mcnet/error.hpp"
#include "mcnet/image_io.hpp"
#include "mcnet/preprocess.hpp"
#include "mcnet/rng.hpp"

namespace fs = std::filesystem;

namespace mcnet {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

DatasetManifest load_manifest(const std::string& root) {
  DatasetManifest m;
  m.root = root;
  const fs::path images = fs::path(root) / "images";
  const fs::path masks = fs::path(root) / "masks";
  if (!fs::is_directory(images) || !fs::is_directory(masks)) {
    fail(ErrorClass::data,
         "dataset root '" + root + "' needs images/ and masks/ directories");
  }

  const fs::path mpath = fs::path(root) / "manifest.json";
  if (fs::exists(mpath)) {
    std::ifstream in(mpath);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorClass::data, "bad manifest.json: " + std::string(e.what()));
    }
    if (j.contains("classes")) m.n_classes = j["classes"].get<int>();
    if (j.contains("labels")) m.labels = j["labels"].get<std::vector<int>>();
    if (j.contains("modalities")) {
      m.modalities = j["modalities"].get<std::vector<std::string>>();
    }
  }
  if (m.labels.empty()) {
    for (int c = 0; c < m.n_classes; ++c) m.labels.push_back(c);
  }

  std::set<std::string> stems;
  for (const auto& e : fs::directory_iterator(images)) {
    if (!e.is_regular_file()) continue;
    std::string name = e.path().filename().string();
    if (!ends_with(name, ".pgm")) continue;
    name.resize(name.size() - 4);
    if (!m.modalities.empty()) {
      // Strip a trailing ".<modality>".
      for (const auto& mod : m.modalities) {
        if (ends_with(name, "." + mod)) {
          name.resize(name.size() - mod.size() - 1);
          break;
        }
      }
    }
    stems.insert(name);
  }
  if (stems.empty()) {
    fail(ErrorClass::data, "no .pgm images under '" + images.string() + "'");
  }

  for (const std::string& stem : stems) {
    ManifestEntry entry;
    entry.stem = stem;
    if (m.modalities.empty()) {
      entry.image_files = {(images / (stem + ".pgm")).string()};
    } else {
      for (const auto& mod : m.modalities) {
        entry.image_files.push_back(
            (images / (stem + "." + mod + ".pgm")).string());
      }
    }
    entry.mask_file = (masks / (stem + ".pgm")).string();
    for (const auto& f : entry.image_files) {
      if (!fs::exists(f)) {
        fail(ErrorClass::data, "missing image file '" + f + "'");
      }
    }
    if (!fs::exists(entry.mask_file)) {
      fail(ErrorClass::data,
           "missing mask for image '" + stem + "': " + entry.mask_file);
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

std::pair<DatasetManifest, DatasetManifest> split_dataset(
    const DatasetManifest& manifest, int ratio_train, int ratio_test,
    uint64_t seed) {
  if (ratio_train <= 0 || ratio_test <= 0) {
    fail(ErrorClass::config, "split ratio parts must be positive");
  }
  if (manifest.entries.empty()) {
    fail(ErrorClass::data, "cannot split an empty manifest");
  }
  std::vector<int> order(manifest.entries.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  Rng rng(seed);
  rng.shuffle(order);

  const int64_t n = int64_t(order.size());
  const int64_t parts = ratio_train + ratio_test;
  // Training side takes the rounding remainder.
  const int64_t n_train = (n * ratio_train + parts - 1) / parts;

  DatasetManifest train = manifest, test = manifest;
  train.entries.clear();
  test.entries.clear();
  for (int64_t i = 0; i < n; ++i) {
    const ManifestEntry& e = manifest.entries[size_t(order[size_t(i)])];
    if (i < n_train) {
      train.entries.push_back(e);
    } else {
      test.entries.push_back(e);
    }
  }
  return {train, test};
}

Preprocess parse_preprocess(const std::string& name) {
  if (name == "none") return Preprocess::none;
  if (name == "resize") return Preprocess::resize;
  if (name == "pad") return Preprocess::pad;
  fail(ErrorClass::config, "unknown preprocess '" + name +
                               "' (expected none, resize or pad)");
}

Sample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry,
                   Preprocess prep, int target_side) {
  std::vector<std::vector<float>> channels;
  int h = 0, w = 0;
  for (const auto& file : entry.image_files) {
    GrayImage img = load_pgm(file);
    if (channels.empty()) {
      h = img.h;
      w = img.w;
    } else if (img.h != h || img.w != w) {
      fail(ErrorClass::data, "modality size mismatch in '" + file + "'");
    }
    channels.push_back(to_unit(img));
  }
  GrayImage mask_img = load_pgm(entry.mask_file);
  if (mask_img.h != h || mask_img.w != w) {
    fail(ErrorClass::data,
         "mask size does not match image for '" + entry.stem + "'");
  }
  LabelMask mask(mask_img.h, mask_img.w);
  for (size_t i = 0; i < mask.labels.size(); ++i) {
    mask.labels[i] = mask_img.px[i];
  }

  if (prep == Preprocess::resize) {
    for (auto& ch : channels) {
      ch = resize_bilinear(ch, h, w, target_side, target_side);
    }
    mask = resize_nearest(mask, target_side, target_side);
    h = w = target_side;
  } else if (prep == Preprocess::pad) {
    for (auto& ch : channels) ch = pad_to(ch, h, w, target_side);
    mask = pad_mask_to(mask, target_side);
    h = w = target_side;
  }

  Sample s;
  s.id = entry.stem;
  s.mask = std::move(mask);
  s.image = make_tensor<float>({1, int(channels.size()), h, w});
  for (size_t c = 0; c < channels.size(); ++c) {
    std::copy(channels[c].begin(), channels[c].end(),
              s.image->v.begin() + int64_t(c) * h * w);
  }
  return s;
}

std::vector<Sample> load_all(const DatasetManifest& manifest, Preprocess prep,
                             int target_side) {
  std::vector<Sample> out;
  out.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries) {
    out.push_back(load_sample(manifest, entry, prep, target_side));
  }
  return out;
}

namespace {

struct Blob {
  bool ellipse = false;
  double cy = 0, cx = 0, ry = 0, rx = 0;
  bool contains(int i, int j) const {
    const double dy = (i - cy) / ry, dx = (j - cx) / rx;
    return ellipse ? dy * dy + dx * dx <= 1.0
                   : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
  }
};

Sample synth_one(uint64_t seed, int side, int n_classes) {
  Rng rng(seed);
  const int fg_classes = std::max(1, n_classes - 1);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Sample s;
    s.image = make_tensor<float>({1, 1, side, side});
    s.mask = LabelMask(side, side);
    // Dim noisy background.
    for (auto& v : s.image->v) v = float(0.05 + 0.20 * rng.uniform());
    // Shapes per class; later classes overwrite earlier ones, intensities
    // grow with the class label so the classes stay separable.
    for (int cls = 1; cls <= fg_classes; ++cls) {
      const int count = 1 + int(rng.uniform_index(4));
      const double base = 0.35 + 0.60 * double(cls) / double(fg_classes);
      for (int k = 0; k < count; ++k) {
        Blob blob;
        blob.ellipse = rng.uniform() < 0.5;
        blob.cy = rng.uniform(0.15, 0.85) * side;
        blob.cx = rng.uniform(0.15, 0.85) * side;
        blob.ry = rng.uniform(side / 10.0, side / 4.0);
        blob.rx = rng.uniform(side / 10.0, side / 4.0);
        const double level = base + rng.uniform(-0.03, 0.03);
        const int lo_i = std::max(0, int(blob.cy - blob.ry) - 1);
        const int hi_i = std::min(side - 1, int(blob.cy + blob.ry) + 1);
        const int lo_j = std::max(0, int(blob.cx - blob.rx) - 1);
        const int hi_j = std::min(side - 1, int(blob.cx + blob.rx) + 1);
        for (int i = lo_i; i <= hi_i; ++i) {
          for (int j = lo_j; j <= hi_j; ++j) {
            if (!blob.contains(i, j)) continue;
            const double noisy = level + 0.02 * (rng.uniform() - 0.5);
            s.image->v[size_t(i) * side + j] =
                float(std::clamp(noisy, 0.0, 1.0));
            s.mask.at(i, j) = cls;
          }
        }
      }
    }
    // Every declared class (background included) must be present.
    std::vector<int64_t> counts(size_t(fg_classes) + 1, 0);
    for (int l : s.mask.labels) counts[size_t(l)] += 1;
    bool ok = true;
    for (int64_t c : counts) ok = ok && c > 0;
    if (ok) return s;
  }
  fail(ErrorClass::data, "synthetic generator failed to place all classes");
}

}  // namespace

std::vector<Sample> synth_dataset(uint64_t seed, int n_samples, int side,
                                  int n_classes) {
  if (n_samples < 1 || side < 8 || n_classes < 2) {
    fail(ErrorClass::config, "synth_dataset: need n >= 1, side >= 8, classes >= 2");
  }
  std::vector<Sample> out;
  out.reserve(size_t(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    Sample s = synth_one(mix_seed(seed, uint64_t(i)), side, n_classes);
    s.id = "synth" + std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset(const std::vector<Sample>& samples, const std::string& root,
                   int n_classes) {
  fs::create_directories(fs::path(root) / "images");
  fs::create_directories(fs::path(root) / "masks");
  for (const Sample& s : samples) {
    const Shape& sh = s.image->shape;
    if (sh.c != 1) {
      fail(ErrorClass::data, "write_dataset handles single-channel samples");
    }
    GrayImage img(sh.h, sh.w, 255);
    for (size_t i = 0; i < img.px.size(); ++i) {
      img.px[i] = uint16_t(std::lround(std::clamp(double(s.image->v[i]), 0.0,
                                                  1.0) * 255.0));
    }
    save_pgm(img, (fs::path(root) / "images" / (s.id + ".pgm")).string());
    GrayImage mask(s.mask.h, s.mask.w, std::max(1, n_classes - 1));
    for (size_t i = 0; i < mask.px.size(); ++i) {
      mask.px[i] = uint16_t(s.mask.labels[i]);
    }
    save_pgm(mask, (fs::path(root) / "masks" / (s.id + ".pgm")).string());
  }
  nlohmann::json j;
  j["classes"] = n_classes;
  std::vector<int> labels;
  for (int c = 0; c < n_classes; ++c) labels.push_back(c);
  j["labels"] = labels;
  j["modalities"] = std::vector<std::string>{};
  std::ofstream out(fs::path(root) / "manifest.json");
  out << j.dump(2) << "\n";
}

std::vector<std::vector<int>> make_batches(size_t n, int batch_size,
                                           uint64_t seed, int epoch,
                                           bool shuffle) {
  if (batch_size < 1) {
    fail(ErrorClass::config, "batch size must be >= 1");
  }
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = int(i);
  if (shuffle) {
    Rng rng(mix_seed(seed, uint64_t(epoch)));
    rng.shuffle(order);
  }
  std::vector<std::vector<int>> batches;
  for (size_t start = 0; start < n; start += size_t(batch_size)) {
    const size_t stop = std::min(n, start + size_t(batch_size));
    batches.emplace_back(order.begin() + long(start),
                         order.begin() + long(stop));
  }
  return batches;
}

template <typename T>
TensorPtr<T> stack_images(const std::vector<Sample>& samples,
                          const std::vector<int>& idx) {
  if (idx.empty()) {
    fail(ErrorClass::data, "empty batch");
  }
  const Shape one = samples[size_t(idx[0])].image->shape;
  auto out = make_tensor<T>({int(idx.size()), one.c, one.h, one.w});
  const int64_t per = one.numel();
  for (size_t k = 0; k < idx.size(); ++k) {
    const Sample& s = samples[size_t(idx[k])];
    if (!(s.image->shape == one)) {
      fail(ErrorClass::data, "sample '" + s.id + "' shape " +
                                 s.image->shape.str() +
                                 " differs from batch " + one.str());
    }
    for (int64_t i = 0; i < per; ++i) {
      out->v[int64_t(k) * per + i] = T(s.image->v[size_t(i)]);
    }
  }
  return out;
}

template <typename T>
TensorPtr<T> masks_to_targets(const std::vector<Sample>& samples,
                              const std::vector<int>& idx, int n_classes) {
  const Shape one = samples[size_t(idx[0])].image->shape;
  const int64_t plane = one.plane();
  const int channels = std::max(1, n_classes);
  auto out = make_tensor<T>({int(idx.size()), channels, one.h, one.w});
  for (size_t k = 0; k < idx.size(); ++k) {
    const LabelMask& mask = samples[size_t(idx[k])].mask;
    for (int64_t p = 0; p < plane; ++p) {
      const int label = mask.labels[size_t(p)];
      if (channels == 1) {
        out->v[int64_t(k) * plane + p] = label > 0 ? T(1) : T(0);
      } else {
        if (label < 0 || label >= channels) {
          fail(ErrorClass::data,
               "mask label " + std::to_string(label) + " out of range for " +
                   std::to_string(channels) + " classes");
        }
        out->v[(int64_t(k) * channels + label) * plane + p] = T(1);
      }
    }
  }
  return out;
}

template TensorPtr<float> stack_images<float>(const std::vector<Sample>&,
                                              const std::vector<int>&);
template TensorPtr<double> stack_images<double>(const std::vector<Sample>&,
                                                const std::vector<int>&);
template TensorPtr<float> masks_to_targets<float>(const std::vector<Sample>&,
                                                  const std::vector<int>&,
                                                  int);
template TensorPtr<double> masks_to_targets<double>(const std::vector<Sample>&,
                                                    const std::vector<int>&,
                                                    int);

}  // namespace mcnet
