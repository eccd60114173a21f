#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mcnet {

// One-vs-rest pixel tallies.
struct ConfusionCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t tn = 0;
  int64_t fn = 0;
  int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

struct LabelMask {
  int h = 0;
  int w = 0;
  std::vector<int> labels;  // row-major

  LabelMask() = default;
  LabelMask(int h_, int w_) : h(h_), w(w_), labels(size_t(h_) * w_, 0) {}
  int& at(int i, int j) { return labels[size_t(i) * w + j]; }
  int at(int i, int j) const { return labels[size_t(i) * w + j]; }
  size_t size() const { return labels.size(); }
};

// A rate with an explicit undefined state for zero denominators; values are
// fractions in [0,1].
struct Rate {
  double value = 0;
  bool defined = false;
};

inline Rate rate_of(int64_t num, int64_t den) {
  if (den == 0) return {};
  return {double(num) / double(den), true};
}

ConfusionCounts confusion_counts(const LabelMask& pred,
                                 const LabelMask& truth, int positive_class);

// Precision, F-measure (R = sensitivity), accuracy, sensitivity,
// specificity, and both Dice forms: dice_as_printed uses TN exactly as the
// published formula does; dice_tp is the conventional overlap companion.
struct BinaryMetrics {
  Rate precision;
  Rate f_measure;
  Rate accuracy;
  Rate sensitivity;
  Rate specificity;
  Rate dice_as_printed;
  Rate dice_tp;
};

BinaryMetrics binary_metrics(const ConfusionCounts& c);

// Overlap sizes between two binary masks, additive across images.
struct RegionCounts {
  int64_t inter11 = 0;  // |M1 and N1|
  int64_t inter00 = 0;  // |M0 and N0|
  int64_t m1 = 0;
  int64_t n1 = 0;
  int64_t n0 = 0;
  RegionCounts& operator+=(const RegionCounts& o) {
    inter11 += o.inter11;
    inter00 += o.inter00;
    m1 += o.m1;
    n1 += o.n1;
    n0 += o.n0;
    return *this;
  }
};

RegionCounts region_counts(const LabelMask& pred, const LabelMask& truth);

struct RegionMetrics {
  Rate dice;         // |M1^N1| / ((|M1|+|N1|)/2)
  Rate sensitivity;  // |M1^N1| / |N1|
  Rate specificity;  // |M0^N0| / |N0|
};

RegionMetrics region_metrics_from(const RegionCounts& c);
RegionMetrics region_metrics(const LabelMask& pred, const LabelMask& truth);

// Region masks from the 4-label map: WT = {1,2,3}, ET = {2,3}, TC = {3},
// following the published region descriptions verbatim.
struct BratsRegionMasks {
  LabelMask wt;
  LabelMask et;
  LabelMask tc;
};

BratsRegionMasks brats_regions(const LabelMask& labels);

// Ordered report; values are percentages, undefined rates serialize as null
// in JSON and as "undef" in the text table.
struct MetricsReport {
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, Rate>> metrics;
  };
  std::string task;
  std::vector<std::string> notes;
  std::vector<Section> sections;

  void add(const std::string& section, const std::string& metric, Rate rate);
  std::string to_json() const;
  std::string to_table() const;
};

}  // namespace mcnet
