#include "mcnet/metrics.hpp"

#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "mcnet/error.hpp"

namespace mcnet {

namespace {

void check_same_shape(const LabelMask& a, const LabelMask& b,
                      const char* name) {
  if (a.h != b.h || a.w != b.w) {
    fail(ErrorClass::shape, std::string(name) + ": mask (" +
                                std::to_string(a.h) + "," +
                                std::to_string(a.w) + ") vs (" +
                                std::to_string(b.h) + "," +
                                std::to_string(b.w) + ")");
  }
}

}  // namespace

ConfusionCounts confusion_counts(const LabelMask& pred,
                                 const LabelMask& truth, int positive_class) {
  check_same_shape(pred, truth, "confusion_counts");
  ConfusionCounts c;
  for (size_t i = 0; i < pred.labels.size(); ++i) {
    const bool p = pred.labels[i] == positive_class;
    const bool t = truth.labels[i] == positive_class;
    if (p && t) {
      ++c.tp;
    } else if (p && !t) {
      ++c.fp;
    } else if (!p && t) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

BinaryMetrics binary_metrics(const ConfusionCounts& c) {
  BinaryMetrics m;
  m.precision = rate_of(c.tp, c.tp + c.fp);
  m.sensitivity = rate_of(c.tp, c.tp + c.fn);
  m.specificity = rate_of(c.tn, c.tn + c.fp);
  m.accuracy = rate_of(c.tp + c.tn, c.total());
  if (m.precision.defined && m.sensitivity.defined &&
      m.precision.value + m.sensitivity.value > 0) {
    m.f_measure = {2 * m.precision.value * m.sensitivity.value /
                       (m.precision.value + m.sensitivity.value),
                   true};
  }
  m.dice_as_printed = rate_of(2 * c.tn, 2 * c.tn + c.fn + c.fp);
  m.dice_tp = rate_of(2 * c.tp, 2 * c.tp + c.fn + c.fp);
  return m;
}

RegionCounts region_counts(const LabelMask& pred, const LabelMask& truth) {
  check_same_shape(pred, truth, "region_counts");
  RegionCounts c;
  for (size_t i = 0; i < pred.labels.size(); ++i) {
    const bool m = pred.labels[i] != 0;
    const bool n = truth.labels[i] != 0;
    c.m1 += m;
    c.n1 += n;
    c.n0 += !n;
    c.inter11 += m && n;
    c.inter00 += !m && !n;
  }
  return c;
}

RegionMetrics region_metrics_from(const RegionCounts& c) {
  RegionMetrics m;
  if (c.m1 + c.n1 > 0) {
    m.dice = {double(c.inter11) / (double(c.m1 + c.n1) / 2.0), true};
  }
  m.sensitivity = rate_of(c.inter11, c.n1);
  m.specificity = rate_of(c.inter00, c.n0);
  return m;
}

RegionMetrics region_metrics(const LabelMask& pred, const LabelMask& truth) {
  return region_metrics_from(region_counts(pred, truth));
}

BratsRegionMasks brats_regions(const LabelMask& labels) {
  BratsRegionMasks out;
  out.wt = LabelMask(labels.h, labels.w);
  out.et = LabelMask(labels.h, labels.w);
  out.tc = LabelMask(labels.h, labels.w);
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    const int l = labels.labels[i];
    if (l < 0 || l > 3) {
      fail(ErrorClass::data,
           "brats_regions: label " + std::to_string(l) + " out of {0,1,2,3}");
    }
    out.wt.labels[i] = l >= 1;
    out.et.labels[i] = l >= 2;
    out.tc.labels[i] = l == 3;
  }
  return out;
}

void MetricsReport::add(const std::string& section, const std::string& metric,
                        Rate rate) {
  for (auto& s : sections) {
    if (s.name == section) {
      s.metrics.emplace_back(metric, rate);
      return;
    }
  }
  sections.push_back({section, {{metric, rate}}});
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["notes"] = notes;
  nlohmann::ordered_json secs = nlohmann::ordered_json::array();
  for (const auto& s : sections) {
    nlohmann::ordered_json sec;
    sec["name"] = s.name;
    nlohmann::ordered_json vals;
    for (const auto& [name, rate] : s.metrics) {
      if (rate.defined) {
        vals[name] = rate.value * 100.0;
      } else {
        vals[name] = nullptr;
      }
    }
    sec["metrics"] = vals;
    secs.push_back(sec);
  }
  j["sections"] = secs;
  return j.dump(2);
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out << "task: " << task << "\n";
  for (const auto& note : notes) out << "note: " << note << "\n";
  for (const auto& s : sections) {
    out << "\n[" << s.name << "]\n";
    std::ostringstream header, row;
    for (const auto& [name, rate] : s.metrics) {
      const int width = int(std::max<size_t>(name.size(), 8)) + 2;
      header << std::left << std::setw(width) << name;
      std::ostringstream cell;
      if (rate.defined) {
        cell << std::fixed << std::setprecision(2) << rate.value * 100.0;
      } else {
        cell << "undef";
      }
      row << std::left << std::setw(width) << cell.str();
    }
    out << header.str() << "\n" << row.str() << "\n";
  }
  return out.str();
}

}  // namespace mcnet
