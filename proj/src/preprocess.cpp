#include "mcnet/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "mcnet/error.hpp"

namespace mcnet {

std::vector<float> to_unit(const GrayImage& img) {
  std::vector<float> out(img.px.size());
  const float scale = 1.0f / float(img.maxval);
  for (size_t i = 0; i < out.size(); ++i) out[i] = float(img.px[i]) * scale;
  return out;
}

std::vector<float> resize_bilinear(const std::vector<float>& src, int h,
                                   int w, int th, int tw) {
  if (th < 1 || tw < 1) {
    fail(ErrorClass::shape, "resize_bilinear: bad target size");
  }
  if (th == h && tw == w) return src;
  std::vector<float> out(size_t(th) * tw);
  const double sy = double(h) / th;
  const double sx = double(w) / tw;
  for (int i = 0; i < th; ++i) {
    const double ci = std::clamp((i + 0.5) * sy - 0.5, 0.0, double(h - 1));
    const int i0 = int(std::floor(ci));
    const int i1 = std::min(i0 + 1, h - 1);
    const double a = ci - i0;
    for (int j = 0; j < tw; ++j) {
      const double cj = std::clamp((j + 0.5) * sx - 0.5, 0.0, double(w - 1));
      const int j0 = int(std::floor(cj));
      const int j1 = std::min(j0 + 1, w - 1);
      const double b = cj - j0;
      const double v =
          (1 - a) * ((1 - b) * src[size_t(i0) * w + j0] +
                     b * src[size_t(i0) * w + j1]) +
          a * ((1 - b) * src[size_t(i1) * w + j0] +
               b * src[size_t(i1) * w + j1]);
      out[size_t(i) * tw + j] = float(v);
    }
  }
  return out;
}

LabelMask resize_nearest(const LabelMask& mask, int th, int tw) {
  if (th < 1 || tw < 1) {
    fail(ErrorClass::shape, "resize_nearest: bad target size");
  }
  if (th == mask.h && tw == mask.w) return mask;
  LabelMask out(th, tw);
  const double sy = double(mask.h) / th;
  const double sx = double(mask.w) / tw;
  for (int i = 0; i < th; ++i) {
    const int si = std::min(mask.h - 1, int(std::floor((i + 0.5) * sy)));
    for (int j = 0; j < tw; ++j) {
      const int sj = std::min(mask.w - 1, int(std::floor((j + 0.5) * sx)));
      out.at(i, j) = mask.at(si, sj);
    }
  }
  return out;
}

std::vector<float> pad_to(const std::vector<float>& src, int h, int w,
                          int target_side) {
  if (h > target_side || w > target_side) {
    fail(ErrorClass::shape, "pad_to: source " + std::to_string(h) + "x" +
                                std::to_string(w) + " exceeds target " +
                                std::to_string(target_side));
  }
  if (h == target_side && w == target_side) return src;
  std::vector<float> out(size_t(target_side) * target_side, 0.0f);
  for (int i = 0; i < h; ++i) {
    std::copy(src.begin() + size_t(i) * w, src.begin() + size_t(i + 1) * w,
              out.begin() + size_t(i) * target_side);
  }
  return out;
}

LabelMask pad_mask_to(const LabelMask& mask, int target_side) {
  if (mask.h > target_side || mask.w > target_side) {
    fail(ErrorClass::shape, "pad_mask_to: source exceeds target");
  }
  if (mask.h == target_side && mask.w == target_side) return mask;
  LabelMask out(target_side, target_side);
  for (int i = 0; i < mask.h; ++i) {
    for (int j = 0; j < mask.w; ++j) out.at(i, j) = mask.at(i, j);
  }
  return out;
}

}  // namespace mcnet
