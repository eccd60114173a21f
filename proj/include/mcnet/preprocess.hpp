#pragma once

#include <vector>

#include "mcnet/image_io.hpp"
#include "mcnet/metrics.hpp"

namespace mcnet {

// Intensities scaled by the format maxval into [0,1].
std::vector<float> to_unit(const GrayImage& img);

// Pixel-center bilinear resampling, the same convention as the model's
// upsampling layer. Images only; masks go through resize_nearest so labels
// are never interpolated.
std::vector<float> resize_bilinear(const std::vector<float>& src, int h,
                                   int w, int th, int tw);

LabelMask resize_nearest(const LabelMask& mask, int th, int tw);

// Zero padding with the source kept top-left and the remainder appended on
// the bottom/right edges; masks pad with label 0.
std::vector<float> pad_to(const std::vector<float>& src, int h, int w,
                          int target_side);

LabelMask pad_mask_to(const LabelMask& mask, int target_side);

}  // namespace mcnet
