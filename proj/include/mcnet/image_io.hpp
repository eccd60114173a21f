#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcnet {

struct GrayImage {
  int h = 0;
  int w = 0;
  int maxval = 255;
  std::vector<uint16_t> px;  // row-major, 16-bit samples stored big-endian on disk

  GrayImage() = default;
  GrayImage(int h_, int w_, int maxval_ = 255)
      : h(h_), w(w_), maxval(maxval_), px(size_t(h_) * w_, 0) {}
  uint16_t& at(int i, int j) { return px[size_t(i) * w + j]; }
  uint16_t at(int i, int j) const { return px[size_t(i) * w + j]; }
};

// Binary PGM (P5) only; the ASCII P2 variant is rejected explicitly.
// save(load(x)) is the identity on the pixel grid and the writer emits a
// canonical header, so save -> load -> save round-trips byte-exactly.
GrayImage load_pgm(const std::string& path);
void save_pgm(const GrayImage& img, const std::string& path);

}  // namespace mcnet
