#pragma once

#include <cstdint>
#include <string>

namespace mcnet {

// Dense 4-D layout (batch, channels, height, width), row-major.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  int64_t numel() const {
    return int64_t(n) * int64_t(c) * int64_t(h) * int64_t(w);
  }
  int64_t plane() const { return int64_t(h) * int64_t(w); }

  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

inline int64_t index4(const Shape& s, int n, int c, int h, int w) {
  return ((int64_t(n) * s.c + c) * s.h + h) * s.w + w;
}

}  // namespace mcnet
