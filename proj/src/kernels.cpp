#include "mcnet/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace mcnet::kern {

template <typename T>
void conv2d_forward(const T* x, Shape xs, const T* w, int oc, int kh, int kw,
                    const T* bias, T* y) {
  const Pad2d pad = same_pad(kh, kw);
  const int ic = xs.c, H = xs.h, W = xs.w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n) {
    for (int o = 0; o < oc; ++o) {
      const T* wo = w + int64_t(o) * ic * kh * kw;
      T* yo = y + (int64_t(n) * oc + o) * H * W;
      for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
          T acc = bias[o];
          for (int c = 0; c < ic; ++c) {
            const T* xc = x + (int64_t(n) * ic + c) * H * W;
            const T* wc = wo + int64_t(c) * kh * kw;
            for (int u = 0; u < kh; ++u) {
              const int yy = i + u - pad.top;
              if (yy < 0 || yy >= H) continue;
              for (int v = 0; v < kw; ++v) {
                const int xx = j + v - pad.left;
                if (xx < 0 || xx >= W) continue;
                acc += xc[int64_t(yy) * W + xx] * wc[u * kw + v];
              }
            }
          }
          yo[int64_t(i) * W + j] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* gy, Shape ys, const T* w, int ic, int kh,
                           int kw, T* gx) {
  const Pad2d pad = same_pad(kh, kw);
  const int oc = ys.c, H = ys.h, W = ys.w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < ys.n; ++n) {
    for (int c = 0; c < ic; ++c) {
      T* gxc = gx + (int64_t(n) * ic + c) * H * W;
      for (int yi = 0; yi < H; ++yi) {
        for (int xj = 0; xj < W; ++xj) {
          T acc = T(0);
          for (int o = 0; o < oc; ++o) {
            const T* gyo = gy + (int64_t(n) * oc + o) * H * W;
            const T* wc = w + (int64_t(o) * ic + c) * kh * kw;
            for (int u = 0; u < kh; ++u) {
              const int i = yi - u + pad.top;
              if (i < 0 || i >= H) continue;
              for (int v = 0; v < kw; ++v) {
                const int j = xj - v + pad.left;
                if (j < 0 || j >= W) continue;
                acc += gyo[int64_t(i) * W + j] * wc[u * kw + v];
              }
            }
          }
          gxc[int64_t(yi) * W + xj] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weights(const T* x, Shape xs, const T* gy, int oc, int kh,
                             int kw, T* gw) {
  const Pad2d pad = same_pad(kh, kw);
  const int ic = xs.c, H = xs.h, W = xs.w;
#pragma omp parallel for collapse(2) schedule(static)
  for (int o = 0; o < oc; ++o) {
    for (int c = 0; c < ic; ++c) {
      T* gwc = gw + (int64_t(o) * ic + c) * kh * kw;
      for (int u = 0; u < kh; ++u) {
        for (int v = 0; v < kw; ++v) {
          T acc = T(0);
          for (int n = 0; n < xs.n; ++n) {
            const T* gyo = gy + (int64_t(n) * oc + o) * H * W;
            const T* xc = x + (int64_t(n) * ic + c) * H * W;
            for (int i = 0; i < H; ++i) {
              const int yy = i + u - pad.top;
              if (yy < 0 || yy >= H) continue;
              for (int j = 0; j < W; ++j) {
                const int xx = j + v - pad.left;
                if (xx < 0 || xx >= W) continue;
                acc += gyo[int64_t(i) * W + j] * xc[int64_t(yy) * W + xx];
              }
            }
          }
          gwc[u * kw + v] += acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_bias(const T* gy, Shape ys, T* gb) {
  const int64_t plane = ys.plane();
#pragma omp parallel for schedule(static)
  for (int o = 0; o < ys.c; ++o) {
    T acc = T(0);
    for (int n = 0; n < ys.n; ++n) {
      const T* gyo = gy + (int64_t(n) * ys.c + o) * plane;
      for (int64_t p = 0; p < plane; ++p) acc += gyo[p];
    }
    gb[o] += acc;
  }
}

template <typename T>
void maxpool_forward(const T* x, Shape xs, int pool, T* y, int64_t* argmax) {
  const int H = xs.h, W = xs.w;
  const int oh = H / pool, ow = W / pool;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      const int64_t xoff = (int64_t(n) * xs.c + c) * H * W;
      const int64_t yoff = (int64_t(n) * xs.c + c) * oh * ow;
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          // First row-major maximum wins; ties route the gradient there.
          int64_t best_idx = xoff + int64_t(i) * pool * W + int64_t(j) * pool;
          T best = x[best_idx];
          for (int u = 0; u < pool; ++u) {
            for (int v = 0; v < pool; ++v) {
              const int64_t idx =
                  xoff + int64_t(i * pool + u) * W + (j * pool + v);
              if (x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          y[yoff + int64_t(i) * ow + j] = best;
          argmax[yoff + int64_t(i) * ow + j] = best_idx;
        }
      }
    }
  }
}

template <typename T>
void maxpool_backward(const T* gy, Shape ys, const int64_t* argmax, T* gx) {
  const int64_t plane = ys.plane();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < ys.n; ++n) {
    for (int c = 0; c < ys.c; ++c) {
      const int64_t off = (int64_t(n) * ys.c + c) * plane;
      for (int64_t p = 0; p < plane; ++p) {
        gx[argmax[off + p]] += gy[off + p];
      }
    }
  }
}

// Pixel-center sampling (align-corners=false): source coordinate for output
// pixel i is (i + 0.5)/factor - 0.5, clamped to the input grid.
template <typename T>
void upsample_bilinear_forward(const T* x, Shape xs, int factor, T* y) {
  const int H = xs.h, W = xs.w;
  const int OH = H * factor, OW = W * factor;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      const T* xc = x + (int64_t(n) * xs.c + c) * H * W;
      T* yc = y + (int64_t(n) * xs.c + c) * OH * OW;
      for (int i = 0; i < OH; ++i) {
        const double si = (i + 0.5) / factor - 0.5;
        const int i0 = std::clamp(int(std::floor(si)), 0, H - 1);
        const int i1 = std::min(i0 + 1, H - 1);
        const double ti = std::clamp(si - std::floor(si), 0.0, 1.0);
        const double wi = (si < 0.0) ? 0.0 : (si > H - 1 ? 0.0 : ti);
        for (int j = 0; j < OW; ++j) {
          const double sj = (j + 0.5) / factor - 0.5;
          const int j0 = std::clamp(int(std::floor(sj)), 0, W - 1);
          const int j1 = std::min(j0 + 1, W - 1);
          const double tj = std::clamp(sj - std::floor(sj), 0.0, 1.0);
          const double wj = (sj < 0.0) ? 0.0 : (sj > W - 1 ? 0.0 : tj);
          const double v00 = double(xc[int64_t(i0) * W + j0]);
          const double v01 = double(xc[int64_t(i0) * W + j1]);
          const double v10 = double(xc[int64_t(i1) * W + j0]);
          const double v11 = double(xc[int64_t(i1) * W + j1]);
          yc[int64_t(i) * OW + j] =
              T((1.0 - wi) * ((1.0 - wj) * v00 + wj * v01) +
                wi * ((1.0 - wj) * v10 + wj * v11));
        }
      }
    }
  }
}

template <typename T>
void upsample_bilinear_backward(const T* gy, Shape ys, int factor, T* gx) {
  const int OH = ys.h, OW = ys.w;
  const int H = OH / factor, W = OW / factor;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < ys.n; ++n) {
    for (int c = 0; c < ys.c; ++c) {
      const T* gyc = gy + (int64_t(n) * ys.c + c) * OH * OW;
      T* gxc = gx + (int64_t(n) * ys.c + c) * H * W;
      for (int i = 0; i < OH; ++i) {
        const double si = (i + 0.5) / factor - 0.5;
        const int i0 = std::clamp(int(std::floor(si)), 0, H - 1);
        const int i1 = std::min(i0 + 1, H - 1);
        const double ti = std::clamp(si - std::floor(si), 0.0, 1.0);
        const double wi = (si < 0.0) ? 0.0 : (si > H - 1 ? 0.0 : ti);
        for (int j = 0; j < OW; ++j) {
          const double sj = (j + 0.5) / factor - 0.5;
          const int j0 = std::clamp(int(std::floor(sj)), 0, W - 1);
          const int j1 = std::min(j0 + 1, W - 1);
          const double tj = std::clamp(sj - std::floor(sj), 0.0, 1.0);
          const double wj = (sj < 0.0) ? 0.0 : (sj > W - 1 ? 0.0 : tj);
          const double g = double(gyc[int64_t(i) * OW + j]);
          gxc[int64_t(i0) * W + j0] += T((1.0 - wi) * (1.0 - wj) * g);
          gxc[int64_t(i0) * W + j1] += T((1.0 - wi) * wj * g);
          gxc[int64_t(i1) * W + j0] += T(wi * (1.0 - wj) * g);
          gxc[int64_t(i1) * W + j1] += T(wi * wj * g);
        }
      }
    }
  }
}

template <typename T>
void bn_channel_stats(const T* x, Shape xs, T* mean, T* var) {
  const int64_t plane = xs.plane();
  const int64_t count = int64_t(xs.n) * plane;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < xs.c; ++c) {
    T sum = T(0);
    for (int n = 0; n < xs.n; ++n) {
      const T* xc = x + (int64_t(n) * xs.c + c) * plane;
      for (int64_t p = 0; p < plane; ++p) sum += xc[p];
    }
    const T mu = sum / T(count);
    T sq = T(0);
    for (int n = 0; n < xs.n; ++n) {
      const T* xc = x + (int64_t(n) * xs.c + c) * plane;
      for (int64_t p = 0; p < plane; ++p) {
        const T d = xc[p] - mu;
        sq += d * d;
      }
    }
    mean[c] = mu;
    var[c] = sq / T(count);
  }
}

template <typename T>
void bn_normalize(const T* x, Shape xs, const T* mean, const T* inv_std,
                  T* y) {
  const int64_t plane = xs.plane();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      const T* xc = x + (int64_t(n) * xs.c + c) * plane;
      T* yc = y + (int64_t(n) * xs.c + c) * plane;
      for (int64_t p = 0; p < plane; ++p) {
        yc[p] = (xc[p] - mean[c]) * inv_std[c];
      }
    }
  }
}

template <typename T>
void bn_backward(const T* gy, const T* y, Shape xs, const T* inv_std, T* gx) {
  const int64_t plane = xs.plane();
  const int64_t count = int64_t(xs.n) * plane;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < xs.c; ++c) {
    T sum_g = T(0);
    T sum_gy = T(0);
    for (int n = 0; n < xs.n; ++n) {
      const int64_t off = (int64_t(n) * xs.c + c) * plane;
      for (int64_t p = 0; p < plane; ++p) {
        sum_g += gy[off + p];
        sum_gy += gy[off + p] * y[off + p];
      }
    }
    const T mean_g = sum_g / T(count);
    const T mean_gy = sum_gy / T(count);
    for (int n = 0; n < xs.n; ++n) {
      const int64_t off = (int64_t(n) * xs.c + c) * plane;
      for (int64_t p = 0; p < plane; ++p) {
        gx[off + p] +=
            inv_std[c] * (gy[off + p] - mean_g - y[off + p] * mean_gy);
      }
    }
  }
}

template void conv2d_forward<float>(const float*, Shape, const float*, int,
                                    int, int, const float*, float*);
template void conv2d_forward<double>(const double*, Shape, const double*, int,
                                     int, int, const double*, double*);
template void conv2d_backward_input<float>(const float*, Shape, const float*,
                                           int, int, int, float*);
template void conv2d_backward_input<double>(const double*, Shape, const double*,
                                            int, int, int, double*);
template void conv2d_backward_weights<float>(const float*, Shape, const float*,
                                             int, int, int, float*);
template void conv2d_backward_weights<double>(const double*, Shape,
                                              const double*, int, int, int,
                                              double*);
template void conv2d_backward_bias<float>(const float*, Shape, float*);
template void conv2d_backward_bias<double>(const double*, Shape, double*);
template void maxpool_forward<float>(const float*, Shape, int, float*,
                                     int64_t*);
template void maxpool_forward<double>(const double*, Shape, int, double*,
                                      int64_t*);
template void maxpool_backward<float>(const float*, Shape, const int64_t*,
                                      float*);
template void maxpool_backward<double>(const double*, Shape, const int64_t*,
                                       double*);
template void upsample_bilinear_forward<float>(const float*, Shape, int,
                                               float*);
template void upsample_bilinear_forward<double>(const double*, Shape, int,
                                                double*);
template void upsample_bilinear_backward<float>(const float*, Shape, int,
                                                float*);
template void upsample_bilinear_backward<double>(const double*, Shape, int,
                                                 double*);
template void bn_channel_stats<float>(const float*, Shape, float*, float*);
template void bn_channel_stats<double>(const double*, Shape, double*, double*);
template void bn_normalize<float>(const float*, Shape, const float*,
                                  const float*, float*);
template void bn_normalize<double>(const double*, Shape, const double*,
                                   const double*, double*);
template void bn_backward<float>(const float*, const float*, Shape,
                                 const float*, float*);
template void bn_backward<double>(const double*, const double*, Shape,
                                  const double*, double*);

}  // namespace mcnet::kern
