#include <algorithm>
#include <cmath>
#include <vector>

#include "mcnet/kernels.hpp"

namespace mcnet::ref {

// Builds the zero-padded copy of one (n,c) plane.
template <typename T>
static std::vector<T> padded_plane(const T* x, Shape xs, int n, int c, int pt,
                                   int pb, int pl, int pr) {
  const int PH = xs.h + pt + pb, PW = xs.w + pl + pr;
  std::vector<T> out(size_t(PH) * PW, T(0));
  for (int i = 0; i < xs.h; ++i) {
    for (int j = 0; j < xs.w; ++j) {
      out[size_t(i + pt) * PW + (j + pl)] =
          x[index4(xs, n, c, i, j)];
    }
  }
  return out;
}

template <typename T>
void conv2d_forward(const T* x, Shape xs, const T* w, int oc, int kh, int kw,
                    const T* bias, T* y) {
  const int pt = (kh - 1) / 2, pb = kh / 2;
  const int pl = (kw - 1) / 2, pr = kw / 2;
  const int PW = xs.w + pl + pr;
  const Shape ys{xs.n, oc, xs.h, xs.w};
  for (int n = 0; n < xs.n; ++n) {
    std::vector<std::vector<T>> planes;
    planes.reserve(size_t(xs.c));
    for (int c = 0; c < xs.c; ++c) {
      planes.push_back(padded_plane(x, xs, n, c, pt, pb, pl, pr));
    }
    for (int o = 0; o < oc; ++o) {
      for (int i = 0; i < xs.h; ++i) {
        for (int j = 0; j < xs.w; ++j) {
          T acc = bias[o];
          for (int c = 0; c < xs.c; ++c) {
            const std::vector<T>& p = planes[size_t(c)];
            for (int u = 0; u < kh; ++u) {
              for (int v = 0; v < kw; ++v) {
                acc += p[size_t(i + u) * PW + (j + v)] *
                       w[((int64_t(o) * xs.c + c) * kh + u) * kw + v];
              }
            }
          }
          y[index4(ys, n, o, i, j)] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* gy, Shape ys, const T* w, int ic, int kh,
                           int kw, T* gx) {
  const int pt = (kh - 1) / 2, pl = (kw - 1) / 2;
  const Shape xsin{ys.n, ic, ys.h, ys.w};
  for (int n = 0; n < ys.n; ++n) {
    for (int o = 0; o < ys.c; ++o) {
      for (int i = 0; i < ys.h; ++i) {
        for (int j = 0; j < ys.w; ++j) {
          const T g = gy[index4(ys, n, o, i, j)];
          for (int c = 0; c < ic; ++c) {
            for (int u = 0; u < kh; ++u) {
              const int yy = i + u - pt;
              if (yy < 0 || yy >= ys.h) continue;
              for (int v = 0; v < kw; ++v) {
                const int xx = j + v - pl;
                if (xx < 0 || xx >= ys.w) continue;
                gx[index4(xsin, n, c, yy, xx)] +=
                    g * w[((int64_t(o) * ic + c) * kh + u) * kw + v];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weights(const T* x, Shape xs, const T* gy, int oc, int kh,
                             int kw, T* gw) {
  const int pt = (kh - 1) / 2, pl = (kw - 1) / 2;
  const Shape ys{xs.n, oc, xs.h, xs.w};
  for (int n = 0; n < xs.n; ++n) {
    for (int o = 0; o < oc; ++o) {
      for (int i = 0; i < xs.h; ++i) {
        for (int j = 0; j < xs.w; ++j) {
          const T g = gy[index4(ys, n, o, i, j)];
          for (int c = 0; c < xs.c; ++c) {
            for (int u = 0; u < kh; ++u) {
              const int yy = i + u - pt;
              if (yy < 0 || yy >= xs.h) continue;
              for (int v = 0; v < kw; ++v) {
                const int xx = j + v - pl;
                if (xx < 0 || xx >= xs.w) continue;
                gw[((int64_t(o) * xs.c + c) * kh + u) * kw + v] +=
                    g * x[index4(xs, n, c, yy, xx)];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void maxpool_forward(const T* x, Shape xs, int pool, T* y) {
  const Shape ys{xs.n, xs.c, xs.h / pool, xs.w / pool};
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      for (int i = 0; i < ys.h; ++i) {
        for (int j = 0; j < ys.w; ++j) {
          T best = x[index4(xs, n, c, i * pool, j * pool)];
          for (int u = 0; u < pool; ++u) {
            for (int v = 0; v < pool; ++v) {
              best = std::max(best,
                              x[index4(xs, n, c, i * pool + u, j * pool + v)]);
            }
          }
          y[index4(ys, n, c, i, j)] = best;
        }
      }
    }
  }
}

// Closed-form per-output-pixel evaluation, pixel-center convention.
template <typename T>
void upsample_bilinear_forward(const T* x, Shape xs, int factor, T* y) {
  const Shape ys{xs.n, xs.c, xs.h * factor, xs.w * factor};
  auto sample = [&](int n, int c, double si, double sj) {
    const double ci = std::clamp(si, 0.0, double(xs.h - 1));
    const double cj = std::clamp(sj, 0.0, double(xs.w - 1));
    const int i0 = int(std::floor(ci));
    const int j0 = int(std::floor(cj));
    const int i1 = std::min(i0 + 1, xs.h - 1);
    const int j1 = std::min(j0 + 1, xs.w - 1);
    const double a = ci - i0, b = cj - j0;
    return (1 - a) * (1 - b) * double(x[index4(xs, n, c, i0, j0)]) +
           (1 - a) * b * double(x[index4(xs, n, c, i0, j1)]) +
           a * (1 - b) * double(x[index4(xs, n, c, i1, j0)]) +
           a * b * double(x[index4(xs, n, c, i1, j1)]);
  };
  for (int n = 0; n < ys.n; ++n) {
    for (int c = 0; c < ys.c; ++c) {
      for (int i = 0; i < ys.h; ++i) {
        for (int j = 0; j < ys.w; ++j) {
          y[index4(ys, n, c, i, j)] =
              T(sample(n, c, (i + 0.5) / factor - 0.5,
                       (j + 0.5) / factor - 0.5));
        }
      }
    }
  }
}

template <typename T>
void bn_channel_stats(const T* x, Shape xs, T* mean, T* var) {
  const int64_t count = int64_t(xs.n) * xs.plane();
  for (int c = 0; c < xs.c; ++c) {
    double sum = 0.0;
    for (int n = 0; n < xs.n; ++n) {
      for (int i = 0; i < xs.h; ++i) {
        for (int j = 0; j < xs.w; ++j) {
          sum += double(x[index4(xs, n, c, i, j)]);
        }
      }
    }
    const double mu = sum / double(count);
    double sq = 0.0;
    for (int n = 0; n < xs.n; ++n) {
      for (int i = 0; i < xs.h; ++i) {
        for (int j = 0; j < xs.w; ++j) {
          const double d = double(x[index4(xs, n, c, i, j)]) - mu;
          sq += d * d;
        }
      }
    }
    mean[c] = T(mu);
    var[c] = T(sq / double(count));
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
template void maxpool_forward<float>(const float*, Shape, int, float*);
template void maxpool_forward<double>(const double*, Shape, int, double*);
template void upsample_bilinear_forward<float>(const float*, Shape, int,
                                               float*);
template void upsample_bilinear_forward<double>(const double*, Shape, int,
                                                double*);
template void bn_channel_stats<float>(const float*, Shape, float*, float*);
template void bn_channel_stats<double>(const double*, Shape, double*, double*);

}  // namespace mcnet::ref
