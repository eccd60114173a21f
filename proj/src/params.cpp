#include "mcnet/params.hpp"

#include <cmath>

#include "mcnet/error.hpp"

namespace mcnet {

namespace {

template <typename T>
void adam_update(std::vector<T>& value, const std::vector<T>& grad,
                 std::vector<T>& m, std::vector<T>& v, const AdamConfig& cfg,
                 double bias1, double bias2) {
  const int64_t n = int64_t(value.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const double g = double(grad[i]);
    const double mi = cfg.beta1 * double(m[i]) + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * double(v[i]) + (1.0 - cfg.beta2) * g * g;
    m[i] = T(mi);
    v[i] = T(vi);
    const double m_hat = mi / bias1;
    const double v_hat = vi / bias2;
    value[i] = T(double(value[i]) -
                 cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

}  // namespace

template <typename T>
void adam_step(const std::vector<LayerParams<T>*>& params,
               const AdamConfig& cfg) {
  for (LayerParams<T>* p : params) {
    if (!p->weights->has_grad() || !p->bias->has_grad()) {
      fail(ErrorClass::numeric,
           "adam_step: missing gradients for '" + p->name +
               "' (run backward first)");
    }
  }
  for (LayerParams<T>* p : params) {
    p->step_count += 1;
    const double bias1 = 1.0 - std::pow(cfg.beta1, double(p->step_count));
    const double bias2 = 1.0 - std::pow(cfg.beta2, double(p->step_count));
    adam_update(p->weights->v, p->weights->g, p->m_w, p->v_w, cfg, bias1,
                bias2);
    adam_update(p->bias->v, p->bias->g, p->m_b, p->v_b, cfg, bias1, bias2);
  }
}

template <typename T>
void zero_grads(const std::vector<LayerParams<T>*>& params) {
  for (LayerParams<T>* p : params) {
    p->weights->ensure_grad();
    p->bias->ensure_grad();
    p->weights->zero_grad();
    p->bias->zero_grad();
  }
}

template void adam_step<float>(const std::vector<LayerParams<float>*>&,
                               const AdamConfig&);
template void adam_step<double>(const std::vector<LayerParams<double>*>&,
                                const AdamConfig&);
template void zero_grads<float>(const std::vector<LayerParams<float>*>&);
template void zero_grads<double>(const std::vector<LayerParams<double>*>&);

}  // namespace mcnet
