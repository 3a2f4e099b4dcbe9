#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ambidoa/estimator.hpp"

namespace ambidoa {

double loss_categorical(std::span<const double> probs, std::size_t frames, std::size_t classes,
                        std::size_t class_index, std::vector<double>* grad) {
  if (probs.size() != frames * classes) throw std::invalid_argument("loss_categorical: size mismatch");
  if (class_index >= classes) throw std::invalid_argument("loss_categorical: class index out of range");
  if (grad) grad->assign(probs.size(), 0.0);
  const double inv_t = 1.0 / static_cast<double>(frames);
  double loss = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < classes; ++k) {
      const double raw = probs[t * classes + k];
      const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
      const bool hot = k == class_index;
      loss -= hot ? std::log(p) : std::log1p(-p);
      if (grad && raw == p) (*grad)[t * classes + k] = (hot ? -1.0 / p : 1.0 / (1.0 - p)) * inv_t;
    }
  }
  return loss * inv_t;
}

double loss_cartesian(std::span<const double> outputs, std::size_t frames, const Vec3& label,
                      std::vector<double>* grad) {
  if (outputs.size() != frames * 3) throw std::invalid_argument("loss_cartesian: size mismatch");
  if (grad) grad->assign(outputs.size(), 0.0);
  const double scale = 1.0 / (3.0 * static_cast<double>(frames));
  double loss = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    for (int k = 0; k < 3; ++k) {
      const double diff = outputs[t * 3 + k] - label[k];
      loss += diff * diff;
      if (grad) (*grad)[t * 3 + k] = 2.0 * diff * scale;
    }
  }
  return loss * scale;
}

double loss_haversine(std::span<const double> outputs, std::size_t frames, const Direction& label,
                      std::vector<double>* grad) {
  if (outputs.size() != frames * 2) throw std::invalid_argument("loss_haversine: size mismatch");
  if (grad) grad->assign(outputs.size(), 0.0);
  const double inv_t = 1.0 / static_cast<double>(frames);
  const double cos_l = std::cos(label.elevation);
  double loss = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double az = outputs[t * 2];
    const double el = outputs[t * 2 + 1];
    const double d_el = label.elevation - el;
    const double d_az = label.azimuth - az;
    const double s_el = std::sin(0.5 * d_el);
    const double s_az = std::sin(0.5 * d_az);
    const double cos_o = std::cos(el);
    const double h_raw = s_el * s_el + cos_o * cos_l * s_az * s_az;
    const double h = std::clamp(h_raw, kHaversineClamp, 1.0 - kHaversineClamp);
    loss += 2.0 * std::asin(std::sqrt(h));
    if (grad && h == h_raw) {
      const double dd_dh = 1.0 / (std::sqrt(h) * std::sqrt(1.0 - h));
      const double dh_del = -0.5 * std::sin(d_el) - std::sin(el) * cos_l * s_az * s_az;
      const double dh_daz = -0.5 * cos_o * cos_l * std::sin(d_az);
      (*grad)[t * 2] = dd_dh * dh_daz * inv_t;
      (*grad)[t * 2 + 1] = dd_dh * dh_del * inv_t;
    }
  }
  return loss * inv_t;
}

double sample_loss(const Formulation& f, std::span<const double> outputs, std::size_t frames,
                   const Target& target, std::vector<double>* grad) {
  switch (f.kind()) {
    case FormulationKind::categorical:
      return loss_categorical(outputs, frames, f.output_dim(), target.class_index, grad);
    case FormulationKind::cartesian:
      return loss_cartesian(outputs, frames, target.direction.unit(), grad);
    case FormulationKind::spherical:
      return loss_haversine(outputs, frames, target.direction, grad);
  }
  throw std::logic_error("sample_loss: unknown formulation");
}

}  // namespace ambidoa
