#include "cllac/losses.hpp"

#include <algorithm>
#include <cmath>

#include "cllac/errors.hpp"

namespace cllac::losses {
namespace {

void require_finite(double z) {
  if (!std::isfinite(z)) throw InvalidInput("loss argument must be finite");
}

void require_scale(const SurrogateLoss& loss) {
  if (!(loss.scale > 0.0) || !std::isfinite(loss.scale)) {
    throw InvalidInput("loss scale must be positive and finite");
  }
}

// ln(1 + e^-z) without overflow for large |z|.
double softplus_neg(double z) {
  if (z > 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

// 1 / (1 + e^z), stable in both tails.
double logistic_tail(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

double eval_loss(const SurrogateLoss& loss, double z) {
  require_finite(z);
  require_scale(loss);
  double v = 0.0;
  switch (loss.kind) {
    case LossKind::square:
      v = (1.0 - z) * (1.0 - z) / 4.0;
      break;
    case LossKind::logistic:
      v = softplus_neg(z);
      break;
    case LossKind::ramp:
      v = std::max(0.0, std::min(1.0, (1.0 - z) / 2.0));
      break;
    case LossKind::sigmoid:
      v = logistic_tail(z);
      break;
  }
  return loss.scale * v;
}

double eval_loss_grad(const SurrogateLoss& loss, double z) {
  require_finite(z);
  require_scale(loss);
  double g = 0.0;
  switch (loss.kind) {
    case LossKind::square:
      g = (z - 1.0) / 2.0;
      break;
    case LossKind::logistic:
      g = -logistic_tail(z);
      break;
    case LossKind::ramp:
      g = (z > -1.0 && z < 1.0) ? -0.5 : 0.0;
      break;
    case LossKind::sigmoid: {
      const double s = logistic_tail(z);
      g = -s * (1.0 - s);
      break;
    }
  }
  return loss.scale * g;
}

PropertyCheck check_property(const SurrogateLoss& loss, const LossProperty& prop) {
  if (prop.probe_points.empty()) throw InvalidInput("property check needs probe points");
  if (!(prop.tolerance >= 0.0)) throw InvalidInput("tolerance must be non-negative");
  PropertyCheck out{true, 0.0};
  for (double z : prop.probe_points) {
    require_finite(z);
    const double a = eval_loss(loss, z);
    const double b = eval_loss(loss, -z);
    const double residual = prop.name == PropertyName::linear_odd
                                ? std::abs((a - b) + z)
                                : std::abs((a + b) - loss.scale);
    out.max_residual = std::max(out.max_residual, residual);
  }
  out.holds = out.max_residual <= prop.tolerance;
  return out;
}

std::vector<double> default_probe_points() {
  std::vector<double> z;
  for (int i = -40; i <= 40; ++i) z.push_back(0.25 * i);
  return z;
}

bool is_linear_odd(const SurrogateLoss& loss) {
  return check_property(loss, {PropertyName::linear_odd, 1e-9, default_probe_points()}).holds;
}

bool is_symmetric(const SurrogateLoss& loss) {
  return check_property(loss, {PropertyName::symmetric, 1e-9, default_probe_points()}).holds;
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::square: return "square";
    case LossKind::logistic: return "logistic";
    case LossKind::ramp: return "ramp";
    case LossKind::sigmoid: return "sigmoid";
  }
  return "?";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "square") return LossKind::square;
  if (name == "logistic") return LossKind::logistic;
  if (name == "ramp") return LossKind::ramp;
  if (name == "sigmoid") return LossKind::sigmoid;
  throw InvalidInput("unknown loss kind '" + std::string(name) + "'");
}

}  // namespace cllac::losses
