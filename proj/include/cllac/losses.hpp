#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cllac::losses {

enum class LossKind { square, logistic, ramp, sigmoid };

/// Binary margin loss phi(z), multiplied by `scale`.
///   square   (1 - z)^2 / 4
///   logistic ln(1 + e^-z)
///   ramp     max(0, min(1, (1 - z) / 2))
///   sigmoid  1 / (1 + e^z)
struct SurrogateLoss {
  LossKind kind = LossKind::square;
  double scale = 1.0;
};

enum class PropertyName {
  linear_odd,  // phi(z) - phi(-z) == -z
  symmetric,   // phi(z) + phi(-z) == scale
};

struct LossProperty {
  PropertyName name = PropertyName::linear_odd;
  double tolerance = 1e-12;
  std::vector<double> probe_points;
};

struct PropertyCheck {
  bool holds = false;
  double max_residual = 0.0;
};

double eval_loss(const SurrogateLoss& loss, double z);

/// d phi / dz. Ramp kinks at z = +-1 take the flat-side value 0.
double eval_loss_grad(const SurrogateLoss& loss, double z);

PropertyCheck check_property(const SurrogateLoss& loss, const LossProperty& prop);

/// Probe grid used when a risk form needs to certify a loss property.
std::vector<double> default_probe_points();

bool is_linear_odd(const SurrogateLoss& loss);
bool is_symmetric(const SurrogateLoss& loss);

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

}  // namespace cllac::losses
