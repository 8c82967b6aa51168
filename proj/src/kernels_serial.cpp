#include "cllac/errors.hpp"
#include "cllac/kernels.hpp"
#include "cllac/summation.hpp"

namespace cllac::kernels {

double weighted_sum_serial(std::span<const double> values, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != values.size()) {
    throw InvalidInput("weights and values differ in length");
  }
  CompensatedSum s;
  if (weights.empty()) {
    for (double v : values) s += v;
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) s += weights[i] * values[i];
  }
  return s.value();
}

void score_rows_serial(const model::OvrModel& model, const Matrix& x, Matrix& out) {
  out = Matrix(x.rows(), model.outputs());
  model::Workspace ws;
  for (std::size_t i = 0; i < x.rows(); ++i) model::score_into(model, x.row(i), out.row(i), ws);
}

void backprop_rows_serial(const model::OvrModel& model, const Matrix& x, const Matrix& upstream,
                          double scale, std::span<double> grad) {
  if (upstream.rows() != x.rows()) throw InvalidInput("upstream rows must match inputs");
  model::Workspace ws;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    model::accumulate_backprop(model, x.row(i), upstream.row(i), scale, grad, ws);
  }
}

double weighted_sum(std::span<const double> values, std::span<const double> weights,
                    const ExecPolicy& policy) {
  return policy.parallel ? weighted_sum_omp(values, weights, policy.threads)
                         : weighted_sum_serial(values, weights);
}

void score_rows(const model::OvrModel& model, const Matrix& x, Matrix& out,
                const ExecPolicy& policy) {
  if (policy.parallel) {
    score_rows_omp(model, x, out, policy.threads);
  } else {
    score_rows_serial(model, x, out);
  }
}

void backprop_rows(const model::OvrModel& model, const Matrix& x, const Matrix& upstream,
                   double scale, std::span<double> grad, const ExecPolicy& policy) {
  if (policy.parallel) {
    backprop_rows_omp(model, x, upstream, scale, grad, policy.threads);
  } else {
    backprop_rows_serial(model, x, upstream, scale, grad);
  }
}

}  // namespace cllac::kernels
