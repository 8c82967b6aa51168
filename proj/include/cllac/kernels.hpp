#pragma once

#include <span>

#include "cllac/matrix.hpp"
#include "cllac/model.hpp"

// Data-parallel inner loops of risk evaluation and training. Every kernel has
// a serial reference (compensated, bit-reproducible) and an OpenMP variant.
// The OpenMP variants reduce per-thread partials in thread order, so their
// results match the serial ones to rounding but not bit-for-bit.
namespace cllac::kernels {

struct ExecPolicy {
  bool parallel = false;
  int threads = 0;  // 0: OpenMP default

  static ExecPolicy serial() { return {}; }
  static ExecPolicy omp(int threads = 0) { return {true, threads}; }
};

/// sum_i w_i * v_i; with empty weights, sum_i v_i.
double weighted_sum_serial(std::span<const double> values, std::span<const double> weights);
double weighted_sum_omp(std::span<const double> values, std::span<const double> weights,
                        int threads);

/// out.row(i) = F(x.row(i)); out is resized to n x outputs.
void score_rows_serial(const model::OvrModel& model, const Matrix& x, Matrix& out);
void score_rows_omp(const model::OvrModel& model, const Matrix& x, Matrix& out, int threads);

/// grad += scale * sum_i J_i^T upstream.row(i), J_i the Jacobian of F at x.row(i).
void backprop_rows_serial(const model::OvrModel& model, const Matrix& x, const Matrix& upstream,
                          double scale, std::span<double> grad);
void backprop_rows_omp(const model::OvrModel& model, const Matrix& x, const Matrix& upstream,
                       double scale, std::span<double> grad, int threads);

// Dispatch on policy.
double weighted_sum(std::span<const double> values, std::span<const double> weights,
                    const ExecPolicy& policy);
void score_rows(const model::OvrModel& model, const Matrix& x, Matrix& out,
                const ExecPolicy& policy);
void backprop_rows(const model::OvrModel& model, const Matrix& x, const Matrix& upstream,
                   double scale, std::span<double> grad, const ExecPolicy& policy);

}  // namespace cllac::kernels
