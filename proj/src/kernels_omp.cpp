#include <omp.h>

#include <vector>

#include "cllac/errors.hpp"
#include "cllac/kernels.hpp"
#include "cllac/summation.hpp"

namespace cllac::kernels {
namespace {

int thread_count(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

// Exceptions cannot leave a parallel region, so shapes are checked up front.
void check_shapes(const model::OvrModel& model, const Matrix& x) {
  if (x.rows() > 0 && x.cols() != model.dim()) throw InvalidInput("input dimension does not match model");
}

}  // namespace

double weighted_sum_omp(std::span<const double> values, std::span<const double> weights,
                        int threads) {
  if (!weights.empty() && weights.size() != values.size()) {
    throw InvalidInput("weights and values differ in length");
  }
  const int nt = thread_count(threads);
  std::vector<CompensatedSum> partial(static_cast<std::size_t>(nt));
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const bool weighted = !weights.empty();

#pragma omp parallel num_threads(nt)
  {
    CompensatedSum& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      mine += weighted ? weights[i] * values[i] : values[i];
    }
  }

  CompensatedSum total;
  for (const auto& p : partial) total.merge(p);
  return total.value();
}

void score_rows_omp(const model::OvrModel& model, const Matrix& x, Matrix& out, int threads) {
  check_shapes(model, x);
  out = Matrix(x.rows(), model.outputs());
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel num_threads(thread_count(threads))
  {
    model::Workspace ws;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) model::score_into(model, x.row(i), out.row(i), ws);
  }
}

void backprop_rows_omp(const model::OvrModel& model, const Matrix& x, const Matrix& upstream,
                       double scale, std::span<double> grad, int threads) {
  check_shapes(model, x);
  if (upstream.rows() != x.rows()) throw InvalidInput("upstream rows must match inputs");
  if (x.rows() > 0 && upstream.cols() != model.outputs()) throw InvalidInput("upstream has wrong width");
  if (grad.size() != model.params().size()) throw InvalidInput("gradient buffer has wrong size");
  const int nt = thread_count(threads);
  const std::size_t p = grad.size();
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(nt), std::vector<double>(p, 0.0));
  const auto n = static_cast<std::ptrdiff_t>(x.rows());

#pragma omp parallel num_threads(nt)
  {
    auto& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
    model::Workspace ws;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      model::accumulate_backprop(model, x.row(i), upstream.row(i), scale, mine, ws);
    }
  }

  for (const auto& part : partial) {
    for (std::size_t j = 0; j < p; ++j) grad[j] += part[j];
  }
}

}  // namespace cllac::kernels
