#include "cllac/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "cllac/errors.hpp"
#include "cllac/rng.hpp"
#include "cllac/summation.hpp"

namespace cllac::train {
namespace {

constexpr double kVarianceFloor = 1e-8;

// Fisher-Yates driven by the counter RNG.
std::vector<std::size_t> shuffled(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = x.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

template <typename T>
std::vector<T> gather(const std::vector<T>& v, std::span<const std::size_t> idx) {
  std::vector<T> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

class Stepper {
 public:
  Stepper(const StepConfig& cfg, std::size_t n) : cfg_(cfg), a_(n, 0.0), b_(n, 0.0) {}

  void apply(std::span<double> params, std::span<const double> grad) {
    const double lr = cfg_.lr;
    switch (cfg_.rule) {
      case StepRule::fixed:
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
        break;
      case StepRule::momentum:
        for (std::size_t i = 0; i < params.size(); ++i) {
          a_[i] = cfg_.momentum * a_[i] + grad[i];
          params[i] -= lr * a_[i];
        }
        break;
      case StepRule::adaptive: {
        const double rho = cfg_.decay;
        const double eps = cfg_.epsilon;
        for (std::size_t i = 0; i < params.size(); ++i) {
          a_[i] = rho * a_[i] + (1.0 - rho) * grad[i] * grad[i];
          const double delta = std::sqrt(b_[i] + eps) / std::sqrt(a_[i] + eps) * grad[i];
          b_[i] = rho * b_[i] + (1.0 - rho) * delta * delta;
          params[i] -= lr * delta;
        }
        break;
      }
    }
  }

 private:
  StepConfig cfg_;
  std::vector<double> a_;  // velocity, or running mean of squared gradients
  std::vector<double> b_;  // running mean of squared updates
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

void validate(const TrainConfig& cfg) {
  risks::check_form(cfg.form, cfg.ctx);
  if (!(cfg.step.lr >= 0.0) || !std::isfinite(cfg.step.lr)) throw InvalidInput("lr must be >= 0");
  if (cfg.epochs < 1) throw InvalidInput("epochs must be >= 1");
  if (cfg.batch_size < 1) throw InvalidInput("batch_size must be >= 1");
  if (!(cfg.weight_decay >= 0.0)) throw InvalidInput("weight_decay must be >= 0");
  if (cfg.step.rule == StepRule::momentum && !(cfg.step.momentum >= 0.0 && cfg.step.momentum < 1.0)) {
    throw InvalidInput("momentum must lie in [0, 1)");
  }
  if (cfg.step.rule == StepRule::adaptive &&
      !(cfg.step.decay > 0.0 && cfg.step.decay < 1.0 && cfg.step.epsilon > 0.0)) {
    throw InvalidInput("adaptive rule needs decay in (0, 1) and epsilon > 0");
  }
}

double default_weight_decay(risks::RiskForm form) {
  return form == risks::RiskForm::cllac_convex ? 0.0 : 1e-4;
}

TrainResult train(model::OvrModel model, const risks::RiskData& data, const TrainConfig& cfg) {
  validate(cfg);
  const bool supervised = cfg.form == risks::RiskForm::supervised_ovr;
  const bool uses_u = risks::is_cllac(cfg.form);

  // Primary set drives the batch count; the unlabeled set is split into as
  // many batches so each step sees both.
  const std::size_t n_primary = supervised ? (data.labeled ? data.labeled->size() : 0)
                                           : (data.cl ? data.cl->size() : 0);
  const std::size_t n_u = uses_u && data.u ? data.u->size() : 0;
  if (n_primary == 0 || (uses_u && n_u == 0)) throw InvalidInput("training data is empty");
  if ((!data.cl_weights.empty()) || (!data.u_weights.empty()) || (!data.labeled_weights.empty())) {
    throw InvalidInput("training uses plain averages; weighted data is not supported");
  }

  const std::size_t steps = (n_primary + cfg.batch_size - 1) / cfg.batch_size;
  const auto full_risk = [&](const model::OvrModel& m) {
    return risks::emp_risk(cfg.form, m, data, cfg.ctx, cfg.policy);
  };

  TrainResult result{model, full_risk(model), {}};
  if (!std::isfinite(result.initial_risk)) {
    throw TrainingDivergence("initial risk is not finite", result);
  }

  CounterRng rng(cfg.seed, "train");
  Stepper stepper(cfg.step, model.params().size());
  std::vector<double> grad(model.params().size());
  const auto started = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    CounterRng epoch_rng = rng.split("epoch-" + std::to_string(epoch));
    const auto order = shuffled(n_primary, epoch_rng);
    const auto order_u = shuffled(n_u, epoch_rng);

    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t lo = s * n_primary / steps;
      const std::size_t hi = (s + 1) * n_primary / steps;
      const std::span<const std::size_t> idx(order.data() + lo, hi - lo);

      dists::ComplementaryDataset cl_batch;
      dists::UnlabeledDataset u_batch;
      dists::TestDataset labeled_batch;
      risks::RiskData batch;
      if (supervised) {
        labeled_batch.x = gather_rows(data.labeled->x, idx);
        labeled_batch.y = gather(data.labeled->y, idx);
        labeled_batch.classes = data.labeled->classes;
        batch.labeled = &labeled_batch;
      } else {
        cl_batch.x = gather_rows(data.cl->x, idx);
        cl_batch.ybar = gather(data.cl->ybar, idx);
        cl_batch.classes = data.cl->classes;
        batch.cl = &cl_batch;
      }
      if (uses_u) {
        const std::size_t ulo = s * n_u / steps;
        const std::size_t uhi = std::max((s + 1) * n_u / steps, ulo + 1);
        const std::span<const std::size_t> uidx(order_u.data() + ulo, std::min(uhi, n_u) - ulo);
        u_batch.x = gather_rows(data.u->x, uidx);
        batch.u = &u_batch;
      }

      // Losses reject non-finite scores; after an update that only means the
      // step blew up, so report it as divergence with the last good state.
      try {
        risks::emp_risk_and_grad(cfg.form, model, batch, cfg.ctx, grad, cfg.policy);
      } catch (const InvalidInput&) {
        throw TrainingDivergence("scores became non-finite in epoch " + std::to_string(epoch), result);
      }
      if (cfg.weight_decay > 0.0) {
        const auto p = model.params();
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.weight_decay * p[i];
      }
      stepper.apply(model.params(), grad);
      const auto p = model.params();
      if (!std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); })) {
        throw TrainingDivergence("parameters became non-finite in epoch " + std::to_string(epoch),
                                 result);
      }
    }

    double r;
    try {
      r = full_risk(model);
    } catch (const InvalidInput&) {
      r = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(r)) {
      throw TrainingDivergence("risk became non-finite in epoch " + std::to_string(epoch),
                               result);
    }
    result.model = model;
    result.history.push_back({epoch, r, elapsed_ms(started)});
  }
  return result;
}

TrainResult train(model::OvrModel model, const dists::ComplementaryDataset& cl,
                  const dists::UnlabeledDataset& u, const TrainConfig& cfg) {
  risks::RiskData data;
  data.cl = &cl;
  data.u = &u;
  return train(std::move(model), data, cfg);
}

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch,emp_risk,wall_ms\n";
  os.precision(17);
  for (const auto& h : history) os << h.epoch << ',' << h.emp_risk << ',' << h.wall_ms << '\n';
}

Metrics evaluate(const model::OvrModel& model, const dists::TestDataset& test,
                 const kernels::ExecPolicy& policy) {
  if (test.size() == 0) throw InvalidInput("test set is empty");
  if (test.classes != model.classes()) throw InvalidInput("test K does not match model");
  if (test.y.size() != test.size()) throw InvalidInput("test labels do not match features");
  const auto k = static_cast<std::size_t>(model.classes());
  Matrix scores;
  kernels::score_rows(model, test.x, scores, policy);

  std::vector<std::size_t> correct(k + 1, 0);
  std::vector<std::size_t> count(k + 1, 0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const int y = test.y[i];
    if (y < 0 || static_cast<std::size_t>(y) > k) throw InvalidInput("test label out of range");
    const bool ok = model::argmax(scores.row(i)) == y;
    ++count[static_cast<std::size_t>(y)];
    if (ok) {
      ++correct[static_cast<std::size_t>(y)];
      ++hits;
    }
  }

  Metrics m;
  m.samples = test.size();
  m.overall_accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
  m.per_class_count = count;
  m.per_class_accuracy.resize(k + 1);
  for (std::size_t c = 0; c <= k; ++c) {
    m.per_class_accuracy[c] = count[c] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                            : static_cast<double>(correct[c]) / static_cast<double>(count[c]);
  }
  m.ac_recall = m.per_class_accuracy[k];
  return m;
}

void Standardizer::apply(Matrix& x) const {
  if (x.cols() != mean.size()) throw InvalidInput("standardizer dimension mismatch");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = (r[j] - mean[j]) / scale[j];
  }
}

Standardizer fit_standardizer(const Matrix& pool) {
  if (pool.rows() == 0) throw InvalidInput("standardizer pool is empty");
  const std::size_t d = pool.cols();
  const auto n = static_cast<double>(pool.rows());
  Standardizer s{std::vector<double>(d), std::vector<double>(d)};
  for (std::size_t j = 0; j < d; ++j) {
    CompensatedSum sum;
    for (std::size_t i = 0; i < pool.rows(); ++i) sum += pool(i, j);
    const double mu = sum.value() / n;
    CompensatedSum sq;
    for (std::size_t i = 0; i < pool.rows(); ++i) {
      const double c = pool(i, j) - mu;
      sq += c * c;
    }
    s.mean[j] = mu;
    s.scale[j] = std::sqrt(std::max(sq.value() / n, kVarianceFloor));
  }
  return s;
}

Standardizer fit_standardizer(const dists::ComplementaryDataset& cl,
                              const dists::UnlabeledDataset& u) {
  Matrix pool(0, cl.x.cols());
  for (std::size_t i = 0; i < cl.size(); ++i) pool.append_row(cl.x.row(i));
  for (std::size_t i = 0; i < u.size(); ++i) pool.append_row(u.x.row(i));
  return fit_standardizer(pool);
}

}  // namespace cllac::train
