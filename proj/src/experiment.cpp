#include "cllac/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cllac/errors.hpp"
#include "cllac/rng.hpp"
#include "cllac/summation.hpp"

namespace cllac::experiment {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kDefaultSyntheticTest = 2000;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t derive(std::uint64_t seed, std::string_view tag) {
  return CounterRng(seed, tag).next_u64();
}

std::vector<std::size_t> shuffled(std::vector<std::size_t> idx, CounterRng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Matrix matrix_from_json(const json& j) {
  Matrix m;
  for (const auto& row : j) m.append_row(row.get<std::vector<double>>());
  return m;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

// JSON has no NaN; unavailable metrics are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* step_rule_name(train::StepRule r) {
  switch (r) {
    case train::StepRule::fixed: return "fixed";
    case train::StepRule::momentum: return "momentum";
    case train::StepRule::adaptive: return "adaptive";
  }
  return "adaptive";
}

train::StepRule step_rule_from_string(const std::string& s) {
  if (s == "fixed") return train::StepRule::fixed;
  if (s == "momentum") return train::StepRule::momentum;
  if (s == "adaptive") return train::StepRule::adaptive;
  throw ConfigError("unknown step rule '" + s + "'");
}

// Position of every original class id in the known list, or -1.
std::vector<int> known_index(const ExperimentConfig& cfg, int max_id) {
  std::vector<int> map(static_cast<std::size_t>(max_id) + 1, -1);
  for (std::size_t k = 0; k < cfg.known_classes.size(); ++k) {
    const int id = cfg.known_classes[k];
    if (id >= 0 && id <= max_id) map[static_cast<std::size_t>(id)] = static_cast<int>(k);
  }
  return map;
}

struct SplitPools {
  std::vector<std::size_t> known;  // indices into the pool
  std::vector<std::size_t> augmented;
};

SplitPools split_pool(const idx::LabeledPool& pool, const ExperimentConfig& cfg) {
  const std::set<int> known(cfg.known_classes.begin(), cfg.known_classes.end());
  const std::set<int> aug(cfg.augmented_classes.begin(), cfg.augmented_classes.end());
  SplitPools out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (known.count(pool.y[i])) out.known.push_back(i);
    if (aug.count(pool.y[i])) out.augmented.push_back(i);
  }
  return out;
}

void copy_row(const Matrix& src, std::size_t from, Matrix& dst, std::size_t to) {
  const auto r = src.row(from);
  std::copy(r.begin(), r.end(), dst.row(to).begin());
}

double pool_theta(const RawData& raw, const ExperimentConfig& cfg) {
  if (cfg.theta) return *cfg.theta;
  if (!raw.train) throw ConfigError("theta is required for synthetic datasets");
  const auto p = split_pool(*raw.train, cfg);
  return static_cast<double>(p.known.size()) /
         static_cast<double>(p.known.size() + p.augmented.size());
}

train::Metrics average_metrics(const std::vector<train::Metrics>& ms) {
  train::Metrics out = ms.front();
  const double n = static_cast<double>(ms.size());
  out.overall_accuracy = 0.0;
  out.ac_recall = 0.0;
  std::fill(out.per_class_accuracy.begin(), out.per_class_accuracy.end(), 0.0);
  for (const auto& m : ms) {
    out.overall_accuracy += m.overall_accuracy / n;
    out.ac_recall += m.ac_recall / n;
    for (std::size_t c = 0; c < out.per_class_accuracy.size(); ++c) {
      out.per_class_accuracy[c] += m.per_class_accuracy[c] / n;
    }
  }
  return out;
}

}  // namespace

bool ExperimentConfig::has_augmented_head() const {
  return augmented_head.value_or(!risks::is_cl(train.form));
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.known_classes.size() < 2) throw ConfigError("at least two known classes are required");
  std::set<int> seen;
  for (int id : cfg.known_classes) {
    if (!seen.insert(id).second) throw ConfigError("known class listed twice: " + std::to_string(id));
  }
  for (int id : cfg.augmented_classes) {
    if (!seen.insert(id).second) {
      throw ConfigError("class " + std::to_string(id) + " is both known and augmented or repeated");
    }
  }
  if (cfg.theta && !(*cfg.theta >= 0.0 && *cfg.theta <= 1.0)) {
    throw ConfigError("theta must lie in [0, 1]");
  }
  if (!(cfg.eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(cfg.mu > 0.0)) throw ConfigError("mu must be positive");
  if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (cfg.train.form == risks::RiskForm::supervised_ovr) {
    throw ConfigError("supervised_ovr needs labeled training data, which experiments do not have");
  }
  if (risks::is_cllac(cfg.train.form) && !cfg.has_augmented_head()) {
    throw ConfigError("cllac forms need the augmented head");
  }

  if (cfg.dataset.kind == DatasetKind::synthetic) {
    if (!cfg.theta) throw ConfigError("synthetic datasets need theta");
    if (cfg.n_kcl == 0) throw ConfigError("synthetic datasets need n_kcl");
    std::set<int> ids;
    std::size_t d = 0;
    for (const auto& c : cfg.dataset.classes) {
      ids.insert(c.id);
      if (c.mean.empty()) throw ConfigError("synthetic class " + std::to_string(c.id) + " has no mean");
      if (d == 0) d = c.mean.size();
      if (c.mean.size() != d) throw ConfigError("synthetic means differ in dimension");
      if (!(c.prior > 0.0) || !(c.sigma > 0.0)) throw ConfigError("prior and sigma must be positive");
    }
    for (int id : seen) {
      if (!ids.count(id)) throw ConfigError("class " + std::to_string(id) + " has no synthetic definition");
    }
    if (cfg.augmented_classes.empty() && *cfg.theta < 1.0) {
      throw ConfigError("theta < 1 needs at least one augmented class");
    }
  } else {
    if (cfg.dataset.idx.train_images.empty() || cfg.dataset.idx.test_images.empty()) {
      throw ConfigError("idx datasets need train and test paths");
    }
    if (cfg.augmented_classes.empty()) throw ConfigError("idx datasets need augmented classes");
  }
  auto probe = cfg.train;
  probe.ctx = {cfg.classes(), cfg.theta.value_or(0.5), cfg.loss};
  try {
    train::validate(probe);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    const json& ds = j.at("dataset");
    const std::string kind = get_or<std::string>(ds, "kind", "synthetic");
    if (kind == "synthetic") {
      cfg.dataset.kind = DatasetKind::synthetic;
      for (const auto& c : ds.at("classes")) {
        SyntheticClass sc;
        sc.id = c.at("id").get<int>();
        sc.mean = c.at("mean").get<std::vector<double>>();
        sc.sigma = get_or(c, "sigma", 1.0);
        sc.prior = get_or(c, "prior", 1.0);
        if (c.contains("covariance")) sc.covariance = matrix_from_json(c.at("covariance"));
        cfg.dataset.classes.push_back(std::move(sc));
      }
    } else if (kind == "idx") {
      cfg.dataset.kind = DatasetKind::idx;
      cfg.dataset.idx.train_images = ds.at("train_images").get<std::string>();
      cfg.dataset.idx.train_labels = ds.at("train_labels").get<std::string>();
      cfg.dataset.idx.test_images = ds.at("test_images").get<std::string>();
      cfg.dataset.idx.test_labels = ds.at("test_labels").get<std::string>();
    } else {
      throw ConfigError("unknown dataset kind '" + kind + "'");
    }

    cfg.known_classes = j.at("known_classes").get<std::vector<int>>();
    cfg.augmented_classes = get_or(j, "augmented_classes", std::vector<int>{});
    if (j.contains("theta") && !j.at("theta").is_null()) cfg.theta = j.at("theta").get<double>();
    cfg.eta = get_or(j, "eta", 1.0);
    cfg.mu = get_or(j, "mu", 1.0);
    cfg.n_kcl = get_or<std::size_t>(j, "n_kcl", 0);
    cfg.n_u = get_or<std::size_t>(j, "n_u", 0);
    cfg.n_te = get_or<std::size_t>(j, "n_te", 0);
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.repeats = get_or<std::size_t>(j, "repeats", 1);
    cfg.threads = get_or<std::size_t>(j, "threads", 0);

    if (j.contains("loss")) {
      const json& l = j.at("loss");
      cfg.loss.kind = losses::loss_kind_from_string(get_or<std::string>(l, "kind", "square"));
      cfg.loss.scale = get_or(l, "scale", 1.0);
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      const std::string arch = get_or<std::string>(m, "arch", "linear");
      if (arch == "linear") {
        cfg.arch = model::Arch::linear();
      } else if (arch == "mlp") {
        cfg.arch = model::Arch::mlp(m.at("hidden").get<std::vector<std::size_t>>());
      } else {
        throw ConfigError("unknown model arch '" + arch + "'");
      }
      if (m.contains("augmented_head")) cfg.augmented_head = m.at("augmented_head").get<bool>();
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      if (t.contains("form")) cfg.train.form = risks::risk_form_from_string(t.at("form").get<std::string>());
      cfg.train.epochs = get_or(t, "epochs", cfg.train.epochs);
      cfg.train.batch_size = get_or(t, "batch_size", cfg.train.batch_size);
      cfg.train.standardize = get_or(t, "standardize", cfg.train.standardize);
      if (t.contains("weight_decay")) {
        cfg.train.weight_decay = t.at("weight_decay").get<double>();
        cfg.weight_decay_set = true;
      }
      if (t.contains("step")) {
        const json& s = t.at("step");
        cfg.train.step.rule = step_rule_from_string(get_or<std::string>(s, "rule", "adaptive"));
        cfg.train.step.lr = get_or(s, "lr", cfg.train.step.lr);
        cfg.train.step.momentum = get_or(s, "momentum", cfg.train.step.momentum);
        cfg.train.step.decay = get_or(s, "decay", cfg.train.step.decay);
        cfg.train.step.epsilon = get_or(s, "epsilon", cfg.train.step.epsilon);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (!cfg.weight_decay_set) cfg.train.weight_decay = train::default_weight_decay(cfg.train.form);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json ds;
  if (cfg.dataset.kind == DatasetKind::synthetic) {
    ds["kind"] = "synthetic";
    json classes = json::array();
    for (const auto& c : cfg.dataset.classes) {
      json jc{{"id", c.id}, {"mean", c.mean}, {"sigma", c.sigma}, {"prior", c.prior}};
      if (!c.covariance.empty()) jc["covariance"] = matrix_to_json(c.covariance);
      classes.push_back(std::move(jc));
    }
    ds["classes"] = std::move(classes);
  } else {
    ds = {{"kind", "idx"},
          {"train_images", cfg.dataset.idx.train_images.string()},
          {"train_labels", cfg.dataset.idx.train_labels.string()},
          {"test_images", cfg.dataset.idx.test_images.string()},
          {"test_labels", cfg.dataset.idx.test_labels.string()}};
  }
  json m{{"arch", cfg.arch.kind == model::ArchKind::linear ? "linear" : "mlp"},
         {"augmented_head", cfg.has_augmented_head()}};
  if (cfg.arch.kind == model::ArchKind::mlp) m["hidden"] = cfg.arch.hidden;
  const auto& s = cfg.train.step;
  json j{{"dataset", ds},
         {"known_classes", cfg.known_classes},
         {"augmented_classes", cfg.augmented_classes},
         {"theta", cfg.theta ? json(*cfg.theta) : json(nullptr)},
         {"eta", cfg.eta},
         {"mu", cfg.mu},
         {"n_kcl", cfg.n_kcl},
         {"n_u", cfg.n_u},
         {"n_te", cfg.n_te},
         {"loss", {{"kind", losses::to_string(cfg.loss.kind)}, {"scale", cfg.loss.scale}}},
         {"model", m},
         {"train",
          {{"form", risks::to_string(cfg.train.form)},
           {"epochs", cfg.train.epochs},
           {"batch_size", cfg.train.batch_size},
           {"standardize", cfg.train.standardize},
           {"weight_decay", cfg.train.weight_decay},
           {"step",
            {{"rule", step_rule_name(s.rule)},
             {"lr", s.lr},
             {"momentum", s.momentum},
             {"decay", s.decay},
             {"epsilon", s.epsilon}}}}},
         {"seed", cfg.seed},
         {"repeats", cfg.repeats},
         {"threads", cfg.threads}};
  return j.dump(2);
}

RawData load_data(const ExperimentConfig& cfg) {
  RawData raw;
  if (cfg.dataset.kind == DatasetKind::idx) {
    const auto& p = cfg.dataset.idx;
    raw.train = idx::ingest_idx(p.train_images, p.train_labels);
    raw.test = idx::ingest_idx(p.test_images, p.test_labels);
  }
  return raw;
}

dists::MixtureSpec synthetic_spec(const ExperimentConfig& cfg, double theta) {
  const auto group = [&](const std::vector<int>& ids) {
    dists::GaussMixSpec g;
    CompensatedSum total;
    for (int id : ids) {
      const auto it = std::find_if(cfg.dataset.classes.begin(), cfg.dataset.classes.end(),
                                   [&](const SyntheticClass& c) { return c.id == id; });
      if (it == cfg.dataset.classes.end()) {
        throw ConfigError("class " + std::to_string(id) + " has no synthetic definition");
      }
      const std::size_t d = it->mean.size();
      Matrix cov = it->covariance;
      if (cov.empty()) {
        cov = Matrix(d, d);
        for (std::size_t i = 0; i < d; ++i) cov(i, i) = it->sigma * it->sigma;
      }
      g.classes.push_back({it->mean, std::move(cov), it->prior});
      total += it->prior;
    }
    for (auto& c : g.classes) c.prior /= total.value();
    return g;
  };
  dists::GaussMixSpec ac = cfg.augmented_classes.empty() ? group({cfg.known_classes.front()})
                                                         : group(cfg.augmented_classes);
  return {theta, group(cfg.known_classes), std::move(ac)};
}

TrainingSets prepare_training(const RawData& raw, const ExperimentConfig& cfg,
                              std::uint64_t seed) {
  validate(cfg);
  const int k = cfg.classes();
  TrainingSets out;
  out.theta = pool_theta(raw, cfg);

  if (cfg.dataset.kind == DatasetKind::synthetic) {
    const auto spec = synthetic_spec(cfg, out.theta);
    const std::size_t n_u = cfg.n_u ? cfg.n_u : cfg.n_kcl;
    auto sample = dists::sample_complementary_latent(spec.kcl, cfg.n_kcl, derive(seed, "cl"));
    out.cl = std::move(sample.data);
    out.latent = std::move(sample.latent);
    out.u = dists::sample_unlabeled(spec, n_u, derive(seed, "u"));
    return out;
  }

  if (!raw.train) throw InvalidInput("idx dataset has no training pool loaded");
  const auto& pool = *raw.train;
  const auto pools = split_pool(pool, cfg);
  const std::size_t n_kcl = cfg.n_kcl ? cfg.n_kcl : pools.known.size();
  const std::size_t n_u = cfg.n_u ? cfg.n_u : n_kcl;
  const auto n_u_known = static_cast<std::size_t>(std::llround(out.theta * static_cast<double>(n_u)));
  const std::size_t n_u_aug = n_u - n_u_known;
  if (n_kcl == 0 || n_kcl > pools.known.size() || n_u_known > pools.known.size()) {
    throw InvalidInput("not enough known-class training samples for the requested sizes");
  }
  if (n_u_aug > pools.augmented.size()) {
    throw InvalidInput("not enough augmented-class training samples for the requested sizes");
  }

  CounterRng rng(seed, "prepare-train");
  const auto known = shuffled(pools.known, rng);
  const auto aug = shuffled(pools.augmented, rng);
  const auto relabel = known_index(cfg, 255);

  out.cl.classes = k;
  out.cl.x = Matrix(n_kcl, pool.x.cols());
  out.cl.ybar.resize(n_kcl);
  out.latent.resize(n_kcl);
  CounterRng labels(seed, "complementary");
  for (std::size_t i = 0; i < n_kcl; ++i) {
    copy_row(pool.x, known[i], out.cl.x, i);
    const int y = relabel[static_cast<std::size_t>(pool.y[known[i]])];
    int ybar = static_cast<int>(labels.index(static_cast<std::uint64_t>(k - 1)));
    if (ybar >= y) ++ybar;
    if (ybar == y) throw std::logic_error("complementary label equals the true label");
    out.latent[i] = y;
    out.cl.ybar[i] = ybar;
  }

  // Unlabeled known-class samples continue through the same permutation, so
  // they are disjoint from the complementary set unless the pool runs out.
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < n_u_known; ++i) chosen.push_back(known[(n_kcl + i) % known.size()]);
  for (std::size_t i = 0; i < n_u_aug; ++i) chosen.push_back(aug[i]);
  chosen = shuffled(std::move(chosen), rng);
  out.u.x = Matrix(chosen.size(), pool.x.cols());
  for (std::size_t i = 0; i < chosen.size(); ++i) copy_row(pool.x, chosen[i], out.u.x, i);
  return out;
}

dists::TestDataset prepare_test(const RawData& raw, const ExperimentConfig& cfg, double theta,
                                double mu, std::uint64_t seed) {
  const int k = cfg.classes();
  if (cfg.dataset.kind == DatasetKind::synthetic) {
    const auto spec = dists::perturb_test_priors(synthetic_spec(cfg, theta), mu);
    return dists::sample_test(spec, cfg.n_te ? cfg.n_te : kDefaultSyntheticTest,
                              derive(seed, "test"));
  }

  if (!raw.test) throw InvalidInput("idx dataset has no test pool loaded");
  const auto& pool = *raw.test;
  const auto pools = split_pool(pool, cfg);
  const double shifted = theta / (theta + (1.0 - theta) * mu);
  const auto nk_pool = static_cast<double>(pools.known.size());
  const auto na_pool = static_cast<double>(pools.augmented.size());

  // Largest (n_known, n_ac) with n_known / (n_known + n_ac) ~ shifted.
  double nk = nk_pool;
  double na = 0.0;
  if (shifted <= 0.0) {
    nk = 0.0;
    na = na_pool;
  } else if (shifted < 1.0) {
    na = nk * (1.0 - shifted) / shifted;
    if (na > na_pool) {
      na = na_pool;
      nk = na * shifted / (1.0 - shifted);
    }
  }
  if (cfg.n_te && nk + na > static_cast<double>(cfg.n_te)) {
    const double f = static_cast<double>(cfg.n_te) / (nk + na);
    nk *= f;
    na *= f;
  }
  const auto n_known = static_cast<std::size_t>(std::llround(nk));
  const auto n_aug = static_cast<std::size_t>(std::llround(na));
  if (n_known + n_aug == 0) throw InvalidInput("test pools are empty");

  CounterRng rng(seed, "prepare-test");
  const auto known = shuffled(pools.known, rng);
  const auto aug = shuffled(pools.augmented, rng);
  const auto relabel = known_index(cfg, 255);

  std::vector<std::pair<std::size_t, int>> chosen;
  for (std::size_t i = 0; i < n_known; ++i) {
    chosen.emplace_back(known[i], relabel[static_cast<std::size_t>(pool.y[known[i]])]);
  }
  for (std::size_t i = 0; i < n_aug; ++i) chosen.emplace_back(aug[i], k);
  dists::TestDataset out;
  out.classes = k;
  out.x = Matrix(chosen.size(), pool.x.cols());
  out.y.resize(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    copy_row(pool.x, chosen[i].first, out.x, i);
    out.y[i] = chosen[i].second;
  }
  return out;
}

Prepared prepare(const RawData& raw, const ExperimentConfig& cfg, std::uint64_t seed) {
  Prepared p;
  p.training = prepare_training(raw, cfg, seed);
  p.test = prepare_test(raw, cfg, p.training.theta, cfg.mu, seed);
  return p;
}

double bayes_accuracy(const dists::MixtureSpec& spec, const dists::TestDataset& test) {
  const auto* kcl = std::get_if<dists::GaussMixSpec>(&spec.kcl);
  const auto* ac = std::get_if<dists::GaussMixSpec>(&spec.ac);
  if (!kcl || !ac) throw InvalidInput("bayes_accuracy needs gaussian sources");
  if (test.size() == 0) throw InvalidInput("test set is empty");
  std::size_t correct = 0;
  std::vector<double> post(kcl->classes.size() + 1);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto x = test.x.row(i);
    for (std::size_t c = 0; c < kcl->classes.size(); ++c) {
      post[c] = spec.theta * kcl->classes[c].prior * dists::gaussian_density(kcl->classes[c], x);
    }
    double a = 0.0;
    for (const auto& cls : ac->classes) a += cls.prior * dists::gaussian_density(cls, x);
    post.back() = (1.0 - spec.theta) * a;
    if (model::argmax(post) == test.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  CompensatedSum sum;
  for (double v : values) sum += v;
  s.mean = sum.value() / static_cast<double>(values.size());
  if (values.size() > 1) {
    CompensatedSum sq;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq.value() / static_cast<double>(values.size() - 1));
  }
  return s;
}

namespace {

kernels::ExecPolicy policy_for(const ExperimentConfig& cfg) {
  return cfg.threads ? kernels::ExecPolicy::omp(static_cast<int>(cfg.threads))
                     : kernels::ExecPolicy::serial();
}

struct Trained {
  SeedRun run;
  Prepared data;
};

// One seed of the pipeline up to (and including) training.
Trained train_seed(const RawData& raw, const ExperimentConfig& cfg, std::uint64_t seed) {
  Timings timings;
  auto t0 = Clock::now();
  Prepared data = prepare(raw, cfg, seed);
  std::optional<train::Standardizer> standardizer;
  if (cfg.train.standardize) {
    standardizer = train::fit_standardizer(data.training.cl, data.training.u);
    standardizer->apply(data.training.cl.x);
    standardizer->apply(data.training.u.x);
    standardizer->apply(data.test.x);
  }
  timings.prepare_ms = ms_since(t0);

  const auto vartheta = dists::perturb_theta(data.training.theta, cfg.eta);
  train::TrainConfig tc = cfg.train;
  tc.ctx = {cfg.classes(), vartheta.value, cfg.loss};
  tc.seed = derive(seed, "train");
  tc.policy = policy_for(cfg);
  const std::size_t d = data.training.cl.x.cols();
  auto m = model::init_model(cfg.arch, cfg.classes(), d, derive(seed, "init"),
                             cfg.has_augmented_head());
  t0 = Clock::now();
  auto result = train::train(std::move(m), data.training.cl, data.training.u, tc);
  timings.train_ms = ms_since(t0);

  SeedRun r{.seed = seed,
            .train_theta = vartheta.value,
            .theta_clamped = vartheta.clamped,
            .metrics = {},
            .bayes_accuracy = {},
            .result = std::move(result),
            .standardizer = std::move(standardizer),
            .test = {},
            .timings = timings};
  return {std::move(r), std::move(data)};
}

void evaluate_into(SeedRun& r, const RawData& raw, const ExperimentConfig& cfg, double theta,
                   double mu, dists::TestDataset test) {
  const auto t0 = Clock::now();
  r.metrics = train::evaluate(r.result.model, test, policy_for(cfg));
  r.timings.eval_ms = ms_since(t0);
  if (cfg.dataset.kind == DatasetKind::synthetic && !cfg.augmented_classes.empty()) {
    // The Bayes rule works in the raw feature space.
    dists::TestDataset raw_test = prepare_test(raw, cfg, theta, mu, r.seed);
    r.bayes_accuracy =
        bayes_accuracy(dists::perturb_test_priors(synthetic_spec(cfg, theta), mu), raw_test);
  }
  r.test = std::move(test);
}

}  // namespace

RunReport run(const RawData& raw, const ExperimentConfig& cfg) {
  validate(cfg);
  RunReport rep;
  rep.config = cfg;
  std::vector<double> overall;
  std::vector<double> ac;
  for (std::size_t i = 0; i < cfg.repeats; ++i) {
    Trained t = train_seed(raw, cfg, cfg.seed + i);
    evaluate_into(t.run, raw, cfg, t.data.training.theta, cfg.mu, std::move(t.data.test));
    overall.push_back(t.run.metrics.overall_accuracy);
    ac.push_back(t.run.metrics.ac_recall);
    rep.runs.push_back(std::move(t.run));
  }
  rep.overall = summarize(overall);
  rep.ac_recall = summarize(ac);
  return rep;
}

RunReport run(const ExperimentConfig& cfg) { return run(load_data(cfg), cfg); }

std::string metrics_to_json(const train::Metrics& m) {
  json pc = json::array();
  for (double v : m.per_class_accuracy) pc.push_back(number_or_null(v));
  return json{{"overall", m.overall_accuracy},
              {"per_class", pc},
              {"per_class_count", m.per_class_count},
              {"ac_recall", number_or_null(m.ac_recall)},
              {"samples", m.samples}}
      .dump();
}

std::string report_to_json(const RunReport& report) {
  json runs = json::array();
  double prepare = 0.0;
  double train_ms = 0.0;
  double eval = 0.0;
  for (const auto& r : report.runs) {
    json jr{{"seed", r.seed},
            {"train_theta", r.train_theta},
            {"theta_clamped", r.theta_clamped},
            {"metrics", json::parse(metrics_to_json(r.metrics))},
            {"initial_risk", r.result.initial_risk},
            {"final_risk", r.result.history.empty() ? r.result.initial_risk
                                                    : r.result.history.back().emp_risk},
            {"history", "history_" + std::to_string(r.seed) + ".csv"},
            {"timings",
             {{"prepare_ms", r.timings.prepare_ms},
              {"train_ms", r.timings.train_ms},
              {"eval_ms", r.timings.eval_ms}}}};
    if (r.bayes_accuracy) jr["bayes_accuracy"] = *r.bayes_accuracy;
    runs.push_back(std::move(jr));
    prepare += r.timings.prepare_ms;
    train_ms += r.timings.train_ms;
    eval += r.timings.eval_ms;
  }
  std::vector<train::Metrics> all;
  for (const auto& r : report.runs) all.push_back(r.metrics);
  const auto avg = average_metrics(all);
  json pc = json::array();
  for (double v : avg.per_class_accuracy) pc.push_back(number_or_null(v));
  json out{{"config", json::parse(config_to_json(report.config))},
           {"metrics",
            {{"overall", report.overall.mean},
             {"overall_std", report.overall.stddev},
             {"per_class", pc},
             {"ac_recall", number_or_null(report.ac_recall.mean)},
             {"ac_recall_std", number_or_null(report.ac_recall.stddev)}}},
           {"runs", runs},
           {"timings", {{"prepare_ms", prepare}, {"train_ms", train_ms}, {"eval_ms", eval}}}};
  return out.dump(2);
}

void write_outputs(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "report.json");
    f << report_to_json(report) << '\n';
    if (!f) throw std::runtime_error("failed writing report.json");
  }
  for (const auto& r : report.runs) {
    const std::string tag = std::to_string(r.seed);
    std::ofstream h(dir / ("history_" + tag + ".csv"));
    train::write_history_csv(h, r.result.history);
    model::save_checkpoint(dir / ("model_" + tag + ".bin"), r.result.model);
    dists::save_container(dir / ("test_" + tag + ".bin"), dists::to_container(r.test));
  }
}

SweepParam sweep_param_from_string(std::string_view name) {
  if (name == "eta") return SweepParam::eta;
  if (name == "mu") return SweepParam::mu;
  throw ConfigError("sweep parameter must be eta or mu");
}

std::vector<SweepRow> sweep(const RawData& raw, const ExperimentConfig& cfg, SweepParam param,
                            const std::vector<double>& values) {
  if (values.empty()) throw InvalidInput("sweep needs at least one value");
  validate(cfg);
  std::vector<std::vector<train::Metrics>> per_value(values.size());

  if (param == SweepParam::eta) {
    for (std::size_t v = 0; v < values.size(); ++v) {
      ExperimentConfig c = cfg;
      c.eta = values[v];
      for (const auto& r : run(raw, c).runs) per_value[v].push_back(r.metrics);
    }
  } else {
    for (std::size_t i = 0; i < cfg.repeats; ++i) {
      const std::uint64_t seed = cfg.seed + i;
      Trained t = train_seed(raw, cfg, seed);
      for (std::size_t v = 0; v < values.size(); ++v) {
        if (!(values[v] > 0.0)) throw InvalidInput("mu must be positive");
        auto test = prepare_test(raw, cfg, t.data.training.theta, values[v], seed);
        if (t.run.standardizer) t.run.standardizer->apply(test.x);
        per_value[v].push_back(train::evaluate(t.run.result.model, test, policy_for(cfg)));
      }
    }
  }

  std::vector<SweepRow> rows;
  for (std::size_t v = 0; v < values.size(); ++v) {
    const auto m = average_metrics(per_value[v]);
    rows.push_back({values[v], m.overall_accuracy, m.ac_recall, m.per_class_accuracy});
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, int classes) {
  os << "value,overall_accuracy,ac_recall";
  for (int c = 1; c <= classes; ++c) os << ",class_" << c << "_accuracy";
  os << ",ac_accuracy\n";
  os.precision(10);
  const auto cell = [&](double v) {
    if (std::isfinite(v)) {
      os << v;
    }
  };
  for (const auto& r : rows) {
    os << r.value << ',';
    cell(r.overall_accuracy);
    os << ',';
    cell(r.ac_recall);
    for (double v : r.per_class_accuracy) {
      os << ',';
      cell(v);
    }
    os << '\n';
  }
}

}  // namespace cllac::experiment
