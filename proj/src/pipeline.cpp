#include "afsmote/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "afsmote/error.hpp"
#include "afsmote/rng.hpp"

namespace afsmote {

namespace {

// Seed streams. Changing one of these changes every derived result.
enum Stream : std::uint64_t {
  kSplitStream = 1,
  kSamplerStream = 2,
  kDiscriminatorStream = 3,
  kClassifierStream = 4,
  kBootstrapStream = 5,
  kSweepStream = 6,
  kTheoremStream = 7,
};

std::uint64_t bits_of(double v) { return std::bit_cast<std::uint64_t>(v); }

}  // namespace

std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::kLogistic: return "logistic";
    case ClassifierKind::kStumpBoost: return "stump_boost";
    case ClassifierKind::kLinearSvm: return "linear_svm";
  }
  return "logistic";
}

ClassifierKind parse_classifier_kind(const std::string& text) {
  for (auto k : {ClassifierKind::kLogistic, ClassifierKind::kStumpBoost, ClassifierKind::kLinearSvm}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown classifier '" + text + "'");
}

std::unique_ptr<ProbClassifier> fit_classifier(const ClassifierConfig& config, const Matrix& x,
                                               std::span<const int> y, std::uint64_t seed) {
  switch (config.kind) {
    case ClassifierKind::kLogistic:
      return std::make_unique<LogisticModel>(fit_logistic(x, y, config.logistic));
    case ClassifierKind::kStumpBoost:
      return std::make_unique<StumpBoostModel>(
          fit_stump_boost(x, y, config.boost_rounds, config.boost_learning_rate, seed));
    case ClassifierKind::kLinearSvm:
      return std::make_unique<LinearMaxMarginModel>(
          fit_linear_svm(x, to_plus_minus(y), config.svm_lambda, config.svm_epochs, seed));
  }
  throw Error(ErrorCode::kInvalidArgument, "unhandled classifier kind");
}

CalibrationKind default_calibration(ClassifierKind kind) {
  return kind == ClassifierKind::kStumpBoost ? CalibrationKind::kIsotonic : CalibrationKind::kPlatt;
}

CalibrationMap fit_calibration(CalibrationKind kind, std::span<const double> raw, std::span<const int> labels) {
  switch (kind) {
    case CalibrationKind::kPlatt: return fit_platt(raw, labels);
    case CalibrationKind::kIsotonic: return fit_isotonic_pav(raw, labels);
    case CalibrationKind::kTemperature: return fit_temperature(raw, labels);
    case CalibrationKind::kNone: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "calibration kind 'none' cannot be fitted");
}

Dataset load_source(const DataSource& source, std::uint64_t experiment_seed) {
  if (source.csv) return load_csv(*source.csv, source.label, source.nan_policy);
  const auto& s = source.synthetic;
  return make_gaussian_imbalanced(
      SyntheticSpec::isotropic(s.n, s.pi1, s.dim, s.separation, s.seed.value_or(experiment_seed)));
}

// ---- config --------------------------------------------------------------

void ExperimentConfig::validate() const {
  filter.validate();
  if (!(p0 > 0.0 && p0 <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "evaluation.p0 must lie in (0, 1]");
  if (cv_folds < 2) throw Error(ErrorCode::kInvalidArgument, "experiment.cv_folds must be >= 2");
  if (betas.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluation.betas must not be empty");
  for (double b : betas)
    if (!(b > 0.0)) throw Error(ErrorCode::kInvalidArgument, "evaluation.betas must be positive");
  if (sampler.k_neighbors < 1) throw Error(ErrorCode::kInvalidArgument, "sampler.k must be >= 1");
  if (!(sampler.overgen_ratio > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sampler.ratio must be positive");
  if (bootstrap.n_resamples < 1) throw Error(ErrorCode::kInvalidArgument, "bootstrap.resamples must be >= 1");
  if (!(bootstrap.confidence > 0.0 && bootstrap.confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bootstrap.confidence must lie in (0, 1)");
  }
  if (pca_target_dim && *pca_target_dim == 0) throw Error(ErrorCode::kInvalidArgument, "pca.dim must be >= 1");
  if (!data.csv) {
    const auto& s = data.synthetic;
    if (!(s.pi1 > 0.0 && s.pi1 < 0.5)) throw Error(ErrorCode::kInvalidArgument, "data.pi1 must lie in (0, 0.5)");
    if (s.dim < 1 || s.n < 2) throw Error(ErrorCode::kInvalidArgument, "data.n and data.dim must be positive");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  using nlohmann::json;
  json d;
  if (data.csv) {
    d["csv"] = data.csv->string();
    if (const auto* name = std::get_if<std::string>(&data.label)) {
      d["label"] = *name;
    } else {
      d["label"] = std::get<std::size_t>(data.label);
    }
    d["impute"] = data.nan_policy == NanPolicy::kAllow ? "mean" : "none";
  } else {
    d["n"] = data.synthetic.n;
    d["pi1"] = data.synthetic.pi1;
    d["dim"] = data.synthetic.dim;
    d["separation"] = data.synthetic.separation;
    d["seed"] = data.synthetic.seed ? json(*data.synthetic.seed) : json(nullptr);
  }
  json s{{"method", to_string(sampler.method)},
         {"k", sampler.k_neighbors},
         {"ratio", sampler.overgen_ratio},
         {"fixed_gap", sampler.fixed_gap ? json(*sampler.fixed_gap) : json(nullptr)},
         {"support_tolerance", sampler.support_tolerance},
         {"svm_lambda", sampler.svm_lambda},
         {"svm_epochs", sampler.svm_epochs}};
  json f{{"enabled", filter_enabled},
         {"lambda", filter.lambda},
         {"tau", filter.tau},
         {"alpha", filter.alpha},
         {"eta", filter.eta},
         {"top_k", filter.top_k ? json(*filter.top_k) : json(nullptr)},
         {"diversity", filter.diversity_enabled},
         {"extended_fusion", filter.extended_fusion},
         {"head_weights", filter.head_weights},
         {"rescale_utility", filter.rescale_utility},
         {"normalize_realism", filter.normalize_realism},
         {"density_k", filter.density_k}};
  json disc{{"rounds", discriminator.n_rounds},
            {"learning_rate", discriminator.learning_rate},
            {"holdout", discriminator.holdout_fraction},
            {"balance", discriminator.balance_classes}};
  json c{{"kind", to_string(classifier.kind)},
         {"l2", classifier.logistic.l2_lambda},
         {"max_iter", classifier.logistic.max_iter},
         {"tol", classifier.logistic.tol},
         {"boost_rounds", classifier.boost_rounds},
         {"boost_learning_rate", classifier.boost_learning_rate},
         {"svm_lambda", classifier.svm_lambda},
         {"svm_epochs", classifier.svm_epochs}};
  json e{{"betas", betas},
         {"p0", p0},
         {"calibration", calibration ? to_string(*calibration) : std::string("auto")},
         {"intervals", compute_intervals},
         {"delong", compare_to_baseline}};
  json b{{"resamples", bootstrap.n_resamples},
         {"confidence", bootstrap.confidence},
         {"stratified", bootstrap.stratified}};
  json x{{"folds", cv_folds},
         {"seed", seed},
         {"pca_dim", pca_target_dim ? json(*pca_target_dim) : json(nullptr)}};
  return json{{"data", d},     {"sampler", s},    {"filter", f},     {"discriminator", disc},
              {"classifier", c}, {"evaluation", e}, {"bootstrap", b}, {"experiment", x}};
}

std::string config_hash(const ExperimentConfig& config) { return json_hash(config.to_json()); }

std::string json_hash(const nlohmann::json& value) {
  const std::string text = value.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- results -------------------------------------------------------------

nlohmann::json FoldResult::to_json() const {
  nlohmann::json j{{"fold", fold},
                   {"metrics", metrics.to_json()},
                   {"n_train", n_train},
                   {"n_valid", n_valid},
                   {"n_test", n_test},
                   {"n_candidates", n_candidates},
                   {"n_retained", n_retained},
                   {"sampler_fallback", sampler_fallback},
                   {"pilot_threshold", pilot_threshold},
                   {"epsilon_hat", epsilon_hat ? nlohmann::json(*epsilon_hat) : nlohmann::json(nullptr)},
                   {"l_over_rho_hat", l_over_rho_hat ? nlohmann::json(*l_over_rho_hat) : nlohmann::json(nullptr)},
                   {"calibration", calibration},
                   {"leakage_audit_passed", leakage_audit_passed}};
  if (pca) {
    j["pca"] = {{"achieved_rank", pca->achieved_rank},
                {"rank_deficient", pca->rank_deficient},
                {"explained_variance", pca->explained_variance}};
  }
  return j;
}

Aggregate aggregate_values(std::span<const double> values, double confidence) {
  Aggregate a;
  a.n = values.size();
  if (values.empty()) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(a.n);
  a.lo = a.hi = a.mean;
  if (a.n < 2) return a;
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.sd = std::sqrt(ss / static_cast<double>(a.n - 1));
  const boost::math::students_t dist(static_cast<double>(a.n - 1));
  const double q = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  const double half = q * a.sd / std::sqrt(static_cast<double>(a.n));
  a.lo = a.mean - half;
  a.hi = a.mean + half;
  return a;
}

nlohmann::json RunResult::to_json(bool include_timestamps) const {
  nlohmann::json folds_json = nlohmann::json::array();
  for (const auto& f : folds) folds_json.push_back(f.to_json());
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [name, a] : aggregate) {
    agg[name] = {{"mean", a.mean}, {"ci", {a.lo, a.hi}}, {"sd", a.sd}, {"n", a.n}};
  }
  nlohmann::json j{
      {"folds", folds_json},
      {"aggregate", agg},
      {"diagnostics",
       {{"epsilon_hat", diagnostics.epsilon_hat},
        {"lipschitz_over_reach_hat",
         l_over_rho_present ? nlohmann::json(*diagnostics.lipschitz_over_reach_hat) : nlohmann::json(nullptr)},
        {"boundary_threshold_t", diagnostics.boundary_threshold_t}}},
      {"provenance",
       {{"config", config}, {"config_hash", config_hash}, {"seed", seed}, {"overrides", overrides}, {"artifact_version", kArtifactVersion}}}};
  if (include_timestamps) j["timestamps"] = {{"started_utc", started_utc}, {"finished_utc", finished_utc}};
  return j;
}

// ---- folds ---------------------------------------------------------------

FoldData prepare_fold(const Dataset& data, const FoldSplit& split, const ExperimentConfig& config) {
  Matrix x = data.features;
  impute_mean(x, split.train_indices);
  const auto scaler = Standardizer::fit(x, split.train_indices);
  x = scaler.apply(x);
  FoldData fd;
  fd.split = split;
  if (config.pca_target_dim) {
    const std::size_t r = std::min(*config.pca_target_dim, x.cols());
    fd.pca = pca_fit(x.select_rows(split.train_indices), r);
    x = pca_project(*fd.pca, x);
  }
  Dataset all{std::move(x), data.labels, {}};
  all.feature_names.resize(all.features.cols());
  for (std::size_t j = 0; j < all.feature_names.size(); ++j) {
    all.feature_names[j] = fd.pca ? "pc" + std::to_string(j) : data.feature_names.at(j);
  }
  fd.train = all.subset(split.train_indices);
  fd.valid = all.subset(split.valid_indices);
  fd.test = all.subset(split.test_indices);
  return fd;
}

namespace {

bool audit_no_leakage(const FoldSplit& split) {
  std::vector<std::size_t> test = split.test_indices;
  std::sort(test.begin(), test.end());
  auto touches_test = [&](const std::vector<std::size_t>& used) {
    return std::any_of(used.begin(), used.end(),
                       [&](std::size_t i) { return std::binary_search(test.begin(), test.end(), i); });
  };
  // Train rows feed imputation, scaling, PCA, the pilot, the sampler, the
  // discriminator and the final fit; validation rows feed calibration and
  // both threshold selections.
  return !touches_test(split.train_indices) && !touches_test(split.valid_indices);
}

Matrix minority_rows(const Dataset& d) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.labels[i] == 1) rows.push_back(i);
  return d.features.select_rows(rows);
}

struct Scorer {
  std::unique_ptr<ProbClassifier> model;
  CalibrationMap map;

  std::vector<double> probs(const Matrix& x) const { return apply_calibration(map, model->decision_function(x)); }
};

Scorer fit_scorer(const ExperimentConfig& config, const Matrix& x, std::span<const int> y, const Dataset& valid,
                  std::uint64_t seed) {
  Scorer s;
  s.model = fit_classifier(config.classifier, x, y, seed);
  const auto kind = config.calibration.value_or(default_calibration(config.classifier.kind));
  s.map = fit_calibration(kind, s.model->decision_function(valid.features), valid.labels);
  return s;
}

struct AugmentCore {
  CandidateSet candidates;
  FilteredSet filtered;
  std::vector<std::size_t> retained;
  std::optional<double> epsilon_hat;
};

// Candidate generation plus filtering on an already pre-processed training
// set. `pilot_probs_of` evaluates the pilot scorer.
template <typename PilotFn>
AugmentCore augment_core(const Dataset& train, const ExperimentConfig& config, double pilot_t,
                         PilotFn&& pilot_probs_of, std::uint64_t sampler_seed, std::uint64_t disc_seed) {
  AugmentCore core;
  SamplerConfig sc = config.sampler;
  sc.seed = sampler_seed;
  core.candidates = generate_candidates(train, sc);
  const std::size_t m = core.candidates.size();
  if (!config.filter_enabled) {
    core.retained.resize(m);
    std::iota(core.retained.begin(), core.retained.end(), std::size_t{0});
    core.filtered.retained = core.retained;
    core.filtered.selection_order = core.retained;
    core.filtered.passed_tau = m;
    return core;
  }
  if (m == 0) return core;
  const Matrix real = minority_rows(train);
  const auto disc = train_discriminator(real, core.candidates.points, disc_seed, config.discriminator);
  const auto pilot = pilot_probs_of(core.candidates.points);
  const auto heads = compute_heads(core.candidates.points, disc, pilot, pilot_t, real, config.filter);
  core.filtered = fuse_and_select(heads, core.candidates.points, config.filter);
  core.retained = core.filtered.retained;
  core.epsilon_hat =
      estimate_epsilon(disc.model, core.candidates.points.select_rows(disc.holdout_synthetic), config.filter.eta);
  return core;
}

}  // namespace

FoldResult run_fold(const FoldData& fold, std::size_t fold_index, const ExperimentConfig& config) {
  const std::uint64_t f = fold_index;
  FoldResult r;
  r.fold = fold_index;
  r.n_train = fold.train.size();
  r.n_valid = fold.valid.size();
  r.n_test = fold.test.size();
  r.pca = fold.pca;
  r.test_indices = fold.split.test_indices;
  r.leakage_audit_passed = audit_no_leakage(fold.split);
  if (!r.leakage_audit_passed) throw Error(ErrorCode::kInvalidArgument, "test rows overlap fitting rows");

  const std::uint64_t classifier_seed = derive_seed(config.seed, {kClassifierStream, f});

  // Pilot scorer on the unaugmented training split; threshold on validation.
  const auto pilot = fit_logistic(fold.train.features, fold.train.labels, config.classifier.logistic);
  const auto pilot_valid = pilot.predict_proba(fold.valid.features);
  r.pilot_threshold = select_threshold(pilot_valid, fold.valid.labels, config.p0).threshold;

  Matrix x_fit = fold.train.features;
  std::vector<int> y_fit = fold.train.labels;
  if (config.sampler.method != SamplerMethod::kNone) {
    auto core = augment_core(
        fold.train, config, r.pilot_threshold, [&](const Matrix& pts) { return pilot.predict_proba(pts); },
        derive_seed(config.seed, {kSamplerStream, f}), derive_seed(config.seed, {kDiscriminatorStream, f}));
    r.n_candidates = core.candidates.size();
    r.n_retained = core.retained.size();
    r.sampler_fallback = core.candidates.fallback;
    r.epsilon_hat = core.epsilon_hat;
    if (!core.retained.empty()) {
      x_fit = vstack(x_fit, core.candidates.points.select_rows(core.retained));
      y_fit.resize(x_fit.rows(), 1);
    }
  }

  const auto scorer = fit_scorer(config, x_fit, y_fit, fold.valid, classifier_seed);
  r.calibration = scorer.map.to_json();
  r.valid_probs = scorer.probs(fold.valid.features);
  r.valid_labels = fold.valid.labels;
  const auto op = select_threshold(r.valid_probs, fold.valid.labels, config.p0);

  r.test_probs = scorer.probs(fold.test.features);
  const auto& y_test = fold.test.labels;
  r.metrics = evaluate_at(r.test_probs, y_test, op.threshold, config.betas);
  r.metrics.threshold_feasible = op.feasible;

  if (config.compute_intervals) {
    BootstrapConfig bc = config.bootstrap;
    bc.seed = derive_seed(config.seed, {kBootstrapStream, f, 0});
    const auto ap = bca_bootstrap([](auto s, auto y) { return average_precision(s, y); }, r.test_probs, y_test, bc);
    r.metrics.intervals["average_precision"] = {ap.lo, ap.hi};
    bc.seed = derive_seed(config.seed, {kBootstrapStream, f, 1});
    const double t = op.threshold;
    const auto rec = bca_bootstrap(
        [t](auto s, auto y) { return prf_metrics(confusion_at(s, y, t)).recall; }, r.test_probs, y_test, bc);
    r.metrics.intervals["recall"] = {rec.lo, rec.hi};
  }

  if (config.compare_to_baseline && config.sampler.method != SamplerMethod::kNone) {
    const auto base = fit_scorer(config, fold.train.features, fold.train.labels, fold.valid, classifier_seed);
    r.metrics.delong_p = delong_test(r.test_probs, base.probs(fold.test.features), y_test).p_value;
  }

  const Matrix real = minority_rows(fold.train);
  if (real.rows() >= 2) r.l_over_rho_hat = estimate_l_over_rho(scorer.probs(real), real, op.threshold);
  return r;
}

RunResult run_on_dataset(const Dataset& data, const ExperimentConfig& config) {
  config.validate();
  RunResult result;
  result.started_utc = utc_timestamp();
  result.config = config.to_json();
  result.config_hash = config_hash(config);
  result.seed = config.seed;

  const auto splits = stratified_kfold(data.labels, config.cv_folds, derive_seed(config.seed, {kSplitStream}));
  result.folds.resize(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  const int jobs = static_cast<int>(std::max<std::size_t>(1, config.jobs));
#pragma omp parallel for num_threads(jobs) schedule(dynamic, 1) if (jobs > 1)
  for (std::size_t f = 0; f < splits.size(); ++f) {
    try {
      result.folds[f] = run_fold(prepare_fold(data, splits[f], config), f, config);
    } catch (const Error& e) {
      errors[f] = std::make_exception_ptr(e.with_context("fold " + std::to_string(f)));
    } catch (...) {
      errors[f] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::map<std::string, std::vector<double>> per_metric;
  std::vector<double> eps, lrho, thresholds;
  for (const auto& fr : result.folds) {
    for (const auto& [name, v] : fr.metrics.scalars()) per_metric[name].push_back(v);
    per_metric["n_retained"].push_back(static_cast<double>(fr.n_retained));
    if (fr.epsilon_hat) eps.push_back(*fr.epsilon_hat);
    if (fr.l_over_rho_hat) lrho.push_back(*fr.l_over_rho_hat);
    thresholds.push_back(fr.metrics.threshold);
  }
  for (const auto& [name, values] : per_metric) result.aggregate[name] = aggregate_values(values);
  result.diagnostics.epsilon_hat = aggregate_values(eps).mean;
  result.diagnostics.boundary_threshold_t = aggregate_values(thresholds).mean;
  if (!lrho.empty()) {
    result.l_over_rho_present = true;
    result.diagnostics.lipschitz_over_reach_hat = aggregate_values(lrho).mean;
  }
  result.finished_utc = utc_timestamp();
  return result;
}

RunResult run_pipeline(const ExperimentConfig& config) {
  config.validate();
  return run_on_dataset(load_source(config.data, config.seed), config);
}

// ---- sweeps --------------------------------------------------------------

ExperimentConfig sweep_cell_config(const ExperimentConfig& base, const SweepGrid& grid, std::size_t id) {
  const std::size_t nr = grid.ratio_values.size(), nk = grid.k_values.size(), np = grid.p0_values.size();
  const std::size_t ir = id % nr, ik = (id / nr) % nk, ip = (id / (nr * nk)) % np, il = id / (nr * nk * np);
  ExperimentConfig c = base;
  c.filter.lambda = grid.lambda_values.at(il);
  c.p0 = grid.p0_values.at(ip);
  c.sampler.k_neighbors = grid.k_values.at(ik);
  c.sampler.overgen_ratio = grid.ratio_values.at(ir);
  c.seed = derive_seed(base.seed, {kSweepStream, bits_of(c.filter.lambda), bits_of(c.p0), c.sampler.k_neighbors,
                                   bits_of(c.sampler.overgen_ratio)});
  // Every cell sees the same data draw.
  if (!c.data.csv && !c.data.synthetic.seed) c.data.synthetic.seed = base.seed;
  return c;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& base, const SweepGrid& grid) {
  if (grid.cells() == 0) throw Error(ErrorCode::kInvalidArgument, "sweep grid is empty");
  base.validate();
  const Dataset data = load_source(base.data, base.seed);
  std::vector<SweepCell> cells(grid.cells());
  const int jobs = static_cast<int>(std::max<std::size_t>(1, base.jobs));
#pragma omp parallel for num_threads(jobs) schedule(dynamic, 1) if (jobs > 1)
  for (std::size_t id = 0; id < cells.size(); ++id) {
    auto& cell = cells[id];
    ExperimentConfig c = sweep_cell_config(base, grid, id);
    c.jobs = 1;
    cell.id = id;
    cell.lambda = c.filter.lambda;
    cell.p0 = c.p0;
    cell.k = c.sampler.k_neighbors;
    cell.ratio = c.sampler.overgen_ratio;
    try {
      cell.result = run_on_dataset(data, c);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  }
  return cells;
}

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "cell,lambda,p0,k,ratio,fold,metric,value,status\n";
  for (const auto& c : cells) {
    const std::string prefix = std::to_string(c.id) + ',' + format_real(c.lambda) + ',' + format_real(c.p0) + ',' +
                               std::to_string(c.k) + ',' + format_real(c.ratio) + ',';
    if (!c.result) {
      std::string msg = c.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << prefix << ",,,error: " << msg << '\n';
      continue;
    }
    for (const auto& f : c.result->folds) {
      for (const auto& [name, v] : f.metrics.scalars()) {
        out << prefix << f.fold << ',' << name << ',' << format_real(v) << ",ok\n";
      }
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

// ---- theorem harness -----------------------------------------------------

nlohmann::json TheoremReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : seeds) {
    rows.push_back({{"seed", s.seed},
                    {"f_tilde_filtered", s.f_tilde_filtered},
                    {"f_tilde_baseline", s.f_tilde_baseline},
                    {"delta_f_tilde", s.delta_f_tilde},
                    {"brier_filtered", s.brier_filtered},
                    {"brier_baseline", s.brier_baseline},
                    {"delta_brier", s.delta_brier},
                    {"epsilon_hat", s.epsilon_hat},
                    {"l_over_rho_hat", s.l_over_rho_present ? nlohmann::json(s.l_over_rho_hat) : nlohmann::json(nullptr)},
                    {"bound", s.bound},
                    {"recall_filtered", s.recall_filtered},
                    {"recall_smote", s.recall_smote},
                    {"improvement", s.improvement},
                    {"bound_holds", s.bound_holds}});
  }
  return {{"seeds", rows},
          {"summary",
           {{"n_seeds", seeds.size()},
            {"improvement_fraction", improvement_fraction},
            {"bound_holds", bound_holds},
            {"recall_at_least_smote", recall_at_least_smote},
            {"passed", passed}}},
          {"config", config}};
}

TheoremReport theorem_check(const SyntheticSource& spec, const ExperimentConfig& config, const TheoremConfig& tc) {
  TheoremReport report;
  ExperimentConfig af = config;
  af.data.csv.reset();
  af.data.synthetic = spec;
  af.sampler.method = config.sampler.method == SamplerMethod::kNone ? SamplerMethod::kSmote : config.sampler.method;
  af.filter_enabled = true;
  af.compute_intervals = false;
  af.compare_to_baseline = false;
  if (std::find(af.betas.begin(), af.betas.end(), tc.beta) == af.betas.end()) af.betas.push_back(tc.beta);
  af.validate();
  report.config = af.to_json();
  report.config["theorem"] = {{"n_seeds", tc.n_seeds},
                              {"beta", tc.beta},
                              {"c1", tc.c1},
                              {"c2", tc.c2},
                              {"min_improvement_fraction", tc.min_improvement_fraction}};

  const std::string key = "f_tilde_beta_" + beta_key(tc.beta);
  std::size_t improved = 0;
  for (std::size_t i = 0; i < tc.n_seeds; ++i) {
    TheoremSeedResult s;
    s.seed = derive_seed(config.seed, {kTheoremStream, i});
    ExperimentConfig c = af;
    c.seed = s.seed;
    c.data.synthetic.seed = spec.seed ? derive_seed(*spec.seed, {i}) : s.seed;
    const Dataset data = load_source(c.data, c.seed);
    ExperimentConfig smote = c;
    smote.filter_enabled = false;
    ExperimentConfig none = c;
    none.sampler.method = SamplerMethod::kNone;

    const auto r_af = run_on_dataset(data, c);
    const auto r_smote = run_on_dataset(data, smote);
    const auto r_none = run_on_dataset(data, none);

    s.f_tilde_filtered = r_af.aggregate.at(key).mean;
    s.f_tilde_baseline = r_none.aggregate.at(key).mean;
    s.delta_f_tilde = s.f_tilde_filtered - s.f_tilde_baseline;
    s.brier_filtered = r_af.aggregate.at("brier").mean;
    s.brier_baseline = r_none.aggregate.at("brier").mean;
    s.delta_brier = s.brier_filtered - s.brier_baseline;
    s.epsilon_hat = r_af.diagnostics.epsilon_hat;
    s.l_over_rho_present = r_af.l_over_rho_present;
    s.l_over_rho_hat = r_af.l_over_rho_present ? *r_af.diagnostics.lipschitz_over_reach_hat : 0.0;
    s.bound = tc.c1 * s.epsilon_hat + tc.c2 * s.l_over_rho_hat;
    s.recall_filtered = r_af.aggregate.at("recall").mean;
    s.recall_smote = r_smote.aggregate.at("recall").mean;
    s.improvement = s.delta_f_tilde >= 0.0;
    s.bound_holds = s.delta_brier <= s.bound;
    improved += s.improvement ? 1 : 0;
    report.bound_holds += s.bound_holds ? 1 : 0;
    report.recall_at_least_smote += s.recall_filtered >= s.recall_smote ? 1 : 0;
    report.seeds.push_back(s);
  }
  const double n = static_cast<double>(tc.n_seeds);
  report.improvement_fraction = tc.n_seeds == 0 ? 1.0 : static_cast<double>(improved) / n;
  report.passed = report.improvement_fraction >= tc.min_improvement_fraction && report.bound_holds == tc.n_seeds;
  return report;
}

// ---- reports -------------------------------------------------------------

void emit_report(const RunResult& result, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  if (format == ReportFormat::kJson) {
    out << result.to_json().dump(2) << '\n';
  } else {
    out << "fold,metric,value\n";
    for (const auto& f : result.folds) {
      for (const auto& [name, v] : f.metrics.scalars()) out << f.fold << ',' << name << ',' << format_real(v) << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- augmentation --------------------------------------------------------

AugmentResult augment_dataset(const Dataset& data, const ExperimentConfig& config) {
  config.validate();
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Matrix x = data.features;
  impute_mean(x, all);
  const auto scaler = Standardizer::fit(x, all);
  const Dataset scaled{scaler.apply(x), data.labels, data.feature_names};

  AugmentResult out;
  const auto pilot = fit_logistic(scaled.features, scaled.labels, config.classifier.logistic);
  out.pilot_threshold = select_threshold(pilot.predict_proba(scaled.features), scaled.labels, config.p0).threshold;
  if (config.sampler.method == SamplerMethod::kNone) {
    out.augmented = data;
    return out;
  }
  auto core = augment_core(
      scaled, config, out.pilot_threshold, [&](const Matrix& pts) { return pilot.predict_proba(pts); },
      derive_seed(config.seed, {kSamplerStream}), derive_seed(config.seed, {kDiscriminatorStream}));
  out.epsilon_hat = core.epsilon_hat;
  out.filtered = std::move(core.filtered);
  out.candidates = std::move(core.candidates);
  out.candidates.points = scaler.invert(out.candidates.points);
  out.augmented = data;
  out.augmented.features = vstack(x, out.candidates.points.select_rows(core.retained));
  out.augmented.labels.resize(out.augmented.features.rows(), 1);
  return out;
}

}  // namespace afsmote
