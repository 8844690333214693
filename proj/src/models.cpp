#include "afsmote/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "afsmote/dataset.hpp"
#include "afsmote/error.hpp"
#include "afsmote/rng.hpp"

namespace afsmote {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void ProbClassifier::check_dim(const Matrix& features) const {
  if (features.cols() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, type_tag() + " fitted on " + std::to_string(dim()) +
                                                   " features, got " + std::to_string(features.cols()));
  }
}

std::vector<double> ProbClassifier::predict_proba(const Matrix& features) const {
  auto raw = decision_function(features);
  for (auto& v : raw) v = sigmoid(v);
  return raw;
}

namespace {

double weight_at(std::span<const double> w, std::size_t i) { return w.empty() ? 1.0 : w[i]; }

void check_fit_inputs(const Matrix& x, std::span<const int> y, std::span<const double> w, const char* who) {
  if (x.rows() != y.size()) throw Error(ErrorCode::kDimensionMismatch, std::string(who) + ": rows != labels");
  if (!w.empty() && w.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(who) + ": weights != labels");
  }
  require_both_classes(y, who);
}

// Solves a*x = b for a small dense system (partial pivoting).
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    const double d = a[c * n + c];
    if (d == 0.0) continue;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / d;
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * x[k];
    x[i] = a[i * n + i] != 0.0 ? s / a[i * n + i] : 0.0;
  }
  return x;
}

double linear_score(std::span<const double> row, std::span<const double> params) {
  const std::size_t d = row.size();
  return dot(row, params.first(d)) + params[d];
}

}  // namespace

// ---- logistic ------------------------------------------------------------

double logistic_objective(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                          double l2_lambda, std::span<const double> params) {
  double loss = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = linear_score(x.row(i), params);
    const double w = weight_at(weights, i);
    loss += w * (softplus(z) - y[i] * z);
    wsum += w;
  }
  double reg = 0.0;
  for (std::size_t j = 0; j + 1 < params.size(); ++j) reg += params[j] * params[j];
  return loss / wsum + 0.5 * l2_lambda * reg;
}

std::vector<double> logistic_gradient(const Matrix& x, std::span<const int> y, std::span<const double> weights,
                                      double l2_lambda, std::span<const double> params) {
  const std::size_t d = x.cols();
  std::vector<double> g(d + 1, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double w = weight_at(weights, i);
    const double r = w * (sigmoid(linear_score(row, params)) - y[i]);
    for (std::size_t j = 0; j < d; ++j) g[j] += r * row[j];
    g[d] += r;
    wsum += w;
  }
  for (auto& v : g) v /= wsum;
  for (std::size_t j = 0; j < d; ++j) g[j] += l2_lambda * params[j];
  return g;
}

LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, const LogisticOptions& options,
                           std::span<const double> weights) {
  check_fit_inputs(x, y, weights, "fit_logistic");
  if (x.cols() == 0) throw Error(ErrorCode::kInvalidArgument, "fit_logistic needs d >= 1");
  const std::size_t d = x.cols();
  const std::size_t p = d + 1;

  std::vector<double> params(p, 0.0);
  double wsum = 0.0, wpos = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    wsum += weight_at(weights, i);
    if (y[i] == 1) wpos += weight_at(weights, i);
  }
  params[d] = std::log(wpos / (wsum - wpos));

  LogisticModel model;
  model.l2_lambda = options.l2_lambda;
  double obj = logistic_objective(x, y, weights, options.l2_lambda, params);
  model.loss_history.push_back(obj);

  std::vector<double> hess(p * p);
  for (int it = 0; it < options.max_iter; ++it) {
    const auto grad = logistic_gradient(x, y, weights, options.l2_lambda, params);
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax <= options.tol) {
      model.converged = true;
      break;
    }
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto row = x.row(i);
      const double pr = sigmoid(linear_score(row, params));
      const double c = weight_at(weights, i) * pr * (1.0 - pr) / wsum;
      for (std::size_t a = 0; a < p; ++a) {
        const double xa = a < d ? row[a] : 1.0;
        for (std::size_t b = a; b < p; ++b) hess[a * p + b] += c * xa * (b < d ? row[b] : 1.0);
      }
    }
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < a; ++b) hess[a * p + b] = hess[b * p + a];
      hess[a * p + a] += (a < d ? options.l2_lambda : 0.0) + 1e-12;
    }
    std::vector<double> neg_grad(grad);
    for (auto& v : neg_grad) v = -v;
    const auto step = solve_dense(hess, neg_grad, p);

    double scale = 1.0;
    bool accepted = false;
    std::vector<double> trial(p);
    for (int halving = 0; halving <= 20; ++halving, scale *= 0.5) {
      for (std::size_t j = 0; j < p; ++j) trial[j] = params[j] + scale * step[j];
      const double trial_obj = logistic_objective(x, y, weights, options.l2_lambda, trial);
      if (!std::isfinite(trial_obj)) {
        throw Error(ErrorCode::kDivergenceDetected, "non-finite logistic loss");
      }
      if (trial_obj <= obj) {
        params = trial;
        obj = trial_obj;
        accepted = true;
        break;
      }
    }
    model.iterations = it + 1;
    if (!accepted) {
      // No descent left at machine precision.
      model.converged = true;
      break;
    }
    model.loss_history.push_back(obj);
  }
  model.coefficients.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  model.intercept = params[d];
  return model;
}

std::vector<double> LogisticModel::decision_function(const Matrix& features) const {
  check_dim(features);
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out[i] = dot(features.row(i), coefficients) + intercept;
  return out;
}

nlohmann::json LogisticModel::to_json() const {
  return {{"type", type_tag()},
          {"version", kModelFormatVersion},
          {"params", {{"coefficients", coefficients}, {"intercept", intercept}, {"l2_lambda", l2_lambda}}},
          {"meta", {{"iterations", iterations}, {"converged", converged}, {"final_loss",
                                                                            loss_history.empty()
                                                                                ? 0.0
                                                                                : loss_history.back()}}}};
}

// ---- boosted stumps ------------------------------------------------------

namespace {

double mean_logistic_loss(std::span<const double> raw, std::span<const int> y, std::span<const double> w) {
  double loss = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double wi = weight_at(w, i);
    loss += wi * (softplus(raw[i]) - y[i] * raw[i]);
    wsum += wi;
  }
  return loss / wsum;
}

}  // namespace

StumpBoostModel fit_stump_boost(const Matrix& x, std::span<const int> y, int n_rounds, double learning_rate,
                                std::uint64_t seed, std::span<const double> weights) {
  check_fit_inputs(x, y, weights, "fit_stump_boost");
  const std::size_t n = x.rows(), d = x.cols();

  StumpBoostModel model;
  model.n_features = d;
  model.learning_rate = learning_rate;
  model.seed = seed;
  double wsum = 0.0, wpos = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += weight_at(weights, i);
    if (y[i] == 1) wpos += weight_at(weights, i);
  }
  model.base_score = std::log(wpos / (wsum - wpos));

  std::vector<std::vector<std::size_t>> order(d);
  for (std::size_t f = 0; f < d; ++f) {
    order[f].resize(n);
    std::iota(order[f].begin(), order[f].end(), std::size_t{0});
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
  }

  std::vector<double> raw(n, model.base_score);
  std::vector<double> resid(n);
  model.loss_history.push_back(mean_logistic_loss(raw, y, weights));

  for (int round = 0; round < n_rounds; ++round) {
    double total_wr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = y[i] - sigmoid(raw[i]);
      total_wr += weight_at(weights, i) * resid[i];
    }
    // gain = S_L^2/W_L + S_R^2/W_R; maximising it minimises squared error.
    Stump best;
    best.threshold = std::numeric_limits<double>::infinity();
    best.left = best.right = total_wr / wsum;
    double best_gain = total_wr * total_wr / wsum;
    bool found = false;
    for (std::size_t f = 0; f < d; ++f) {
      double sl = 0.0, wl = 0.0;
      const auto& ord = order[f];
      for (std::size_t j = 0; j + 1 < n; ++j) {
        const std::size_t i = ord[j];
        sl += weight_at(weights, i) * resid[i];
        wl += weight_at(weights, i);
        const double xv = x(i, f), xn = x(ord[j + 1], f);
        if (!(xv < xn)) continue;
        const double sr = total_wr - sl, wr = wsum - wl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double gain = sl * sl / wl + sr * sr / wr;
        if (!found || gain > best_gain) {
          found = true;
          best_gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (xv + xn);
          best.left = sl / wl;
          best.right = sr / wr;
        }
      }
    }
    model.stumps.push_back(best);
    for (std::size_t i = 0; i < n; ++i) raw[i] += learning_rate * best(x.row(i));
    model.loss_history.push_back(mean_logistic_loss(raw, y, weights));
  }
  return model;
}

std::vector<double> StumpBoostModel::decision_function(const Matrix& features) const {
  check_dim(features);
  std::vector<double> out(features.rows(), base_score);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto row = features.row(i);
    double s = 0.0;
    for (const auto& st : stumps) s += st(row);
    out[i] += learning_rate * s;
  }
  return out;
}

nlohmann::json StumpBoostModel::to_json() const {
  nlohmann::json stumps_json = nlohmann::json::array();
  for (const auto& s : stumps) {
    stumps_json.push_back({{"feature", s.feature},
                           {"threshold", std::isfinite(s.threshold) ? nlohmann::json(s.threshold)
                                                                    : nlohmann::json("inf")},
                           {"left", s.left},
                           {"right", s.right}});
  }
  return {{"type", type_tag()},
          {"version", kModelFormatVersion},
          {"params",
           {{"n_features", n_features},
            {"base_score", base_score},
            {"learning_rate", learning_rate},
            {"stumps", stumps_json}}},
          {"meta",
           {{"n_rounds", stumps.size()},
            {"seed", seed},
            {"final_loss", loss_history.empty() ? 0.0 : loss_history.back()}}}};
}

// ---- linear max-margin ---------------------------------------------------

std::vector<int> to_plus_minus(std::span<const int> labels01) {
  std::vector<int> out(labels01.size());
  for (std::size_t i = 0; i < labels01.size(); ++i) out[i] = labels01[i] == 1 ? 1 : -1;
  return out;
}

double hinge_objective(const Matrix& x, std::span<const int> labels_pm, double reg_lambda,
                       std::span<const double> w, double b) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    hinge += std::max(0.0, 1.0 - labels_pm[i] * (dot(x.row(i), w) + b));
  }
  return 0.5 * reg_lambda * dot(w, w) + hinge / static_cast<double>(x.rows());
}

LinearMaxMarginModel fit_linear_svm(const Matrix& x, std::span<const int> labels_pm, double reg_lambda,
                                    int epochs, std::uint64_t seed) {
  if (x.rows() != labels_pm.size()) throw Error(ErrorCode::kDimensionMismatch, "fit_linear_svm: rows != labels");
  if (!(reg_lambda > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fit_linear_svm needs reg_lambda > 0");
  bool has_pos = false, has_neg = false;
  for (int v : labels_pm) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw Error(ErrorCode::kInvalidArgument, "linear svm labels must be +1/-1");
  }
  if (!has_pos || !has_neg) throw Error(ErrorCode::kSingleClassInput, "fit_linear_svm needs both classes present");

  const std::size_t n = x.rows(), d = x.cols();
  Rng rng(seed);
  std::vector<double> w(d, 0.0), w_avg(d, 0.0);
  double b = 0.0, b_avg = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  LinearMaxMarginModel model;
  model.reg_lambda = reg_lambda;
  model.weights = w;
  model.bias = b;
  double best = hinge_objective(x, labels_pm, reg_lambda, w, b);

  std::uint64_t t = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (reg_lambda * static_cast<double>(t));
      const auto row = x.row(i);
      const double margin = labels_pm[i] * (dot(row, w) + b);
      const double shrink = 1.0 - eta * reg_lambda;
      for (auto& v : w) v *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * labels_pm[i] * row[j];
        // The bias is unregularised; a 1/sqrt(t) step keeps it from ringing.
        b += labels_pm[i] / std::sqrt(static_cast<double>(t));
      }
      const double inv = 1.0 / static_cast<double>(t);
      for (std::size_t j = 0; j < d; ++j) w_avg[j] += (w[j] - w_avg[j]) * inv;
      b_avg += (b - b_avg) * inv;
    }
    const double obj = hinge_objective(x, labels_pm, reg_lambda, w_avg, b_avg);
    if (obj < best) {
      best = obj;
      model.weights = w_avg;
      model.bias = b_avg;
    }
    model.objective_history.push_back(best);
  }
  return model;
}

std::vector<double> LinearMaxMarginModel::decision_function(const Matrix& features) const {
  check_dim(features);
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out[i] = dot(features.row(i), weights) + bias;
  return out;
}

std::vector<double> LinearMaxMarginModel::margins(const Matrix& features, std::span<const int> labels_pm) const {
  auto out = decision_function(features);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= labels_pm[i];
  return out;
}

std::vector<std::size_t> LinearMaxMarginModel::support_set(const Matrix& features, std::span<const int> labels_pm,
                                                           double tolerance) const {
  const auto m = margins(features, labels_pm);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] <= 1.0 + tolerance) out.push_back(i);
  return out;
}

nlohmann::json LinearMaxMarginModel::to_json() const {
  return {{"type", type_tag()},
          {"version", kModelFormatVersion},
          {"params", {{"weights", weights}, {"bias", bias}, {"reg_lambda", reg_lambda}}},
          {"meta", {{"epochs", objective_history.size()},
                    {"final_objective", objective_history.empty() ? 0.0 : objective_history.back()}}}};
}

// ---- serialization -------------------------------------------------------

std::unique_ptr<ProbClassifier> model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::kInvalidArgument, "unsupported model format version");
    }
    const auto& p = doc.at("params");
    const auto type = doc.at("type").get<std::string>();
    if (type == "logistic") {
      auto m = std::make_unique<LogisticModel>();
      m->coefficients = p.at("coefficients").get<std::vector<double>>();
      m->intercept = p.at("intercept").get<double>();
      m->l2_lambda = p.at("l2_lambda").get<double>();
      return m;
    }
    if (type == "stump_boost") {
      auto m = std::make_unique<StumpBoostModel>();
      m->n_features = p.at("n_features").get<std::size_t>();
      m->base_score = p.at("base_score").get<double>();
      m->learning_rate = p.at("learning_rate").get<double>();
      for (const auto& s : p.at("stumps")) {
        Stump st;
        st.feature = s.at("feature").get<std::size_t>();
        st.threshold = s.at("threshold").is_string() ? std::numeric_limits<double>::infinity()
                                                     : s.at("threshold").get<double>();
        st.left = s.at("left").get<double>();
        st.right = s.at("right").get<double>();
        m->stumps.push_back(st);
      }
      return m;
    }
    if (type == "linear_svm") {
      auto m = std::make_unique<LinearMaxMarginModel>();
      m->weights = p.at("weights").get<std::vector<double>>();
      m->bias = p.at("bias").get<double>();
      m->reg_lambda = p.at("reg_lambda").get<double>();
      return m;
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown model type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed model document: ") + e.what());
  }
}

}  // namespace afsmote
