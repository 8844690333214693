#include "afsmote/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "afsmote/dataset.hpp"
#include "afsmote/error.hpp"
#include "afsmote/evaluation.hpp"
#include "afsmote/models.hpp"

namespace afsmote {

std::string to_string(CalibrationKind k) {
  switch (k) {
    case CalibrationKind::kNone: return "none";
    case CalibrationKind::kPlatt: return "platt";
    case CalibrationKind::kIsotonic: return "isotonic";
    case CalibrationKind::kTemperature: return "temperature";
  }
  return "none";
}

CalibrationKind parse_calibration_kind(const std::string& text) {
  for (auto k : {CalibrationKind::kNone, CalibrationKind::kPlatt, CalibrationKind::kIsotonic,
                 CalibrationKind::kTemperature}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown calibration '" + text + "'");
}

nlohmann::json CalibrationMap::to_json() const {
  nlohmann::json j{{"kind", to_string(kind)}, {"n_samples", n_samples}, {"final_loss", final_loss}};
  switch (kind) {
    case CalibrationKind::kPlatt:
      j["a"] = a;
      j["b"] = b;
      break;
    case CalibrationKind::kIsotonic:
      j["breakpoints"] = breakpoints;
      j["values"] = values;
      break;
    case CalibrationKind::kTemperature:
      j["temperature"] = temperature;
      break;
    case CalibrationKind::kNone:
      break;
  }
  return j;
}

namespace {

void check_inputs(std::span<const double> s, std::span<const int> y, const char* who) {
  if (s.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(who) + ": scores and labels differ in length");
  }
}

double smoothed_nll_term(double f, double target) {
  // -[t log sigmoid(f) + (1-t) log(1 - sigmoid(f))]
  return softplus(f) - target * f;
}

}  // namespace

double mean_nll(std::span<const double> probs, std::span<const int> labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    s -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return probs.empty() ? 0.0 : s / static_cast<double>(probs.size());
}

double platt_objective(std::span<const double> raw_scores, std::span<const int> labels, double a, double b) {
  const auto st = class_stats(labels);
  const double n_pos = static_cast<double>(st.n_pos), n_neg = static_cast<double>(st.n_total - st.n_pos);
  const double t_pos = (n_pos + 1.0) / (n_pos + 2.0), t_neg = 1.0 / (n_neg + 2.0);
  double f = 0.0;
  for (std::size_t i = 0; i < raw_scores.size(); ++i) {
    f += smoothed_nll_term(a * raw_scores[i] + b, labels[i] == 1 ? t_pos : t_neg);
  }
  return f;
}

CalibrationMap fit_platt(std::span<const double> raw_scores, std::span<const int> labels) {
  check_inputs(raw_scores, labels, "fit_platt");
  require_both_classes(labels, "fit_platt");
  const auto st = class_stats(labels);
  const double n_pos = static_cast<double>(st.n_pos), n_neg = static_cast<double>(st.n_total - st.n_pos);
  const double t_pos = (n_pos + 1.0) / (n_pos + 2.0), t_neg = 1.0 / (n_neg + 2.0);

  double a = 0.0, b = std::log((n_pos + 1.0) / (n_neg + 1.0));
  double obj = platt_objective(raw_scores, labels, a, b);
  for (int it = 0; it < 100; ++it) {
    double g1 = 0.0, g2 = 0.0, h11 = 1e-12, h22 = 1e-12, h21 = 0.0;
    for (std::size_t i = 0; i < raw_scores.size(); ++i) {
      const double s = raw_scores[i];
      const double p = sigmoid(a * s + b);
      const double d = p - (labels[i] == 1 ? t_pos : t_neg);
      const double w = p * (1.0 - p);
      g1 += s * d;
      g2 += d;
      h11 += s * s * w;
      h22 += w;
      h21 += s * w;
    }
    if (std::max(std::abs(g1), std::abs(g2)) < 1e-10) break;
    const double det = h11 * h22 - h21 * h21;
    if (!(std::abs(det) > 0.0)) break;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = a + step * da, nb = b + step * db;
      const double nobj = platt_objective(raw_scores, labels, na, nb);
      if (nobj < obj + 1e-4 * step * (g1 * da + g2 * db)) {
        a = na;
        b = nb;
        obj = nobj;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  // The smoothed targets can leave the fit with a worse hard-label NLL than
  // the uncalibrated sigmoid(s); keep the identity map in that case.
  auto hard_nll = [&](double pa, double pb) {
    std::vector<double> p(raw_scores.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(pa * raw_scores[i] + pb);
    return mean_nll(p, labels);
  };
  if (hard_nll(1.0, 0.0) <= hard_nll(a, b)) {
    a = 1.0;
    b = 0.0;
    obj = platt_objective(raw_scores, labels, a, b);
  }
  CalibrationMap map;
  map.kind = CalibrationKind::kPlatt;
  map.a = a;
  map.b = b;
  map.n_samples = raw_scores.size();
  map.final_loss = obj / static_cast<double>(raw_scores.size());
  return map;
}

CalibrationMap fit_isotonic_pav(std::span<const double> raw_scores, std::span<const int> labels) {
  check_inputs(raw_scores, labels, "fit_isotonic_pav");
  if (raw_scores.size() < 2) throw Error(ErrorCode::kInvalidArgument, "fit_isotonic_pav needs n >= 2");
  std::vector<std::size_t> order(raw_scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return raw_scores[i] < raw_scores[j]; });

  struct Block {
    double lo;
    double sum;
    double weight;
    double value() const { return sum / weight; }
  };
  std::vector<Block> stack;
  for (std::size_t i = 0; i < order.size();) {
    Block blk{raw_scores[order[i]], 0.0, 0.0};
    std::size_t j = i;
    while (j < order.size() && raw_scores[order[j]] == raw_scores[order[i]]) {
      blk.sum += labels[order[j]];
      blk.weight += 1.0;
      ++j;
    }
    i = j;
    stack.push_back(blk);
    while (stack.size() > 1 && stack[stack.size() - 2].value() > stack.back().value()) {
      const Block top = stack.back();
      stack.pop_back();
      stack.back().sum += top.sum;
      stack.back().weight += top.weight;
    }
  }
  CalibrationMap map;
  map.kind = CalibrationKind::kIsotonic;
  double sse = 0.0;
  for (const auto& blk : stack) {
    map.breakpoints.push_back(blk.lo);
    map.values.push_back(blk.value());
  }
  map.n_samples = raw_scores.size();
  const auto fitted = apply_calibration(map, raw_scores);
  for (std::size_t i = 0; i < fitted.size(); ++i) sse += (fitted[i] - labels[i]) * (fitted[i] - labels[i]);
  map.final_loss = sse / static_cast<double>(raw_scores.size());
  return map;
}

CalibrationMap fit_temperature(std::span<const double> raw_logits, std::span<const int> labels) {
  check_inputs(raw_logits, labels, "fit_temperature");
  require_both_classes(labels, "fit_temperature");
  for (double z : raw_logits)
    if (!std::isfinite(z)) throw Error(ErrorCode::kInvalidArgument, "fit_temperature needs finite logits");

  auto nll = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < raw_logits.size(); ++i) {
      const double f = raw_logits[i] / t;
      s += softplus(f) - labels[i] * f;
    }
    return s / static_cast<double>(raw_logits.size());
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = kTemperatureMin, hi = kTemperatureMax;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = nll(x1), f2 = nll(x2);
  while (hi - lo > 1e-9) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = nll(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = nll(x2);
    }
  }
  double t = 0.5 * (lo + hi);
  double loss = nll(t);
  if (const double identity = nll(1.0); identity <= loss) {
    t = 1.0;
    loss = identity;
  }
  CalibrationMap map;
  map.kind = CalibrationKind::kTemperature;
  map.temperature = t;
  map.n_samples = raw_logits.size();
  map.final_loss = loss;
  return map;
}

std::vector<double> apply_calibration(const CalibrationMap& map, std::span<const double> raw) {
  std::vector<double> out(raw.size());
  switch (map.kind) {
    case CalibrationKind::kNone:
      throw Error(ErrorCode::kUnfittedMap, "calibration map has not been fitted");
    case CalibrationKind::kPlatt:
      for (std::size_t i = 0; i < raw.size(); ++i) out[i] = sigmoid(map.a * raw[i] + map.b);
      break;
    case CalibrationKind::kTemperature:
      for (std::size_t i = 0; i < raw.size(); ++i) out[i] = sigmoid(raw[i] / map.temperature);
      break;
    case CalibrationKind::kIsotonic:
      for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto it = std::upper_bound(map.breakpoints.begin(), map.breakpoints.end(), raw[i]);
        const auto idx = it == map.breakpoints.begin() ? 0 : static_cast<std::size_t>(it - map.breakpoints.begin()) - 1;
        out[i] = map.values[idx];
      }
      break;
  }
  return out;
}

ReliabilityBins reliability_bins(std::span<const double> probs, std::span<const int> labels, std::size_t n_bins) {
  check_inputs(probs, labels, "reliability_bins");
  if (n_bins == 0) throw Error(ErrorCode::kInvalidArgument, "reliability_bins needs n_bins >= 1");
  ReliabilityBins out;
  out.n_bins = n_bins;
  out.bins.resize(n_bins);
  std::vector<double> sum_p(n_bins, 0.0), sum_y(n_bins, 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto b = bin_index(probs[i], n_bins);
    sum_p[b] += probs[i];
    sum_y[b] += labels[i];
    ++out.bins[b].count;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = out.bins[b];
    bin.lo = static_cast<double>(b) / static_cast<double>(n_bins);
    bin.hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
    if (bin.count > 0) {
      bin.mean_pred = sum_p[b] / static_cast<double>(bin.count);
      bin.frac_pos = sum_y[b] / static_cast<double>(bin.count);
    }
  }
  return out;
}

void write_reliability_csv(const ReliabilityBins& bins, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "bin_lo,bin_hi,mean_pred,frac_pos,count\n";
  for (const auto& b : bins.bins) {
    out << format_real(b.lo) << ',' << format_real(b.hi) << ',' << (b.mean_pred ? format_real(*b.mean_pred) : "")
        << ',' << (b.frac_pos ? format_real(*b.frac_pos) : "") << ',' << b.count << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace afsmote
