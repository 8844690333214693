#include "afsmote/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "afsmote/error.hpp"

namespace afsmote {

namespace {

using Setter = std::function<void(ResolvedConfig&, const std::string&)>;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorCode::kInvalidArgument, key + ": expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& text) {
  const std::string v = unquote(trim(text));
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    bad_value(key, text, "a finite real");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  const std::string v = unquote(trim(text));
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, text, "an unsigned integer");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(to_u64(key, text));
}

int to_int(const std::string& key, const std::string& text) {
  const auto v = to_u64(key, text);
  if (v > 1'000'000'000ULL) bad_value(key, text, "an integer below 1e9");
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string v = unquote(trim(text));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, text, "a boolean");
}

bool is_none(const std::string& text) {
  const std::string v = unquote(trim(text));
  return v.empty() || v == "none" || v == "null";
}

std::vector<std::string> to_items(const std::string& key, const std::string& text) {
  std::string v = trim(text);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') bad_value(key, text, "a list");
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> items;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(key, text, "a comma separated list without empty items");
    items.push_back(item);
  }
  if (items.empty()) bad_value(key, text, "a non-empty list");
  return items;
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : to_items(key, text)) out.push_back(to_double(key, item));
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : to_items(key, text)) out.push_back(to_size(key, item));
  return out;
}

template <typename Parse>
auto parsed(const std::string& key, const std::string& text, Parse parse) {
  try {
    return parse(unquote(trim(text)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) throw Error(ErrorCode::kInvalidArgument, key + ": " + e.detail());
    throw;
  }
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // [data]
    t["data.csv"] = [](ResolvedConfig& c, const std::string& v) {
      if (is_none(v)) {
        c.experiment.data.csv.reset();
      } else {
        c.experiment.data.csv = unquote(trim(v));
      }
    };
    t["data.label"] = [](ResolvedConfig& c, const std::string& v) {
      const std::string s = unquote(trim(v));
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
      if (!s.empty() && ec == std::errc{} && ptr == s.data() + s.size()) {
        c.experiment.data.label = idx;
      } else {
        c.experiment.data.label = s;
      }
    };
    t["data.impute"] = [](ResolvedConfig& c, const std::string& v) {
      const std::string s = unquote(trim(v));
      if (s == "mean") {
        c.experiment.data.nan_policy = NanPolicy::kAllow;
      } else if (s == "none") {
        c.experiment.data.nan_policy = NanPolicy::kReject;
      } else {
        bad_value("data.impute", v, "none or mean");
      }
    };
    t["data.n"] = [](ResolvedConfig& c, const std::string& v) { c.experiment.data.synthetic.n = to_size("data.n", v); };
    t["data.pi1"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.data.synthetic.pi1 = to_double("data.pi1", v);
    };
    t["data.dim"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.data.synthetic.dim = to_size("data.dim", v);
    };
    t["data.separation"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.data.synthetic.separation = to_double("data.separation", v);
    };
    t["data.seed"] = [](ResolvedConfig& c, const std::string& v) {
      if (is_none(v)) {
        c.experiment.data.synthetic.seed.reset();
      } else {
        c.experiment.data.synthetic.seed = to_u64("data.seed", v);
      }
    };
    // [sampler]
    t["sampler.method"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.sampler.method = parsed("sampler.method", v, parse_sampler_method);
    };
    t["sampler.k"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.sampler.k_neighbors = to_size("sampler.k", v);
    };
    t["sampler.ratio"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.sampler.overgen_ratio = to_double("sampler.ratio", v);
    };
    t["sampler.fixed_gap"] = [](ResolvedConfig& c, const std::string& v) {
      if (is_none(v)) {
        c.experiment.sampler.fixed_gap.reset();
      } else {
        c.experiment.sampler.fixed_gap = to_double("sampler.fixed_gap", v);
      }
    };
    t["sampler.support_tolerance"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.sampler.support_tolerance = to_double("sampler.support_tolerance", v);
    };
    t["sampler.svm_lambda"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.sampler.svm_lambda = to_double("sampler.svm_lambda", v);
    };
    t["sampler.svm_epochs"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.sampler.svm_epochs = to_int("sampler.svm_epochs", v);
    };
    // [filter]
    t["filter.enabled"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter_enabled = to_bool("filter.enabled", v);
    };
    t["filter.lambda"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.lambda = to_double("filter.lambda", v);
    };
    t["filter.tau"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.tau = to_double("filter.tau", v);
    };
    t["filter.alpha"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.alpha = to_double("filter.alpha", v);
    };
    t["filter.eta"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.eta = to_double("filter.eta", v);
    };
    t["filter.top_k"] = [](ResolvedConfig& c, const std::string& v) {
      if (is_none(v)) {
        c.experiment.filter.top_k.reset();
      } else {
        c.experiment.filter.top_k = to_size("filter.top_k", v);
      }
    };
    t["filter.diversity"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.diversity_enabled = to_bool("filter.diversity", v);
    };
    t["filter.extended_fusion"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.extended_fusion = to_bool("filter.extended_fusion", v);
    };
    t["filter.head_weights"] = [](ResolvedConfig& c, const std::string& v) {
      const auto w = to_doubles("filter.head_weights", v);
      if (w.size() != 4) bad_value("filter.head_weights", v, "4 weights (util, real, unc, den)");
      std::copy(w.begin(), w.end(), c.experiment.filter.head_weights.begin());
    };
    t["filter.rescale_utility"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.rescale_utility = to_bool("filter.rescale_utility", v);
    };
    t["filter.normalize_realism"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.normalize_realism = to_bool("filter.normalize_realism", v);
    };
    t["filter.density_k"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.filter.density_k = to_size("filter.density_k", v);
    };
    // [discriminator]
    t["discriminator.rounds"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.discriminator.n_rounds = to_int("discriminator.rounds", v);
    };
    t["discriminator.learning_rate"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.discriminator.learning_rate = to_double("discriminator.learning_rate", v);
    };
    t["discriminator.holdout"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.discriminator.holdout_fraction = to_double("discriminator.holdout", v);
    };
    t["discriminator.balance"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.discriminator.balance_classes = to_bool("discriminator.balance", v);
    };
    // [classifier]
    t["classifier.kind"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.classifier.kind = parsed("classifier.kind", v, parse_classifier_kind);
    };
    t["classifier.l2"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.classifier.logistic.l2_lambda = to_double("classifier.l2", v);
    };
    t["classifier.max_iter"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.classifier.logistic.max_iter = to_int("classifier.max_iter", v);
    };
    t["classifier.tol"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.classifier.logistic.tol = to_double("classifier.tol", v);
    };
    t["classifier.boost_rounds"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.classifier.boost_rounds = to_int("classifier.boost_rounds", v);
    };
    t["classifier.boost_learning_rate"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.classifier.boost_learning_rate = to_double("classifier.boost_learning_rate", v);
    };
    t["classifier.svm_lambda"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.classifier.svm_lambda = to_double("classifier.svm_lambda", v);
    };
    t["classifier.svm_epochs"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.classifier.svm_epochs = to_int("classifier.svm_epochs", v);
    };
    // [evaluation]
    t["evaluation.betas"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.betas = to_doubles("evaluation.betas", v);
    };
    t["evaluation.p0"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.p0 = to_double("evaluation.p0", v);
    };
    t["evaluation.calibration"] = [](ResolvedConfig& c, const std::string& v) {
      const std::string s = unquote(trim(v));
      if (s == "auto") {
        c.experiment.calibration.reset();
        return;
      }
      const auto kind = parsed("evaluation.calibration", s, parse_calibration_kind);
      if (kind == CalibrationKind::kNone) bad_value("evaluation.calibration", v, "auto, platt, isotonic or temperature");
      c.experiment.calibration = kind;
    };
    t["evaluation.intervals"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.compute_intervals = to_bool("evaluation.intervals", v);
    };
    t["evaluation.delong"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.compare_to_baseline = to_bool("evaluation.delong", v);
    };
    // [bootstrap]
    t["bootstrap.resamples"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.bootstrap.n_resamples = to_size("bootstrap.resamples", v);
    };
    t["bootstrap.confidence"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.bootstrap.confidence = to_double("bootstrap.confidence", v);
    };
    t["bootstrap.stratified"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.bootstrap.stratified = to_bool("bootstrap.stratified", v);
    };
    // [experiment]
    t["experiment.folds"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.cv_folds = to_size("experiment.folds", v);
    };
    t["experiment.seed"] = [](ResolvedConfig& c, const std::string& v) {
      c.experiment.seed = to_u64("experiment.seed", v);
      c.seed_set = true;
    };
    t["experiment.pca_dim"] = [](ResolvedConfig& c, const std::string& v) {
      if (is_none(v)) {
        c.experiment.pca_target_dim.reset();
      } else {
        c.experiment.pca_target_dim = to_size("experiment.pca_dim", v);
      }
    };
    // [sweep]
    t["sweep.lambda"] = [](ResolvedConfig& c, const std::string& v) {
      c.sweep.lambda_values = to_doubles("sweep.lambda", v);
    };
    t["sweep.p0"] = [](ResolvedConfig& c, const std::string& v) { c.sweep.p0_values = to_doubles("sweep.p0", v); };
    t["sweep.k"] = [](ResolvedConfig& c, const std::string& v) { c.sweep.k_values = to_sizes("sweep.k", v); };
    t["sweep.ratio"] = [](ResolvedConfig& c, const std::string& v) {
      c.sweep.ratio_values = to_doubles("sweep.ratio", v);
    };
    // [theorem]
    t["theorem.seeds"] = [](ResolvedConfig& c, const std::string& v) {
      c.theorem.n_seeds = to_size("theorem.seeds", v);
    };
    t["theorem.beta"] = [](ResolvedConfig& c, const std::string& v) { c.theorem.beta = to_double("theorem.beta", v); };
    t["theorem.c1"] = [](ResolvedConfig& c, const std::string& v) { c.theorem.c1 = to_double("theorem.c1", v); };
    t["theorem.c2"] = [](ResolvedConfig& c, const std::string& v) { c.theorem.c2 = to_double("theorem.c2", v); };
    t["theorem.min_fraction"] = [](ResolvedConfig& c, const std::string& v) {
      c.theorem.min_improvement_fraction = to_double("theorem.min_fraction", v);
    };
    return t;
  }();
  return table;
}

}  // namespace

void set_config_value(ResolvedConfig& config, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorCode::kUnknownConfigKey, "unknown config key '" + key + "'");
  it->second(config, value);
}

void parse_config_text(ResolvedConfig& config, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw Error(ErrorCode::kInvalidArgument, where + ": malformed section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, where + ": expected key = value");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    if (section.empty()) throw Error(ErrorCode::kInvalidArgument, where + ": key '" + key + "' outside a section");
    try {
      set_config_value(config, section + "." + key, s.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.detail());
    }
  }
}

ResolvedConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  ResolvedConfig config;
  parse_config_text(config, buf.str(), path.string());
  return config;
}

void apply_override(ResolvedConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "override '" + assignment + "' is not of the form section.key=value");
  }
  set_config_value(config, trim(std::string_view(assignment).substr(0, eq)), assignment.substr(eq + 1));
  config.overrides.push_back(assignment);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace afsmote
