#include "afsmote/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "afsmote/error.hpp"
#include "afsmote/rng.hpp"

namespace afsmote {

void Dataset::validate(bool allow_nan) const {
  if (features.rows() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature rows and label count differ");
  }
  if (!feature_names.empty() && feature_names.size() != features.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature name count differs from column count");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::kInvalidArgument, "label at row " + std::to_string(i) + " is not 0/1");
    }
  }
  for (double v : features.data()) {
    if (std::isinf(v) || (!allow_nan && std::isnan(v))) {
      throw Error(ErrorCode::kNaNPolicyViolation, "non-finite feature value");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  out.feature_names = feature_names;
  return out;
}

ClassStats class_stats(std::span<const int> labels) {
  ClassStats s;
  s.n_total = labels.size();
  s.n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  s.pi1 = s.n_total == 0 ? 0.0 : static_cast<double>(s.n_pos) / static_cast<double>(s.n_total);
  return s;
}

void require_both_classes(std::span<const int> labels, const char* context) {
  const auto s = class_stats(labels);
  if (s.n_pos == 0 || s.n_pos == s.n_total) {
    throw Error(ErrorCode::kSingleClassInput, std::string(context) + " needs both classes present");
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_carve(
    std::span<const std::size_t> indices, std::span<const int> labels, double fraction,
    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> kept, carved;
  for (int cls : {1, 0}) {
    std::vector<std::size_t> members;
    for (auto i : indices)
      if (labels[i] == cls) members.push_back(i);
    rng.shuffle(members);
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    if (members.size() >= 2) {
      take = std::clamp<std::size_t>(take, 1, members.size() - 1);
    } else {
      take = 0;
    }
    carved.insert(carved.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    kept.insert(kept.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(kept.begin(), kept.end());
  std::sort(carved.begin(), carved.end());
  return {std::move(kept), std::move(carved)};
}

std::vector<FoldSplit> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "k-fold needs k >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k) {
    throw Error(ErrorCode::kTooFewPositives,
                "stratified " + std::to_string(k) + "-fold needs at least k rows per class (have " +
                    std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) +
                    " negative)");
  }
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);

  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t i = 0; i < pos.size(); ++i) fold_of[pos[i]] = i % k;
  for (std::size_t j = 0; j < neg.size(); ++j) fold_of[neg[j]] = (pos.size() + j) % k;

  std::vector<FoldSplit> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      (fold_of[i] == f ? folds[f].test_indices : rest).push_back(i);
    }
    auto [train, valid] = stratified_carve(rest, labels, kValidationFraction, derive_seed(seed, {f}));
    folds[f].train_indices = std::move(train);
    folds[f].valid_indices = std::move(valid);
  }
  return folds;
}

SyntheticSpec SyntheticSpec::isotropic(std::size_t n, double pi1, std::size_t dim, double separation,
                                       std::uint64_t seed) {
  SyntheticSpec s;
  s.n = n;
  s.pi1 = pi1;
  s.dim = dim;
  s.seed = seed;
  s.class_means[0] = std::vector<double>(dim, 0.0);
  s.class_means[1] = std::vector<double>(dim, 0.0);
  s.class_means[1][0] = separation;
  for (auto& cov : s.class_covs) {
    cov = Matrix(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) cov(i, i) = 1.0;
  }
  return s;
}

Matrix cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw Error(ErrorCode::kNonPositiveDefiniteCovariance, "covariance is not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * (std::abs(a(i, j)) + std::abs(a(j, i)) + 1.0)) {
        throw Error(ErrorCode::kNonPositiveDefiniteCovariance, "covariance is not symmetric");
      }
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) {
      throw Error(ErrorCode::kNonPositiveDefiniteCovariance, "covariance is not positive definite");
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  return l;
}

Dataset make_gaussian_imbalanced(const SyntheticSpec& spec) {
  if (!(spec.pi1 > 0.0 && spec.pi1 < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic pi1 must lie in (0, 0.5)");
  }
  if (spec.dim == 0 || spec.n < 2) throw Error(ErrorCode::kInvalidArgument, "synthetic spec needs n >= 2, dim >= 1");
  for (int c = 0; c < 2; ++c) {
    if (spec.class_means[c].size() != spec.dim || spec.class_covs[c].rows() != spec.dim) {
      throw Error(ErrorCode::kDimensionMismatch, "class mean/covariance dimension differs from dim");
    }
  }
  const std::array<Matrix, 2> factors{cholesky(spec.class_covs[0]), cholesky(spec.class_covs[1])};
  const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(spec.n) * spec.pi1));

  Rng rng(spec.seed);
  Labels labels(spec.n, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(spec.n - n_pos), labels.end(), 1);
  rng.shuffle(labels);

  Dataset out;
  out.features = Matrix(spec.n, spec.dim);
  std::vector<double> z(spec.dim);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int c = labels[i];
    for (auto& v : z) v = rng.normal();
    auto row = out.features.row(i);
    for (std::size_t r = 0; r < spec.dim; ++r) {
      double v = spec.class_means[c][r];
      for (std::size_t k = 0; k <= r; ++k) v += factors[c](r, k) * z[k];
      row[r] = v;
    }
  }
  out.labels = std::move(labels);
  for (std::size_t j = 0; j < spec.dim; ++j) out.feature_names.push_back("x" + std::to_string(j));
  return out;
}

// ---- CSV -----------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool parse_real(const std::string& text, double& out) {
  if (text.empty() || text == "NaN" || text == "nan" || text == "NA") {
    out = std::nan("");
    return true;
  }
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label, NanPolicy nan_policy) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw Error(ErrorCode::kEmptyFile, path.string() + " has no header row");
  }
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  std::size_t label_col = header.size();
  if (const auto* name = std::get_if<std::string>(&label)) {
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw Error(ErrorCode::kMissingColumn, "no column named '" + *name + "'");
    label_col = static_cast<std::size_t>(it - header.begin());
  } else {
    label_col = std::get<std::size_t>(label);
    if (label_col >= header.size()) {
      throw Error(ErrorCode::kMissingColumn, "label column index " + std::to_string(label_col) +
                                                 " out of range (" + std::to_string(header.size()) +
                                                 " columns)");
    }
  }

  Dataset data;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_col) data.feature_names.push_back(header[c]);

  std::vector<double> row(header.size() - 1);
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kNonNumericCell, "row " + std::to_string(row_no) + " has " +
                                                  std::to_string(cells.size()) + " cells, header has " +
                                                  std::to_string(header.size()));
    }
    std::size_t out = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_real(trim(cells[c]), v)) {
        throw Error(ErrorCode::kNonNumericCell,
                    "row " + std::to_string(row_no) + ", column '" + header[c] + "'");
      }
      if (c == label_col) {
        if (v != 0.0 && v != 1.0) {
          throw Error(ErrorCode::kNonNumericCell, "row " + std::to_string(row_no) + ", label column '" +
                                                      header[c] + "' is not 0/1");
        }
        data.labels.push_back(static_cast<int>(v));
        continue;
      }
      if (std::isnan(v) && nan_policy == NanPolicy::kReject) {
        throw Error(ErrorCode::kNaNPolicyViolation,
                    "NaN at row " + std::to_string(row_no) + ", column '" + header[c] + "'");
      }
      row[out++] = v;
    }
    data.features.append_row(row);
  }
  if (data.labels.empty()) throw Error(ErrorCode::kEmptyFile, path.string() + " has no data rows");
  if (data.features.cols() == 0) data.features = Matrix(data.labels.size(), header.size() - 1);
  data.validate(nan_policy == NanPolicy::kAllow);
  return data;
}

std::string format_real(double value) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

void write_csv(const Dataset& data, const std::filesystem::path& path, const std::string& label_name) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (std::size_t c = 0; c < data.dim(); ++c) {
    out << (c < data.feature_names.size() ? data.feature_names[c] : "f" + std::to_string(c)) << ',';
  }
  out << label_name << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) out << format_real(v) << ',';
    out << data.labels[i] << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

// ---- preprocessing -------------------------------------------------------

void impute_mean(Matrix& features, std::span<const std::size_t> fit_rows) {
  for (std::size_t c = 0; c < features.cols(); ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (auto r : fit_rows) {
      if (!std::isnan(features(r, c))) {
        sum += features(r, c);
        ++count;
      }
    }
    const double mean = count ? sum / static_cast<double>(count) : 0.0;
    for (std::size_t r = 0; r < features.rows(); ++r)
      if (std::isnan(features(r, c))) features(r, c) = mean;
  }
}

Standardizer Standardizer::fit(const Matrix& features, std::span<const std::size_t> rows) {
  Standardizer s;
  const std::size_t d = features.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (rows.empty()) return s;
  const auto n = static_cast<double>(rows.size());
  for (auto r : rows)
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += features(r, c);
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (auto r : rows)
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = features(r, c) - s.mean[c];
      var[c] += dv * dv;
    }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / n);
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  Matrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - mean[c]) / scale[c];
  return out;
}

Matrix Standardizer::invert(const Matrix& standardized) const {
  Matrix out = standardized;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) * scale[c] + mean[c];
  return out;
}

}  // namespace afsmote
