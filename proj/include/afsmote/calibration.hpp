#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace afsmote {

enum class CalibrationKind { kNone, kPlatt, kIsotonic, kTemperature };

std::string to_string(CalibrationKind k);
CalibrationKind parse_calibration_kind(const std::string& text);

/// A fitted monotone map from raw scores to probabilities. Platt and
/// temperature act on raw log-odds or margins; isotonic is a right-continuous
/// step function of the raw score, flat beyond the fitted range.
struct CalibrationMap {
  CalibrationKind kind = CalibrationKind::kNone;
  double a = 1.0, b = 0.0;            // platt: sigmoid(a*s + b)
  std::vector<double> breakpoints;    // isotonic: lowest score of each block, ascending
  std::vector<double> values;         // isotonic: block value, non-decreasing
  double temperature = 1.0;           // temperature: sigmoid(s / T)
  std::size_t n_samples = 0;
  double final_loss = 0.0;

  bool fitted() const { return kind != CalibrationKind::kNone; }
  nlohmann::json to_json() const;
};

/// Platt scaling with smoothed targets (n+ + 1)/(n+ + 2) and 1/(n- + 2),
/// damped Newton on (a, b). Falls back to (1, 0) when that has the lower
/// hard-label NLL on the fitting set.
CalibrationMap fit_platt(std::span<const double> raw_scores, std::span<const int> labels);

/// Platt objective (smoothed-target NLL, summed) at (a, b).
double platt_objective(std::span<const double> raw_scores, std::span<const int> labels, double a, double b);

/// Pool-adjacent-violators on scores sorted ascending; equal scores are
/// pooled before PAV runs.
CalibrationMap fit_isotonic_pav(std::span<const double> raw_scores, std::span<const int> labels);

inline constexpr double kTemperatureMin = 0.05;
inline constexpr double kTemperatureMax = 20.0;

/// Golden-section search for T in [0.05, 20] minimising the NLL of
/// sigmoid(logit / T). T = 1 is kept if the search does not improve on it.
CalibrationMap fit_temperature(std::span<const double> raw_logits, std::span<const int> labels);

/// Throws UnfittedMap for a default-constructed map.
std::vector<double> apply_calibration(const CalibrationMap& map, std::span<const double> raw);

/// Mean binary cross-entropy with probabilities clipped to [1e-15, 1 - 1e-15].
double mean_nll(std::span<const double> probs, std::span<const int> labels);

struct ReliabilityBin {
  double lo = 0.0, hi = 0.0;
  std::optional<double> mean_pred;  // absent for empty bins
  std::optional<double> frac_pos;
  std::size_t count = 0;
};

struct ReliabilityBins {
  std::size_t n_bins = 0;
  std::vector<ReliabilityBin> bins;
};

ReliabilityBins reliability_bins(std::span<const double> probs, std::span<const int> labels, std::size_t n_bins);

/// Columns bin_lo, bin_hi, mean_pred, frac_pos, count (empty cells for
/// empty bins).
void write_reliability_csv(const ReliabilityBins& bins, const std::filesystem::path& path);

}  // namespace afsmote
