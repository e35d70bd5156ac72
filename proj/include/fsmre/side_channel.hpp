#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsmre {

/// Seeded generator used throughout; the seed alone reproduces a run.
using Rng = std::mt19937_64;

/// Average supply current over one clock, in microamps.
struct CurrentSample {
  double microamps = 0.0;
};

/// Hamming distance read off a current sample. Non-zero readings carry the
/// +/-1 window; a zero reading is exact.
struct InferredHd {
  unsigned center = 0;
  bool exact = true;
  unsigned lo = 0;
  unsigned hi = 0;

  static InferredHd from_center(unsigned center);
  friend bool operator==(const InferredHd&, const InferredHd&) = default;
};

enum class NoiseKind { exact, table3, gaussian };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

struct NoiseModel {
  NoiseKind kind = NoiseKind::exact;
  // Error distribution of the measured attack on a 500-transition capture:
  // 426 exact, 60 read one high, 14 read one low.
  double p_plus = 0.120;
  double p_minus = 0.028;
  double sigma = 10.0;  // microamps, gaussian kind only

  double p_exact() const { return 1.0 - p_plus - p_minus; }

  static NoiseModel exact() { return {}; }
  static NoiseModel table3() { return {NoiseKind::table3}; }
  static NoiseModel gaussian(double sigma) { return {NoiseKind::gaussian, 0.120, 0.028, sigma}; }
};

/// Throws std::invalid_argument unless the model's invariants hold.
void validate(const NoiseModel& model);

struct CalibrationBand {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  unsigned center = 0;
};

/// Current-to-HD lookup. Bands are half-open [lo, hi), contiguous from 0 and
/// open-ended at the top, with strictly increasing centers.
class CalibrationTable {
 public:
  /// 90nm lookup: <40 -> 0, 40-95 -> 1, 95-140 -> 2, 140-170 -> 3,
  /// 170-205 -> 4, 205-230 -> 5, >230 -> 6.
  CalibrationTable();
  explicit CalibrationTable(std::vector<CalibrationBand> bands);

  /// Reads whitespace-separated `lo hi center` triples; `inf` is accepted
  /// for the last upper bound. Lines starting with '#' are skipped.
  static CalibrationTable load(std::istream& in);

  const std::vector<CalibrationBand>& bands() const noexcept { return bands_; }

  /// Band containing `microamps` (clamped to >= 0).
  const CalibrationBand& band_for_current(double microamps) const;

  /// Synthesis anchor for `hd`: the band midpoint, or lo + 25 uA per step past
  /// the center of the open top band. Gaps in the centers fall back to the
  /// closest band with a smaller center.
  double anchor(unsigned hd) const;

  /// Upper edge of the zero band.
  double zero_band_limit() const { return bands_.front().hi; }

 private:
  std::vector<CalibrationBand> bands_;
};

const CalibrationTable& default_calibration();

inline constexpr double kOpenBandStep = 25.0;

/// Inferred-HD perturbation of an actual HD. Zero stays zero under every
/// model and a non-zero HD never reads zero.
unsigned sample_error(unsigned hd_actual, const NoiseModel& model, Rng& rng,
                      const CalibrationTable& table = default_calibration());

CurrentSample synthesize_current(unsigned hd, const NoiseModel& model, Rng& rng,
                                 const CalibrationTable& table = default_calibration());

InferredHd infer_hd(CurrentSample c, const CalibrationTable& table = default_calibration());

/// Sample Pearson correlation. Throws std::invalid_argument on length
/// mismatch, fewer than 2 points, or zero variance in either sequence.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace fsmre
