#include "fsmre/side_channel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fsmre {

InferredHd InferredHd::from_center(unsigned center) {
  if (center == 0) return {0, true, 0, 0};
  return {center, false, std::max(1U, center - 1), center + 1};
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::exact:
      return "exact";
    case NoiseKind::table3:
      return "table3";
    case NoiseKind::gaussian:
      return "gaussian";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "exact") return NoiseKind::exact;
  if (name == "table3") return NoiseKind::table3;
  if (name == "gaussian") return NoiseKind::gaussian;
  throw std::invalid_argument("unknown noise model '" + name + "'");
}

void validate(const NoiseModel& model) {
  if (model.p_plus < 0 || model.p_minus < 0 || model.p_exact() < 0) {
    throw std::invalid_argument("noise probabilities must lie in [0, 1] and sum to 1");
  }
  if (!(model.sigma >= 0)) throw std::invalid_argument("sigma must be non-negative");
}

CalibrationTable::CalibrationTable()
    : CalibrationTable({{0, 40, 0},
                        {40, 95, 1},
                        {95, 140, 2},
                        {140, 170, 3},
                        {170, 205, 4},
                        {205, 230, 5},
                        {230, std::numeric_limits<double>::infinity(), 6}}) {}

CalibrationTable::CalibrationTable(std::vector<CalibrationBand> bands) : bands_(std::move(bands)) {
  if (bands_.empty()) throw std::invalid_argument("calibration table is empty");
  if (bands_.front().lo != 0.0) throw std::invalid_argument("first band must start at 0 uA");
  if (!std::isinf(bands_.back().hi)) throw std::invalid_argument("last band must be open-ended");
  for (std::size_t k = 0; k < bands_.size(); ++k) {
    if (!(bands_[k].lo < bands_[k].hi)) throw std::invalid_argument("band with empty current range");
    if (k > 0) {
      if (bands_[k].lo != bands_[k - 1].hi) throw std::invalid_argument("bands are not contiguous");
      if (bands_[k].center <= bands_[k - 1].center) {
        throw std::invalid_argument("band centers must be strictly increasing");
      }
    }
  }
  if (bands_.front().center != 0) throw std::invalid_argument("first band must infer HD 0");
}

CalibrationTable CalibrationTable::load(std::istream& in) {
  std::vector<CalibrationBand> bands;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string lo;
    std::string hi;
    unsigned center = 0;
    if (!(fields >> lo >> hi >> center)) {
      throw std::invalid_argument("calibration line is not a `lo hi center` triple: " + line);
    }
    auto number = [](const std::string& s) {
      if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
      return std::stod(s);
    };
    bands.push_back({number(lo), number(hi), center});
  }
  return CalibrationTable(std::move(bands));
}

const CalibrationBand& CalibrationTable::band_for_current(double microamps) const {
  double c = std::max(0.0, microamps);
  auto it = std::upper_bound(bands_.begin(), bands_.end(), c,
                             [](double value, const CalibrationBand& b) { return value < b.hi; });
  return it == bands_.end() ? bands_.back() : *it;
}

double CalibrationTable::anchor(unsigned hd) const {
  const CalibrationBand* chosen = &bands_.front();
  for (const auto& b : bands_) {
    if (b.center <= hd) chosen = &b;
  }
  if (std::isinf(chosen->hi)) return chosen->lo + kOpenBandStep * (hd - chosen->center);
  return 0.5 * (chosen->lo + chosen->hi);
}

const CalibrationTable& default_calibration() {
  static const CalibrationTable table;
  return table;
}

namespace {

double unit_uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double gaussian_current(unsigned hd, double sigma, Rng& rng, const CalibrationTable& table) {
  double value = table.anchor(hd);
  if (sigma > 0) value += std::normal_distribution<double>(0.0, sigma)(rng);
  value = std::max(0.0, value);
  const double zero_limit = table.zero_band_limit();
  if (hd == 0) return std::min(value, std::nextafter(zero_limit, 0.0));
  return std::max(value, zero_limit);
}

}  // namespace

unsigned sample_error(unsigned hd_actual, const NoiseModel& model, Rng& rng,
                      const CalibrationTable& table) {
  if (hd_actual == 0) return 0;
  switch (model.kind) {
    case NoiseKind::exact:
      return hd_actual;
    case NoiseKind::table3: {
      double u = unit_uniform(rng);
      if (u < model.p_plus) return hd_actual + 1;
      if (u < model.p_plus + model.p_minus) return std::max(1U, hd_actual - 1);
      return hd_actual;
    }
    case NoiseKind::gaussian:
      return infer_hd({gaussian_current(hd_actual, model.sigma, rng, table)}, table).center;
  }
  return hd_actual;
}

CurrentSample synthesize_current(unsigned hd, const NoiseModel& model, Rng& rng,
                                 const CalibrationTable& table) {
  if (model.kind == NoiseKind::gaussian) return {gaussian_current(hd, model.sigma, rng, table)};
  return {table.anchor(sample_error(hd, model, rng, table))};
}

InferredHd infer_hd(CurrentSample c, const CalibrationTable& table) {
  return InferredHd::from_center(table.band_for_current(c.microamps).center);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0;
  double my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0;
  double sxx = 0;
  double syy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    double dx = xs[k] - mx;
    double dy = ys[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw std::invalid_argument("pearson: degenerate variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace fsmre
